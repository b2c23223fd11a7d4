#include "ride/mcgsm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ride/errors.hpp"

namespace ride {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Expert variances are floored at exp(-30); precisions above exp(30) add
// nothing to the likelihood but overflow downstream exponentials.
constexpr double kAlphaCap = 30.0;

double capped(double alpha) { return alpha < kAlphaCap ? alpha : kAlphaCap; }

void check_sizes(const McgsmParams& p, Eigen::Index ctx_dim) {
  if (ctx_dim != p.dim()) {
    throw DomainError("context dimension " + std::to_string(ctx_dim) + " does not match D=" +
                      std::to_string(p.dim()));
  }
}

Eigen::VectorXd rowwise_logsumexp(const Eigen::MatrixXd& m) {
  Eigen::VectorXd mx = m.rowwise().maxCoeff();
  return mx.array() + ((m.colwise() - mx).array().exp().rowwise().sum()).log();
}

}  // namespace

void McgsmParams::validate() const {
  const Eigen::Index C = eta.rows(), S = eta.cols(), N = b.rows(), D = b.cols();
  if (C < 1 || S < 1 || N < 1 || D < 1) throw DomainError("mcgsm sizes must all be >= 1");
  if (alpha.rows() != C || alpha.cols() != S) throw DomainError("alpha shape mismatch");
  if (beta.rows() != C || beta.cols() != N) throw DomainError("beta shape mismatch");
  if (a.rows() != C || a.cols() != D) throw DomainError("a shape mismatch");
  if (!eta.allFinite() || !alpha.allFinite() || !beta.allFinite() || !b.allFinite() ||
      !a.allFinite()) {
    throw DomainError("mcgsm parameters contain non-finite values");
  }
}

Eigen::Index McgsmParams::parameter_count() const {
  return eta.size() + alpha.size() + beta.size() + b.size() + a.size();
}

Eigen::VectorXd McgsmParams::to_vector() const {
  Eigen::VectorXd v(parameter_count());
  Eigen::Index k = 0;
  for (const Eigen::MatrixXd* m : {&eta, &alpha, &beta, &b, &a}) {
    v.segment(k, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
    k += m->size();
  }
  return v;
}

McgsmParams McgsmParams::from_vector(const Eigen::VectorXd& v, int D, int C, int S, int N) {
  McgsmParams p;
  p.eta.resize(C, S);
  p.alpha.resize(C, S);
  p.beta.resize(C, N);
  p.b.resize(N, D);
  p.a.resize(C, D);
  Eigen::Index k = 0;
  for (Eigen::MatrixXd* m : {&p.eta, &p.alpha, &p.beta, &p.b, &p.a}) {
    if (k + m->size() > v.size()) throw DomainError("parameter vector too short");
    Eigen::Map<Eigen::VectorXd>(m->data(), m->size()) = v.segment(k, m->size());
    k += m->size();
  }
  if (k != v.size()) throw DomainError("parameter vector size mismatch");
  return p;
}

McgsmGrad McgsmGrad::zeros(const McgsmParams& p) {
  McgsmGrad g;
  g.eta = Eigen::MatrixXd::Zero(p.eta.rows(), p.eta.cols());
  g.alpha = Eigen::MatrixXd::Zero(p.alpha.rows(), p.alpha.cols());
  g.beta = Eigen::MatrixXd::Zero(p.beta.rows(), p.beta.cols());
  g.b = Eigen::MatrixXd::Zero(p.b.rows(), p.b.cols());
  g.a = Eigen::MatrixXd::Zero(p.a.rows(), p.a.cols());
  return g;
}

Eigen::VectorXd McgsmGrad::to_vector() const {
  Eigen::VectorXd v(eta.size() + alpha.size() + beta.size() + b.size() + a.size());
  Eigen::Index k = 0;
  for (const Eigen::MatrixXd* m : {&eta, &alpha, &beta, &b, &a}) {
    v.segment(k, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
    k += m->size();
  }
  return v;
}

McgsmParams init_mcgsm(int D, int C, int S, int N, RandomStream& rng) {
  if (D < 1 || C < 1 || S < 1 || N < 1) {
    throw DomainError("mcgsm sizes must all be >= 1, got D=" + std::to_string(D) +
                      " C=" + std::to_string(C) + " S=" + std::to_string(S) +
                      " N=" + std::to_string(N));
  }
  McgsmParams p;
  p.eta = Eigen::MatrixXd::Zero(C, S);
  p.alpha.resize(C, S);
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < S; ++s) {
      p.alpha(c, s) = S == 1 ? 0.0 : -1.0 + 2.0 * s / (S - 1.0);
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  auto fill = [&](Eigen::MatrixXd& m, int rows, int cols) {
    m.resize(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = scale * rng.normal();
      }
    }
  };
  fill(p.beta, C, N);
  fill(p.b, N, D);
  fill(p.a, C, D);
  return p;
}

Eigen::MatrixXd gate_posterior(const McgsmParams& p, const Eigen::VectorXd& ctx) {
  check_sizes(p, ctx.size());
  const int C = p.components(), S = p.scales();
  const Eigen::VectorXd f = p.b * ctx;                           // N
  const Eigen::VectorXd q = p.beta.array().square().matrix() * f.array().square().matrix();
  Eigen::MatrixXd z(C, S);
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < S; ++s) {
      z(c, s) = p.eta(c, s) - 0.5 * std::exp(capped(p.alpha(c, s))) * q[c];
    }
  }
  const double mx = z.maxCoeff();
  Eigen::MatrixXd post = (z.array() - mx).exp();
  post /= post.sum();
  return post;
}

Eigen::VectorXd conditional_log_density_batch(const McgsmParams& p, const Eigen::MatrixXd& ctxs,
                                              const Eigen::VectorXd& ys) {
  p.validate();
  check_sizes(p, ctxs.cols());
  if (ctxs.rows() != ys.size()) throw DomainError("context/pixel batch sizes differ");
  const Eigen::Index B = ctxs.rows();
  const int C = p.components(), S = p.scales();

  const Eigen::MatrixXd f2 = (ctxs * p.b.transpose()).array().square();       // B x N
  const Eigen::MatrixXd q = f2 * p.beta.array().square().matrix().transpose();  // B x C
  const Eigen::MatrixXd r = (-(ctxs * p.a.transpose())).colwise() + ys;       // B x C
  const Eigen::MatrixXd r2 = r.array().square();

  Eigen::MatrixXd z(B, C * S), u(B, C * S);
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < S; ++s) {
      const double al = capped(p.alpha(c, s));
      const double ea = std::exp(al);
      const Eigen::Index k = static_cast<Eigen::Index>(c) * S + s;
      z.col(k) = p.eta(c, s) - 0.5 * ea * q.col(c).array();
      u.col(k) = z.col(k).array() - 0.5 * kLogTwoPi + 0.5 * al - 0.5 * ea * r2.col(c).array();
    }
  }
  return rowwise_logsumexp(u) - rowwise_logsumexp(z);
}

double conditional_log_density(const McgsmParams& p, const Eigen::VectorXd& ctx, double y) {
  check_sizes(p, ctx.size());
  const int C = p.components(), S = p.scales();
  const Eigen::VectorXd f = p.b * ctx;
  const Eigen::VectorXd q = p.beta.array().square().matrix() * f.array().square().matrix();
  const Eigen::VectorXd mu = p.a * ctx;
  double max_z = -std::numeric_limits<double>::infinity();
  double max_u = max_z;
  Eigen::MatrixXd z(C, S), u(C, S);
  for (int c = 0; c < C; ++c) {
    const double r2 = (y - mu[c]) * (y - mu[c]);
    for (int s = 0; s < S; ++s) {
      const double al = capped(p.alpha(c, s));
      const double ea = std::exp(al);
      z(c, s) = p.eta(c, s) - 0.5 * ea * q[c];
      u(c, s) = z(c, s) - 0.5 * kLogTwoPi + 0.5 * al - 0.5 * ea * r2;
      max_z = std::max(max_z, z(c, s));
      max_u = std::max(max_u, u(c, s));
    }
  }
  const double lse_z = max_z + std::log((z.array() - max_z).exp().sum());
  const double lse_u = max_u + std::log((u.array() - max_u).exp().sum());
  return lse_u - lse_z;
}

double conditional_sample(const McgsmParams& p, const Eigen::VectorXd& ctx, RandomStream& rng) {
  const Eigen::MatrixXd post = gate_posterior(p, ctx);
  const int C = p.components(), S = p.scales();
  const double draw = rng.uniform();
  int c_sel = C - 1, s_sel = S - 1;
  double cum = 0.0;
  for (int c = 0; c < C && cum <= draw; ++c) {
    for (int s = 0; s < S; ++s) {
      cum += post(c, s);
      if (cum > draw) {
        c_sel = c;
        s_sel = s;
        break;
      }
    }
  }
  const double mean = p.a.row(c_sel).dot(ctx);
  const double stddev = std::exp(-0.5 * capped(p.alpha(c_sel, s_sel)));
  return mean + stddev * rng.normal();
}

double neg_loglik_grad(const McgsmParams& p, const Eigen::MatrixXd& ctxs,
                       const Eigen::VectorXd& ys, McgsmGrad* grad, Eigen::MatrixXd* dctx) {
  p.validate();
  check_sizes(p, ctxs.cols());
  if (ctxs.rows() == 0) throw DomainError("empty batch");
  if (ctxs.rows() != ys.size()) throw DomainError("context/pixel batch sizes differ");

  const Eigen::Index B = ctxs.rows();
  const int C = p.components(), S = p.scales(), D = p.dim();
  const Eigen::MatrixXd beta_sq = p.beta.array().square();

  if (grad) *grad = McgsmGrad::zeros(p);
  if (dctx) dctx->resize(B, D);

  double loglik_sum = 0.0;
  constexpr Eigen::Index kChunk = 16384;
  for (Eigen::Index start = 0; start < B; start += kChunk) {
    const Eigen::Index n = std::min(kChunk, B - start);
    const auto X = ctxs.middleRows(start, n);
    const auto y = ys.segment(start, n);

    const Eigen::MatrixXd f = X * p.b.transpose();                 // n x N
    const Eigen::MatrixXd f2 = f.array().square();
    const Eigen::MatrixXd q = f2 * beta_sq.transpose();            // n x C
    const Eigen::MatrixXd r = (-(X * p.a.transpose())).colwise() + y;  // n x C
    const Eigen::MatrixXd r2 = r.array().square();

    Eigen::MatrixXd z(n, C * S), u(n, C * S);
    for (int c = 0; c < C; ++c) {
      for (int s = 0; s < S; ++s) {
        const double al = capped(p.alpha(c, s));
        const double ea = std::exp(al);
        const Eigen::Index k = static_cast<Eigen::Index>(c) * S + s;
        z.col(k) = p.eta(c, s) - 0.5 * ea * q.col(c).array();
        u.col(k) = z.col(k).array() - 0.5 * kLogTwoPi + 0.5 * al - 0.5 * ea * r2.col(c).array();
      }
    }
    const Eigen::VectorXd lse_z = rowwise_logsumexp(z);
    const Eigen::VectorXd lse_u = rowwise_logsumexp(u);
    loglik_sum += (lse_u - lse_z).sum();

    if (!grad && !dctx) continue;

    const Eigen::MatrixXd p_gate = (z.colwise() - lse_z).array().exp();
    const Eigen::MatrixXd p_post = (u.colwise() - lse_u).array().exp();
    const Eigen::MatrixXd g = p_post - p_gate;  // d loglik / d z

    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(n, C);  // d loglik / d q
    Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(n, C);  // d loglik / d mu
    for (int c = 0; c < C; ++c) {
      for (int s = 0; s < S; ++s) {
        const double al = capped(p.alpha(c, s));
        const double ea = std::exp(al);
        const Eigen::Index k = static_cast<Eigen::Index>(c) * S + s;
        dq.col(c) -= 0.5 * ea * g.col(k);
        dm.col(c) += ea * (p_post.col(k).array() * r.col(c).array()).matrix();
        if (grad) {
          grad->eta(c, s) -= g.col(k).sum();
          if (p.alpha(c, s) < kAlphaCap) {
            const double dz_da = -0.5 * ea * (g.col(k).array() * q.col(c).array()).sum();
            const double dn_da =
                (p_post.col(k).array() * (0.5 - 0.5 * ea * r2.col(c).array())).sum();
            grad->alpha(c, s) -= dz_da + dn_da;
          }
        }
      }
    }
    const Eigen::MatrixXd df = 2.0 * ((dq * beta_sq).array() * f.array()).matrix();  // n x N
    if (grad) {
      grad->beta -= 2.0 * (p.beta.array() * (dq.transpose() * f2).array()).matrix();
      grad->b -= df.transpose() * X;
      grad->a -= dm.transpose() * X;
    }
    if (dctx) {
      dctx->middleRows(start, n) = -(df * p.b + dm * p.a);
    }
  }

  const double inv_b = 1.0 / static_cast<double>(B);
  if (grad) {
    grad->eta *= inv_b;
    grad->alpha *= inv_b;
    grad->beta *= inv_b;
    grad->b *= inv_b;
    grad->a *= inv_b;
  }
  if (dctx) *dctx *= inv_b;
  return -loglik_sum * inv_b;
}

}  // namespace ride
