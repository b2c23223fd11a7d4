#include "ride/optim.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "ride/errors.hpp"

namespace ride {

SgdState SgdState::create(Eigen::Index size, double momentum, double learning_rate) {
  if (momentum < 0.0 || momentum >= 1.0) throw DomainError("momentum must lie in [0,1)");
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  SgdState st;
  st.velocity = Eigen::VectorXd::Zero(size);
  st.momentum = momentum;
  st.learning_rate = learning_rate;
  return st;
}

void sgd_step(SgdState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (state.velocity.size() != params.size() || grads.size() != params.size()) {
    throw DomainError("sgd_step shape mismatch");
  }
  state.velocity = state.momentum * state.velocity - state.learning_rate * grads;
  params += state.velocity;
}

void LbfgsConfig::validate() const {
  if (memory < 1) throw DomainError("lbfgs memory must be positive");
  if (max_iterations < 0) throw DomainError("lbfgs max_iterations must be non-negative");
  if (!(gradient_tolerance > 0.0)) throw DomainError("lbfgs gradient_tolerance must be positive");
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw DomainError("need 0 < c1 < c2 < 1");
  if (max_backtracks < 1) throw DomainError("lbfgs max_backtracks must be positive");
}

namespace {

struct LineSearchOutcome {
  bool ok = false;
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd grad;
  // Lowest finite value seen even if Wolfe failed, for best-so-far recovery.
  double best_value = std::numeric_limits<double>::infinity();
  double best_step = 0.0;
};

// Strong Wolfe line search: bracketing phase with doubling steps, then
// bisection/interpolation zoom. The evaluation budget covers both phases.
LineSearchOutcome wolfe_line_search(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
    double t_init, const LbfgsConfig& cfg) {
  LineSearchOutcome out;
  const double dphi0 = g0.dot(dir);
  if (!(dphi0 < 0.0)) return out;

  Eigen::VectorXd g_t(x.size());
  int evals = 0;
  auto phi = [&](double t) {
    ++evals;
    return objective(x + t * dir, g_t);
  };
  auto track_best = [&](double t, double ft) {
    if (std::isfinite(ft) && ft < out.best_value) {
      out.best_value = ft;
      out.best_step = t;
    }
  };
  auto accept = [&](double t, double ft) {
    out.ok = true;
    out.step = t;
    out.value = ft;
    out.grad = g_t;
  };

  double lo = 0.0, f_lo = f0, dphi_lo = dphi0;
  double hi = 0.0, f_hi = 0.0;
  bool bracketed = false;

  double t = t_init, t_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
  while (evals < cfg.max_backtracks && !bracketed) {
    const double ft = phi(t);
    track_best(t, ft);
    if (!std::isfinite(ft) || ft > f0 + cfg.c1 * t * dphi0 || (t_prev > 0.0 && ft >= f_prev)) {
      lo = t_prev;
      f_lo = f_prev;
      dphi_lo = dphi_prev;
      hi = t;
      f_hi = ft;
      bracketed = true;
      break;
    }
    const double dphi_t = g_t.dot(dir);
    if (std::abs(dphi_t) <= -cfg.c2 * dphi0) {
      accept(t, ft);
      return out;
    }
    if (dphi_t >= 0.0) {
      lo = t;
      f_lo = ft;
      dphi_lo = dphi_t;
      hi = t_prev;
      f_hi = f_prev;
      bracketed = true;
      break;
    }
    t_prev = t;
    f_prev = ft;
    dphi_prev = dphi_t;
    t *= 2.0;
    if (t > 1e12) break;
  }
  if (!bracketed) return out;

  while (evals < cfg.max_backtracks) {
    // Quadratic interpolation using (lo, f_lo, dphi_lo) and (hi, f_hi),
    // safeguarded toward bisection.
    double t_mid = 0.5 * (lo + hi);
    const double denom = f_hi - f_lo - dphi_lo * (hi - lo);
    if (std::isfinite(denom) && std::abs(denom) > 1e-300) {
      const double t_quad = lo - 0.5 * dphi_lo * (hi - lo) * (hi - lo) / denom;
      const double lo_bound = std::min(lo, hi), hi_bound = std::max(lo, hi);
      const double margin = 0.1 * (hi_bound - lo_bound);
      if (std::isfinite(t_quad) && t_quad > lo_bound + margin && t_quad < hi_bound - margin) {
        t_mid = t_quad;
      }
    }
    const double ft = phi(t_mid);
    track_best(t_mid, ft);
    if (!std::isfinite(ft) || ft > f0 + cfg.c1 * t_mid * dphi0 || ft >= f_lo) {
      hi = t_mid;
      f_hi = ft;
    } else {
      const double dphi_t = g_t.dot(dir);
      if (std::abs(dphi_t) <= -cfg.c2 * dphi0) {
        accept(t_mid, ft);
        return out;
      }
      if (dphi_t * (hi - lo) >= 0.0) {
        hi = lo;
        f_hi = f_lo;
      }
      lo = t_mid;
      f_lo = ft;
      dphi_lo = dphi_t;
    }
    if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
  }
  return out;
}

}  // namespace

LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
    Eigen::VectorXd initial, const LbfgsConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = initial.size();
  LbfgsResult res;
  res.params = std::move(initial);

  Eigen::VectorXd g(n);
  double f = objective(res.params, g);
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NumericError("objective not finite at the initial point");
  }
  res.value = f;
  if (g.lpNorm<Eigen::Infinity>() <= cfg.gradient_tolerance) {
    res.converged = true;
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    // Two-loop recursion for the search direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    if (!(dir.dot(g) < 0.0)) dir = -g;  // fall back to steepest descent

    const double t_init = iter == 1 ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearchOutcome ls =
        wolfe_line_search(objective, res.params, f, g, dir, t_init, cfg);
    if (!ls.ok) {
      res.line_search_failed = true;
      if (ls.best_value < f) {
        // Take the best point the failed search saw; monotone by construction.
        res.params += ls.best_step * dir;
        f = objective(res.params, g);
        res.value = f;
        res.iterations = iter;
      }
      return res;
    }

    const Eigen::VectorXd s = ls.step * dir;
    const Eigen::VectorXd y = ls.grad - g;
    res.params += s;
    f = ls.value;
    g = ls.grad;
    res.value = f;
    res.iterations = iter;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (g.lpNorm<Eigen::Infinity>() <= cfg.gradient_tolerance) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace ride
