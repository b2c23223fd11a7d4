#include <doctest.h>

#include <cmath>

#include "ride/errors.hpp"
#include "ride/mcgsm.hpp"
#include "support/oracles.hpp"

using ride::McgsmGrad;
using ride::McgsmParams;

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_normal(double y, double mean, double var) {
  return -0.5 * kLogTwoPi - 0.5 * std::log(var) - (y - mean) * (y - mean) / (2.0 * var);
}

McgsmParams random_params(int D, int C, int S, int N, std::uint64_t seed) {
  ride::RandomStream rng(seed);
  McgsmParams p = ride::init_mcgsm(D, C, S, N, rng);
  // Break the structured init so every parameter is generic.
  for (Eigen::MatrixXd* m : {&p.eta, &p.alpha, &p.beta, &p.b, &p.a}) {
    for (Eigen::Index k = 0; k < m->size(); ++k) {
      m->data()[k] += 0.3 * rng.normal();
    }
  }
  return p;
}

}  // namespace

TEST_CASE("init shapes follow the requested sizes") {
  ride::RandomStream rng(2);
  const McgsmParams p = ride::init_mcgsm(12, 32, 1, 32, rng);
  CHECK(p.eta.rows() == 32);
  CHECK(p.eta.cols() == 1);
  CHECK(p.alpha.rows() == 32);
  CHECK(p.beta.rows() == 32);
  CHECK(p.beta.cols() == 32);
  CHECK(p.b.rows() == 32);
  CHECK(p.b.cols() == 12);
  CHECK(p.a.rows() == 32);
  CHECK(p.a.cols() == 12);
  CHECK_THROWS_AS(ride::init_mcgsm(0, 1, 1, 1, rng), ride::DomainError);
}

TEST_CASE("scalar model has a nonnegative gate precision") {
  ride::RandomStream rng(3);
  const McgsmParams p = ride::init_mcgsm(1, 1, 1, 1, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const double x = rng.normal();
    const double quad = p.beta(0, 0) * p.beta(0, 0) * (p.b(0, 0) * x) * (p.b(0, 0) * x);
    CHECK(quad >= 0.0);
  }
}

TEST_CASE("implied precision matrix is positive semidefinite") {
  const McgsmParams p = random_params(6, 3, 2, 4, 77);
  ride::RandomStream rng(78);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(6);
    for (int k = 0; k < 6; ++k) x[k] = rng.normal();
    for (int c = 0; c < 3; ++c) {
      const Eigen::VectorXd f = p.b * x;
      const double quad = (p.beta.row(c).transpose().array().square() * f.array().square()).sum();
      CHECK(quad >= 0.0);
    }
  }
}

TEST_CASE("init is deterministic for a fixed seed") {
  ride::RandomStream a(9), b(9);
  CHECK(ride::init_mcgsm(4, 3, 2, 5, a).to_vector() == ride::init_mcgsm(4, 3, 2, 5, b).to_vector());
}

TEST_CASE("gate posterior of a single component is one") {
  ride::RandomStream rng(4);
  const McgsmParams p = ride::init_mcgsm(3, 1, 1, 2, rng);
  Eigen::VectorXd ctx(3);
  ctx << 0.3, -1.0, 2.0;
  const Eigen::MatrixXd post = ride::gate_posterior(p, ctx);
  CHECK(post.rows() == 1);
  CHECK(post.cols() == 1);
  CHECK(post(0, 0) == 1.0);
}

TEST_CASE("identical components split the posterior evenly") {
  McgsmParams p = random_params(4, 2, 1, 3, 5);
  p.eta.row(1) = p.eta.row(0);
  p.alpha.row(1) = p.alpha.row(0);
  p.beta.row(1) = p.beta.row(0);
  ride::RandomStream rng(6);
  Eigen::VectorXd ctx(4);
  for (int k = 0; k < 4; ++k) ctx[k] = rng.normal();
  const Eigen::MatrixXd post = ride::gate_posterior(p, ctx);
  CHECK(post(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(post(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("gate posterior matches the direct normalized-exponential oracle") {
  const McgsmParams p = random_params(5, 3, 2, 4, 21);
  ride::RandomStream rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd ctx(5);
    for (int k = 0; k < 5; ++k) ctx[k] = rng.normal();
    const Eigen::MatrixXd post = ride::gate_posterior(p, ctx);

    long double total = 0.0L;
    Eigen::MatrixXd oracle(3, 2);
    for (int c = 0; c < 3; ++c) {
      long double quad = 0.0L;
      for (int n = 0; n < 4; ++n) {
        const long double f = p.b.row(n).dot(ctx);
        quad += static_cast<long double>(p.beta(c, n)) * p.beta(c, n) * f * f;
      }
      for (int s = 0; s < 2; ++s) {
        const long double z = p.eta(c, s) - 0.5L * std::exp((long double)p.alpha(c, s)) * quad;
        oracle(c, s) = static_cast<double>(std::exp(z));
        total += std::exp(z);
      }
    }
    oracle /= static_cast<double>(total);
    CHECK((post - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(post.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("standard normal density at zero") {
  ride::RandomStream rng(8);
  McgsmParams p = ride::init_mcgsm(2, 1, 1, 1, rng);
  p.a.setZero();
  p.alpha.setZero();
  const Eigen::VectorXd ctx = Eigen::VectorXd::Zero(2);
  CHECK(ride::conditional_log_density(p, ctx, 0.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
}

TEST_CASE("two-gaussian mixture matches the closed form") {
  McgsmParams p = random_params(3, 2, 1, 2, 31);
  p.beta.setZero();  // gate decided by eta alone
  p.eta(0, 0) = 0.4;
  p.eta(1, 0) = -0.3;
  p.alpha(0, 0) = std::log(1.0 / 0.49);  // variance 0.49
  p.alpha(1, 0) = std::log(1.0 / 2.25);  // variance 2.25
  Eigen::VectorXd ctx(3);
  ctx << 1.0, -0.5, 0.25;
  const double mu1 = p.a.row(0).dot(ctx);
  const double mu2 = p.a.row(1).dot(ctx);
  const double w1 = std::exp(0.4) / (std::exp(0.4) + std::exp(-0.3));
  const double w2 = 1.0 - w1;
  const double expected =
      std::log(w1 * std::exp(log_normal(mu1, mu1, 0.49)) +
               w2 * std::exp(log_normal(mu1, mu2, 2.25)));
  CHECK(ride::conditional_log_density(p, ctx, mu1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("density is invariant to shifting every gate bias") {
  const McgsmParams p = random_params(4, 3, 2, 3, 41);
  McgsmParams shifted = p;
  shifted.eta.array() += 7.25;
  ride::RandomStream rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd ctx(4);
    for (int k = 0; k < 4; ++k) ctx[k] = rng.normal();
    const double y = rng.normal();
    CHECK(ride::conditional_log_density(p, ctx, y) ==
          doctest::Approx(ride::conditional_log_density(shifted, ctx, y)).epsilon(1e-12));
  }
}

TEST_CASE("conditional density integrates to one by quadrature") {
  ride::RandomStream rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const int D = 1 + static_cast<int>(rng.uniform_index(4));
    const int C = 1 + static_cast<int>(rng.uniform_index(3));
    const int S = 1 + static_cast<int>(rng.uniform_index(2));
    const int N = 1 + static_cast<int>(rng.uniform_index(3));
    const McgsmParams p = random_params(D, C, S, N, 1000 + trial);
    Eigen::VectorXd ctx(D);
    for (int k = 0; k < D; ++k) ctx[k] = rng.normal();

    const Eigen::VectorXd mu = p.a * ctx;
    const double sigma_max = std::exp(-0.5 * p.alpha.minCoeff());
    const double lo = mu.minCoeff() - 10.0 * sigma_max;
    const double hi = mu.maxCoeff() + 10.0 * sigma_max;
    const double mass = testutil::integrate_exp(
        [&](double y) { return ride::conditional_log_density(p, ctx, y); }, lo, hi);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("sampling moments of the standard normal head") {
  ride::RandomStream rng(61);
  McgsmParams p = ride::init_mcgsm(2, 1, 1, 1, rng);
  p.a.setZero();
  p.alpha.setZero();
  const Eigen::VectorXd ctx = Eigen::VectorXd::Zero(2);
  std::vector<double> draws(100000);
  for (double& d : draws) d = ride::conditional_sample(p, ctx, rng);
  const testutil::Moments m = testutil::sample_moments(draws);
  CHECK(std::abs(m.mean) < 0.01);
  CHECK(std::abs(m.var - 1.0) < 0.02);
}

TEST_CASE("a dominant gate bias forces its expert") {
  McgsmParams p = random_params(1, 2, 1, 1, 71);
  p.beta.setZero();
  p.eta(0, 0) = 0.0;
  p.eta(1, 0) = -1000.0;
  p.alpha.setZero();
  p.a(0, 0) = 0.0;
  p.a(1, 0) = 100.0;  // far-away mean exposes any draw from expert 2
  Eigen::VectorXd ctx(1);
  ctx << 1.0;
  ride::RandomStream rng(72);
  for (int k = 0; k < 1000; ++k) {
    CHECK(std::abs(ride::conditional_sample(p, ctx, rng)) < 10.0);
  }
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  const McgsmParams p = random_params(3, 2, 2, 2, 81);
  Eigen::VectorXd ctx(3);
  ctx << 0.1, 0.2, 0.3;
  ride::RandomStream a(5), b(5);
  CHECK(ride::conditional_sample(p, ctx, a) == ride::conditional_sample(p, ctx, b));
}

TEST_CASE("gradients match central finite differences") {
  ride::RandomStream rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    const int D = 1 + static_cast<int>(rng.uniform_index(4));
    const int C = 1 + static_cast<int>(rng.uniform_index(3));
    const int S = 1 + static_cast<int>(rng.uniform_index(3));
    const int N = 1 + static_cast<int>(rng.uniform_index(3));
    const int B = 3 + static_cast<int>(rng.uniform_index(4));
    const McgsmParams p = random_params(D, C, S, N, 2000 + trial);
    Eigen::MatrixXd ctxs(B, D);
    Eigen::VectorXd ys(B);
    for (int r = 0; r < B; ++r) {
      for (int c = 0; c < D; ++c) ctxs(r, c) = rng.normal();
      ys[r] = rng.normal();
    }

    McgsmGrad grad;
    Eigen::MatrixXd dctx;
    ride::neg_loglik_grad(p, ctxs, ys, &grad, &dctx);

    const Eigen::VectorXd fd_params = testutil::finite_difference(
        [&](const Eigen::VectorXd& v) {
          const McgsmParams q = McgsmParams::from_vector(v, D, C, S, N);
          return ride::neg_loglik_grad(q, ctxs, ys, nullptr);
        },
        p.to_vector());
    REQUIRE(testutil::max_scaled_error(grad.to_vector(), fd_params) < 1e-5);

    // Context gradients drive the recurrent backward pass.
    const Eigen::VectorXd dctx_flat =
        Eigen::Map<const Eigen::VectorXd>(dctx.data(), dctx.size());
    const Eigen::VectorXd ctxs_flat = Eigen::Map<const Eigen::VectorXd>(ctxs.data(), ctxs.size());
    const Eigen::VectorXd fd_ctx = testutil::finite_difference(
        [&](const Eigen::VectorXd& v) {
          const Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(v.data(), B, D);
          return ride::neg_loglik_grad(p, x, ys, nullptr);
        },
        ctxs_flat);
    REQUIRE(testutil::max_scaled_error(dctx_flat, fd_ctx) < 1e-5);
  }
}

TEST_CASE("gradient of the mean is zero at the conditional mean") {
  McgsmParams p = random_params(3, 1, 1, 2, 101);
  Eigen::MatrixXd ctxs(1, 3);
  ctxs << 0.7, -0.2, 1.1;
  Eigen::VectorXd ys(1);
  ys[0] = p.a.row(0).dot(ctxs.row(0));
  McgsmGrad grad;
  ride::neg_loglik_grad(p, ctxs, ys, &grad);
  CHECK(grad.a.cwiseAbs().maxCoeff() < 1e-12);

  // Off the mean, the gradient is the scaled residual times the context.
  ys[0] += 0.8;
  ride::neg_loglik_grad(p, ctxs, ys, &grad);
  const double resid = ys[0] - p.a.row(0).dot(ctxs.row(0));
  const Eigen::VectorXd expected =
      -std::exp(p.alpha(0, 0)) * resid * ctxs.row(0).transpose();
  CHECK((grad.a.row(0).transpose() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("duplicating the batch leaves value and gradient unchanged") {
  const McgsmParams p = random_params(3, 2, 1, 2, 111);
  ride::RandomStream rng(112);
  Eigen::MatrixXd ctxs(4, 3);
  Eigen::VectorXd ys(4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) ctxs(r, c) = rng.normal();
    ys[r] = rng.normal();
  }
  Eigen::MatrixXd ctxs2(8, 3);
  ctxs2 << ctxs, ctxs;
  Eigen::VectorXd ys2(8);
  ys2 << ys, ys;

  McgsmGrad g1, g2;
  const double v1 = ride::neg_loglik_grad(p, ctxs, ys, &g1);
  const double v2 = ride::neg_loglik_grad(p, ctxs2, ys2, &g2);
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
  CHECK(testutil::max_scaled_error(g1.to_vector(), g2.to_vector()) < 1e-12);
}

TEST_CASE("sampled data prefers the generating model") {
  ride::RandomStream rng(121);
  int wins = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const McgsmParams truth = random_params(3, 2, 2, 2, 3000 + trial);
    McgsmParams other = truth;
    for (Eigen::MatrixXd* m : {&other.eta, &other.alpha, &other.beta, &other.b, &other.a}) {
      for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] += 0.5 * rng.normal();
    }
    const int n = 10000;
    Eigen::MatrixXd ctxs(n, 3);
    Eigen::VectorXd ys(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < 3; ++c) ctxs(r, c) = rng.normal();
      ys[r] = ride::conditional_sample(truth, ctxs.row(r).transpose(), rng);
    }
    const double ll_truth = ride::conditional_log_density_batch(truth, ctxs, ys).mean();
    const double ll_other = ride::conditional_log_density_batch(other, ctxs, ys).mean();
    wins += ll_truth > ll_other ? 1 : 0;
  }
  CHECK(wins >= 19);
}

TEST_CASE("batch interfaces reject shape mismatches") {
  const McgsmParams p = random_params(3, 2, 1, 2, 131);
  Eigen::MatrixXd ctxs(2, 4);
  Eigen::VectorXd ys(2);
  CHECK_THROWS_AS(ride::neg_loglik_grad(p, ctxs, ys, nullptr), ride::DomainError);
  CHECK_THROWS_AS(ride::neg_loglik_grad(p, Eigen::MatrixXd(0, 3), Eigen::VectorXd(0), nullptr),
                  ride::DomainError);
  CHECK_THROWS_AS(ride::conditional_log_density(p, Eigen::VectorXd::Zero(5), 0.0),
                  ride::DomainError);
}
