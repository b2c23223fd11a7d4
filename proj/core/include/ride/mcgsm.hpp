#ifndef RIDE_MCGSM_HPP
#define RIDE_MCGSM_HPP

#include <Eigen/Core>

#include "ride/random.hpp"

namespace ride {

// Factorized mixture of conditional Gaussian scale mixtures. The conditional
// of a pixel y given its context x is a mixture of experts
//
//   p(y | x) = sum_{c,s} p(c,s | x) N(y; a_c' x, exp(-alpha_cs))
//   p(c,s | x) ~ exp(eta_cs - 0.5 exp(alpha_cs) x' K_c x)
//
// with gate precision matrices K_c = sum_n beta_cn^2 b_n b_n', positive
// semidefinite by construction. beta is stored unsquared so all parameters
// are unconstrained.
struct McgsmParams {
  Eigen::MatrixXd eta;    // C x S gate biases
  Eigen::MatrixXd alpha;  // C x S log precisions
  Eigen::MatrixXd beta;   // C x N feature weights, squared on use
  Eigen::MatrixXd b;      // N x D feature vectors
  Eigen::MatrixXd a;      // C x D linear predictors

  int dim() const { return static_cast<int>(b.cols()); }
  int components() const { return static_cast<int>(eta.rows()); }
  int scales() const { return static_cast<int>(eta.cols()); }
  int features() const { return static_cast<int>(b.rows()); }

  Eigen::Index parameter_count() const;
  Eigen::VectorXd to_vector() const;
  static McgsmParams from_vector(const Eigen::VectorXd& v, int D, int C, int S, int N);

  // Shape consistency and finiteness.
  void validate() const;
};

// Gradient holder with the same shapes as McgsmParams.
struct McgsmGrad {
  Eigen::MatrixXd eta, alpha, beta, b, a;

  static McgsmGrad zeros(const McgsmParams& p);
  Eigen::VectorXd to_vector() const;
};

// eta zero, alpha on a log-grid over [-1,1] per component (identical scales
// would collapse the scale mixture), beta/b/a Gaussian with scale 1/sqrt(D).
McgsmParams init_mcgsm(int D, int C, int S, int N, RandomStream& rng);

// Posterior over (component, scale) given the context; entries sum to one.
Eigen::MatrixXd gate_posterior(const McgsmParams& p, const Eigen::VectorXd& ctx);

// log p(y | ctx), evaluated in the log domain.
double conditional_log_density(const McgsmParams& p, const Eigen::VectorXd& ctx, double y);

// log p(y_k | ctx_k) for a batch; rows of ctxs are contexts.
Eigen::VectorXd conditional_log_density_batch(const McgsmParams& p, const Eigen::MatrixXd& ctxs,
                                              const Eigen::VectorXd& ys);

// Draws (c,s) from the gate posterior, then y from the selected expert.
double conditional_sample(const McgsmParams& p, const Eigen::VectorXd& ctx, RandomStream& rng);

// Mean negative log-likelihood over the batch and its exact gradient.
// If dctx is non-null it receives d(mean NLL)/d(context) per batch row,
// which the recurrent model backpropagates into the feature network.
double neg_loglik_grad(const McgsmParams& p, const Eigen::MatrixXd& ctxs,
                       const Eigen::VectorXd& ys, McgsmGrad* grad,
                       Eigen::MatrixXd* dctx = nullptr);

}  // namespace ride

#endif  // RIDE_MCGSM_HPP
