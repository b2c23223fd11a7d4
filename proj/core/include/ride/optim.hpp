#ifndef RIDE_OPTIM_HPP
#define RIDE_OPTIM_HPP

#include <functional>

#include <Eigen/Core>

namespace ride {

// Heavy-ball momentum state: velocity <- momentum*velocity - lr*grads,
// params <- params + velocity.
struct SgdState {
  Eigen::VectorXd velocity;
  double momentum = 0.9;
  double learning_rate = 1.0;

  static SgdState create(Eigen::Index size, double momentum, double learning_rate);
};

void sgd_step(SgdState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads);

struct LbfgsConfig {
  int memory = 10;
  int max_iterations = 100;
  double gradient_tolerance = 1e-9;  // infinity norm
  double c1 = 1e-4;                  // sufficient decrease
  double c2 = 0.9;                   // curvature
  int max_backtracks = 30;           // line search evaluation budget

  void validate() const;
};

struct LbfgsResult {
  Eigen::VectorXd params;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;          // gradient tolerance reached
  bool line_search_failed = false;  // returned best-so-far
};

// objective(x, grad_out) returns f(x) and writes its gradient. Accepted
// values are monotonically non-increasing; returns immediately when the
// initial gradient already meets the tolerance.
LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
    Eigen::VectorXd initial, const LbfgsConfig& cfg);

}  // namespace ride

#endif  // RIDE_OPTIM_HPP
