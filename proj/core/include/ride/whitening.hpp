#ifndef RIDE_WHITENING_HPP
#define RIDE_WHITENING_HPP

#include <Eigen/Core>

namespace ride {

// Conditional whitening of (context, pixel) pairs:
//
//   x_hat = Cxx^{-1/2} (x - m_x)
//   y_hat = W (y - Cyx Cxx^{-1/2} x_hat - m_y),   W = (Cyy - Cyx Cxx^{-1} Cyx')^{-1/2}
//
// The pixel is decorrelated from its context and variance-normalized; a
// log-density computed on y_hat is mapped back by adding log_jacobian = log W.
struct WhiteningTransform {
  Eigen::VectorXd m_x;
  double m_y = 0.0;
  Eigen::MatrixXd cxx_inv_sqrt;   // D x D, symmetric positive definite
  Eigen::RowVectorXd cyx_white;   // Cyx * Cxx^{-1/2}
  double w = 1.0;                 // scalar W, positive
  double log_jacobian = 0.0;      // log W

  int dim() const { return static_cast<int>(m_x.size()); }
  void validate() const;

  static WhiteningTransform identity(int dim);
};

// Fits means and population covariances over the rows of ctxs; a ridge of
// 1e-8 * trace/D is added to Cxx before inversion. Throws NumericError
// naming the offending eigenvalue if the covariance stays degenerate.
WhiteningTransform fit_whitening(const Eigen::MatrixXd& ctxs, const Eigen::VectorXd& ys);

// The two affine maps applied to one pair.
void precondition(const WhiteningTransform& wt, const Eigen::VectorXd& ctx, double y,
                  Eigen::VectorXd* ctx_hat, double* y_hat);

// Batched context map; one row per context.
Eigen::MatrixXd whiten_contexts(const WhiteningTransform& wt, const Eigen::MatrixXd& ctxs);

// Pixel map given already-whitened contexts.
Eigen::VectorXd whiten_pixels(const WhiteningTransform& wt, const Eigen::MatrixXd& ctxs_hat,
                              const Eigen::VectorXd& ys);

double whiten_pixel(const WhiteningTransform& wt, const Eigen::VectorXd& ctx_hat, double y);

// Inverse of the pixel map, used when sampling.
double unwhiten_pixel(const WhiteningTransform& wt, const Eigen::VectorXd& ctx_hat, double y_hat);

}  // namespace ride

#endif  // RIDE_WHITENING_HPP
