#include "ride/whitening.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ride/errors.hpp"

namespace ride {

void WhiteningTransform::validate() const {
  const Eigen::Index D = m_x.size();
  if (D < 1) throw DomainError("whitening dimension must be positive");
  if (cxx_inv_sqrt.rows() != D || cxx_inv_sqrt.cols() != D || cyx_white.cols() != D) {
    throw DomainError("whitening transform shape mismatch");
  }
  if (!(w > 0.0)) throw DomainError("whitening W must be positive");
  if (!m_x.allFinite() || !cxx_inv_sqrt.allFinite() || !cyx_white.allFinite() ||
      !std::isfinite(m_y) || !std::isfinite(log_jacobian)) {
    throw DomainError("whitening transform contains non-finite values");
  }
}

WhiteningTransform WhiteningTransform::identity(int dim) {
  WhiteningTransform wt;
  wt.m_x = Eigen::VectorXd::Zero(dim);
  wt.m_y = 0.0;
  wt.cxx_inv_sqrt = Eigen::MatrixXd::Identity(dim, dim);
  wt.cyx_white = Eigen::RowVectorXd::Zero(dim);
  wt.w = 1.0;
  wt.log_jacobian = 0.0;
  return wt;
}

WhiteningTransform fit_whitening(const Eigen::MatrixXd& ctxs, const Eigen::VectorXd& ys) {
  const Eigen::Index B = ctxs.rows();
  const Eigen::Index D = ctxs.cols();
  if (D < 1) throw DomainError("whitening needs at least one context dimension");
  if (ys.size() != B) throw DomainError("context/pixel counts differ");
  if (B < D + 2) {
    throw DomainError("whitening needs at least D+2 pairs, got " + std::to_string(B));
  }

  WhiteningTransform wt;
  wt.m_x = ctxs.colwise().mean();
  wt.m_y = ys.mean();

  const Eigen::MatrixXd xc = ctxs.rowwise() - wt.m_x.transpose();
  const Eigen::VectorXd yc = ys.array() - wt.m_y;

  Eigen::MatrixXd cxx = (xc.transpose() * xc) / static_cast<double>(B);
  const Eigen::RowVectorXd cyx = (yc.transpose() * xc) / static_cast<double>(B);
  const double cyy = yc.squaredNorm() / static_cast<double>(B);

  const double ridge = 1e-8 * cxx.trace() / static_cast<double>(D);
  cxx.diagonal().array() += ridge;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cxx);
  if (eig.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
  const Eigen::VectorXd evals = eig.eigenvalues();
  const double floor = 1e-12 * std::max(1.0, evals.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < D; ++k) {
    if (evals[k] <= floor) {
      throw NumericError("context covariance degenerate after ridge: eigenvalue " +
                         std::to_string(evals[k]) + " at index " + std::to_string(k));
    }
  }
  const Eigen::MatrixXd inv_sqrt_diag = evals.array().rsqrt().matrix().asDiagonal();
  wt.cxx_inv_sqrt = eig.eigenvectors() * inv_sqrt_diag * eig.eigenvectors().transpose();

  wt.cyx_white = cyx * wt.cxx_inv_sqrt;
  const double resid_var = cyy - wt.cyx_white.squaredNorm();
  if (!(resid_var > 0.0)) {
    throw NumericError("pixel residual variance non-positive: " + std::to_string(resid_var));
  }
  wt.w = 1.0 / std::sqrt(resid_var);
  wt.log_jacobian = std::log(wt.w);
  wt.validate();
  return wt;
}

void precondition(const WhiteningTransform& wt, const Eigen::VectorXd& ctx, double y,
                  Eigen::VectorXd* ctx_hat, double* y_hat) {
  if (ctx.size() != wt.dim()) throw DomainError("precondition context dimension mismatch");
  *ctx_hat = wt.cxx_inv_sqrt * (ctx - wt.m_x);
  *y_hat = whiten_pixel(wt, *ctx_hat, y);
}

Eigen::MatrixXd whiten_contexts(const WhiteningTransform& wt, const Eigen::MatrixXd& ctxs) {
  if (ctxs.cols() != wt.dim()) throw DomainError("context dimension mismatch");
  return (ctxs.rowwise() - wt.m_x.transpose()) * wt.cxx_inv_sqrt;
}

Eigen::VectorXd whiten_pixels(const WhiteningTransform& wt, const Eigen::MatrixXd& ctxs_hat,
                              const Eigen::VectorXd& ys) {
  if (ctxs_hat.cols() != wt.dim() || ctxs_hat.rows() != ys.size()) {
    throw DomainError("whiten_pixels shape mismatch");
  }
  return wt.w * (ys - ctxs_hat * wt.cyx_white.transpose() - Eigen::VectorXd::Constant(
                                                                ys.size(), wt.m_y));
}

double whiten_pixel(const WhiteningTransform& wt, const Eigen::VectorXd& ctx_hat, double y) {
  return wt.w * (y - wt.cyx_white.dot(ctx_hat) - wt.m_y);
}

double unwhiten_pixel(const WhiteningTransform& wt, const Eigen::VectorXd& ctx_hat, double y_hat) {
  return y_hat / wt.w + wt.cyx_white.dot(ctx_hat) + wt.m_y;
}

}  // namespace ride
