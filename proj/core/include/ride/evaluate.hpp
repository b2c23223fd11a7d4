#ifndef RIDE_EVALUATE_HPP
#define RIDE_EVALUATE_HPP

#include <string>
#include <vector>

#include "ride/image.hpp"
#include "ride/model.hpp"

namespace ride {

// Pixel-grid bijections used for transformation ensembles. All of them are
// permutations of pixels, so |det T| = 1; the log-determinant is stored
// anyway to keep the ensemble mixture form explicit.
struct GridTransform {
  enum class Kind {
    identity,
    rot90,   // clockwise quarter turn
    rot180,
    rot270,
    flip_h,  // mirror left-right
    flip_v,  // mirror top-bottom
    transpose,
    anti_transpose,
  };

  Kind kind = Kind::identity;
  double log_abs_det = 0.0;

  Image apply(const Image& img) const;
  GridTransform inverse() const;
  // True if the transform maps an h x w grid to a w x h grid.
  bool swaps_axes() const;
  std::string name() const;
};

struct TransformSet {
  std::vector<GridTransform> transforms;

  static TransformSet identity_only();
  // The 8 symmetries of the square: rotations plus horizontal/vertical and
  // diagonal flips.
  static TransformSet dihedral8();
};

// Parses "identity" or "dihedral8"; throws DomainError otherwise.
TransformSet parse_transform_set(const std::string& name);

// Mixture over transformed images: logsumexp_k(log p(T_k x) + log|det T_k|) - log K.
double ensemble_log_density(const RideModel& model, const TransformSet& ts, const Image& img);

// Average log-likelihood rate in bits per pixel over disjoint patch_side
// patches of the images. Patch evaluations may run on several threads; the
// reduction is ordered so results do not depend on the thread count.
double loglik_rate_bits(const RideModel& model, const std::vector<Image>& images,
                        int patch_side = 64, int threads = 1);

// Same rate with each patch scored by the transformation ensemble.
double ensemble_loglik_rate_bits(const RideModel& model, const TransformSet& ts,
                                 const std::vector<Image>& images, int patch_side = 64,
                                 int threads = 1);

// Constants for converting patch log-likelihoods reported in nats on
// DC-removed 63-dimensional patches into bit-per-pixel rates.
struct ConversionConstants {
  static constexpr double ell_dc = 0.5020;      // nats for the missing DC component
  static constexpr double log_det_a = -4.1589;  // preprocessing Jacobian, nats
  static constexpr int dims = 64;
};

// (ell + ell_dc + log_det_a) / 64 / ln 2.
double nats63_to_bits_per_px(double ell);

}  // namespace ride

#endif  // RIDE_EVALUATE_HPP
