#ifndef RIDE_SAMPLING_HPP
#define RIDE_SAMPLING_HPP

#include <functional>
#include <optional>

#include "ride/model.hpp"
#include "ride/random.hpp"

namespace ride {

struct Region {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool contains(int i, int j) const {
    return i >= top && i < top + height && j >= left && j < left + width;
  }
};

// Walks every cell of img in raster order, maintaining the recurrent state
// incrementally. At cells where free(i,j) is true, a pixel is drawn from the
// model conditional and written into img when rng is given; either way the
// conditional log density of the (possibly just written) pixel accumulates
// into the returned value. Cells where free is false keep their pixel and
// only feed the state. This single pass implements ancestral sampling,
// proposal generation and proposal-density evaluation.
double sequential_pass(const RideModel& model, Image* img,
                       const std::function<bool(int, int)>& free, RandomStream* rng);

// Pixels generated in raster order, each drawn from the model conditional
// given the already-generated pixels. An optional seed image occupies the
// top rows (a raster prefix); its width must equal the requested width.
Image ancestral_sample(const RideModel& model, int height, int width, RandomStream& rng,
                       const std::optional<Image>& seed_rows = std::nullopt);

// log of p(proposed)/p(current) * q(current)/q(proposed) where p is the model
// joint over the window and q the ancestral proposal density of the region
// given its causal context inside the window. Swapping the images negates
// the result.
double log_acceptance_ratio(const RideModel& model, const Image& current, const Image& proposed,
                            const Region& region, const Region& window);

// min(1, exp(log_acceptance_ratio)); exactly 1 for identity proposals and 0
// when the ratio underflows.
double acceptance_probability(const RideModel& model, const Image& current,
                              const Image& proposed, const Region& region, const Region& window);

struct InpaintConfig {
  int sweeps = 100;
  int block_size = 5;
  int block_overlap = 2;
  int local_window = 19;
  int init_candidates = 5;
  bool flip_between_sweeps = true;

  void validate() const;
};

// Metropolis-within-Gibbs posterior sampling of the masked pixels
// (mask value 1 = missing). Missing pixels are initialized by the best of
// init_candidates ancestral completions; each sweep proposes overlapping
// blocks by ancestral sampling inside a local window and accepts them via
// acceptance_probability. The image and mask are flipped horizontally or
// vertically between sweeps (fair coin picks the axis) and flipped back at
// the end. Observed pixels are never modified.
Image inpaint(const RideModel& model, const Image& image, const Image& mask,
              const InpaintConfig& cfg, RandomStream& rng);

}  // namespace ride

#endif  // RIDE_SAMPLING_HPP
