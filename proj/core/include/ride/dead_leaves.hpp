#ifndef RIDE_DEAD_LEAVES_HPP
#define RIDE_DEAD_LEAVES_HPP

#include "ride/image.hpp"
#include "ride/random.hpp"

namespace ride {

// Occlusion-model image generator: disks of random intensity and size are
// stacked back to front on a mid-gray background. Radii follow a truncated
// power law p(r) proportional to r^-radius_exponent on [radius_min, radius_max],
// the scale-invariant choice for radius_exponent = 3.
struct DeadLeavesConfig {
  int size = 256;
  int disk_count = 4000;
  double radius_min = 2.0;
  double radius_max = 64.0;
  double radius_exponent = 3.0;
  double intensity_min = 0.0;
  double intensity_max = 1.0;

  void validate() const;
};

Image generate_dead_leaves(const DeadLeavesConfig& cfg, RandomStream& rng);

// Disk count giving the same expected coverage per pixel as `reference_count`
// disks on a reference_size image; used for CLI defaults at other sizes.
int scaled_disk_count(int size, int reference_size = 256, int reference_count = 4000);

}  // namespace ride

#endif  // RIDE_DEAD_LEAVES_HPP
