#ifndef RIDE_NEIGHBORHOOD_HPP
#define RIDE_NEIGHBORHOOD_HPP

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ride/image.hpp"

namespace ride {

// Causal neighborhood of a pixel: all pixels in the rows_above rows above it
// within a centered window of odd width, plus the floor(width/2) pixels to
// its left in the current row. Every offset strictly precedes (0,0) in
// raster order.
struct NeighborhoodSpec {
  int width = 5;       // odd, positive
  int rows_above = 2;  // positive

  int dim() const { return rows_above * width + width / 2; }

  // Offsets (di, dj) relative to the target pixel, fixed raster order.
  std::vector<std::pair<int, int>> offsets() const;

  // Throws DomainError if width is even or either field is non-positive.
  void validate() const;
};

// Neighborhood values at (i, j) in the spec's fixed ordering; offsets falling
// outside the image read as zero.
Eigen::VectorXd extract_context(const Image& img, int i, int j, const NeighborhoodSpec& spec);

// Contexts for every pixel of the image, one row per pixel in raster order.
Eigen::MatrixXd extract_context_grid(const Image& img, const NeighborhoodSpec& spec);

// True if the whole neighborhood of (i, j) lies inside the image; training
// pair extraction samples only such positions so padding does not distort
// the fitted statistics.
bool context_fully_inside(const Image& img, int i, int j, const NeighborhoodSpec& spec);

}  // namespace ride

#endif  // RIDE_NEIGHBORHOOD_HPP
