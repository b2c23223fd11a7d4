#include "ride/neighborhood.hpp"

#include <string>

#include "ride/errors.hpp"

namespace ride {

void NeighborhoodSpec::validate() const {
  if (width <= 0 || width % 2 == 0) {
    throw DomainError("neighborhood width must be odd and positive, got " +
                      std::to_string(width));
  }
  if (rows_above <= 0) {
    throw DomainError("neighborhood rows_above must be positive, got " +
                      std::to_string(rows_above));
  }
}

std::vector<std::pair<int, int>> NeighborhoodSpec::offsets() const {
  validate();
  const int half = width / 2;
  std::vector<std::pair<int, int>> offs;
  offs.reserve(static_cast<std::size_t>(dim()));
  for (int di = -rows_above; di <= -1; ++di) {
    for (int dj = -half; dj <= half; ++dj) {
      offs.emplace_back(di, dj);
    }
  }
  for (int dj = -half; dj <= -1; ++dj) {
    offs.emplace_back(0, dj);
  }
  return offs;
}

Eigen::VectorXd extract_context(const Image& img, int i, int j, const NeighborhoodSpec& spec) {
  if (!img.in_bounds(i, j)) {
    throw DomainError("context pixel (" + std::to_string(i) + "," + std::to_string(j) +
                      ") outside " + std::to_string(img.height) + "x" +
                      std::to_string(img.width) + " image");
  }
  const int half = spec.width / 2;
  Eigen::VectorXd ctx(spec.dim());
  Eigen::Index k = 0;
  for (int di = -spec.rows_above; di <= -1; ++di) {
    const int r = i + di;
    for (int dj = -half; dj <= half; ++dj) {
      const int c = j + dj;
      ctx[k++] = img.in_bounds(r, c) ? img.at(r, c) : 0.0;
    }
  }
  for (int dj = -half; dj <= -1; ++dj) {
    const int c = j + dj;
    ctx[k++] = img.in_bounds(i, c) ? img.at(i, c) : 0.0;
  }
  return ctx;
}

Eigen::MatrixXd extract_context_grid(const Image& img, const NeighborhoodSpec& spec) {
  spec.validate();
  Eigen::MatrixXd ctxs(static_cast<Eigen::Index>(img.pixel_count()), spec.dim());
  for (int i = 0; i < img.height; ++i) {
    for (int j = 0; j < img.width; ++j) {
      ctxs.row(static_cast<Eigen::Index>(i) * img.width + j) =
          extract_context(img, i, j, spec).transpose();
    }
  }
  return ctxs;
}

bool context_fully_inside(const Image& img, int i, int j, const NeighborhoodSpec& spec) {
  const int half = spec.width / 2;
  return i >= spec.rows_above && j >= half && j + half < img.width;
}

}  // namespace ride
