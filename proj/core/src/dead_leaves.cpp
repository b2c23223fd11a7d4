#include "ride/dead_leaves.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ride/errors.hpp"

namespace ride {

void DeadLeavesConfig::validate() const {
  if (size <= 0) throw DomainError("dead leaves size must be positive");
  if (disk_count < 0) throw DomainError("dead leaves disk_count must be non-negative");
  if (!(radius_min > 0.0) || !(radius_max >= radius_min)) {
    throw DomainError("dead leaves radii must satisfy 0 < radius_min <= radius_max");
  }
  if (intensity_min < 0.0 || intensity_max > 1.0 || intensity_min > intensity_max) {
    throw DomainError("dead leaves intensity range must lie within [0,1]");
  }
}

namespace {

// Inverse-CDF draw from p(r) ~ r^-a truncated to [rmin, rmax].
double sample_radius(const DeadLeavesConfig& cfg, RandomStream& rng) {
  const double a = cfg.radius_exponent;
  const double u = rng.uniform();
  if (cfg.radius_min == cfg.radius_max) return cfg.radius_min;
  if (std::abs(a - 1.0) < 1e-12) {
    return cfg.radius_min * std::pow(cfg.radius_max / cfg.radius_min, u);
  }
  const double p = 1.0 - a;
  const double lo = std::pow(cfg.radius_min, p);
  const double hi = std::pow(cfg.radius_max, p);
  return std::pow(lo + u * (hi - lo), 1.0 / p);
}

}  // namespace

Image generate_dead_leaves(const DeadLeavesConfig& cfg, RandomStream& rng) {
  cfg.validate();
  Image img(cfg.size, cfg.size, 0.5);
  for (int d = 0; d < cfg.disk_count; ++d) {
    const double cx = rng.uniform() * cfg.size;
    const double cy = rng.uniform() * cfg.size;
    const double r = sample_radius(cfg, rng);
    const double intensity = rng.uniform(cfg.intensity_min, cfg.intensity_max);
    const double r2 = r * r;
    const int i_lo = std::max(0, static_cast<int>(std::floor(cy - r - 1.0)));
    const int i_hi = std::min(cfg.size - 1, static_cast<int>(std::ceil(cy + r + 1.0)));
    const int j_lo = std::max(0, static_cast<int>(std::floor(cx - r - 1.0)));
    const int j_hi = std::min(cfg.size - 1, static_cast<int>(std::ceil(cx + r + 1.0)));
    for (int i = i_lo; i <= i_hi; ++i) {
      const double dy = (i + 0.5) - cy;
      for (int j = j_lo; j <= j_hi; ++j) {
        const double dx = (j + 0.5) - cx;
        if (dx * dx + dy * dy <= r2) {
          img.at(i, j) = intensity;
        }
      }
    }
  }
  return img;
}

int scaled_disk_count(int size, int reference_size, int reference_count) {
  const double scale = static_cast<double>(size) * size /
                       (static_cast<double>(reference_size) * reference_size);
  return std::max(1, static_cast<int>(std::lround(reference_count * scale)));
}

}  // namespace ride
