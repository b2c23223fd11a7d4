#include "ride/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ride/errors.hpp"

namespace ride {

namespace {

constexpr double kLn2 = 0.6931471805599453;

}  // namespace

Image GridTransform::apply(const Image& img) const {
  const int h = img.height, w = img.width;
  Image out = swaps_axes() ? Image(w, h) : Image(h, w);
  for (int i = 0; i < out.height; ++i) {
    for (int j = 0; j < out.width; ++j) {
      double v = 0.0;
      switch (kind) {
        case Kind::identity: v = img.at(i, j); break;
        case Kind::rot90: v = img.at(h - 1 - j, i); break;
        case Kind::rot180: v = img.at(h - 1 - i, w - 1 - j); break;
        case Kind::rot270: v = img.at(j, w - 1 - i); break;
        case Kind::flip_h: v = img.at(i, w - 1 - j); break;
        case Kind::flip_v: v = img.at(h - 1 - i, j); break;
        case Kind::transpose: v = img.at(j, i); break;
        case Kind::anti_transpose: v = img.at(w - 1 - j, h - 1 - i); break;
      }
      out.at(i, j) = v;
    }
  }
  return out;
}

GridTransform GridTransform::inverse() const {
  GridTransform inv = *this;
  if (kind == Kind::rot90) inv.kind = Kind::rot270;
  else if (kind == Kind::rot270) inv.kind = Kind::rot90;
  return inv;
}

bool GridTransform::swaps_axes() const {
  return kind == Kind::rot90 || kind == Kind::rot270 || kind == Kind::transpose ||
         kind == Kind::anti_transpose;
}

std::string GridTransform::name() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::rot90: return "rot90";
    case Kind::rot180: return "rot180";
    case Kind::rot270: return "rot270";
    case Kind::flip_h: return "flip_h";
    case Kind::flip_v: return "flip_v";
    case Kind::transpose: return "transpose";
    case Kind::anti_transpose: return "anti_transpose";
  }
  return "unknown";
}

TransformSet TransformSet::identity_only() {
  return TransformSet{{GridTransform{GridTransform::Kind::identity, 0.0}}};
}

TransformSet TransformSet::dihedral8() {
  using K = GridTransform::Kind;
  TransformSet ts;
  for (K k : {K::identity, K::rot90, K::rot180, K::rot270, K::flip_h, K::flip_v, K::transpose,
              K::anti_transpose}) {
    ts.transforms.push_back(GridTransform{k, 0.0});
  }
  return ts;
}

TransformSet parse_transform_set(const std::string& name) {
  if (name == "identity") return TransformSet::identity_only();
  if (name == "dihedral8") return TransformSet::dihedral8();
  throw DomainError("unknown transform set: " + name + " (expected identity or dihedral8)");
}

double ensemble_log_density(const RideModel& model, const TransformSet& ts, const Image& img) {
  if (ts.transforms.empty()) throw DomainError("transform set is empty");
  bool needs_square = false;
  for (const GridTransform& t : ts.transforms) needs_square |= t.swaps_axes();
  if (needs_square && img.height != img.width) {
    throw DomainError("axis-swapping transforms need a square image, got " +
                      std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  std::vector<double> logs;
  logs.reserve(ts.transforms.size());
  for (const GridTransform& t : ts.transforms) {
    logs.push_back(ride_log_density(model, t.apply(img)).total + t.log_abs_det);
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - mx);
  return mx + std::log(sum) - std::log(static_cast<double>(logs.size()));
}

namespace {

// Applies fn to every patch index on `threads` workers over contiguous
// ranges, then reduces in index order.
template <typename Fn>
double ordered_patch_sum(const std::vector<Image>& patches, int threads, Fn fn) {
  std::vector<double> totals(patches.size(), 0.0);
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(patches.size())));
  if (workers == 1) {
    for (std::size_t k = 0; k < patches.size(); ++k) totals[k] = fn(patches[k]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (patches.size() + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(patches.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi]() {
        for (std::size_t k = lo; k < hi; ++k) totals[k] = fn(patches[k]);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  double sum = 0.0;
  for (double v : totals) sum += v;
  return sum;
}

std::vector<Image> gather_patches(const std::vector<Image>& images, int patch_side) {
  if (images.empty()) throw DomainError("no images to evaluate");
  std::vector<Image> patches;
  for (const Image& img : images) {
    if (img.height < patch_side || img.width < patch_side) {
      throw DomainError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                        " smaller than evaluation patch " + std::to_string(patch_side));
    }
    std::vector<Image> p = extract_patches(img, patch_side, patch_side);
    for (Image& q : p) patches.push_back(std::move(q));
  }
  return patches;
}

}  // namespace

double loglik_rate_bits(const RideModel& model, const std::vector<Image>& images, int patch_side,
                        int threads) {
  model.validate();
  const std::vector<Image> patches = gather_patches(images, patch_side);
  const double total = ordered_patch_sum(patches, threads, [&](const Image& p) {
    return ride_log_density(model, p).total;
  });
  const double pixels = static_cast<double>(patches.size()) * patch_side * patch_side;
  return total / pixels / kLn2;
}

double ensemble_loglik_rate_bits(const RideModel& model, const TransformSet& ts,
                                 const std::vector<Image>& images, int patch_side, int threads) {
  model.validate();
  const std::vector<Image> patches = gather_patches(images, patch_side);
  const double total = ordered_patch_sum(patches, threads, [&](const Image& p) {
    return ensemble_log_density(model, ts, p);
  });
  const double pixels = static_cast<double>(patches.size()) * patch_side * patch_side;
  return total / pixels / kLn2;
}

double nats63_to_bits_per_px(double ell) {
  return (ell + ConversionConstants::ell_dc + ConversionConstants::log_det_a) /
         ConversionConstants::dims / kLn2;
}

}  // namespace ride
