#include "ride/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ride/errors.hpp"

namespace ride {

namespace {

// Incremental recurrent state: one row of (h, c) per layer for the previous
// and current grid row.
struct RowState {
  std::vector<Eigen::MatrixXd> prev_h, prev_c, cur_h, cur_c;  // width x hidden

  RowState(const RideModel& model, int width) {
    for (const SlstmLayerParams& l : model.layers) {
      prev_h.emplace_back(Eigen::MatrixXd::Zero(width, l.hidden_dim));
      prev_c.emplace_back(Eigen::MatrixXd::Zero(width, l.hidden_dim));
      cur_h.emplace_back(Eigen::MatrixXd::Zero(width, l.hidden_dim));
      cur_c.emplace_back(Eigen::MatrixXd::Zero(width, l.hidden_dim));
    }
  }

  void next_row() {
    std::swap(prev_h, cur_h);
    std::swap(prev_c, cur_c);
  }
};

Image crop(const Image& img, const Region& r) {
  Image out(r.height, r.width);
  for (int i = 0; i < r.height; ++i) {
    for (int j = 0; j < r.width; ++j) out.at(i, j) = img.at(r.top + i, r.left + j);
  }
  return out;
}

}  // namespace

double sequential_pass(const RideModel& model, Image* img,
                       const std::function<bool(int, int)>& free, RandomStream* rng) {
  model.validate();
  img->validate();
  const int height = img->height, width = img->width;
  const int H = model.top_hidden_dim();
  RowState state(model, width);

  double logq = 0.0;
  Eigen::VectorXd head_in(model.head_dim());
  Eigen::VectorXd h_out, c_out;
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const Eigen::VectorXd ctx = extract_context(*img, i, j, model.neighborhood);
      Eigen::VectorXd feat = model.whitening.cxx_inv_sqrt * (ctx - model.whitening.m_x);
      const Eigen::VectorXd ctx_hat = feat;
      for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const SlstmLayerParams& l = model.layers[k];
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(l.hidden_dim);
        const Eigen::VectorXd h_left = j > 0 ? state.cur_h[k].row(j - 1).transpose() : zero;
        const Eigen::VectorXd c_left = j > 0 ? state.cur_c[k].row(j - 1).transpose() : zero;
        const Eigen::VectorXd h_up = i > 0 ? state.prev_h[k].row(j).transpose() : zero;
        const Eigen::VectorXd c_up = i > 0 ? state.prev_c[k].row(j).transpose() : zero;
        slstm_cell(l, feat, h_left, c_left, h_up, c_up, &h_out, &c_out);
        state.cur_h[k].row(j) = h_out.transpose();
        state.cur_c[k].row(j) = c_out.transpose();
        feat = h_out;
      }
      if (model.layers.empty()) {
        head_in = ctx_hat;
      } else {
        head_in.head(H) = feat;
        head_in.tail(model.neighborhood.dim()) = ctx_hat;
      }
      if (free(i, j)) {
        if (rng) {
          const double y_hat = conditional_sample(model.head, head_in, *rng);
          img->at(i, j) = unwhiten_pixel(model.whitening, ctx_hat, y_hat);
        }
        const double y_hat_eval = whiten_pixel(model.whitening, ctx_hat, img->at(i, j));
        logq += conditional_log_density(model.head, head_in, y_hat_eval) +
                model.whitening.log_jacobian;
      }
    }
    state.next_row();
  }
  return logq;
}

Image ancestral_sample(const RideModel& model, int height, int width, RandomStream& rng,
                       const std::optional<Image>& seed_rows) {
  if (height < 1 || width < 1) throw DomainError("sample dimensions must be positive");
  Image img(height, width, 0.0);
  int first_free_row = 0;
  if (seed_rows) {
    seed_rows->validate();
    if (seed_rows->width != width || seed_rows->height > height) {
      throw DomainError("seed region must be a raster prefix: full-width top rows");
    }
    for (int i = 0; i < seed_rows->height; ++i) {
      for (int j = 0; j < width; ++j) img.at(i, j) = seed_rows->at(i, j);
    }
    first_free_row = seed_rows->height;
  }
  sequential_pass(model, &img, [first_free_row](int i, int) { return i >= first_free_row; },
                  &rng);
  return img;
}

namespace {

double region_proposal_log_density(const RideModel& model, const Image& window_img,
                                   const Region& region_in_window,
                                   const std::vector<std::uint8_t>& free_cells) {
  Image work = window_img;
  return sequential_pass(
      model, &work,
      [&](int i, int j) {
        return region_in_window.contains(i, j) &&
               free_cells[static_cast<std::size_t>(i) * window_img.width + j] != 0;
      },
      nullptr);
}

// Core MH ratio over window crops; free_cells marks, window-relative, the
// pixels the proposal actually redraws.
double window_log_acceptance_ratio(const RideModel& model, const Image& cur_win,
                                   const Image& prop_win, const Region& region_in_window,
                                   const std::vector<std::uint8_t>& free_cells) {
  const double logp_cur = ride_log_density(model, cur_win).total;
  const double logp_prop = ride_log_density(model, prop_win).total;
  const double logq_cur = region_proposal_log_density(model, cur_win, region_in_window, free_cells);
  const double logq_prop =
      region_proposal_log_density(model, prop_win, region_in_window, free_cells);
  return (logp_prop - logp_cur) + (logq_cur - logq_prop);
}

}  // namespace

double log_acceptance_ratio(const RideModel& model, const Image& current, const Image& proposed,
                            const Region& region, const Region& window) {
  current.validate();
  proposed.validate();
  if (current.height != proposed.height || current.width != proposed.width) {
    throw DomainError("current and proposed images differ in shape");
  }
  if (region.top < window.top || region.left < window.left ||
      region.top + region.height > window.top + window.height ||
      region.left + region.width > window.left + window.width) {
    throw DomainError("region must lie inside the window");
  }
  if (window.top < 0 || window.left < 0 || window.top + window.height > current.height ||
      window.left + window.width > current.width) {
    throw DomainError("window must lie inside the image");
  }
  for (int i = 0; i < current.height; ++i) {
    for (int j = 0; j < current.width; ++j) {
      if (!region.contains(i, j) && current.at(i, j) != proposed.at(i, j)) {
        throw DomainError("images differ outside the proposal region at (" + std::to_string(i) +
                          "," + std::to_string(j) + ")");
      }
    }
  }
  const Region region_in_window{region.top - window.top, region.left - window.left, region.height,
                                region.width};
  const std::vector<std::uint8_t> all_free(
      static_cast<std::size_t>(window.height) * window.width, 1);
  return window_log_acceptance_ratio(model, crop(current, window), crop(proposed, window),
                                     region_in_window, all_free);
}

double acceptance_probability(const RideModel& model, const Image& current,
                              const Image& proposed, const Region& region, const Region& window) {
  const double delta = log_acceptance_ratio(model, current, proposed, region, window);
  if (std::isnan(delta)) throw NumericError("acceptance ratio is NaN");
  return std::min(1.0, std::exp(delta));
}

void InpaintConfig::validate() const {
  if (sweeps < 1) throw DomainError("sweeps must be positive");
  if (block_size < 1) throw DomainError("block_size must be positive");
  if (block_overlap < 0 || block_overlap >= block_size) {
    throw DomainError("block_overlap must lie in [0, block_size)");
  }
  if (local_window < block_size) throw DomainError("local_window must be >= block_size");
  if (init_candidates < 1) throw DomainError("init_candidates must be positive");
}

namespace {

void flip_image(Image* img, bool horizontal) {
  if (horizontal) {
    for (int i = 0; i < img->height; ++i) {
      for (int j = 0; j < img->width / 2; ++j) {
        std::swap(img->at(i, j), img->at(i, img->width - 1 - j));
      }
    }
  } else {
    for (int i = 0; i < img->height / 2; ++i) {
      for (int j = 0; j < img->width; ++j) {
        std::swap(img->at(i, j), img->at(img->height - 1 - i, j));
      }
    }
  }
}

struct MaskBounds {
  int top = 0, bottom = -1, left = 0, right = -1;
  bool empty() const { return bottom < top || right < left; }
};

MaskBounds mask_bounds(const Image& mask) {
  MaskBounds b;
  b.top = mask.height;
  b.left = mask.width;
  for (int i = 0; i < mask.height; ++i) {
    for (int j = 0; j < mask.width; ++j) {
      if (mask.at(i, j) != 0.0) {
        b.top = std::min(b.top, i);
        b.bottom = std::max(b.bottom, i);
        b.left = std::min(b.left, j);
        b.right = std::max(b.right, j);
      }
    }
  }
  return b;
}

std::vector<int> block_starts(int lo, int hi, int block, int stride, int limit) {
  // Top-left corners covering [lo, hi], clamped so blocks stay inside.
  std::vector<int> starts;
  for (int r = lo;; r += stride) {
    const int t = std::max(0, std::min(r, limit - block));
    if (starts.empty() || starts.back() != t) starts.push_back(t);
    if (t + block > hi) break;
    if (r > hi) break;
  }
  return starts;
}

}  // namespace

Image inpaint(const RideModel& model, const Image& image, const Image& mask,
              const InpaintConfig& cfg, RandomStream& rng) {
  model.validate();
  image.validate();
  mask.validate();
  cfg.validate();
  if (mask.height != image.height || mask.width != image.width) {
    throw DomainError("mask shape does not match image");
  }
  for (double v : mask.values) {
    if (v != 0.0 && v != 1.0) throw DomainError("mask must be binary (0 = observed, 1 = missing)");
  }

  Image work = image;
  Image work_mask = mask;
  if (mask_bounds(work_mask).empty()) return work;

  // Initialize missing pixels with the best of several ancestral completions.
  {
    double best_score = -std::numeric_limits<double>::infinity();
    Image best = work;
    for (int k = 0; k < cfg.init_candidates; ++k) {
      Image candidate = work;
      sequential_pass(model, &candidate,
                      [&](int i, int j) { return work_mask.at(i, j) != 0.0; }, &rng);
      const double score = ride_log_density(model, candidate).total;
      if (score > best_score) {
        best_score = score;
        best = std::move(candidate);
      }
    }
    work = std::move(best);
  }

  bool flipped_h = false, flipped_v = false;
  const int stride = std::max(1, cfg.block_size - cfg.block_overlap);

  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    if (cfg.flip_between_sweeps && sweep > 0) {
      const bool horizontal = rng.uniform() < 0.5;
      flip_image(&work, horizontal);
      flip_image(&work_mask, horizontal);
      if (horizontal) flipped_h = !flipped_h; else flipped_v = !flipped_v;
    }

    const MaskBounds bounds = mask_bounds(work_mask);
    const int block_h = std::min(cfg.block_size, work.height);
    const int block_w = std::min(cfg.block_size, work.width);
    const std::vector<int> rows = block_starts(bounds.top, bounds.bottom, block_h, stride,
                                               work.height);
    const std::vector<int> cols = block_starts(bounds.left, bounds.right, block_w, stride,
                                               work.width);
    const int win_h = std::min(cfg.local_window, work.height);
    const int win_w = std::min(cfg.local_window, work.width);

    for (int bi : rows) {
      for (int bj : cols) {
        const Region block{bi, bj, block_h, block_w};
        bool any_missing = false;
        for (int i = bi; i < bi + block_h && !any_missing; ++i) {
          for (int j = bj; j < bj + block_w && !any_missing; ++j) {
            any_missing = work_mask.at(i, j) != 0.0;
          }
        }
        if (!any_missing) continue;

        const int wt = std::clamp(bi + block_h / 2 - win_h / 2, 0, work.height - win_h);
        const int wl = std::clamp(bj + block_w / 2 - win_w / 2, 0, work.width - win_w);
        const Region window{wt, wl, win_h, win_w};
        const Region region_in_window{bi - wt, bj - wl, block_h, block_w};

        std::vector<std::uint8_t> free_cells(static_cast<std::size_t>(win_h) * win_w, 0);
        for (int i = 0; i < block_h; ++i) {
          for (int j = 0; j < block_w; ++j) {
            if (work_mask.at(bi + i, bj + j) != 0.0) {
              free_cells[static_cast<std::size_t>(region_in_window.top + i) * win_w +
                         region_in_window.left + j] = 1;
            }
          }
        }

        const Image cur_win = crop(work, window);
        Image prop_win = cur_win;
        sequential_pass(model, &prop_win,
                        [&](int i, int j) {
                          return free_cells[static_cast<std::size_t>(i) * win_w + j] != 0;
                        },
                        &rng);

        const double delta =
            window_log_acceptance_ratio(model, cur_win, prop_win, region_in_window, free_cells);
        const double alpha = std::isnan(delta) ? 0.0 : std::min(1.0, std::exp(delta));
        if (rng.uniform() < alpha) {
          for (int i = 0; i < win_h; ++i) {
            for (int j = 0; j < win_w; ++j) {
              if (free_cells[static_cast<std::size_t>(i) * win_w + j] != 0) {
                work.at(wt + i, wl + j) = prop_win.at(i, j);
              }
            }
          }
        }
      }
    }
  }

  if (flipped_h) flip_image(&work, true);
  if (flipped_v) flip_image(&work, false);
  return work;
}

}  // namespace ride
