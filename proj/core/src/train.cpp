#include "ride/train.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <string>

#include "ride/errors.hpp"
#include "ride/evaluate.hpp"
#include "ride/optim.hpp"

namespace ride {

namespace {

struct PositionIndex {
  // Eligible (image, pixel) positions per image, cumulative for sampling.
  std::vector<std::vector<std::pair<int, int>>> positions;
  std::vector<std::size_t> cumulative;
  std::size_t total = 0;
};

PositionIndex index_positions(const std::vector<Image>& images, const NeighborhoodSpec& nb) {
  PositionIndex idx;
  idx.positions.resize(images.size());
  for (std::size_t m = 0; m < images.size(); ++m) {
    const Image& img = images[m];
    img.validate();
    for (int i = 0; i < img.height; ++i) {
      for (int j = 0; j < img.width; ++j) {
        if (context_fully_inside(img, i, j, nb)) idx.positions[m].emplace_back(i, j);
      }
    }
    idx.total += idx.positions[m].size();
    idx.cumulative.push_back(idx.total);
  }
  return idx;
}

// Flat parameter vector over all recurrent layers followed by the head.
Eigen::VectorXd trainables_to_vector(const RideModel& m) {
  Eigen::Index n = m.head.parameter_count();
  for (const SlstmLayerParams& l : m.layers) n += l.parameter_count();
  Eigen::VectorXd v(n);
  Eigen::Index k = 0;
  for (const SlstmLayerParams& l : m.layers) {
    v.segment(k, l.parameter_count()) = l.to_vector();
    k += l.parameter_count();
  }
  v.segment(k, m.head.parameter_count()) = m.head.to_vector();
  return v;
}

void trainables_from_vector(RideModel& m, const Eigen::VectorXd& v) {
  Eigen::Index k = 0;
  for (SlstmLayerParams& l : m.layers) {
    l.from_vector(v.segment(k, l.parameter_count()));
    k += l.parameter_count();
  }
  m.head = McgsmParams::from_vector(v.segment(k, m.head.parameter_count()), m.head.dim(),
                                    m.head.components(), m.head.scales(), m.head.features());
}

// Mean head NLL over one patch plus gradients for every trainable; dctx from
// the head is split into the top-hidden part (backpropagated through the
// stack) and the whitened-context shortcut part (data, discarded).
double patch_gradients(const RideModel& model, const Image& patch, McgsmGrad* head_grad,
                       std::vector<SlstmGrad>* layer_grads) {
  const ImageFeatures f = compute_features(model, patch);
  Eigen::MatrixXd dctx;
  const double nll = neg_loglik_grad(model.head, f.head_inputs, f.ys_hat, head_grad, &dctx);
  if (!model.layers.empty()) {
    stack_backward(model.layers, f.stack, dctx.leftCols(model.top_hidden_dim()), nullptr,
                   layer_grads);
  } else if (layer_grads) {
    layer_grads->clear();
  }
  return nll;
}

int finetune_head(RideModel& model, const std::vector<Image>& images, int max_iters,
                  Eigen::Index pair_budget, RandomStream rng) {
  // Frozen layers make head features constant, so they are computed once.
  std::vector<std::pair<std::size_t, Eigen::Index>> picks;  // (image, cell)
  std::size_t total_cells = 0;
  std::vector<std::size_t> cum;
  for (const Image& img : images) {
    total_cells += img.pixel_count();
    cum.push_back(total_cells);
  }
  const Eigen::Index count =
      std::min<Eigen::Index>(pair_budget, static_cast<Eigen::Index>(total_cells));
  picks.reserve(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const std::size_t flat = rng.uniform_index(total_cells);
    const std::size_t m = std::upper_bound(cum.begin(), cum.end(), flat) - cum.begin();
    const std::size_t before = m == 0 ? 0 : cum[m - 1];
    picks.emplace_back(m, static_cast<Eigen::Index>(flat - before));
  }

  Eigen::MatrixXd inputs(count, model.head_dim());
  Eigen::VectorXd targets(count);
  for (std::size_t m = 0; m < images.size(); ++m) {
    bool any = false;
    for (const auto& pk : picks) any |= pk.first == m;
    if (!any) continue;
    const ImageFeatures f = compute_features(model, images[m]);
    for (Eigen::Index k = 0; k < count; ++k) {
      if (picks[k].first == m) {
        inputs.row(k) = f.head_inputs.row(picks[k].second);
        targets[k] = f.ys_hat[picks[k].second];
      }
    }
  }

  const int D = model.head.dim(), C = model.head.components(), S = model.head.scales(),
            N = model.head.features();
  LbfgsConfig cfg;
  cfg.max_iterations = max_iters;
  cfg.gradient_tolerance = 1e-7;
  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad_out) {
    const McgsmParams p = McgsmParams::from_vector(v, D, C, S, N);
    McgsmGrad g;
    const double value = neg_loglik_grad(p, inputs, targets, &g);
    grad_out = g.to_vector();
    return value;
  };
  const LbfgsResult res = lbfgs_minimize(objective, model.head.to_vector(), cfg);
  model.head = McgsmParams::from_vector(res.params, D, C, S, N);
  return res.iterations;
}

}  // namespace

void TrainSchedule::validate() const {
  if (batch_size < 1) throw DomainError("batch_size must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw DomainError("momentum must lie in [0,1)");
  if (!(lr_start > 0.0) || !(lr_end > 0.0)) throw DomainError("learning rates must be positive");
  if (lr_end > lr_start) throw DomainError("lr_end must not exceed lr_start");
  if (epochs < 0) throw DomainError("epochs must be non-negative");
  if (epochs > 0 && static_cast<int>(patch_sizes.size()) != epochs) {
    throw DomainError("patch_sizes length " + std::to_string(patch_sizes.size()) +
                      " must equal epochs " + std::to_string(epochs));
  }
  for (std::size_t k = 0; k < patch_sizes.size(); ++k) {
    if (patch_sizes[k] < 1) throw DomainError("patch sizes must be positive");
    if (k > 0 && patch_sizes[k] < patch_sizes[k - 1]) {
      throw DomainError("patch_sizes must be non-decreasing");
    }
  }
  if (finetune_iters < 0) throw DomainError("finetune_iters must be non-negative");
  if (early_stop_patience < 1) throw DomainError("early_stop_patience must be positive");
  if (finetune_pairs < 1 || whitening_pairs < 1) throw DomainError("pair budgets must be positive");
  if (grad_clip < 0.0) throw DomainError("grad_clip must be non-negative");
}

void sample_context_pairs(const std::vector<Image>& images, const NeighborhoodSpec& nb,
                          Eigen::Index count, RandomStream& rng, Eigen::MatrixXd* ctxs,
                          Eigen::VectorXd* ys) {
  nb.validate();
  if (images.empty()) throw DomainError("no images to sample from");
  if (count < 1) throw DomainError("pair count must be positive");
  const PositionIndex idx = index_positions(images, nb);
  if (idx.total == 0) {
    throw DomainError("no positions with a fully interior neighborhood; images too small");
  }
  ctxs->resize(count, nb.dim());
  ys->resize(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const std::size_t flat = rng.uniform_index(idx.total);
    const std::size_t m =
        std::upper_bound(idx.cumulative.begin(), idx.cumulative.end(), flat) -
        idx.cumulative.begin();
    const std::size_t before = m == 0 ? 0 : idx.cumulative[m - 1];
    const auto [i, j] = idx.positions[m][flat - before];
    ctxs->row(k) = extract_context(images[m], i, j, nb).transpose();
    (*ys)[k] = images[m].at(i, j);
  }
}

std::pair<McgsmParams, WhiteningTransform> train_mcgsm(const std::vector<Image>& train_images,
                                                       const NeighborhoodSpec& nb, int components,
                                                       int scales, int features, int max_iters,
                                                       Eigen::Index pair_budget,
                                                       RandomStream& rng) {
  Eigen::MatrixXd ctxs;
  Eigen::VectorXd ys;
  sample_context_pairs(train_images, nb, pair_budget, rng, &ctxs, &ys);

  const WhiteningTransform wt = fit_whitening(ctxs, ys);
  const Eigen::MatrixXd ctxs_hat = whiten_contexts(wt, ctxs);
  const Eigen::VectorXd ys_hat = whiten_pixels(wt, ctxs_hat, ys);

  const int D = nb.dim();
  McgsmParams head = init_mcgsm(D, components, scales, features, rng);

  LbfgsConfig cfg;
  cfg.max_iterations = max_iters;
  cfg.gradient_tolerance = 1e-7;
  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad_out) {
    const McgsmParams p = McgsmParams::from_vector(v, D, components, scales, features);
    McgsmGrad g;
    const double value = neg_loglik_grad(p, ctxs_hat, ys_hat, &g);
    grad_out = g.to_vector();
    return value;
  };
  const LbfgsResult res = lbfgs_minimize(objective, head.to_vector(), cfg);
  head = McgsmParams::from_vector(res.params, D, components, scales, features);
  return {head, wt};
}

RideModel train_ride(const RideModel& initial, const std::vector<Image>& train_images,
                     const std::vector<Image>& val_images, const TrainSchedule& schedule,
                     RandomStream& rng, TrainLog* log) {
  initial.validate();
  schedule.validate();
  if (train_images.empty()) throw DomainError("no training images");
  if (val_images.empty()) throw DomainError("no validation images");

  int min_side = INT_MAX;
  for (const Image& img : train_images) {
    min_side = std::min({min_side, img.height, img.width});
  }
  if (schedule.epochs > 0 && schedule.patch_sizes.back() > min_side) {
    throw DomainError("largest patch size " + std::to_string(schedule.patch_sizes.back()) +
                      " exceeds smallest training image side " + std::to_string(min_side));
  }

  int val_min = INT_MAX;
  for (const Image& img : val_images) val_min = std::min({val_min, img.height, img.width});
  const int val_patch = std::min(schedule.val_patch, val_min);

  RideModel model = initial;
  if (log) *log = TrainLog{};
  if (schedule.epochs == 0) return model;

  // Whitening is fitted once, up front; it is a preconditioner, not a
  // trainable parameter.
  {
    RandomStream wrng = rng.fork(0x5eed0001ULL, 0);
    Eigen::MatrixXd ctxs;
    Eigen::VectorXd ys;
    sample_context_pairs(train_images, model.neighborhood, schedule.whitening_pairs, wrng, &ctxs,
                         &ys);
    model.whitening = fit_whitening(ctxs, ys);
  }

  const double initial_rate = loglik_rate_bits(model, val_images, val_patch);
  RideModel best = model;
  double best_rate = initial_rate;
  if (log) {
    log->initial_val_rate_bits = initial_rate;
    log->best_val_rate_bits = initial_rate;
  }

  std::size_t total_train_pixels = 0;
  for (const Image& img : train_images) total_train_pixels += img.pixel_count();

  int epochs_since_improvement = 0;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr =
        schedule.epochs == 1
            ? schedule.lr_start
            : schedule.lr_start * std::pow(schedule.lr_end / schedule.lr_start,
                                           static_cast<double>(epoch) / (schedule.epochs - 1));
    const int patch = schedule.patch_sizes[epoch];
    const int batches =
        schedule.batches_per_epoch > 0
            ? schedule.batches_per_epoch
            : std::max<int>(1, static_cast<int>(total_train_pixels /
                                                (static_cast<std::size_t>(schedule.batch_size) *
                                                 patch * patch)));

    Eigen::VectorXd params = trainables_to_vector(model);
    SgdState sgd = SgdState::create(params.size(), schedule.momentum, lr);
    double nll_sum = 0.0;

    for (int batch = 0; batch < batches; ++batch) {
      RandomStream brng = rng.fork(static_cast<std::uint64_t>(epoch) + 1,
                                   static_cast<std::uint64_t>(batch) + 1);
      McgsmGrad head_acc = McgsmGrad::zeros(model.head);
      std::vector<SlstmGrad> layer_acc(model.layers.size());
      for (std::size_t k = 0; k < model.layers.size(); ++k) {
        layer_acc[k] = SlstmGrad::zeros(model.layers[k]);
      }
      double batch_nll = 0.0;

      for (int s = 0; s < schedule.batch_size; ++s) {
        const std::size_t m = brng.uniform_index(train_images.size());
        const Image& img = train_images[m];
        const int i0 = static_cast<int>(brng.uniform_index(img.height - patch + 1));
        const int j0 = static_cast<int>(brng.uniform_index(img.width - patch + 1));
        Image crop(patch, patch);
        for (int i = 0; i < patch; ++i) {
          for (int j = 0; j < patch; ++j) crop.at(i, j) = img.at(i0 + i, j0 + j);
        }
        McgsmGrad head_g;
        std::vector<SlstmGrad> layer_g;
        batch_nll += patch_gradients(model, crop, &head_g, &layer_g);
        head_acc.eta += head_g.eta;
        head_acc.alpha += head_g.alpha;
        head_acc.beta += head_g.beta;
        head_acc.b += head_g.b;
        head_acc.a += head_g.a;
        for (std::size_t k = 0; k < layer_g.size(); ++k) {
          layer_acc[k].A += layer_g[k].A;
          layer_acc[k].bias += layer_g[k].bias;
        }
      }

      const double inv = 1.0 / schedule.batch_size;
      batch_nll *= inv;
      nll_sum += batch_nll;
      if (!std::isfinite(batch_nll)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch) + ": " +
                           std::to_string(batch_nll));
      }

      Eigen::VectorXd grad(params.size());
      Eigen::Index off = 0;
      for (std::size_t k = 0; k < layer_acc.size(); ++k) {
        const Eigen::Index nA = layer_acc[k].A.size();
        grad.segment(off, nA) =
            Eigen::Map<const Eigen::VectorXd>(layer_acc[k].A.data(), nA) * inv;
        off += nA;
        grad.segment(off, layer_acc[k].bias.size()) = layer_acc[k].bias * inv;
        off += layer_acc[k].bias.size();
      }
      head_acc.eta *= inv;
      head_acc.alpha *= inv;
      head_acc.beta *= inv;
      head_acc.b *= inv;
      head_acc.a *= inv;
      grad.segment(off, model.head.parameter_count()) = head_acc.to_vector();

      if (schedule.grad_clip > 0.0) {
        const double norm = grad.norm();
        if (norm > schedule.grad_clip) grad *= schedule.grad_clip / norm;
      }
      sgd_step(sgd, params, grad);
      trainables_from_vector(model, params);
    }

    const int ft_iters =
        schedule.finetune_iters > 0
            ? finetune_head(model, train_images, schedule.finetune_iters,
                            schedule.finetune_pairs, rng.fork(0x5eed0002ULL, epoch))
            : 0;

    const double val_rate = loglik_rate_bits(model, val_images, val_patch);
    const bool improved = val_rate > best_rate;
    if (improved) {
      best = model;
      best_rate = val_rate;
      epochs_since_improvement = 0;
    } else {
      ++epochs_since_improvement;
    }
    if (log) {
      log->epochs.push_back(EpochLog{epoch, lr, nll_sum / batches, ft_iters, val_rate, improved});
      log->best_val_rate_bits = best_rate;
    }
    if (epochs_since_improvement >= schedule.early_stop_patience) break;
  }
  return best;
}

}  // namespace ride
