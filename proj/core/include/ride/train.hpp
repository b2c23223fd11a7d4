#ifndef RIDE_TRAIN_HPP
#define RIDE_TRAIN_HPP

#include <utility>
#include <vector>

#include "ride/model.hpp"
#include "ride/random.hpp"

namespace ride {

struct TrainSchedule {
  int batch_size = 50;
  double momentum = 0.9;
  double lr_start = 1.0;
  double lr_end = 1e-4;
  int epochs = 8;
  std::vector<int> patch_sizes = {8, 10, 12, 14, 16, 18, 20, 22};  // one per epoch
  int finetune_iters = 500;
  int early_stop_patience = 3;

  // Operational knobs, all with documented defaults.
  int batches_per_epoch = 0;   // 0 = one pass over the training pixels
  int finetune_pairs = 50000;  // feature pairs sampled for head finetuning
  int whitening_pairs = 100000;
  double grad_clip = 1.0;      // global L2 cap on the SGD gradient, 0 = off
  int val_patch = 64;          // validation patch side (shrunk to fit)

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_nll = 0.0;       // mean whitened-pixel NLL over SGD batches, nats
  int finetune_iterations = 0;
  double val_rate_bits = 0.0;   // validation log-likelihood rate, bit/px
  bool improved = false;
};

struct TrainLog {
  double initial_val_rate_bits = 0.0;
  double best_val_rate_bits = 0.0;
  std::vector<EpochLog> epochs;
};

// Draws (context, pixel) pairs uniformly over images and positions whose
// neighborhood lies fully inside the image.
void sample_context_pairs(const std::vector<Image>& images, const NeighborhoodSpec& nb,
                          Eigen::Index count, RandomStream& rng, Eigen::MatrixXd* ctxs,
                          Eigen::VectorXd* ys);

// Stationary factorized MCGSM on causal neighborhoods: samples pairs, fits
// the whitening transform, then minimizes the mean negative log-likelihood
// with L-BFGS.
std::pair<McgsmParams, WhiteningTransform> train_mcgsm(const std::vector<Image>& train_images,
                                                       const NeighborhoodSpec& nb, int components,
                                                       int scales, int features, int max_iters,
                                                       Eigen::Index pair_budget,
                                                       RandomStream& rng);

// Full training loop: per epoch, SGD with momentum on all parameters over
// random patches of the epoch's size, then L-BFGS finetuning of the head
// with the recurrent layers frozen, then geometric learning-rate decay.
// Tracks the validation log-likelihood rate, keeps the best snapshot and
// stops early after `early_stop_patience` epochs without improvement.
RideModel train_ride(const RideModel& model, const std::vector<Image>& train_images,
                     const std::vector<Image>& val_images, const TrainSchedule& schedule,
                     RandomStream& rng, TrainLog* log = nullptr);

}  // namespace ride

#endif  // RIDE_TRAIN_HPP
