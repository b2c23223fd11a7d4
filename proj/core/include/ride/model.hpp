#ifndef RIDE_MODEL_HPP
#define RIDE_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ride/image.hpp"
#include "ride/mcgsm.hpp"
#include "ride/neighborhood.hpp"
#include "ride/slstm.hpp"
#include "ride/whitening.hpp"

namespace ride {

// Recurrent image density estimator: a whitening preconditioner, a stack of
// spatial LSTM layers reading whitened causal neighborhoods, and an MCGSM
// head predicting the whitened pixel from the top hidden vector concatenated
// with the whitened neighborhood (the preconditioning shortcut). With zero
// layers the model reduces to a stationary MCGSM on causal neighborhoods.
struct RideModel {
  NeighborhoodSpec neighborhood;
  WhiteningTransform whitening;
  std::vector<SlstmLayerParams> layers;
  McgsmParams head;
  std::uint32_t version = 1;

  int top_hidden_dim() const { return layers.empty() ? 0 : layers.back().hidden_dim; }
  int head_dim() const { return top_hidden_dim() + neighborhood.dim(); }

  // Dimension chain: layer k feeds layer k+1, head.D = top hidden + D_nb.
  void validate() const;
};

// Fresh model with the given architecture; whitening starts as identity and
// is fitted by training.
RideModel init_ride(const NeighborhoodSpec& nb, int num_layers, int hidden_dim, int components,
                    int scales, int features, bool extended, RandomStream& rng);

struct LogDensityResult {
  Image per_pixel;  // log density in nats, one value per pixel
  double total = 0.0;
};

// Exact log density of the image under the chain-rule factorization: contexts
// are extracted and whitened, the stack runs over the whitened-context grid,
// and the head conditional of each whitened pixel is compensated by the
// whitening log-Jacobian.
LogDensityResult ride_log_density(const RideModel& model, const Image& img);

// Whitened contexts, stack states, head inputs and whitened pixels for one
// image; shared by evaluation and training.
struct ImageFeatures {
  Eigen::MatrixXd ctxs_hat;    // cells x D_nb
  StackState stack;            // empty layers vector when the model has none
  Eigen::MatrixXd head_inputs; // cells x head_dim
  Eigen::VectorXd ys_hat;      // cells
};

ImageFeatures compute_features(const RideModel& model, const Image& img);

// Serialized container: "RIDE\n", a version line, then named tensors of
// little-endian 64-bit floats. Byte layout is documented in the README.
void save_model(const RideModel& model, std::ostream& out);
RideModel load_model(std::istream& in);
void save_model_file(const RideModel& model, const std::filesystem::path& path);
RideModel load_model_file(const std::filesystem::path& path);

}  // namespace ride

#endif  // RIDE_MODEL_HPP
