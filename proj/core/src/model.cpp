#include "ride/model.hpp"

#include <string>

#include "ride/errors.hpp"

namespace ride {

void RideModel::validate() const {
  neighborhood.validate();
  whitening.validate();
  if (whitening.dim() != neighborhood.dim()) {
    throw DomainError("whitening dimension does not match neighborhood");
  }
  int prev = neighborhood.dim();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].validate();
    if (layers[k].input_dim != prev) {
      throw DomainError("layer " + std::to_string(k) + " input_dim " +
                        std::to_string(layers[k].input_dim) + " breaks the dimension chain (" +
                        std::to_string(prev) + " expected)");
    }
    prev = layers[k].hidden_dim;
  }
  head.validate();
  if (head.dim() != head_dim()) {
    throw DomainError("head dimension " + std::to_string(head.dim()) +
                      " does not match top hidden + neighborhood = " +
                      std::to_string(head_dim()));
  }
}

RideModel init_ride(const NeighborhoodSpec& nb, int num_layers, int hidden_dim, int components,
                    int scales, int features, bool extended, RandomStream& rng) {
  nb.validate();
  if (num_layers < 0) throw DomainError("layer count must be non-negative");
  RideModel m;
  m.neighborhood = nb;
  m.whitening = WhiteningTransform::identity(nb.dim());
  int prev = nb.dim();
  for (int k = 0; k < num_layers; ++k) {
    m.layers.push_back(SlstmLayerParams::init(prev, hidden_dim, extended, rng));
    prev = hidden_dim;
  }
  m.head = init_mcgsm(m.head_dim(), components, scales, features, rng);
  m.validate();
  return m;
}

ImageFeatures compute_features(const RideModel& model, const Image& img) {
  img.validate();
  ImageFeatures f;
  f.ctxs_hat = whiten_contexts(model.whitening, extract_context_grid(img, model.neighborhood));
  const Eigen::Index cells = f.ctxs_hat.rows();
  if (!model.layers.empty()) {
    f.stack = stack_forward(model.layers, f.ctxs_hat, img.height, img.width);
    f.head_inputs.resize(cells, model.head_dim());
    f.head_inputs.leftCols(model.top_hidden_dim()) = f.stack.top_hidden();
    f.head_inputs.rightCols(model.neighborhood.dim()) = f.ctxs_hat;
  } else {
    f.head_inputs = f.ctxs_hat;
  }
  const Eigen::VectorXd ys =
      Eigen::Map<const Eigen::VectorXd>(img.values.data(), static_cast<Eigen::Index>(cells));
  f.ys_hat = whiten_pixels(model.whitening, f.ctxs_hat, ys);
  return f;
}

LogDensityResult ride_log_density(const RideModel& model, const Image& img) {
  model.validate();
  const ImageFeatures f = compute_features(model, img);
  const Eigen::VectorXd logp_hat =
      conditional_log_density_batch(model.head, f.head_inputs, f.ys_hat);

  LogDensityResult res;
  res.per_pixel = Image(img.height, img.width);
  double total = 0.0;
  for (Eigen::Index k = 0; k < logp_hat.size(); ++k) {
    const double v = logp_hat[k] + model.whitening.log_jacobian;
    res.per_pixel.values[static_cast<std::size_t>(k)] = v;
    total += v;
  }
  res.total = total;
  return res;
}

}  // namespace ride
