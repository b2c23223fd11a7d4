#ifndef RIDE_SLSTM_HPP
#define RIDE_SLSTM_HPP

#include <vector>

#include <Eigen/Core>

#include "ride/random.hpp"

namespace ride {

// One spatial LSTM layer. Each cell (i,j) has two predecessor states, from
// the left and from above, with separate forget gates:
//
//   (g, o, i, f_r, f_c) = (tanh, sig, sig, sig, sig)(A v + bias)
//   v = (x_ij, h_{i,j-1}, h_{i-1,j} [, c_{i,j-1}, c_{i-1,j} if extended])
//   c_ij = g .* i + c_{i,j-1} .* f_c + c_{i-1,j} .* f_r
//   h_ij = tanh(c_ij .* o)
//
// Row blocks of A and bias follow the fixed gate order (g, o, i, f_r, f_c).
struct SlstmLayerParams {
  int input_dim = 0;
  int hidden_dim = 0;
  bool extended = false;  // memory units as additional inputs
  Eigen::MatrixXd A;      // (5*hidden_dim) x input_cols()
  Eigen::VectorXd bias;   // 5*hidden_dim

  int input_cols() const { return input_dim + (extended ? 4 : 2) * hidden_dim; }
  int gate_rows() const { return 5 * hidden_dim; }

  Eigen::Index parameter_count() const { return A.size() + bias.size(); }
  Eigen::VectorXd to_vector() const;
  void from_vector(const Eigen::VectorXd& v);

  void validate() const;

  // Gaussian weights with scale 1/sqrt(input_cols), zero bias.
  static SlstmLayerParams init(int input_dim, int hidden_dim, bool extended, RandomStream& rng);
};

// Forward activations over one grid, cached for the backward pass. Cell
// (i,j) lives at row i*width + j of each matrix.
struct GridState {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd h;      // cells x hidden
  Eigen::MatrixXd c;      // cells x hidden
  Eigen::MatrixXd v;      // cells x input_cols (assembled cell inputs)
  Eigen::MatrixXd gates;  // cells x 5*hidden (post-activation g,o,i,f_r,f_c)
};

struct SlstmGrad {
  Eigen::MatrixXd A;
  Eigen::VectorXd bias;

  static SlstmGrad zeros(const SlstmLayerParams& p);
};

// One cell update; out-of-grid predecessors are zero vectors. Shared by the
// grid forward pass and the incremental sampling path so both produce
// bit-identical states.
void slstm_cell(const SlstmLayerParams& p, const Eigen::VectorXd& x,
                const Eigen::VectorXd& h_left, const Eigen::VectorXd& c_left,
                const Eigen::VectorXd& h_up, const Eigen::VectorXd& c_up, Eigen::VectorXd* h_out,
                Eigen::VectorXd* c_out, Eigen::VectorXd* v_out = nullptr,
                Eigen::VectorXd* gates_out = nullptr);

// Processes cells in raster order. inputs has one row per cell.
GridState slstm_forward(const SlstmLayerParams& p, const Eigen::MatrixXd& inputs, int height,
                        int width);

// Exact reverse-mode gradients given d(loss)/dh per cell. Traverses cells in
// reverse raster order, accumulating through both predecessor paths.
void slstm_backward(const SlstmLayerParams& p, const GridState& state, const Eigen::MatrixXd& dh,
                    Eigen::MatrixXd* dinputs, SlstmGrad* dparams);

// Stacked layers: each layer's hidden grid feeds the next layer.
struct StackState {
  std::vector<GridState> layers;

  const Eigen::MatrixXd& top_hidden() const { return layers.back().h; }
};

StackState stack_forward(const std::vector<SlstmLayerParams>& layers,
                         const Eigen::MatrixXd& inputs, int height, int width);

// Backpropagates d(loss)/d(top hidden) through the stack. dinputs (optional)
// receives gradients w.r.t. the bottom inputs.
void stack_backward(const std::vector<SlstmLayerParams>& layers, const StackState& state,
                    const Eigen::MatrixXd& dh_top, Eigen::MatrixXd* dinputs,
                    std::vector<SlstmGrad>* dparams);

}  // namespace ride

#endif  // RIDE_SLSTM_HPP
