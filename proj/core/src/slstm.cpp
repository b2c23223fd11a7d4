#include "ride/slstm.hpp"

#include <cmath>
#include <string>

#include "ride/errors.hpp"

namespace ride {

namespace {

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

}  // namespace

void SlstmLayerParams::validate() const {
  if (input_dim < 1 || hidden_dim < 1) {
    throw DomainError("slstm dims must be positive, got input_dim=" + std::to_string(input_dim) +
                      " hidden_dim=" + std::to_string(hidden_dim));
  }
  if (A.rows() != gate_rows() || A.cols() != input_cols() || bias.size() != gate_rows()) {
    throw DomainError("slstm parameter shapes inconsistent with dims");
  }
  if (!A.allFinite() || !bias.allFinite()) {
    throw DomainError("slstm parameters contain non-finite values");
  }
}

Eigen::VectorXd SlstmLayerParams::to_vector() const {
  Eigen::VectorXd v(parameter_count());
  v.head(A.size()) = Eigen::Map<const Eigen::VectorXd>(A.data(), A.size());
  v.tail(bias.size()) = bias;
  return v;
}

void SlstmLayerParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != parameter_count()) throw DomainError("slstm parameter vector size mismatch");
  Eigen::Map<Eigen::VectorXd>(A.data(), A.size()) = v.head(A.size());
  bias = v.tail(bias.size());
}

SlstmLayerParams SlstmLayerParams::init(int input_dim, int hidden_dim, bool extended,
                                        RandomStream& rng) {
  SlstmLayerParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.extended = extended;
  p.A.resize(p.gate_rows(), p.input_cols());
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.input_cols()));
  for (Eigen::Index r = 0; r < p.A.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.A.cols(); ++c) {
      p.A(r, c) = scale * rng.normal();
    }
  }
  p.bias = Eigen::VectorXd::Zero(p.gate_rows());
  // Forget gates start half-open so early gradients reach both predecessors.
  p.bias.segment(3 * hidden_dim, 2 * hidden_dim).setConstant(1.0);
  p.validate();
  return p;
}

SlstmGrad SlstmGrad::zeros(const SlstmLayerParams& p) {
  SlstmGrad g;
  g.A = Eigen::MatrixXd::Zero(p.A.rows(), p.A.cols());
  g.bias = Eigen::VectorXd::Zero(p.bias.size());
  return g;
}

void slstm_cell(const SlstmLayerParams& p, const Eigen::VectorXd& x,
                const Eigen::VectorXd& h_left, const Eigen::VectorXd& c_left,
                const Eigen::VectorXd& h_up, const Eigen::VectorXd& c_up, Eigen::VectorXd* h_out,
                Eigen::VectorXd* c_out, Eigen::VectorXd* v_out, Eigen::VectorXd* gates_out) {
  const int H = p.hidden_dim;
  Eigen::VectorXd v(p.input_cols());
  v.head(p.input_dim) = x;
  v.segment(p.input_dim, H) = h_left;
  v.segment(p.input_dim + H, H) = h_up;
  if (p.extended) {
    v.segment(p.input_dim + 2 * H, H) = c_left;
    v.segment(p.input_dim + 3 * H, H) = c_up;
  }
  Eigen::VectorXd pre = p.A * v + p.bias;
  Eigen::VectorXd act(5 * H);
  act.head(H) = pre.head(H).array().tanh().matrix();                       // g
  act.segment(H, 4 * H) = sigmoid(pre.segment(H, 4 * H).array()).matrix();  // o,i,f_r,f_c
  const auto g = act.head(H).array();
  const auto o = act.segment(H, H).array();
  const auto i = act.segment(2 * H, H).array();
  const auto f_r = act.segment(3 * H, H).array();
  const auto f_c = act.segment(4 * H, H).array();
  *c_out = (g * i + c_left.array() * f_c + c_up.array() * f_r).matrix();
  *h_out = (c_out->array() * o).tanh().matrix();
  if (v_out) *v_out = std::move(v);
  if (gates_out) *gates_out = std::move(act);
}

GridState slstm_forward(const SlstmLayerParams& p, const Eigen::MatrixXd& inputs, int height,
                        int width) {
  p.validate();
  if (height < 1 || width < 1) throw DomainError("grid dimensions must be positive");
  if (inputs.rows() != static_cast<Eigen::Index>(height) * width ||
      inputs.cols() != p.input_dim) {
    throw DomainError("slstm input grid shape mismatch");
  }
  const int H = p.hidden_dim;
  GridState st;
  st.height = height;
  st.width = width;
  st.h.resize(inputs.rows(), H);
  st.c.resize(inputs.rows(), H);
  st.v.resize(inputs.rows(), p.input_cols());
  st.gates.resize(inputs.rows(), 5 * H);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd h_out(H), c_out(H), v_cell, gates_cell;
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const Eigen::Index cell = static_cast<Eigen::Index>(i) * width + j;
      const Eigen::VectorXd x = inputs.row(cell).transpose();
      const Eigen::VectorXd h_left = j > 0 ? st.h.row(cell - 1).transpose() : zero;
      const Eigen::VectorXd c_left = j > 0 ? st.c.row(cell - 1).transpose() : zero;
      const Eigen::VectorXd h_up = i > 0 ? st.h.row(cell - width).transpose() : zero;
      const Eigen::VectorXd c_up = i > 0 ? st.c.row(cell - width).transpose() : zero;
      slstm_cell(p, x, h_left, c_left, h_up, c_up, &h_out, &c_out, &v_cell, &gates_cell);
      st.h.row(cell) = h_out.transpose();
      st.c.row(cell) = c_out.transpose();
      st.v.row(cell) = v_cell.transpose();
      st.gates.row(cell) = gates_cell.transpose();
    }
  }
  return st;
}

void slstm_backward(const SlstmLayerParams& p, const GridState& state, const Eigen::MatrixXd& dh,
                    Eigen::MatrixXd* dinputs, SlstmGrad* dparams) {
  p.validate();
  const int H = p.hidden_dim;
  const int height = state.height, width = state.width;
  const Eigen::Index cells = static_cast<Eigen::Index>(height) * width;
  if (state.h.rows() != cells || state.gates.cols() != 5 * H ||
      state.v.cols() != p.input_cols()) {
    throw DomainError("grid state does not match layer parameters");
  }
  if (dh.rows() != cells || dh.cols() != H) throw DomainError("dh shape mismatch");

  if (dinputs) *dinputs = Eigen::MatrixXd::Zero(cells, p.input_dim);
  if (dparams) *dparams = SlstmGrad::zeros(p);

  // Accumulated gradients flowing into each cell's h and c from later cells.
  Eigen::MatrixXd dh_acc = Eigen::MatrixXd::Zero(cells, H);
  Eigen::MatrixXd dc_acc = Eigen::MatrixXd::Zero(cells, H);

  const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(H);
  for (int i = height - 1; i >= 0; --i) {
    for (int j = width - 1; j >= 0; --j) {
      const Eigen::Index cell = static_cast<Eigen::Index>(i) * width + j;
      const auto g = state.gates.row(cell).segment(0, H).transpose().array();
      const auto o = state.gates.row(cell).segment(H, H).transpose().array();
      const auto in = state.gates.row(cell).segment(2 * H, H).transpose().array();
      const auto f_r = state.gates.row(cell).segment(3 * H, H).transpose().array();
      const auto f_c = state.gates.row(cell).segment(4 * H, H).transpose().array();
      const auto c = state.c.row(cell).transpose().array();
      const auto c_left = j > 0 ? state.c.row(cell - 1).transpose().array() : zero;
      const auto c_up = i > 0 ? state.c.row(cell - width).transpose().array() : zero;

      const Eigen::ArrayXd dh_cell =
          dh.row(cell).transpose().array() + dh_acc.row(cell).transpose().array();
      const Eigen::ArrayXd t = (c * o).tanh();
      const Eigen::ArrayXd dco = dh_cell * (1.0 - t.square());  // d/d(c .* o)
      const Eigen::ArrayXd dc_cell = dc_acc.row(cell).transpose().array() + dco * o;
      const Eigen::ArrayXd do_ = dco * c;

      const Eigen::ArrayXd dg = dc_cell * in;
      const Eigen::ArrayXd di = dc_cell * g;
      const Eigen::ArrayXd df_c = dc_cell * c_left;
      const Eigen::ArrayXd df_r = dc_cell * c_up;

      if (j > 0) dc_acc.row(cell - 1) += (dc_cell * f_c).matrix().transpose();
      if (i > 0) dc_acc.row(cell - width) += (dc_cell * f_r).matrix().transpose();

      Eigen::VectorXd dpre(5 * H);
      dpre.head(H) = (dg * (1.0 - g.square())).matrix();
      dpre.segment(H, H) = (do_ * o * (1.0 - o)).matrix();
      dpre.segment(2 * H, H) = (di * in * (1.0 - in)).matrix();
      dpre.segment(3 * H, H) = (df_r * f_r * (1.0 - f_r)).matrix();
      dpre.segment(4 * H, H) = (df_c * f_c * (1.0 - f_c)).matrix();

      if (dparams) {
        dparams->A.noalias() += dpre * state.v.row(cell);
        dparams->bias += dpre;
      }

      const Eigen::VectorXd dv = p.A.transpose() * dpre;
      if (dinputs) dinputs->row(cell) = dv.head(p.input_dim).transpose();
      if (j > 0) dh_acc.row(cell - 1) += dv.segment(p.input_dim, H).transpose();
      if (i > 0) dh_acc.row(cell - width) += dv.segment(p.input_dim + H, H).transpose();
      if (p.extended) {
        if (j > 0) dc_acc.row(cell - 1) += dv.segment(p.input_dim + 2 * H, H).transpose();
        if (i > 0) dc_acc.row(cell - width) += dv.segment(p.input_dim + 3 * H, H).transpose();
      }
    }
  }
}

StackState stack_forward(const std::vector<SlstmLayerParams>& layers,
                         const Eigen::MatrixXd& inputs, int height, int width) {
  StackState st;
  st.layers.reserve(layers.size());
  const Eigen::MatrixXd* grid = &inputs;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].input_dim != grid->cols()) {
      throw DomainError("layer " + std::to_string(k) + " expects input_dim " +
                        std::to_string(layers[k].input_dim) + ", got " +
                        std::to_string(grid->cols()));
    }
    st.layers.push_back(slstm_forward(layers[k], *grid, height, width));
    grid = &st.layers.back().h;
  }
  return st;
}

void stack_backward(const std::vector<SlstmLayerParams>& layers, const StackState& state,
                    const Eigen::MatrixXd& dh_top, Eigen::MatrixXd* dinputs,
                    std::vector<SlstmGrad>* dparams) {
  if (layers.size() != state.layers.size()) throw DomainError("stack state layer count mismatch");
  if (dparams) dparams->resize(layers.size());
  Eigen::MatrixXd dh = dh_top;
  for (std::size_t k = layers.size(); k-- > 0;) {
    Eigen::MatrixXd dlower;
    const bool need_lower = k > 0 || dinputs != nullptr;
    slstm_backward(layers[k], state.layers[k], dh, need_lower ? &dlower : nullptr,
                   dparams ? &(*dparams)[k] : nullptr);
    if (k > 0) {
      dh = std::move(dlower);
    } else if (dinputs) {
      *dinputs = std::move(dlower);
    }
  }
}

}  // namespace ride
