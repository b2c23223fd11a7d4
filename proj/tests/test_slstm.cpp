#include <doctest.h>

#include <cmath>

#include "ride/errors.hpp"
#include "ride/slstm.hpp"
#include "support/oracles.hpp"

using ride::GridState;
using ride::SlstmGrad;
using ride::SlstmLayerParams;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

SlstmLayerParams random_layer(int input_dim, int hidden, bool extended, std::uint64_t seed) {
  ride::RandomStream rng(seed);
  return SlstmLayerParams::init(input_dim, hidden, extended, rng);
}

Eigen::MatrixXd random_grid(int cells, int dim, std::uint64_t seed) {
  ride::RandomStream rng(seed);
  Eigen::MatrixXd m(cells, dim);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
  return m;
}

// Scalar loss sum(dh .* h) used by every finite-difference check.
double weighted_hidden_sum(const SlstmLayerParams& p, const Eigen::MatrixXd& inputs, int h, int w,
                           const Eigen::MatrixXd& dh) {
  return (ride::slstm_forward(p, inputs, h, w).h.array() * dh.array()).sum();
}

}  // namespace

TEST_CASE("zero parameters give zero activations") {
  SlstmLayerParams p = random_layer(3, 4, false, 1);
  p.A.setZero();
  p.bias.setZero();
  const Eigen::MatrixXd inputs = random_grid(6, 3, 2);
  const GridState st = ride::slstm_forward(p, inputs, 2, 3);
  CHECK(st.h.isZero(0.0));
  CHECK(st.c.isZero(0.0));
}

TEST_CASE("single cell matches the hand-computed recurrence") {
  SlstmLayerParams p = random_layer(1, 1, false, 3);
  p.A.setZero();
  p.bias << 1.0, 1.0, 1.0, 0.0, 0.0;  // (g, o, i, f_r, f_c)
  Eigen::MatrixXd input(1, 1);
  input << 123.0;  // ignored, A is zero
  const GridState st = ride::slstm_forward(p, input, 1, 1);
  const double c = std::tanh(1.0) * sigmoid(1.0);
  const double h = std::tanh(c * sigmoid(1.0));
  CHECK(st.c(0, 0) == doctest::Approx(c).epsilon(1e-15));
  CHECK(st.h(0, 0) == doctest::Approx(h).epsilon(1e-15));
  CHECK(c == doctest::Approx(0.556760).epsilon(1e-4));
  CHECK(h == doctest::Approx(0.385985).epsilon(1e-4));
}

TEST_CASE("activations stay inside their ranges") {
  const SlstmLayerParams p = random_layer(2, 3, true, 5);
  const Eigen::MatrixXd inputs = 3.0 * random_grid(12, 2, 6);
  const GridState st = ride::slstm_forward(p, inputs, 3, 4);
  CHECK(st.h.cwiseAbs().maxCoeff() <= 1.0);
  const int H = 3;
  CHECK(st.gates.leftCols(H).cwiseAbs().maxCoeff() < 1.0);              // tanh block
  CHECK(st.gates.rightCols(4 * H).minCoeff() > 0.0);                    // sigmoid blocks
  CHECK(st.gates.rightCols(4 * H).maxCoeff() < 1.0);
}

TEST_CASE("hidden state ignores inputs at later cells") {
  const SlstmLayerParams p = random_layer(2, 3, false, 7);
  const Eigen::MatrixXd inputs = random_grid(16, 2, 8);
  const GridState base = ride::slstm_forward(p, inputs, 4, 4);
  for (int cell = 0; cell < 16; ++cell) {
    const int i = cell / 4, j = cell % 4;
    for (int later = 0; later < 16; ++later) {
      const int m = later / 4, n = later % 4;
      if (m < i || (m == i && n <= j)) continue;
      Eigen::MatrixXd perturbed = inputs;
      perturbed.row(later).array() += 2.5;
      const GridState st = ride::slstm_forward(p, perturbed, 4, 4);
      REQUIRE(st.h.row(cell) == base.h.row(cell));
      REQUIRE(st.c.row(cell) == base.c.row(cell));
    }
  }
}

TEST_CASE("forward is deterministic") {
  const SlstmLayerParams p = random_layer(3, 2, true, 9);
  const Eigen::MatrixXd inputs = random_grid(9, 3, 10);
  const GridState a = ride::slstm_forward(p, inputs, 3, 3);
  const GridState b = ride::slstm_forward(p, inputs, 3, 3);
  CHECK(a.h == b.h);
  CHECK(a.c == b.c);
}

TEST_CASE("zero output gradient yields zero parameter gradients") {
  const SlstmLayerParams p = random_layer(2, 2, false, 11);
  const Eigen::MatrixXd inputs = random_grid(9, 2, 12);
  const GridState st = ride::slstm_forward(p, inputs, 3, 3);
  Eigen::MatrixXd dinputs;
  SlstmGrad grads;
  ride::slstm_backward(p, st, Eigen::MatrixXd::Zero(9, 2), &dinputs, &grads);
  CHECK(grads.A.isZero(0.0));
  CHECK(grads.bias.isZero(0.0));
  CHECK(dinputs.isZero(0.0));
}

TEST_CASE("backward matches finite differences, plain and extended") {
  for (const bool extended : {false, true}) {
    for (int seed = 0; seed < 5; ++seed) {
      const SlstmLayerParams p = random_layer(2, 2, extended, 100 + seed);
      const Eigen::MatrixXd inputs = random_grid(9, 2, 200 + seed);
      const Eigen::MatrixXd dh = random_grid(9, 2, 300 + seed);

      const GridState st = ride::slstm_forward(p, inputs, 3, 3);
      Eigen::MatrixXd dinputs;
      SlstmGrad grads;
      ride::slstm_backward(p, st, dh, &dinputs, &grads);

      SlstmLayerParams probe = p;
      const Eigen::VectorXd fd_params = testutil::finite_difference(
          [&](const Eigen::VectorXd& v) {
            probe.from_vector(v);
            return weighted_hidden_sum(probe, inputs, 3, 3, dh);
          },
          p.to_vector());
      Eigen::VectorXd analytic(p.parameter_count());
      analytic.head(grads.A.size()) =
          Eigen::Map<const Eigen::VectorXd>(grads.A.data(), grads.A.size());
      analytic.tail(grads.bias.size()) = grads.bias;
      REQUIRE(testutil::max_scaled_error(analytic, fd_params) < 1e-5);

      const Eigen::VectorXd fd_inputs = testutil::finite_difference(
          [&](const Eigen::VectorXd& v) {
            const Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(v.data(), 9, 2);
            return weighted_hidden_sum(p, x, 3, 3, dh);
          },
          Eigen::Map<const Eigen::VectorXd>(inputs.data(), inputs.size()));
      REQUIRE(testutil::max_scaled_error(
                  Eigen::Map<const Eigen::VectorXd>(dinputs.data(), dinputs.size()), fd_inputs) <
              1e-5);
    }
  }
}

TEST_CASE("one-layer stack equals the layer itself") {
  const SlstmLayerParams p = random_layer(3, 2, false, 13);
  const Eigen::MatrixXd inputs = random_grid(12, 3, 14);
  const ride::StackState st = ride::stack_forward({p}, inputs, 3, 4);
  const GridState direct = ride::slstm_forward(p, inputs, 3, 4);
  CHECK(st.top_hidden() == direct.h);
}

TEST_CASE("two zero layers give a zero top grid") {
  SlstmLayerParams p0 = random_layer(3, 2, false, 15);
  SlstmLayerParams p1 = random_layer(2, 2, false, 16);
  p0.A.setZero();
  p0.bias.setZero();
  p1.A.setZero();
  p1.bias.setZero();
  const ride::StackState st = ride::stack_forward({p0, p1}, random_grid(6, 3, 17), 2, 3);
  CHECK(st.top_hidden().isZero(0.0));
}

TEST_CASE("stack gradients pass finite differences") {
  const SlstmLayerParams p0 = random_layer(2, 2, false, 18);
  const SlstmLayerParams p1 = random_layer(2, 3, true, 19);
  const std::vector<SlstmLayerParams> layers = {p0, p1};
  const Eigen::MatrixXd inputs = random_grid(9, 2, 20);
  const Eigen::MatrixXd dh = random_grid(9, 3, 21);

  const ride::StackState st = ride::stack_forward(layers, inputs, 3, 3);
  Eigen::MatrixXd dinputs;
  std::vector<SlstmGrad> grads;
  ride::stack_backward(layers, st, dh, &dinputs, &grads);

  auto loss = [&](const std::vector<SlstmLayerParams>& ls, const Eigen::MatrixXd& x) {
    return (ride::stack_forward(ls, x, 3, 3).top_hidden().array() * dh.array()).sum();
  };

  for (int which : {0, 1}) {
    std::vector<SlstmLayerParams> probe = layers;
    const Eigen::VectorXd fd = testutil::finite_difference(
        [&](const Eigen::VectorXd& v) {
          probe[which].from_vector(v);
          return loss(probe, inputs);
        },
        layers[which].to_vector());
    Eigen::VectorXd analytic(layers[which].parameter_count());
    analytic.head(grads[which].A.size()) =
        Eigen::Map<const Eigen::VectorXd>(grads[which].A.data(), grads[which].A.size());
    analytic.tail(grads[which].bias.size()) = grads[which].bias;
    REQUIRE(testutil::max_scaled_error(analytic, fd) < 1e-5);
  }

  const Eigen::VectorXd fd_in = testutil::finite_difference(
      [&](const Eigen::VectorXd& v) {
        return loss(layers, Eigen::Map<const Eigen::MatrixXd>(v.data(), 9, 2));
      },
      Eigen::Map<const Eigen::VectorXd>(inputs.data(), inputs.size()));
  REQUIRE(testutil::max_scaled_error(
              Eigen::Map<const Eigen::VectorXd>(dinputs.data(), dinputs.size()), fd_in) < 1e-5);
}

TEST_CASE("dimension chain errors") {
  const SlstmLayerParams p0 = random_layer(3, 2, false, 22);
  const SlstmLayerParams p1 = random_layer(4, 2, false, 23);  // expects 4, gets 2
  CHECK_THROWS_AS(ride::stack_forward({p0, p1}, random_grid(4, 3, 24), 2, 2), ride::DomainError);
  CHECK_THROWS_AS(ride::slstm_forward(p0, random_grid(4, 2, 25), 2, 2), ride::DomainError);
}
