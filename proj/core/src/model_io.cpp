#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ride/errors.hpp"
#include "ride/model.hpp"

namespace ride {

namespace {

// Container layout:
//   "RIDE\n"
//   "v1 <tensor count>\n"
//   per tensor: "<name> <rank> <dim0> ... <dimk>\n" then prod(dims) doubles,
//   little-endian, row-major.
// Tensors are written in a fixed order so identical models produce identical
// bytes; the reader is name-driven and ignores order.

void write_tensor(std::ostream& out, const std::string& name, const double* data,
                  const std::vector<long>& dims) {
  out << name << ' ' << dims.size();
  long count = 1;
  for (long d : dims) {
    out << ' ' << d;
    count *= d;
  }
  out << '\n';
  for (long k = 0; k < count; ++k) {
    std::uint64_t u;
    std::memcpy(&u, &data[k], 8);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    out.write(bytes, 8);
  }
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  // Row-major on disk.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_tensor(out, name, rm.data(), {m.rows(), m.cols()});
}

void write_vector(std::ostream& out, const std::string& name, const Eigen::VectorXd& v) {
  write_tensor(out, name, v.data(), {v.size()});
}

void write_scalar(std::ostream& out, const std::string& name, double v) {
  write_tensor(out, name, &v, {1});
}

struct Tensor {
  std::vector<long> dims;
  std::vector<double> data;
};

std::map<std::string, Tensor> read_tensors(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "RIDE") throw FormatError("missing RIDE magic");
  if (!std::getline(in, line)) throw FormatError("missing version line");
  std::istringstream vs(line);
  std::string version;
  long count = -1;
  vs >> version >> count;
  if (version != "v1" || count < 0) throw FormatError("unsupported container version: " + line);

  std::map<std::string, Tensor> tensors;
  for (long t = 0; t < count; ++t) {
    if (!std::getline(in, line)) throw FormatError("truncated tensor header");
    std::istringstream hs(line);
    std::string name;
    long rank = -1;
    hs >> name >> rank;
    if (name.empty() || rank < 0 || rank > 8) throw FormatError("bad tensor header: " + line);
    Tensor tensor;
    long total = 1;
    for (long r = 0; r < rank; ++r) {
      long d = -1;
      hs >> d;
      if (d < 1) throw FormatError("bad tensor dimension in: " + line);
      tensor.dims.push_back(d);
      total *= d;
    }
    tensor.data.resize(static_cast<std::size_t>(total));
    for (long k = 0; k < total; ++k) {
      char bytes[8];
      in.read(bytes, 8);
      if (!in) throw FormatError("truncated tensor payload for " + name);
      std::uint64_t u = 0;
      for (int i = 0; i < 8; ++i) {
        u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
      }
      std::memcpy(&tensor.data[static_cast<std::size_t>(k)], &u, 8);
    }
    if (!tensors.emplace(name, std::move(tensor)).second) {
      throw FormatError("duplicate tensor name: " + name);
    }
  }
  return tensors;
}

const Tensor& need(const std::map<std::string, Tensor>& tensors, const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw FormatError("missing tensor: " + name);
  return it->second;
}

Eigen::MatrixXd as_matrix(const Tensor& t, const std::string& name) {
  if (t.dims.size() != 2) throw FormatError("tensor " + name + " is not a matrix");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      t.data.data(), t.dims[0], t.dims[1]);
}

Eigen::VectorXd as_vector(const Tensor& t, const std::string& name) {
  if (t.dims.size() != 1) throw FormatError("tensor " + name + " is not a vector");
  return Eigen::Map<const Eigen::VectorXd>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

double as_scalar(const Tensor& t, const std::string& name) {
  if (t.data.size() != 1) throw FormatError("tensor " + name + " is not a scalar");
  return t.data[0];
}

long as_count(const Tensor& t, const std::string& name) {
  const double v = as_scalar(t, name);
  const long n = static_cast<long>(v);
  if (static_cast<double>(n) != v || n < 0) throw FormatError("tensor " + name + " is not a count");
  return n;
}

}  // namespace

void save_model(const RideModel& model, std::ostream& out) {
  model.validate();
  const long tensor_count = 8 + 4 * static_cast<long>(model.layers.size()) + 6;
  out << "RIDE\nv1 " << tensor_count << '\n';

  const double nb[2] = {static_cast<double>(model.neighborhood.width),
                        static_cast<double>(model.neighborhood.rows_above)};
  write_tensor(out, "meta.neighborhood", nb, {2});
  write_scalar(out, "meta.layer_count", static_cast<double>(model.layers.size()));

  write_vector(out, "whitening.m_x", model.whitening.m_x);
  write_scalar(out, "whitening.m_y", model.whitening.m_y);
  write_matrix(out, "whitening.cxx_inv_sqrt", model.whitening.cxx_inv_sqrt);
  write_matrix(out, "whitening.cyx_white", model.whitening.cyx_white);
  write_scalar(out, "whitening.w", model.whitening.w);
  write_scalar(out, "whitening.log_jacobian", model.whitening.log_jacobian);

  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const std::string prefix = "layer" + std::to_string(k) + ".";
    const SlstmLayerParams& l = model.layers[k];
    const double dims[2] = {static_cast<double>(l.input_dim), static_cast<double>(l.hidden_dim)};
    write_tensor(out, prefix + "dims", dims, {2});
    write_scalar(out, prefix + "extended", l.extended ? 1.0 : 0.0);
    write_matrix(out, prefix + "A", l.A);
    write_vector(out, prefix + "bias", l.bias);
  }

  const double hd[4] = {static_cast<double>(model.head.dim()),
                        static_cast<double>(model.head.components()),
                        static_cast<double>(model.head.scales()),
                        static_cast<double>(model.head.features())};
  write_tensor(out, "head.dims", hd, {4});
  write_matrix(out, "head.eta", model.head.eta);
  write_matrix(out, "head.alpha", model.head.alpha);
  write_matrix(out, "head.beta", model.head.beta);
  write_matrix(out, "head.b", model.head.b);
  write_matrix(out, "head.a", model.head.a);

  if (!out) throw FormatError("model write failed");
}

RideModel load_model(std::istream& in) {
  const auto tensors = read_tensors(in);

  RideModel m;
  const Tensor& nb = need(tensors, "meta.neighborhood");
  if (nb.data.size() != 2) throw FormatError("meta.neighborhood must have 2 entries");
  m.neighborhood.width = static_cast<int>(nb.data[0]);
  m.neighborhood.rows_above = static_cast<int>(nb.data[1]);

  m.whitening.m_x = as_vector(need(tensors, "whitening.m_x"), "whitening.m_x");
  m.whitening.m_y = as_scalar(need(tensors, "whitening.m_y"), "whitening.m_y");
  m.whitening.cxx_inv_sqrt =
      as_matrix(need(tensors, "whitening.cxx_inv_sqrt"), "whitening.cxx_inv_sqrt");
  m.whitening.cyx_white = as_matrix(need(tensors, "whitening.cyx_white"), "whitening.cyx_white");
  m.whitening.w = as_scalar(need(tensors, "whitening.w"), "whitening.w");
  m.whitening.log_jacobian =
      as_scalar(need(tensors, "whitening.log_jacobian"), "whitening.log_jacobian");

  const long layer_count = as_count(need(tensors, "meta.layer_count"), "meta.layer_count");
  for (long k = 0; k < layer_count; ++k) {
    const std::string prefix = "layer" + std::to_string(k) + ".";
    SlstmLayerParams l;
    const Tensor& dims = need(tensors, prefix + "dims");
    if (dims.data.size() != 2) throw FormatError(prefix + "dims must have 2 entries");
    l.input_dim = static_cast<int>(dims.data[0]);
    l.hidden_dim = static_cast<int>(dims.data[1]);
    l.extended = as_scalar(need(tensors, prefix + "extended"), prefix + "extended") != 0.0;
    l.A = as_matrix(need(tensors, prefix + "A"), prefix + "A");
    l.bias = as_vector(need(tensors, prefix + "bias"), prefix + "bias");
    m.layers.push_back(std::move(l));
  }

  const Tensor& hd = need(tensors, "head.dims");
  if (hd.data.size() != 4) throw FormatError("head.dims must have 4 entries");
  m.head.eta = as_matrix(need(tensors, "head.eta"), "head.eta");
  m.head.alpha = as_matrix(need(tensors, "head.alpha"), "head.alpha");
  m.head.beta = as_matrix(need(tensors, "head.beta"), "head.beta");
  m.head.b = as_matrix(need(tensors, "head.b"), "head.b");
  m.head.a = as_matrix(need(tensors, "head.a"), "head.a");

  try {
    m.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("model container inconsistent: ") + e.what());
  }
  return m;
}

void save_model_file(const RideModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open model file for writing: " + path.string());
  save_model(model, out);
}

RideModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file: " + path.string());
  return load_model(in);
}

}  // namespace ride
