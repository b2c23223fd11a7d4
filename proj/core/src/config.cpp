#include "ride/config.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "ride/errors.hpp"

namespace ride {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& what, int line) {
  throw FormatError(what + " at line " + std::to_string(line));
}

long parse_long(const std::string& v, int line) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    fail("expected integer, got '" + v + "'", line);
  }
  if (used != v.size()) fail("expected integer, got '" + v + "'", line);
  return out;
}

int parse_int(const std::string& v, int line) {
  const long out = parse_long(v, line);
  if (out < INT_MIN || out > INT_MAX) fail("integer out of range", line);
  return static_cast<int>(out);
}

double parse_double(const std::string& v, int line) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    fail("expected number, got '" + v + "'", line);
  }
  if (used != v.size() || !std::isfinite(out)) fail("expected number, got '" + v + "'", line);
  return out;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail("expected true/false, got '" + v + "'", line);
}

std::vector<int> parse_int_list(const std::string& v, int line) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_int(trim(item), line));
  }
  if (out.empty()) fail("expected comma-separated integers", line);
  return out;
}

}  // namespace

CliConfig CliConfig::parse(std::istream& in) {
  CliConfig cfg;
  bool epochs_set = false;

  using Setter = std::function<void(CliConfig&, const std::string&, int)>;
  const std::map<std::string, Setter> setters = {
      {"nb_width", [](CliConfig& c, const std::string& v, int l) { c.nb_width = parse_int(v, l); }},
      {"nb_rows_above",
       [](CliConfig& c, const std::string& v, int l) { c.nb_rows_above = parse_int(v, l); }},
      {"layers", [](CliConfig& c, const std::string& v, int l) { c.layers = parse_int(v, l); }},
      {"hidden", [](CliConfig& c, const std::string& v, int l) { c.hidden = parse_int(v, l); }},
      {"components",
       [](CliConfig& c, const std::string& v, int l) { c.components = parse_int(v, l); }},
      {"scales", [](CliConfig& c, const std::string& v, int l) { c.scales = parse_int(v, l); }},
      {"features", [](CliConfig& c, const std::string& v, int l) { c.features = parse_int(v, l); }},
      {"extended",
       [](CliConfig& c, const std::string& v, int l) { c.extended = parse_bool(v, l); }},
      {"batch_size",
       [](CliConfig& c, const std::string& v, int l) { c.schedule.batch_size = parse_int(v, l); }},
      {"momentum",
       [](CliConfig& c, const std::string& v, int l) { c.schedule.momentum = parse_double(v, l); }},
      {"lr_start",
       [](CliConfig& c, const std::string& v, int l) { c.schedule.lr_start = parse_double(v, l); }},
      {"lr_end",
       [](CliConfig& c, const std::string& v, int l) { c.schedule.lr_end = parse_double(v, l); }},
      {"epochs",
       [&epochs_set](CliConfig& c, const std::string& v, int l) {
         c.schedule.epochs = parse_int(v, l);
         epochs_set = true;
       }},
      {"patch_sizes",
       [](CliConfig& c, const std::string& v, int l) {
         c.schedule.patch_sizes = parse_int_list(v, l);
         c.patch_sizes_set = true;
       }},
      {"finetune_iters",
       [](CliConfig& c, const std::string& v, int l) {
         c.schedule.finetune_iters = parse_int(v, l);
       }},
      {"early_stop_patience",
       [](CliConfig& c, const std::string& v, int l) {
         c.schedule.early_stop_patience = parse_int(v, l);
       }},
      {"batches_per_epoch",
       [](CliConfig& c, const std::string& v, int l) {
         c.schedule.batches_per_epoch = parse_int(v, l);
       }},
      {"finetune_pairs",
       [](CliConfig& c, const std::string& v, int l) {
         c.schedule.finetune_pairs = parse_int(v, l);
       }},
      {"whitening_pairs",
       [](CliConfig& c, const std::string& v, int l) {
         c.schedule.whitening_pairs = parse_int(v, l);
       }},
      {"grad_clip",
       [](CliConfig& c, const std::string& v, int l) {
         c.schedule.grad_clip = parse_double(v, l);
       }},
      {"val_patch",
       [](CliConfig& c, const std::string& v, int l) { c.schedule.val_patch = parse_int(v, l); }},
      {"mcgsm_pairs",
       [](CliConfig& c, const std::string& v, int l) { c.mcgsm_pairs = parse_long(v, l); }},
      {"mcgsm_max_iters",
       [](CliConfig& c, const std::string& v, int l) { c.mcgsm_max_iters = parse_int(v, l); }},
      {"sweeps",
       [](CliConfig& c, const std::string& v, int l) { c.inpaint.sweeps = parse_int(v, l); }},
      {"block_size",
       [](CliConfig& c, const std::string& v, int l) { c.inpaint.block_size = parse_int(v, l); }},
      {"block_overlap",
       [](CliConfig& c, const std::string& v, int l) {
         c.inpaint.block_overlap = parse_int(v, l);
       }},
      {"local_window",
       [](CliConfig& c, const std::string& v, int l) {
         c.inpaint.local_window = parse_int(v, l);
       }},
      {"init_candidates",
       [](CliConfig& c, const std::string& v, int l) {
         c.inpaint.init_candidates = parse_int(v, l);
       }},
      {"flip_between_sweeps",
       [](CliConfig& c, const std::string& v, int l) {
         c.inpaint.flip_between_sweeps = parse_bool(v, l);
       }},
  };

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'", line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) fail("unknown config key '" + key + "'", line);
    if (value.empty()) fail("empty value for key '" + key + "'", line);
    it->second(cfg, value, line);
  }

  if (epochs_set && !cfg.patch_sizes_set) {
    // Linear ramp over the same 8..22 range as the default schedule.
    cfg.schedule.patch_sizes.clear();
    const int e = cfg.schedule.epochs;
    for (int k = 0; k < e; ++k) {
      const double t = e == 1 ? 0.0 : static_cast<double>(k) / (e - 1);
      cfg.schedule.patch_sizes.push_back(static_cast<int>(std::lround(8.0 + t * 14.0)));
    }
  }
  return cfg;
}

CliConfig CliConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file: " + path.string());
  return parse(in);
}

std::string CliConfig::documented_defaults() {
  return
      "# model architecture\n"
      "nb_width = 5              # causal neighborhood width (odd)\n"
      "nb_rows_above = 2         # neighborhood rows above the pixel\n"
      "layers = 1                # recurrent layers; 0 = plain conditional mixture\n"
      "hidden = 32               # hidden units per layer\n"
      "components = 32           # mixture components\n"
      "scales = 1                # scales per component\n"
      "features = 32             # quadratic features\n"
      "extended = false          # feed memory units back as inputs\n"
      "# training schedule\n"
      "batch_size = 50\n"
      "momentum = 0.9\n"
      "lr_start = 1.0\n"
      "lr_end = 0.0001\n"
      "epochs = 8\n"
      "patch_sizes = 8,10,12,14,16,18,20,22   # one entry per epoch\n"
      "finetune_iters = 500      # L-BFGS head finetuning per epoch\n"
      "early_stop_patience = 3\n"
      "batches_per_epoch = 0     # 0 = one pass over the training pixels\n"
      "finetune_pairs = 50000\n"
      "whitening_pairs = 100000\n"
      "grad_clip = 1.0           # global L2 gradient cap, 0 = off\n"
      "val_patch = 64\n"
      "# stationary mcgsm training (--mcgsm-only)\n"
      "mcgsm_pairs = 1000000\n"
      "mcgsm_max_iters = 3000\n"
      "# inpainting\n"
      "sweeps = 100\n"
      "block_size = 5\n"
      "block_overlap = 2\n"
      "local_window = 19\n"
      "init_candidates = 5\n"
      "flip_between_sweeps = true\n";
}

}  // namespace ride
