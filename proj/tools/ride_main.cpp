// Command-line front end: dataset generation, training, evaluation,
// sampling and inpainting on top of the core library.

#include <algorithm>
#include <climits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ride/config.hpp"
#include "ride/dead_leaves.hpp"
#include "ride/errors.hpp"
#include "ride/evaluate.hpp"
#include "ride/image.hpp"
#include "ride/model.hpp"
#include "ride/sampling.hpp"
#include "ride/train.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<ride::Image> load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ride::FormatError("not a directory: " + dir.string());
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".fgrd" || ext == ".pgm") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    throw ride::FormatError("no .fgrd or .pgm images in " + dir.string());
  }
  std::vector<ride::Image> images;
  images.reserve(paths.size());
  for (const fs::path& p : paths) images.push_back(ride::load_image_file(p));
  return images;
}

int run_deadleaves(int count, int size, const std::string& out_dir, std::uint64_t seed,
                   const ride::DeadLeavesConfig& base) {
  ride::DeadLeavesConfig cfg = base;
  cfg.size = size;
  if (cfg.disk_count < 0) cfg.disk_count = ride::scaled_disk_count(size);
  fs::create_directories(out_dir);
  ride::RandomStream rng(seed);
  for (int k = 0; k < count; ++k) {
    ride::RandomStream img_rng = rng.fork(k);
    const ride::Image img = ride::generate_dead_leaves(cfg, img_rng);
    char name[32];
    std::snprintf(name, sizeof(name), "deadleaves_%05d.fgrd", k);
    ride::save_image_file(img, fs::path(out_dir) / name);
  }
  std::cout << "wrote " << count << " images to " << out_dir << "\n";
  return 0;
}

int run_train(const std::string& data_dir, const std::string& val_dir,
              const std::string& config_path, const std::string& out_path, bool mcgsm_only,
              std::uint64_t seed, int threads) {
  const ride::CliConfig cfg = ride::CliConfig::parse_file(config_path);
  const std::vector<ride::Image> train_images = load_image_dir(data_dir);
  const std::vector<ride::Image> val_images = load_image_dir(val_dir);
  ride::RandomStream rng(seed);

  ride::RideModel model;
  if (mcgsm_only) {
    auto [head, whitening] =
        ride::train_mcgsm(train_images, cfg.neighborhood(), cfg.components, cfg.scales,
                          cfg.features, cfg.mcgsm_max_iters, cfg.mcgsm_pairs, rng);
    model.neighborhood = cfg.neighborhood();
    model.whitening = whitening;
    model.head = head;
    model.validate();
    int val_min = INT_MAX;
    for (const ride::Image& img : val_images) {
      val_min = std::min({val_min, img.height, img.width});
    }
    const double rate = ride::loglik_rate_bits(model, val_images,
                                               std::min(cfg.schedule.val_patch, val_min), threads);
    std::cout << "mcgsm trained; validation rate " << rate << " bit/px\n";
  } else {
    ride::RandomStream init_rng = rng.fork(0x1417);
    model = ride::init_ride(cfg.neighborhood(), cfg.layers, cfg.hidden, cfg.components,
                            cfg.scales, cfg.features, cfg.extended, init_rng);
    ride::TrainLog log;
    model = ride::train_ride(model, train_images, val_images, cfg.schedule, rng, &log);
    std::cout << "initial validation rate " << log.initial_val_rate_bits << " bit/px\n";
    for (const ride::EpochLog& e : log.epochs) {
      std::cout << "epoch " << e.epoch << ": lr " << e.learning_rate << ", train nll "
                << e.train_nll << " nats, finetune " << e.finetune_iterations
                << " iters, val rate " << e.val_rate_bits << " bit/px"
                << (e.improved ? " *" : "") << "\n";
    }
    std::cout << "best validation rate " << log.best_val_rate_bits << " bit/px\n";
  }
  ride::save_model_file(model, out_path);
  std::cout << "model written to " << out_path << "\n";
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data_dir, int patch,
             const std::string& ensemble, const std::string& report_path, int threads) {
  const ride::RideModel model = ride::load_model_file(model_path);
  const std::vector<ride::Image> images = load_image_dir(data_dir);
  const ride::TransformSet ts = ride::parse_transform_set(ensemble);

  std::size_t patch_count = 0;
  for (const ride::Image& img : images) {
    patch_count += static_cast<std::size_t>(img.height / patch) * (img.width / patch);
  }
  const double bits = ts.transforms.size() == 1
                          ? ride::loglik_rate_bits(model, images, patch, threads)
                          : ride::ensemble_loglik_rate_bits(model, ts, images, patch, threads);
  const double nats = bits * 0.6931471805599453;

  std::ostringstream report;
  report.precision(10);
  report << "images\t" << images.size() << "\n";
  report << "patch\t" << patch << "\n";
  report << "patches\t" << patch_count << "\n";
  report << "ensemble\t" << ensemble << "\n";
  report << "nats_per_pixel\t" << nats << "\n";
  report << "bits_per_pixel\t" << bits << "\n";

  std::ofstream out(report_path, std::ios::trunc);
  if (!out) throw ride::FormatError("cannot open report file: " + report_path);
  out << report.str();
  std::cout << report.str();
  return 0;
}

int run_sample(const std::string& model_path, int height, int width, std::uint64_t seed,
               const std::string& out_path) {
  const ride::RideModel model = ride::load_model_file(model_path);
  ride::RandomStream rng(seed);
  const ride::Image img = ride::ancestral_sample(model, height, width, rng);
  ride::save_image_file(img, out_path);
  std::cout << "sample written to " << out_path << "\n";
  return 0;
}

int run_inpaint(const std::string& model_path, const std::string& image_path,
                const std::string& mask_path, int sweeps, std::uint64_t seed,
                const std::string& out_path, const ride::InpaintConfig& base) {
  const ride::RideModel model = ride::load_model_file(model_path);
  const ride::Image image = ride::load_image_file(image_path);
  ride::Image mask = ride::load_image_file(mask_path);
  for (double& v : mask.values) v = v != 0.0 ? 1.0 : 0.0;  // nonzero = missing

  ride::InpaintConfig cfg = base;
  cfg.sweeps = sweeps;
  ride::RandomStream rng(seed);
  const ride::Image result = ride::inpaint(model, image, mask, cfg, rng);
  ride::save_image_file(result, out_path);
  std::cout << "inpainted image written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent image density estimator toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // deadleaves
  auto* dl = app.add_subcommand("deadleaves", "Generate dead-leaves images (FGRD files)");
  int dl_count = 0, dl_size = 256;
  std::string dl_out;
  std::uint64_t dl_seed = 0;
  ride::DeadLeavesConfig dl_cfg;
  dl_cfg.disk_count = -1;  // sentinel: scale 4000@256x256 by area
  dl->add_option("--count", dl_count, "Number of images")->required();
  dl->add_option("--size", dl_size, "Image side in pixels")->capture_default_str();
  dl->add_option("--out", dl_out, "Output directory")->required();
  dl->add_option("--seed", dl_seed, "RNG seed")->required();
  dl->add_option("--disks", dl_cfg.disk_count,
                 "Disks per image (default scales 4000 at 256x256 by area)");
  dl->add_option("--radius-min", dl_cfg.radius_min, "Minimum disk radius")->capture_default_str();
  dl->add_option("--radius-max", dl_cfg.radius_max, "Maximum disk radius")->capture_default_str();
  dl->add_option("--exponent", dl_cfg.radius_exponent, "Radius power-law exponent")
      ->capture_default_str();
  dl->add_option("--intensity-min", dl_cfg.intensity_min, "Lower intensity bound")
      ->capture_default_str();
  dl->add_option("--intensity-max", dl_cfg.intensity_max, "Upper intensity bound")
      ->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a directory of images");
  std::string tr_data, tr_val, tr_config, tr_out;
  bool tr_mcgsm_only = false;
  std::uint64_t tr_seed = 0;
  int tr_threads = 1;
  tr->add_option("--data", tr_data, "Training image directory")->required();
  tr->add_option("--val", tr_val, "Validation image directory")->required();
  tr->add_option("--config", tr_config, "Configuration file (key = value lines)")->required();
  tr->add_option("--out", tr_out, "Output model file")->required();
  tr->add_flag("--mcgsm-only", tr_mcgsm_only,
               "Train the stationary conditional mixture without recurrent layers");
  tr->add_option("--seed", tr_seed, "RNG seed")->required();
  tr->add_option("--threads", tr_threads, "Evaluation threads (never changes results)")
      ->capture_default_str();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate log-likelihood rate in bit/px");
  std::string ev_model, ev_data, ev_ensemble = "identity", ev_report;
  int ev_patch = 64, ev_threads = 1;
  ev->add_option("--model", ev_model, "Model file")->required();
  ev->add_option("--data", ev_data, "Image directory")->required();
  ev->add_option("--patch", ev_patch, "Evaluation patch side")->capture_default_str();
  ev->add_option("--ensemble", ev_ensemble, "Transform ensemble: identity or dihedral8")
      ->capture_default_str();
  ev->add_option("--report", ev_report, "Report file (metric<TAB>value lines)")->required();
  ev->add_option("--threads", ev_threads, "Evaluation threads (never changes results)")
      ->capture_default_str();

  // sample
  auto* sa = app.add_subcommand("sample", "Ancestral sampling / texture synthesis");
  std::string sa_model, sa_out;
  int sa_height = 0, sa_width = 0;
  std::uint64_t sa_seed = 0;
  sa->add_option("--model", sa_model, "Model file")->required();
  sa->add_option("--height", sa_height, "Sample height")->required();
  sa->add_option("--width", sa_width, "Sample width")->required();
  sa->add_option("--seed", sa_seed, "RNG seed")->required();
  sa->add_option("--out", sa_out, "Output image (.fgrd or .pgm)")->required();

  // inpaint
  auto* ip = app.add_subcommand("inpaint", "Fill masked pixels by posterior sampling");
  std::string ip_model, ip_image, ip_mask, ip_out;
  int ip_sweeps = 100;
  std::uint64_t ip_seed = 0;
  ride::InpaintConfig ip_cfg;
  ip->add_option("--model", ip_model, "Model file")->required();
  ip->add_option("--image", ip_image, "Input image")->required();
  ip->add_option("--mask", ip_mask, "Mask image, nonzero = missing")->required();
  ip->add_option("--sweeps", ip_sweeps, "Gibbs sweeps")->capture_default_str();
  ip->add_option("--seed", ip_seed, "RNG seed")->required();
  ip->add_option("--out", ip_out, "Output image")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\nRun with --help for usage.\n";
    return 1;
  }

  try {
    if (dl->parsed()) return run_deadleaves(dl_count, dl_size, dl_out, dl_seed, dl_cfg);
    if (tr->parsed()) {
      return run_train(tr_data, tr_val, tr_config, tr_out, tr_mcgsm_only, tr_seed, tr_threads);
    }
    if (ev->parsed()) {
      return run_eval(ev_model, ev_data, ev_patch, ev_ensemble, ev_report, ev_threads);
    }
    if (sa->parsed()) return run_sample(sa_model, sa_height, sa_width, sa_seed, sa_out);
    if (ip->parsed()) {
      return run_inpaint(ip_model, ip_image, ip_mask, ip_sweeps, ip_seed, ip_out, ip_cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
