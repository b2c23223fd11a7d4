#ifndef RIDE_CONFIG_HPP
#define RIDE_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ride/neighborhood.hpp"
#include "ride/sampling.hpp"
#include "ride/train.hpp"

namespace ride {

// Plain-text configuration, one "key = value" per line, '#' starts a
// comment. Unknown keys are rejected with the offending line number. Every
// key has a default; see documented_defaults().
struct CliConfig {
  // model architecture
  int nb_width = 5;
  int nb_rows_above = 2;
  int layers = 1;
  int hidden = 32;
  int components = 32;
  int scales = 1;
  int features = 32;
  bool extended = false;

  // training schedule
  TrainSchedule schedule;
  bool patch_sizes_set = false;  // auto ramp 8..22 over epochs when unset

  // stationary-mcgsm training (train --mcgsm-only)
  long mcgsm_pairs = 1000000;
  int mcgsm_max_iters = 3000;

  // inpainting
  InpaintConfig inpaint;

  NeighborhoodSpec neighborhood() const { return NeighborhoodSpec{nb_width, nb_rows_above}; }

  static CliConfig parse(std::istream& in);
  static CliConfig parse_file(const std::filesystem::path& path);

  // One "key = default  # comment" line per key.
  static std::string documented_defaults();
};

}  // namespace ride

#endif  // RIDE_CONFIG_HPP
