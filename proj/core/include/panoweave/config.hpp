#pragma once

#include <cstdint>
#include <string>

namespace panoweave {

/// Run configuration shared by the command-line tools. Parsed from a flat
/// key=value file; '#' starts a comment, blank lines are skipped, unknown
/// keys are rejected.
struct RunConfig {
  int grid_height = 64;        // grid.height, panorama width is twice this
  int rig_n = 20;              // rig.n, fixed icosahedral rig size
  double rig_fov = 90.0;       // rig.fov, per-view field of view in degrees
  double eppa_sigma = 1.0;     // eppa.sigma, projection mask blur
  int train_steps = 2000;      // train.steps
  double train_lr = 1e-3;      // train.lr
  int sample_ddim_steps = 50;  // sample.ddim_steps
  std::uint64_t seed = 0;      // seed
  std::string out_dir = ".";   // paths.out

  void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace panoweave
