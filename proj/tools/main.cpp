// panoweave CLI: reproducible runs of the projection, attention-geometry,
// toy diffusion, layout, and evaluation pipelines. Every subcommand honours
// --config / --seed and writes its artifacts atomically, so identical
// invocations produce byte-identical files.
//
// Exit codes: 0 success, 1 usage, 2 data or format problem, 3 numerical
// failure.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "panoweave/config.hpp"
#include "panoweave/denoiser.hpp"
#include "panoweave/eppa.hpp"
#include "panoweave/errors.hpp"
#include "panoweave/layout.hpp"
#include "panoweave/metrics.hpp"
#include "panoweave/ntf.hpp"
#include "panoweave/pngio.hpp"
#include "panoweave/resample.hpp"
#include "panoweave/sampler.hpp"
#include "panoweave/schedule.hpp"
#include "panoweave/synth.hpp"
#include "panoweave/train.hpp"

namespace fs = std::filesystem;
using namespace panoweave;

namespace {

// The toy model line-up is fixed; the config only moves the geometry knobs.
constexpr int kFeatures = 32;
constexpr int kClasses = 8;
constexpr int kScheduleSteps = 1000;

struct CliState {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  RunConfig cfg;

  void finalize() {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    cfg.validate();
  }
};

CameraRig config_rig(const RunConfig& cfg, int image_size) {
  CameraRig rig = icosahedron_rig(image_size);
  rig.intrinsics = CameraIntrinsics::make(cfg.rig_fov, image_size, image_size);
  return rig;
}

DenoiserConfig model_config(const RunConfig& cfg) {
  DenoiserConfig mc;
  mc.grid = ErpGrid::make(cfg.grid_height);
  mc.features = kFeatures;
  mc.classes = kClasses;
  mc.eppa_sigma = cfg.eppa_sigma;
  mc.init_seed = cfg.seed;
  return mc;
}

SynthParams synth_params(const RunConfig& cfg) {
  SynthParams sp;
  sp.grid = ErpGrid::make(cfg.grid_height);
  sp.rig = config_rig(cfg, cfg.grid_height / 2);
  sp.label_buckets = kClasses;
  return sp;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string view_name(int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%02d.%s", i, ext);
  return buf;
}

Tensor read_image_any(const std::string& path) {
  if (has_suffix(path, ".ntf")) return ntf_read(path).to_tensor();
  return png_read_rgb(path);
}

/// [-1, 1] latent to a viewable [0, 1] image.
Tensor to_unit_range(const Tensor& t) {
  Tensor out = t;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(0.5 * (out[i] + 1.0), 0.0, 1.0);
  return out;
}

NtfTensor ntf_from_matrix(const Eigen::MatrixXd& m) {
  NtfTensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows()),
            static_cast<std::uint32_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.data[static_cast<std::size_t>(r) * m.cols() + c] =
          static_cast<float>(m(r, c));
  return t;
}

nlohmann::json rig_to_json(const CameraRig& rig) {
  nlohmann::json j;
  j["fov_deg"] = rig.intrinsics.fov_deg;
  j["image_size"] = rig.intrinsics.height;
  j["poses"] = nlohmann::json::array();
  for (const CameraPose& p : rig.poses) {
    const Eigen::Matrix3d& r = p.world_to_cam();
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) row.push_back(r(a, b));
    j["poses"].push_back(row);
  }
  return j;
}

CameraRig rig_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rig file: " + path);
  nlohmann::json j;
  try {
    in >> j;
    CameraRig rig;
    int size = j.at("image_size").get<int>();
    rig.intrinsics =
        CameraIntrinsics::make(j.at("fov_deg").get<double>(), size, size);
    for (const auto& row : j.at("poses")) {
      if (!row.is_array() || row.size() != 9)
        throw FormatError("rig pose must be a 9-entry row-major matrix");
      Eigen::Matrix3d r;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) r(a, b) = row[3 * a + b].get<double>();
      rig.poses.push_back(CameraPose::from_world_to_cam(r));
    }
    if (rig.poses.empty()) throw FormatError("rig has no poses");
    return rig;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("rig JSON is malformed: " + std::string(e.what()));
  }
}

void write_text(const std::string& path, const std::string& text) {
  atomic_write_file(path, text);
}

std::vector<std::string> sorted_pngs(const std::string& dir) {
  std::vector<std::string> names;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw DataError("no .png files in " + dir);
  return names;
}

// ---------------------------------------------------------------- commands

int cmd_project(const CliState& st, const std::string& pano_path,
                const std::string& out_dir, const std::string& mode_name) {
  Tensor data = read_image_any(pano_path);
  if (data.width() != 2 * data.height())
    throw DataError("panorama must be 2:1 equirectangular");
  ErpImage pano(std::move(data));
  const bool as_ntf = has_suffix(pano_path, ".ntf");
  SampleMode mode =
      mode_name == "nearest" ? SampleMode::kNearest : SampleMode::kBilinear;

  int view_size = pano.data.height() / 2;
  CameraRig rig = config_rig(st.cfg, view_size);
  ensure_dir(out_dir);
  for (std::size_t i = 0; i < rig.poses.size(); ++i) {
    PerspImage v =
        project_erp_to_persp(pano, rig.poses[i], rig.intrinsics, mode);
    std::string base = out_dir + "/" + view_name(static_cast<int>(i),
                                                 as_ntf ? "ntf" : "png");
    if (as_ntf) {
      ntf_write(NtfTensor::from_tensor(v.data), base);
    } else {
      png_write_rgb(v.data, base);
    }
  }
  write_text(out_dir + "/rig.json", rig_to_json(rig).dump(2) + "\n");
  return 0;
}

int cmd_backproject(const CliState& st, const std::string& views_dir,
                    const std::string& rig_path, const std::string& out_dir) {
  CameraRig rig = rig_from_json_file(rig_path);
  std::vector<PerspImage> views;
  for (std::size_t i = 0; i < rig.poses.size(); ++i) {
    std::string png = views_dir + "/" + view_name(static_cast<int>(i), "png");
    std::string ntf = views_dir + "/" + view_name(static_cast<int>(i), "ntf");
    Tensor data = fs::exists(png) ? png_read_rgb(png)
                                  : ntf_read(ntf).to_tensor();
    views.emplace_back(std::move(data), rig.poses[i], rig.intrinsics);
  }

  ErpGrid grid = ErpGrid::make(st.cfg.grid_height);
  auto [pano, weight] = backproject_persp_to_erp(views, grid);
  ensure_dir(out_dir);
  png_write_rgb(pano.data, out_dir + "/pano.png");
  ntf_write(NtfTensor::from_tensor(pano.data), out_dir + "/pano.ntf");
  ntf_write(NtfTensor::from_tensor(weight), out_dir + "/coverage.ntf");
  return 0;
}

int cmd_rig(const CliState& st, const std::string& out_path) {
  CameraRig rig = config_rig(st.cfg, st.cfg.grid_height / 2);
  write_text(out_path, rig_to_json(rig).dump(2) + "\n");
  return 0;
}

int cmd_spe(const CliState& st, const std::string& out_path, int channels) {
  ErpGrid feature_grid = ErpGrid::make(st.cfg.grid_height / 2);
  CameraRig rig = config_rig(st.cfg, feature_grid.view_size());
  SpeMaps maps = build_spe_maps(feature_grid, rig, SpeConfig::make(channels));
  NtfBundle b;
  b.items.emplace_back("pano", ntf_from_matrix(maps.pano));
  b.items.emplace_back("views", ntf_from_matrix(maps.views));
  ntf_bundle_write(b, out_path);
  return 0;
}

int cmd_mask(const CliState& st, const std::string& out_path, double sigma) {
  ErpGrid feature_grid = ErpGrid::make(st.cfg.grid_height / 2);
  CameraRig rig = config_rig(st.cfg, feature_grid.view_size());
  Eigen::MatrixXd mask = build_attention_masks(feature_grid, rig, sigma);
  ntf_write(ntf_from_matrix(mask), out_path);
  return 0;
}

int cmd_synth(const CliState& st, int count, const std::string& out_dir) {
  if (count <= 0) throw DomainError("--count must be positive");
  SynthParams sp = synth_params(st.cfg);
  ensure_dir(out_dir);
  std::ostringstream csv;
  csv << "index,seed,label,sun_azimuth\n";
  for (int k = 0; k < count; ++k) {
    std::uint64_t seed = st.cfg.seed + static_cast<std::uint64_t>(k);
    TrainSample s = synth_panorama(seed, sp);
    char name[32];
    std::snprintf(name, sizeof(name), "pano_%03d.png", k);
    png_write_rgb(s.pano.data, out_dir + "/" + name);
    char line[128];
    std::snprintf(line, sizeof(line), "%d,%" PRIu64 ",%d,%.17g\n", k, seed,
                  s.label, s.sun_azimuth);
    csv << line;
  }
  write_text(out_dir + "/labels.csv", csv.str());
  return 0;
}

int cmd_train(const CliState& st, int data_count, const std::string& out_dir,
              bool randomize_yaw) {
  if (data_count <= 0) throw DomainError("--data-count must be positive");
  SynthParams sp = synth_params(st.cfg);
  std::vector<TrainSample> data;
  for (int k = 0; k < data_count; ++k)
    data.push_back(synth_panorama(st.cfg.seed + static_cast<std::uint64_t>(k), sp));

  ToyDenoiser model(model_config(st.cfg), sp.rig);
  NoiseSchedule sched = NoiseSchedule::linear(kScheduleSteps);
  TrainRunConfig tc;
  tc.steps = st.cfg.train_steps;
  tc.lr = st.cfg.train_lr;
  tc.seed = st.cfg.seed;
  tc.randomize_yaw = randomize_yaw;
  TrainResult result = train_toy(model, sched, data, tc);

  ensure_dir(out_dir);
  model.save(out_dir + "/model.ntb");
  std::ostringstream csv;
  csv << "step,loss\n";
  for (std::size_t i = 0; i < result.losses.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof(line), "%zu,%.17g\n", i, result.losses[i]);
    csv << line;
  }
  write_text(out_dir + "/loss.csv", csv.str());
  return 0;
}

int cmd_sample(const CliState& st, const std::string& ckpt, int label,
               double eta, bool independent_init, bool no_rotation,
               bool no_pad, const std::string& out_dir) {
  SynthParams sp = synth_params(st.cfg);
  ToyDenoiser model(model_config(st.cfg), sp.rig);
  if (!ckpt.empty()) model.load(ckpt);

  NoiseSchedule sched = NoiseSchedule::linear(kScheduleSteps);
  SamplerConfig sc;
  sc.ddim_steps = st.cfg.sample_ddim_steps;
  sc.eta = eta;
  sc.seed = st.cfg.seed;
  sc.joint_init = !independent_init;
  sc.latent_rotation = !no_rotation;
  sc.decode_circular_pad = !no_pad;
  SampleResult result = ddim_sample(model, sched, sc, label);

  ensure_dir(out_dir);
  png_write_rgb(to_unit_range(result.pano.data), out_dir + "/pano.png");
  ntf_write(NtfTensor::from_tensor(result.pano.data), out_dir + "/pano.ntf");
  for (std::size_t i = 0; i < result.views.size(); ++i) {
    png_write_rgb(to_unit_range(result.views[i].data),
                  out_dir + "/" + view_name(static_cast<int>(i), "png"));
  }
  return 0;
}

int cmd_layout_render(const CliState& st, const std::string& layout_path,
                      const std::string& out_dir) {
  std::ifstream in(layout_path);
  if (!in) throw DataError("cannot open layout file: " + layout_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  RoomLayout room = RoomLayout::from_json(ss.str());

  ErpGrid grid = ErpGrid::make(st.cfg.grid_height);
  Tensor metres = render_distance_map(room, grid, false);
  Tensor norm = render_distance_map(room, grid, true);
  ensure_dir(out_dir);
  png_write_gray16_mm(metres, out_dir + "/distance_mm.png");
  ntf_write(NtfTensor::from_tensor(metres), out_dir + "/distance_m.ntf");
  ntf_write(NtfTensor::from_tensor(norm), out_dir + "/distance_norm.ntf");
  return 0;
}

int cmd_layout_iou(const std::string& a_path, const std::string& b_path) {
  auto load = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open layout file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return RoomLayout::from_json(ss.str());
  };
  RoomLayout a = load(a_path);
  RoomLayout b = load(b_path);
  std::printf("iou_2d %.9f\n", iou_2d(a.floor, b.floor));
  std::printf("iou_3d %.9f\n", iou_3d(a, b));
  return 0;
}

int cmd_eval(const CliState& st, const std::string& pano_path,
             const std::string& views_dir, const std::string& rig_path,
             const std::string& set_a, const std::string& set_b,
             const std::string& embedding, const std::string& out_path) {
  auto provider = make_embedding_provider(embedding);
  nlohmann::json report;

  Tensor pano_t = read_image_any(pano_path);
  if (pano_t.width() != 2 * pano_t.height())
    throw DataError("panorama must be 2:1 equirectangular");
  ErpImage pano(std::move(pano_t));

  SeamScore seam = seam_score(pano);
  report["seam"] = {{"seam", seam.seam},
                    {"interior", seam.interior},
                    {"ratio", seam.ratio}};
  report["repetition"] = repetition_score(pano, *provider);

  if (!views_dir.empty() || !rig_path.empty()) {
    if (views_dir.empty() || rig_path.empty())
      throw DomainError("--views-dir and --rig go together");
    CameraRig rig = rig_from_json_file(rig_path);
    std::vector<PerspImage> views;
    for (std::size_t i = 0; i < rig.poses.size(); ++i) {
      Tensor v = png_read_rgb(views_dir + "/" +
                              view_name(static_cast<int>(i), "png"));
      views.emplace_back(std::move(v), rig.poses[i], rig.intrinsics);
    }
    report["overlap_consistency"] =
        overlap_consistency(views, pano.grid());
  }

  if (!set_a.empty() || !set_b.empty()) {
    if (set_a.empty() || set_b.empty())
      throw DomainError("--set-a and --set-b go together");
    auto load_set = [](const std::string& dir) {
      std::vector<Tensor> out;
      for (const std::string& name : sorted_pngs(dir))
        out.push_back(png_read_rgb(name));
      return out;
    };
    report["frechet"] =
        frechet_between_sets(load_set(set_a), load_set(set_b), *provider);
  }

  write_text(out_path, report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoweave: panorama projection, dual-branch toy diffusion, "
               "room layouts, and panorama metrics"};
  app.require_subcommand(1);
  app.fallthrough();

  CliState st;
  app.add_option("--config", st.config_path, "key = value run configuration");
  app.add_option("--seed", st.seed_override, "override the config seed");

  // project
  auto* project = app.add_subcommand("project", "cut rig views from a panorama");
  std::string pano_path, out_dir = ".", mode_name = "bilinear";
  project->add_option("--pano", pano_path, "ERP .png or .ntf")->required();
  project->add_option("--out-dir", out_dir, "output directory");
  project->add_option("--mode", mode_name, "bilinear|nearest")
      ->check(CLI::IsMember({"bilinear", "nearest"}));

  // backproject
  auto* backproject =
      app.add_subcommand("backproject", "stitch rig views onto a panorama");
  std::string views_dir, rig_path, bp_out = ".";
  backproject->add_option("--views-dir", views_dir, "directory of view_NN images")
      ->required();
  backproject->add_option("--rig", rig_path, "rig JSON from `project` or `rig`")
      ->required();
  backproject->add_option("--out-dir", bp_out, "output directory");

  // rig
  auto* rig_cmd = app.add_subcommand("rig", "emit the configured camera rig");
  std::string rig_out = "rig.json";
  rig_cmd->add_option("--out", rig_out, "output JSON path");

  // spe
  auto* spe_cmd = app.add_subcommand("spe", "emit positional encodings");
  std::string spe_out = "spe.ntb";
  int spe_channels = kFeatures;
  spe_cmd->add_option("--out", spe_out, "output bundle path");
  spe_cmd->add_option("--channels", spe_channels, "encoding width");

  // mask
  auto* mask_cmd = app.add_subcommand("mask", "emit the attention mask");
  std::string mask_out = "mask.ntf";
  double mask_sigma = -1.0;
  mask_cmd->add_option("--out", mask_out, "output tensor path");
  mask_cmd->add_option("--sigma", mask_sigma,
                       "blur width (defaults to eppa.sigma)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "emit synthetic panoramas");
  int synth_count = 8;
  std::string synth_out = ".";
  synth_cmd->add_option("--count", synth_count, "number of samples");
  synth_cmd->add_option("--out-dir", synth_out, "output directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the toy dual model");
  int train_data = 8;
  std::string train_out = ".";
  bool train_yaw = false;
  train_cmd->add_option("--data-count", train_data, "synthetic samples");
  train_cmd->add_option("--out-dir", train_out, "output directory");
  train_cmd->add_flag("--randomize-yaw", train_yaw, "quarter-turn augmentation");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "DDIM-sample the dual model");
  std::string sample_ckpt, sample_out = ".";
  int sample_label = 0;
  double sample_eta = 0.0;
  bool sample_indep = false, sample_no_rot = false, sample_no_pad = false;
  sample_cmd->add_option("--ckpt", sample_ckpt, "checkpoint from `train`");
  sample_cmd->add_option("--label", sample_label, "class id");
  sample_cmd->add_option("--eta", sample_eta, "DDIM stochasticity");
  sample_cmd->add_flag("--independent-init", sample_indep,
                       "per-view noise instead of joint");
  sample_cmd->add_flag("--no-rotation", sample_no_rot,
                       "disable latent rotation");
  sample_cmd->add_flag("--no-pad", sample_no_pad,
                       "disable the circular decode pad");
  sample_cmd->add_option("--out-dir", sample_out, "output directory");

  // layout-render
  auto* lr_cmd = app.add_subcommand("layout-render",
                                    "render a room layout distance map");
  std::string lr_layout, lr_out = ".";
  lr_cmd->add_option("--layout", lr_layout, "room JSON")->required();
  lr_cmd->add_option("--out-dir", lr_out, "output directory");

  // layout-iou
  auto* li_cmd = app.add_subcommand("layout-iou",
                                    "IoU between two room layouts");
  std::string li_a, li_b;
  li_cmd->add_option("a", li_a, "first room JSON")->required();
  li_cmd->add_option("b", li_b, "second room JSON")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score panoramas and views");
  std::string eval_pano, eval_views, eval_rig, eval_a, eval_b;
  std::string eval_embedding = "flatten-downsample";
  std::string eval_out = "report.json";
  eval_cmd->add_option("--pano", eval_pano, "panorama to score")->required();
  eval_cmd->add_option("--views-dir", eval_views, "views for overlap");
  eval_cmd->add_option("--rig", eval_rig, "rig JSON for overlap");
  eval_cmd->add_option("--set-a", eval_a, "image dir for Frechet");
  eval_cmd->add_option("--set-b", eval_b, "image dir for Frechet");
  eval_cmd->add_option("--embedding", eval_embedding,
                       "flatten-downsample|random-projection");
  eval_cmd->add_option("--out", eval_out, "report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 1;
  }

  try {
    st.finalize();
    if (*project) return cmd_project(st, pano_path, out_dir, mode_name);
    if (*backproject) return cmd_backproject(st, views_dir, rig_path, bp_out);
    if (*rig_cmd) return cmd_rig(st, rig_out);
    if (*spe_cmd) return cmd_spe(st, spe_out, spe_channels);
    if (*mask_cmd)
      return cmd_mask(st, mask_out,
                      mask_sigma > 0.0 ? mask_sigma : st.cfg.eppa_sigma);
    if (*synth_cmd) return cmd_synth(st, synth_count, synth_out);
    if (*train_cmd) return cmd_train(st, train_data, train_out, train_yaw);
    if (*sample_cmd)
      return cmd_sample(st, sample_ckpt, sample_label, sample_eta,
                        sample_indep, sample_no_rot, sample_no_pad,
                        sample_out);
    if (*lr_cmd) return cmd_layout_render(st, lr_layout, lr_out);
    if (*li_cmd) return cmd_layout_iou(li_a, li_b);
    if (*eval_cmd)
      return cmd_eval(st, eval_pano, eval_views, eval_rig, eval_a, eval_b,
                      eval_embedding, eval_out);
    std::fprintf(stderr, "no subcommand selected\n");
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const InternalError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 3;
  }
}
