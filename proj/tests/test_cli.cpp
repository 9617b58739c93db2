// End-to-end checks of the command-line tool: artifact correctness, exit
// codes, and byte-level reproducibility. Each case shells out to the real
// binary (path injected by the build) inside a scratch directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "panoweave/layout.hpp"
#include "panoweave/ntf.hpp"
#include "panoweave/pngio.hpp"
#include "panoweave/tensor.hpp"

using namespace panoweave;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "panoweave_cli_test";

int run(const std::string& args) {
  std::string cmd = std::string(PANOWEAVE_CLI) + " " + args + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string run_capture(const std::string& args, int* exit_code = nullptr) {
  fs::path out = kRoot / "stdout.txt";
  std::string cmd = std::string(PANOWEAVE_CLI) + " " + args + " > " +
                    out.string() + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  if (exit_code) *exit_code = WEXITSTATUS(status);
  std::ifstream in(out);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

struct Workspace {
  Workspace() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
  fs::path operator/(const char* name) const { return kRoot / name; }
};

const char* kTinyConfig =
    "grid.height = 16\n"
    "sample.ddim_steps = 4\n"
    "train.steps = 4\n"
    "train.lr = 1e-3\n";

}  // namespace

TEST_CASE("project then backproject reconstructs a synthetic panorama") {
  Workspace ws;
  fs::path synth = ws / "synth";
  REQUIRE(run("synth --count 1 --out-dir " + synth.string()) == 0);
  fs::path pano_png = synth / "pano_000.png";
  REQUIRE(fs::exists(pano_png));

  fs::path views = ws / "views";
  REQUIRE(run("project --pano " + pano_png.string() + " --out-dir " +
              views.string()) == 0);
  REQUIRE(fs::exists(views / "view_00.png"));
  REQUIRE(fs::exists(views / "view_19.png"));
  REQUIRE(fs::exists(views / "rig.json"));

  fs::path bp = ws / "bp";
  REQUIRE(run("backproject --views-dir " + views.string() + " --rig " +
              (views / "rig.json").string() + " --out-dir " + bp.string()) ==
          0);

  Tensor original = png_read_rgb(pano_png.string());
  Tensor rebuilt = png_read_rgb((bp / "pano.png").string());
  Tensor coverage = ntf_read((bp / "coverage.ntf").string()).to_tensor();
  REQUIRE(rebuilt.same_shape(original));

  double err = 0.0;
  std::size_t counted = 0;
  for (int y = 0; y < original.height(); ++y)
    for (int x = 0; x < original.width(); ++x) {
      if (coverage.at(0, y, x) <= 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        double d = original.at(c, y, x) - rebuilt.at(c, y, x);
        err += d * d;
        ++counted;
      }
    }
  REQUIRE(counted > 0);
  double psnr = 10.0 * std::log10(1.0 / (err / counted));
  CHECK(psnr >= 50.0);

  // Splat holes can appear only at the extreme polar rows where the
  // equirectangular grid oversamples; the mid-latitudes are always hit.
  std::size_t uncovered = 0;
  int h = coverage.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < coverage.width(); ++x)
      if (coverage.at(0, y, x) <= 0.0) {
        ++uncovered;
        CHECK((y < h / 8 || y >= h - h / 8));
      }
  CHECK(uncovered < coverage.size() / 20);
}

TEST_CASE("sampling twice with one seed is byte-identical") {
  Workspace ws;
  spit(ws / "tiny.cfg", kTinyConfig);
  std::string base = "--config " + (ws / "tiny.cfg").string() +
                     " --seed 7 sample --out-dir ";
  REQUIRE(run(base + (ws / "s1").string()) == 0);
  REQUIRE(run(base + (ws / "s2").string()) == 0);

  CHECK(slurp(ws / "s1" / "pano.png") == slurp(ws / "s2" / "pano.png"));
  CHECK(slurp(ws / "s1" / "pano.ntf") == slurp(ws / "s2" / "pano.ntf"));
  CHECK(slurp(ws / "s1" / "view_07.png") == slurp(ws / "s2" / "view_07.png"));

  // A different seed changes the artifacts.
  std::string other = "--config " + (ws / "tiny.cfg").string() +
                      " --seed 8 sample --out-dir " + (ws / "s3").string();
  REQUIRE(run(other) == 0);
  CHECK(slurp(ws / "s1" / "pano.ntf") != slurp(ws / "s3" / "pano.ntf"));
}

TEST_CASE("train writes a loss curve and a loadable checkpoint") {
  Workspace ws;
  spit(ws / "tiny.cfg", kTinyConfig);
  std::string cfg = "--config " + (ws / "tiny.cfg").string();

  fs::path t1 = ws / "t1";
  REQUIRE(run(cfg + " train --data-count 2 --out-dir " + t1.string()) == 0);
  REQUIRE(fs::exists(t1 / "model.ntb"));
  std::string csv = slurp(t1 / "loss.csv");
  CHECK(csv.rfind("step,loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 steps

  // Training is deterministic too.
  fs::path t2 = ws / "t2";
  REQUIRE(run(cfg + " train --data-count 2 --out-dir " + t2.string()) == 0);
  CHECK(slurp(t1 / "loss.csv") == slurp(t2 / "loss.csv"));
  CHECK(slurp(t1 / "model.ntb") == slurp(t2 / "model.ntb"));

  // Sampling from the checkpoint works.
  REQUIRE(run(cfg + " sample --ckpt " + (t1 / "model.ntb").string() +
              " --out-dir " + (ws / "from_ckpt").string()) == 0);
  CHECK(fs::exists(ws / "from_ckpt" / "pano.png"));
}

TEST_CASE("layout subcommands render maps and report iou") {
  Workspace ws;
  spit(ws / "room.json", RoomLayout::box(6.0, 4.0, 1.6, 2.6).to_json());
  spit(ws / "tiny.cfg", kTinyConfig);

  REQUIRE(run("--config " + (ws / "tiny.cfg").string() +
              " layout-render --layout " + (ws / "room.json").string() +
              " --out-dir " + (ws / "lr").string()) == 0);
  Tensor metres = ntf_read((ws / "lr" / "distance_m.ntf").string()).to_tensor();
  CHECK(metres.height() == 16);
  CHECK(metres.width() == 32);
  Tensor mm = png_read_gray16_mm((ws / "lr" / "distance_mm.png").string());
  double worst = 0.0;
  for (std::size_t i = 0; i < metres.size(); ++i)
    worst = std::max(worst, std::abs(mm[i] - metres[i]));
  CHECK(worst <= 0.5e-3 + 1e-12);  // millimetre quantisation

  int code = -1;
  std::string out = run_capture("layout-iou " + (ws / "room.json").string() +
                                    " " + (ws / "room.json").string(),
                                &code);
  CHECK(code == 0);
  CHECK(out.find("iou_2d 1.000000000") != std::string::npos);
  CHECK(out.find("iou_3d 1.000000000") != std::string::npos);
}

TEST_CASE("eval reports are deterministic") {
  Workspace ws;
  fs::path synth = ws / "synth";
  REQUIRE(run("--seed 3 synth --count 4 --out-dir " + synth.string()) == 0);

  std::string args = "eval --pano " + (synth / "pano_000.png").string() +
                     " --set-a " + synth.string() + " --set-b " +
                     synth.string() + " --out ";
  REQUIRE(run(args + (ws / "r1.json").string()) == 0);
  REQUIRE(run(args + (ws / "r2.json").string()) == 0);
  std::string report = slurp(ws / "r1.json");
  CHECK(report == slurp(ws / "r2.json"));
  CHECK(report.find("\"seam\"") != std::string::npos);
  CHECK(report.find("\"repetition\"") != std::string::npos);
  CHECK(report.find("\"frechet\"") != std::string::npos);
  // Identical sets: the distance vanishes.
  CHECK(report.find("\"frechet\": 0.0") != std::string::npos);
}

TEST_CASE("spe and mask artifacts have the documented shapes") {
  Workspace ws;
  spit(ws / "tiny.cfg", kTinyConfig);
  std::string cfg = "--config " + (ws / "tiny.cfg").string();

  REQUIRE(run(cfg + " spe --out " + (ws / "spe.ntb").string()) == 0);
  NtfBundle spe = ntf_bundle_read((ws / "spe.ntb").string());
  const NtfTensor* pano = spe.find("pano");
  const NtfTensor* views = spe.find("views");
  REQUIRE(pano != nullptr);
  REQUIRE(views != nullptr);
  // Feature grid 8x16 at grid.height 16; 20 views of 4x4.
  CHECK(pano->dims == std::vector<std::uint32_t>({128, 32}));
  CHECK(views->dims == std::vector<std::uint32_t>({320, 32}));

  REQUIRE(run(cfg + " mask --out " + (ws / "mask.ntf").string()) == 0);
  NtfTensor mask = ntf_read((ws / "mask.ntf").string());
  CHECK(mask.dims == std::vector<std::uint32_t>({128, 320}));
  for (float v : mask.data) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("exit codes distinguish usage, data, and numerical failures") {
  Workspace ws;
  spit(ws / "tiny.cfg", kTinyConfig);

  CHECK(run("project") == 1);              // missing required option
  CHECK(run("definitely-not-a-command") == 1);
  CHECK(run("") == 1);                     // no subcommand

  CHECK(run("project --pano " + (ws / "absent.png").string()) == 2);
  spit(ws / "bad.json", "{broken");
  CHECK(run("layout-iou " + (ws / "bad.json").string() + " " +
            (ws / "bad.json").string()) == 2);
  spit(ws / "bad.cfg", "nonsense.key = 1\n");
  CHECK(run("--config " + (ws / "bad.cfg").string() + " rig --out " +
            (ws / "r.json").string()) == 2);

  // A divergent learning rate is a numerical failure.
  spit(ws / "hot.cfg",
       "grid.height = 16\ntrain.steps = 60\ntrain.lr = 1e6\n");
  CHECK(run("--config " + (ws / "hot.cfg").string() +
            " train --data-count 1 --out-dir " + (ws / "hot").string()) == 3);
}
