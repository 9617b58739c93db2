#include <benchmark/benchmark.h>

#include "panoweave/eppa.hpp"
#include "panoweave/layout.hpp"
#include "panoweave/metrics.hpp"
#include "panoweave/resample.hpp"
#include "panoweave/sampler.hpp"
#include "panoweave/train.hpp"

using namespace panoweave;

namespace {

ErpImage random_pano(int h, std::uint64_t seed) {
  Tensor t(3, h, 2 * h);
  Rng rng(seed);
  rng.fill_normal(t);
  return ErpImage(std::move(t));
}

}  // namespace

static void BM_ProjectView(benchmark::State& state) {
  ErpImage pano = random_pano(64, 1);
  CameraRig rig = icosahedron_rig(32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_erp_to_persp(
        pano, rig.poses[7], rig.intrinsics, SampleMode::kBilinear));
  }
}
BENCHMARK(BM_ProjectView);

static void BM_BackprojectRig(benchmark::State& state) {
  ErpGrid g = ErpGrid::make(64);
  ErpImage pano = random_pano(64, 2);
  CameraRig rig = icosahedron_rig(32);
  std::vector<PerspImage> views;
  for (const CameraPose& p : rig.poses) {
    views.push_back(
        project_erp_to_persp(pano, p, rig.intrinsics, SampleMode::kBilinear));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(backproject_persp_to_erp(views, g));
  }
}
BENCHMARK(BM_BackprojectRig);

static void BM_BuildAttentionMask(benchmark::State& state) {
  ErpGrid g = ErpGrid::make(static_cast<int>(state.range(0)));
  CameraRig rig = icosahedron_rig(g.height);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_attention_masks(g, rig, 1.0));
  }
}
BENCHMARK(BM_BuildAttentionMask)->Arg(8)->Arg(16);

static void BM_EppaApply(benchmark::State& state) {
  ErpGrid g = ErpGrid::make(8);
  CameraRig rig = icosahedron_rig(8);
  SpeMaps spe = build_spe_maps(g, rig, SpeConfig::make(32));
  Eigen::MatrixXd mask = build_attention_masks(g, rig, 1.0);
  EppaParams params = EppaParams::make(32);
  Rng rng(3);
  params.init(rng);
  Eigen::MatrixXd target = Eigen::MatrixXd::Random(spe.pano.rows(), 32);
  Eigen::MatrixXd source = Eigen::MatrixXd::Random(spe.views.rows(), 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        eppa_apply(params, target, source, spe.pano, spe.views, mask));
  }
}
BENCHMARK(BM_EppaApply);

static void BM_ConvForwardCircular(benchmark::State& state) {
  Conv2d conv(32, 32, 3, 1);
  Rng rng(4);
  conv.init_he(rng);
  Batch x = {Tensor(32, 16, 32)};
  rng.fill_normal(x[0]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.forward(x, PadMode::kCircular));
  }
}
BENCHMARK(BM_ConvForwardCircular);

static void BM_ConvBackward(benchmark::State& state) {
  Conv2d conv(32, 32, 3, 1);
  Rng rng(5);
  conv.init_he(rng);
  Batch x = {Tensor(32, 16, 32)}, dy = {Tensor(32, 16, 32)};
  rng.fill_normal(x[0]);
  rng.fill_normal(dy[0]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.backward(x, dy, PadMode::kCircular));
  }
}
BENCHMARK(BM_ConvBackward);

static void BM_DenoiserForward(benchmark::State& state) {
  DenoiserConfig dc;
  dc.grid = ErpGrid::make(16);
  dc.init_seed = 6;
  CameraRig rig = icosahedron_rig(8);
  ToyDenoiser model(dc, rig);
  Tensor pano(3, 16, 32);
  Rng rng(7);
  rng.fill_normal(pano);
  Batch views(rig.poses.size(), Tensor(3, 8, 8));
  for (Tensor& v : views) rng.fill_normal(v);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(pano, views, 500, 0));
  }
}
BENCHMARK(BM_DenoiserForward);

static void BM_TrainStep(benchmark::State& state) {
  DenoiserConfig dc;
  dc.grid = ErpGrid::make(16);
  dc.init_seed = 8;
  CameraRig rig = icosahedron_rig(8);
  ToyDenoiser model(dc, rig);
  NoiseSchedule sched = NoiseSchedule::linear(1000);
  SynthParams sp;
  sp.grid = dc.grid;
  sp.rig = rig;
  TrainSample sample = synth_panorama(11, sp);
  Rng rng(9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(combined_loss(model, sched, sample, rng));
  }
}
BENCHMARK(BM_TrainStep);

static void BM_DdimSample(benchmark::State& state) {
  DenoiserConfig dc;
  dc.grid = ErpGrid::make(16);
  dc.init_seed = 10;
  CameraRig rig = icosahedron_rig(8);
  ToyDenoiser model(dc, rig);
  NoiseSchedule sched = NoiseSchedule::linear(1000);
  SamplerConfig sc;
  sc.ddim_steps = static_cast<int>(state.range(0));
  sc.seed = 12;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ddim_sample(model, sched, sc, 0));
  }
}
BENCHMARK(BM_DdimSample)->Arg(1)->Arg(4);

static void BM_DistanceMap(benchmark::State& state) {
  RoomLayout room = RoomLayout::box(6.0, 4.0, 1.6, 2.6);
  ErpGrid g = ErpGrid::make(64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_distance_map(room, g, false));
  }
}
BENCHMARK(BM_DistanceMap);

static void BM_FrechetDistance(benchmark::State& state) {
  Rng rng(13);
  Eigen::MatrixXd a(64, 96), b(64, 96);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 96; ++c) {
      a(r, c) = rng.normal();
      b(r, c) = rng.normal() + 0.3;
    }
  GaussianStats ga = gaussian_stats(a), gb = gaussian_stats(b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(frechet_distance(ga, gb));
  }
}
BENCHMARK(BM_FrechetDistance);

BENCHMARK_MAIN();
