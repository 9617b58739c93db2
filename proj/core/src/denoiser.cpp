#include "panoweave/denoiser.hpp"

#include <string>
#include <utility>

#include "panoweave/errors.hpp"
#include "panoweave/ntf.hpp"

namespace panoweave {

namespace {

constexpr PadMode kPanoPad = PadMode::kCircular;
constexpr PadMode kViewPad = PadMode::kZero;

// One row per spatial position: batch index major, then row-major pixels.
Eigen::MatrixXd flatten_batch(const Batch& b) {
  const int c = b[0].channels();
  const int h = b[0].height();
  const int w = b[0].width();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(b.size()) * h * w, c);
  Eigen::Index row = 0;
  for (const Tensor& t : b) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x, ++row) {
        for (int ch = 0; ch < c; ++ch) m(row, ch) = t.at(ch, y, x);
      }
    }
  }
  return m;
}

void unflatten_into(const Eigen::MatrixXd& m, Batch& b) {
  const int c = b[0].channels();
  const int h = b[0].height();
  const int w = b[0].width();
  Eigen::Index row = 0;
  for (Tensor& t : b) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x, ++row) {
        for (int ch = 0; ch < c; ++ch) t.at(ch, y, x) = m(row, ch);
      }
    }
  }
}

bool batch_finite(const Batch& b) {
  for (const Tensor& t : b) {
    if (!t.all_finite()) return false;
  }
  return true;
}

SiteGeometry make_geometry(const ErpGrid& grid, const CameraRig& rig,
                           int channels, double sigma) {
  SiteGeometry geo;
  geo.grid = grid;
  geo.spe = build_spe_maps(grid, rig, SpeConfig::make(channels));
  geo.mask = build_attention_masks(grid, rig, sigma);
  geo.mask_t = geo.mask.transpose();
  return geo;
}

}  // namespace

void DenoiserConfig::validate() const {
  if (grid.height < 8 || grid.height % 8 != 0) {
    throw DomainError("denoiser grid height must be a positive multiple of 8");
  }
  if (grid.width != 2 * grid.height) {
    throw DomainError("denoiser grid must be 2:1 equirectangular");
  }
  if (grid.downsample_factor != 1) {
    throw DomainError("the toy denoiser operates at pixel resolution");
  }
  if (image_channels <= 0) throw DomainError("image_channels must be positive");
  if (features <= 0 || features % 4 != 0) {
    throw DomainError("features must be a positive multiple of 4");
  }
  if (classes <= 0) throw DomainError("classes must be positive");
  if (!(eppa_sigma > 0.0)) throw DomainError("eppa_sigma must be positive");
}

ToyDenoiser::ToyDenoiser(const DenoiserConfig& cfg, const CameraRig& rig)
    : cfg_(cfg), rig_(rig) {
  cfg_.validate();
  if (rig_.poses.empty()) throw DomainError("camera rig has no poses");
  const int f = cfg_.features;
  const int c = cfg_.image_channels;

  stem_ = Conv2d(c, f, 3, 1);
  down1_ = Conv2d(f, f, 3, 2);
  down2_ = Conv2d(f, f, 3, 2);
  mid_ = Conv2d(f, f, 3, 1);
  up1_ = Conv2d(f, f, 3, 1);
  up2_ = Conv2d(f, f, 3, 1);
  head_ = Conv2d(f, c, 3, 1);
  for (int b = 0; b < 2; ++b) {
    stem_ad_[b] = Conv2d(c, f, 1, 1);
    down1_ad_[b] = Conv2d(f, f, 1, 2);
    down2_ad_[b] = Conv2d(f, f, 1, 2);
    mid_ad_[b] = Conv2d(f, f, 1, 1);
    up1_ad_[b] = Conv2d(f, f, 1, 1);
    up2_ad_[b] = Conv2d(f, f, 1, 1);
    head_ad_[b] = Conv2d(f, c, 1, 1);
  }
  film_stem_ = Film(f, cfg_.classes);
  film_mid_ = Film(f, cfg_.classes);
  for (auto& s : sites_) s = EppaParams::make(f);

  Rng rng(cfg_.init_seed);
  stem_.init_he(rng);
  down1_.init_he(rng);
  down2_.init_he(rng);
  mid_.init_he(rng);
  up1_.init_he(rng);
  up2_.init_he(rng);
  head_.init_he(rng);
  for (int b = 0; b < 2; ++b) {
    stem_ad_[b].init_zero();
    down1_ad_[b].init_zero();
    down2_ad_[b].init_zero();
    mid_ad_[b].init_zero();
    up1_ad_[b].init_zero();
    up2_ad_[b].init_zero();
    head_ad_[b].init_zero();
  }
  film_stem_.init(rng);
  film_mid_.init(rng);
  for (auto& s : sites_) s.init(rng);

  half_ = make_geometry(ErpGrid::make(cfg_.grid.height / 2), rig_, f,
                        cfg_.eppa_sigma);
  quarter_ = make_geometry(ErpGrid::make(cfg_.grid.height / 4), rig_, f,
                           cfg_.eppa_sigma);
}

void ToyDenoiser::apply_site(int idx, const SiteGeometry& geo, Batch& p,
                             Batch& v, DenoiserTrace& tr) const {
  if (!tr.coupled) return;
  SiteTrace& st = tr.sites[idx];
  st.pano_in = flatten_batch(p);
  st.views_in = flatten_batch(v);
  if (!st.pano_in.allFinite() || !st.views_in.allFinite()) {
    throw NumericError("non-finite activations at attention site " +
                       std::to_string(idx));
  }
  const EppaParams& site = sites_[idx];
  // Both directions read the pre-update features.
  Eigen::MatrixXd out_p =
      eppa_apply(site, st.pano_in, st.views_in, geo.spe.pano, geo.spe.views,
                 geo.mask, &st.pano_dir);
  Eigen::MatrixXd out_v =
      eppa_apply(site, st.views_in, st.pano_in, geo.spe.views, geo.spe.pano,
                 geo.mask_t, &st.views_dir);
  unflatten_into(out_p, p);
  unflatten_into(out_v, v);
}

void ToyDenoiser::backward_site(int idx, const SiteGeometry& geo,
                                const DenoiserTrace& tr, Batch& d_p,
                                Batch& d_v) {
  if (!tr.coupled) return;
  const SiteTrace& st = tr.sites[idx];
  Eigen::MatrixXd d_out_p = flatten_batch(d_p);
  Eigen::MatrixXd d_out_v = flatten_batch(d_v);
  Eigen::MatrixXd d_pano =
      Eigen::MatrixXd::Zero(st.pano_in.rows(), st.pano_in.cols());
  Eigen::MatrixXd d_views =
      Eigen::MatrixXd::Zero(st.views_in.rows(), st.views_in.cols());
  EppaParams& site = sites_[idx];
  eppa_backward(site, st.pano_in, st.views_in, geo.spe.pano, geo.spe.views,
                st.pano_dir, d_out_p, d_pano, d_views);
  eppa_backward(site, st.views_in, st.pano_in, geo.spe.views, geo.spe.pano,
                st.views_dir, d_out_v, d_views, d_pano);
  unflatten_into(d_pano, d_p);
  unflatten_into(d_views, d_v);
}

DualPrediction ToyDenoiser::forward(const Tensor& pano, const Batch& views,
                                    int t, int y, DenoiserTrace* trace,
                                    bool couple) const {
  const int h = cfg_.grid.height;
  if (pano.channels() != cfg_.image_channels || pano.height() != h ||
      pano.width() != 2 * h) {
    throw ShapeError("panorama input does not match the model grid");
  }
  if (views.size() != rig_.poses.size()) {
    throw ShapeError("view count does not match the rig");
  }
  const int s = h / 2;
  for (const Tensor& v : views) {
    if (v.channels() != cfg_.image_channels || v.height() != s ||
        v.width() != s) {
      throw ShapeError("view input does not match the model grid");
    }
  }
  if (t < 0) throw DomainError("negative timestep");
  if (y < 0 || y >= cfg_.classes) throw DomainError("class id out of range");
  if (!pano.all_finite() || !batch_finite(views)) {
    throw NumericError("non-finite input to dual forward");
  }

  DenoiserTrace local;
  DenoiserTrace& tr = trace ? *trace : local;
  tr.t = t;
  tr.y = y;
  tr.coupled = couple;
  BranchTrace& p = tr.pano;
  BranchTrace& v = tr.views;

  auto dual_conv = [](const Conv2d& trunk, const std::array<Conv2d, 2>& ad,
                      const Batch& xp, const Batch& xv) {
    return std::pair<Batch, Batch>(
        add(trunk.forward(xp, kPanoPad), ad[0].forward(xp, kPanoPad)),
        add(trunk.forward(xv, kViewPad), ad[1].forward(xv, kViewPad)));
  };

  p.x = Batch{pano};
  v.x = views;

  std::tie(p.stem_out, v.stem_out) = dual_conv(stem_, stem_ad_, p.x, v.x);
  p.film_s = film_stem_.forward(p.stem_out, t, y);
  v.film_s = film_stem_.forward(v.stem_out, t, y);
  p.s0 = silu(p.film_s);
  v.s0 = silu(v.film_s);

  std::tie(p.d1, v.d1) = dual_conv(down1_, down1_ad_, p.s0, v.s0);
  Batch ps = silu(p.d1);
  Batch vs = silu(v.d1);
  apply_site(0, half_, ps, vs, tr);
  p.e1 = std::move(ps);
  v.e1 = std::move(vs);

  std::tie(p.d2, v.d2) = dual_conv(down2_, down2_ad_, p.e1, v.e1);
  ps = silu(p.d2);
  vs = silu(v.d2);
  apply_site(1, quarter_, ps, vs, tr);
  p.e2 = std::move(ps);
  v.e2 = std::move(vs);

  std::tie(p.m, v.m) = dual_conv(mid_, mid_ad_, p.e2, v.e2);
  p.fm = film_mid_.forward(p.m, t, y);
  v.fm = film_mid_.forward(v.m, t, y);
  ps = silu(p.fm);
  vs = silu(v.fm);
  apply_site(2, quarter_, ps, vs, tr);
  p.e3 = std::move(ps);
  v.e3 = std::move(vs);

  auto [pu1, vu1] = dual_conv(up1_, up1_ad_, p.e3, v.e3);
  p.r1 = add(pu1, p.e2);
  v.r1 = add(vu1, v.e2);
  ps = silu(p.r1);
  vs = silu(v.r1);
  apply_site(3, quarter_, ps, vs, tr);
  p.up1x = upsample2x(ps);
  v.up1x = upsample2x(vs);

  auto [pu2, vu2] = dual_conv(up2_, up2_ad_, p.up1x, v.up1x);
  p.r2 = add(pu2, p.e1);
  v.r2 = add(vu2, v.e1);
  ps = silu(p.r2);
  vs = silu(v.r2);
  apply_site(4, half_, ps, vs, tr);
  p.rh = add(upsample2x(ps), p.s0);
  v.rh = add(upsample2x(vs), v.s0);
  p.s5 = silu(p.rh);
  v.s5 = silu(v.rh);

  auto [pout, vout] = dual_conv(head_, head_ad_, p.s5, v.s5);
  if (!batch_finite(pout) || !batch_finite(vout)) {
    throw NumericError("non-finite activations in dual forward at t=" +
                       std::to_string(t));
  }
  return DualPrediction{std::move(pout[0]), std::move(vout)};
}

void ToyDenoiser::backward(const DenoiserTrace& tr, const Tensor& d_pano,
                           const Batch& d_views) {
  if (tr.pano.x.empty() || tr.views.x.empty()) {
    throw ShapeError("backward needs a trace captured by forward");
  }
  const int t = tr.t;
  const int y = tr.y;

  auto dual_conv_bwd = [](Conv2d& trunk, std::array<Conv2d, 2>& ad,
                          const Batch& xp, const Batch& xv, const Batch& dp,
                          const Batch& dv) {
    return std::pair<Batch, Batch>(
        add(trunk.backward(xp, dp, kPanoPad), ad[0].backward(xp, dp, kPanoPad)),
        add(trunk.backward(xv, dv, kViewPad),
            ad[1].backward(xv, dv, kViewPad)));
  };

  const BranchTrace& p = tr.pano;
  const BranchTrace& v = tr.views;

  auto [dps5, dvs5] =
      dual_conv_bwd(head_, head_ad_, p.s5, v.s5, Batch{d_pano}, d_views);
  Batch dprh = silu_backward(p.rh, dps5);
  Batch dvrh = silu_backward(v.rh, dvs5);
  Batch dps0_skip = dprh;
  Batch dvs0_skip = dvrh;

  Batch dpe = upsample2x_backward(dprh);
  Batch dve = upsample2x_backward(dvrh);
  backward_site(4, half_, tr, dpe, dve);
  Batch dpr2 = silu_backward(p.r2, dpe);
  Batch dvr2 = silu_backward(v.r2, dve);
  Batch dpe1_skip = dpr2;
  Batch dve1_skip = dvr2;

  auto [dpU1, dvU1] =
      dual_conv_bwd(up2_, up2_ad_, p.up1x, v.up1x, dpr2, dvr2);
  dpe = upsample2x_backward(dpU1);
  dve = upsample2x_backward(dvU1);
  backward_site(3, quarter_, tr, dpe, dve);
  Batch dpr1 = silu_backward(p.r1, dpe);
  Batch dvr1 = silu_backward(v.r1, dve);
  Batch dpe2_skip = dpr1;
  Batch dve2_skip = dvr1;

  auto [dpe3, dve3] = dual_conv_bwd(up1_, up1_ad_, p.e3, v.e3, dpr1, dvr1);
  backward_site(2, quarter_, tr, dpe3, dve3);
  Batch dpfm = silu_backward(p.fm, dpe3);
  Batch dvfm = silu_backward(v.fm, dve3);
  Batch dpm = film_mid_.backward(p.m, dpfm, t, y);
  Batch dvm = film_mid_.backward(v.m, dvfm, t, y);

  auto [dpe2, dve2] = dual_conv_bwd(mid_, mid_ad_, p.e2, v.e2, dpm, dvm);
  dpe2 = add(dpe2, dpe2_skip);
  dve2 = add(dve2, dve2_skip);
  backward_site(1, quarter_, tr, dpe2, dve2);
  Batch dpd2 = silu_backward(p.d2, dpe2);
  Batch dvd2 = silu_backward(v.d2, dve2);

  auto [dpe1, dve1] = dual_conv_bwd(down2_, down2_ad_, p.e1, v.e1, dpd2, dvd2);
  dpe1 = add(dpe1, dpe1_skip);
  dve1 = add(dve1, dve1_skip);
  backward_site(0, half_, tr, dpe1, dve1);
  Batch dpd1 = silu_backward(p.d1, dpe1);
  Batch dvd1 = silu_backward(v.d1, dve1);

  auto [dps0, dvs0] = dual_conv_bwd(down1_, down1_ad_, p.s0, v.s0, dpd1, dvd1);
  dps0 = add(dps0, dps0_skip);
  dvs0 = add(dvs0, dvs0_skip);
  Batch dpfs = silu_backward(p.film_s, dps0);
  Batch dvfs = silu_backward(v.film_s, dvs0);
  Batch dpstem = film_stem_.backward(p.stem_out, dpfs, t, y);
  Batch dvstem = film_stem_.backward(v.stem_out, dvfs, t, y);
  dual_conv_bwd(stem_, stem_ad_, p.x, v.x, dpstem, dvstem);
}

std::vector<ParamRef> ToyDenoiser::params() {
  std::vector<ParamRef> out;
  stem_.collect_params("trunk.stem", out);
  down1_.collect_params("trunk.down1", out);
  down2_.collect_params("trunk.down2", out);
  mid_.collect_params("trunk.mid", out);
  up1_.collect_params("trunk.up1", out);
  up2_.collect_params("trunk.up2", out);
  head_.collect_params("trunk.head", out);
  const char* branch[2] = {"pano", "views"};
  for (int b = 0; b < 2; ++b) {
    const std::string pre = std::string("adapter.") + branch[b] + ".";
    stem_ad_[b].collect_params(pre + "stem", out);
    down1_ad_[b].collect_params(pre + "down1", out);
    down2_ad_[b].collect_params(pre + "down2", out);
    mid_ad_[b].collect_params(pre + "mid", out);
    up1_ad_[b].collect_params(pre + "up1", out);
    up2_ad_[b].collect_params(pre + "up2", out);
    head_ad_[b].collect_params(pre + "head", out);
  }
  film_stem_.collect_params("film.stem", out);
  film_mid_.collect_params("film.mid", out);
  for (int i = 0; i < 5; ++i) {
    sites_[i].collect_params("eppa.site" + std::to_string(i), out);
  }
  return out;
}

void ToyDenoiser::zero_grads() {
  for (ParamRef& p : params()) std::fill(p.grad, p.grad + p.size, 0.0);
}

void ToyDenoiser::sgd_step(double lr) {
  for (ParamRef& p : params()) {
    for (std::size_t i = 0; i < p.size; ++i) p.value[i] -= lr * p.grad[i];
  }
}

std::size_t ToyDenoiser::param_count() {
  std::size_t n = 0;
  for (const ParamRef& p : params()) n += p.size;
  return n;
}

void ToyDenoiser::save(const std::string& path) {
  NtfBundle bundle;
  const double meta[4] = {
      static_cast<double>(cfg_.grid.height),
      static_cast<double>(cfg_.image_channels),
      static_cast<double>(cfg_.features),
      static_cast<double>(cfg_.classes),
  };
  bundle.items.emplace_back("meta", NtfTensor::from_doubles(meta, 4));
  for (const ParamRef& p : params()) {
    bundle.items.emplace_back(p.name, NtfTensor::from_doubles(p.value, p.size));
  }
  ntf_bundle_write(bundle, path);
}

void ToyDenoiser::load(const std::string& path) {
  const NtfBundle bundle = ntf_bundle_read(path);
  const NtfTensor* meta = bundle.find("meta");
  if (!meta || meta->data.size() != 4) {
    throw DataError("checkpoint has no meta record: " + path);
  }
  if (meta->data[0] != static_cast<float>(cfg_.grid.height) ||
      meta->data[1] != static_cast<float>(cfg_.image_channels) ||
      meta->data[2] != static_cast<float>(cfg_.features) ||
      meta->data[3] != static_cast<float>(cfg_.classes)) {
    throw DataError("checkpoint architecture does not match the model: " +
                    path);
  }
  for (ParamRef& p : params()) {
    const NtfTensor* t = bundle.find(p.name);
    if (!t) throw DataError("checkpoint is missing tensor " + p.name);
    if (t->data.size() != p.size) {
      throw DataError("checkpoint tensor " + p.name + " has the wrong size");
    }
    for (std::size_t i = 0; i < p.size; ++i) p.value[i] = t->data[i];
  }
}

}  // namespace panoweave
