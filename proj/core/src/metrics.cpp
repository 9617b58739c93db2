#include "panoweave/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "panoweave/errors.hpp"
#include "panoweave/resample.hpp"
#include "panoweave/rng.hpp"

namespace panoweave {

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed in frechet_distance");
  }
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Cosine that is exactly 1 for bitwise-identical vectors.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) {
    throw DomainError("cosine of a zero-norm embedding");
  }
  const double dot = a.dot(b);
  if (na == nb && dot == na) return 1.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

GaussianStats gaussian_stats(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) {
    throw DomainError("gaussian_stats needs at least two samples");
  }
  GaussianStats s;
  s.mean = samples.colwise().mean();
  Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows() ||
      a.cov.cols() != b.cov.cols() || a.cov.rows() != a.mean.size()) {
    throw ShapeError("frechet_distance: dimension mismatch");
  }
  const Eigen::MatrixXd root_a = psd_sqrt(a.cov);
  Eigen::MatrixXd inner = root_a * b.cov * root_a;
  inner = 0.5 * (inner + inner.transpose());  // symmetrize rounding noise
  const double tr = a.cov.trace() + b.cov.trace() - 2.0 * psd_sqrt(inner).trace();
  const double d = (a.mean - b.mean).squaredNorm() + tr;
  if (d < -1e-6) {
    throw NumericError("frechet_distance went significantly negative");
  }
  return std::max(0.0, d);
}

FlattenDownsampleEmbedding::FlattenDownsampleEmbedding(int out_h, int out_w)
    : out_h_(out_h), out_w_(out_w) {
  if (out_h < 1 || out_w < 1) {
    throw DomainError("embedding output size must be positive");
  }
}

Eigen::VectorXd FlattenDownsampleEmbedding::embed(const Tensor& image) const {
  if (image.empty()) throw DataError("cannot embed an empty image");
  Eigen::VectorXd out(static_cast<Eigen::Index>(image.channels()) * out_h_ *
                      out_w_);
  Eigen::Index i = 0;
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < out_h_; ++y) {
      for (int x = 0; x < out_w_; ++x, ++i) {
        const double u = (x + 0.5) / out_w_ * image.width();
        const double v = (y + 0.5) / out_h_ * image.height();
        out[i] = erp_bilinear_sample(image, c, u, v);
      }
    }
  }
  return out;
}

RandomProjectionEmbedding::RandomProjectionEmbedding(int dim,
                                                     std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 1) throw DomainError("projection dimension must be positive");
}

Eigen::VectorXd RandomProjectionEmbedding::embed(const Tensor& image) const {
  if (image.empty()) throw DataError("cannot embed an empty image");
  const std::size_t n = image.size();
  // The projection matrix is a pure function of (seed, n, dim): equal
  // shapes see the same matrix without any caching state.
  Rng rng(seed_ ^ (static_cast<std::uint64_t>(n) * 0x9e3779b97f4a7c15ULL) ^
          static_cast<std::uint64_t>(dim_));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = image[j];
    for (int d = 0; d < dim_; ++d) {
      out[d] += rng.normal() * scale * x;
    }
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const std::string& name) {
  if (name == "flatten-downsample") {
    return std::make_unique<FlattenDownsampleEmbedding>();
  }
  if (name == "random-projection") {
    return std::make_unique<RandomProjectionEmbedding>();
  }
  throw DomainError("unknown embedding provider: " + name);
}

double frechet_between_sets(const std::vector<Tensor>& a,
                            const std::vector<Tensor>& b,
                            const EmbeddingProvider& provider) {
  if (a.size() < 2 || b.size() < 2) {
    throw DomainError("frechet_between_sets needs >= 2 images per set");
  }
  const Eigen::VectorXd first = provider.embed(a[0]);
  Eigen::MatrixXd ea(static_cast<Eigen::Index>(a.size()), first.size());
  ea.row(0) = first.transpose();
  for (std::size_t i = 1; i < a.size(); ++i) {
    ea.row(static_cast<Eigen::Index>(i)) = provider.embed(a[i]).transpose();
  }
  Eigen::MatrixXd eb(static_cast<Eigen::Index>(b.size()), first.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    eb.row(static_cast<Eigen::Index>(i)) = provider.embed(b[i]).transpose();
  }
  return frechet_distance(gaussian_stats(ea), gaussian_stats(eb));
}

SeamScore seam_score(const ErpImage& pano) {
  const Tensor& t = pano.data;
  const int w = t.width();
  if (w < 3) throw DomainError("seam_score needs width >= 3");
  if (!t.all_finite()) throw DataError("seam_score: non-finite panorama");

  const std::size_t per_col = static_cast<std::size_t>(t.channels()) *
                              t.height();
  double seam_acc = 0.0;
  double interior_acc = 0.0;
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < t.height(); ++y) {
      seam_acc += std::abs(t.at(c, y, 0) - t.at(c, y, w - 1));
      for (int x = 0; x + 1 < w; ++x) {
        interior_acc += std::abs(t.at(c, y, x + 1) - t.at(c, y, x));
      }
    }
  }
  SeamScore s;
  s.seam = seam_acc / static_cast<double>(per_col);
  s.interior = interior_acc / static_cast<double>(per_col * (w - 1));
  s.ratio = s.interior == 0.0 ? 1.0 : s.seam / s.interior;
  return s;
}

double overlap_consistency(const std::vector<PerspImage>& views,
                           const ErpGrid& grid) {
  if (views.size() < 2) {
    throw DomainError("overlap_consistency needs at least two views");
  }
  const int channels = views[0].data.channels();
  for (const PerspImage& v : views) {
    if (v.data.channels() != channels) {
      throw ShapeError("overlap_consistency: views disagree on channels");
    }
  }
  std::vector<ErpImage> images;
  std::vector<Tensor> weights;
  images.reserve(views.size());
  weights.reserve(views.size());
  for (const PerspImage& v : views) {
    auto [img, w] = backproject_persp_to_erp({v}, grid);
    images.push_back(std::move(img));
    weights.push_back(std::move(w));
  }

  double weighted_var = 0.0;
  double weight_total = 0.0;
  std::vector<double> vals;
  vals.reserve(views.size());
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      int cover = 0;
      for (std::size_t i = 0; i < views.size(); ++i) {
        if (weights[i].at(0, y, x) > 0.0) ++cover;
      }
      if (cover < 2) continue;
      double var_sum = 0.0;
      for (int c = 0; c < channels; ++c) {
        vals.clear();
        for (std::size_t i = 0; i < views.size(); ++i) {
          if (weights[i].at(0, y, x) > 0.0) {
            vals.push_back(images[i].data.at(c, y, x));
          }
        }
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size());
        var_sum += var;
      }
      weighted_var += cover * (var_sum / channels);
      weight_total += cover;
    }
  }
  if (weight_total == 0.0) {
    throw DomainError("overlap_consistency: no pixel is covered twice");
  }
  return weighted_var / weight_total;
}

double repetition_score(const ErpImage& pano,
                        const EmbeddingProvider& provider) {
  const ErpGrid grid = pano.grid();
  const int size = grid.height / 2;
  if (size < 1) throw DomainError("panorama too small for repetition_score");
  const CameraIntrinsics intr = CameraIntrinsics::make(90.0, size, size);
  constexpr double kPi = 3.14159265358979323846;

  std::vector<Eigen::VectorXd> emb;
  emb.reserve(4);
  for (int i = 0; i < 4; ++i) {
    const PerspImage face = project_erp_to_persp(
        pano, CameraPose::yaw(i * kPi / 2.0), intr, SampleMode::kBilinear);
    emb.push_back(provider.embed(face.data));
  }

  double acc = 0.0;
  int pairs = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      acc += std::max(100.0 * cosine(emb[i], emb[j]), 0.0);
      ++pairs;
    }
  }
  return acc / pairs;
}

}  // namespace panoweave
