#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "panoweave/image.hpp"

// Scores for generated panoramas: distribution distance between embedding
// sets, wrap-around seam quality, cross-view agreement, and end-to-end
// content repetition.

namespace panoweave {

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased, n - 1 denominator
};

/// Fits mean and covariance to rows of `samples`; needs at least two rows.
GaussianStats gaussian_stats(const Eigen::MatrixXd& samples);

/// Frechet (2-Wasserstein) distance between two Gaussians:
/// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2). Matrix roots
/// come from symmetric eigendecompositions with eigenvalues clamped at 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// Maps an image tensor to a fixed-length embedding vector.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Eigen::VectorXd embed(const Tensor& image) const = 0;
};

/// Bilinearly resizes to out_h x out_w (ERP wrap semantics) and flattens.
class FlattenDownsampleEmbedding : public EmbeddingProvider {
 public:
  FlattenDownsampleEmbedding(int out_h = 8, int out_w = 16);
  Eigen::VectorXd embed(const Tensor& image) const override;

 private:
  int out_h_, out_w_;
};

/// Projects the flattened image with a fixed seeded Gaussian matrix. The
/// matrix depends only on (seed, input size, dim), so equal-shaped inputs
/// share it.
class RandomProjectionEmbedding : public EmbeddingProvider {
 public:
  RandomProjectionEmbedding(int dim = 64, std::uint64_t seed = 0);
  Eigen::VectorXd embed(const Tensor& image) const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

/// Named built-in providers: "flatten-downsample" or "random-projection".
std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const std::string& name);

/// Embeds both sets and returns the Frechet distance between the fitted
/// Gaussians. Each set needs at least two images.
double frechet_between_sets(const std::vector<Tensor>& a,
                            const std::vector<Tensor>& b,
                            const EmbeddingProvider& provider);

struct SeamScore {
  double seam = 0.0;      // mean |first column - last column|
  double interior = 0.0;  // mean adjacent-column difference elsewhere
  double ratio = 0.0;     // seam / interior, 1 when interior is 0
};

/// Wrap-around discontinuity of a panorama relative to its own horizontal
/// smoothness. Needs width >= 3.
SeamScore seam_score(const ErpImage& pano);

/// Backprojects each view separately and measures the per-pixel variance of
/// the per-view means across all views covering that pixel, averaged with
/// coverage weights. Needs >= 2 views and at least one pixel covered twice.
double overlap_consistency(const std::vector<PerspImage>& views,
                           const ErpGrid& grid);

/// Cuts the four horizontal cube faces (yaw 0/90/180/270, fov 90), embeds
/// them, and averages max(100 * cosine, 0) over the six unordered pairs.
/// High values mean the same content repeats around the panorama. A
/// zero-norm embedding raises DomainError.
double repetition_score(const ErpImage& pano,
                        const EmbeddingProvider& provider);

}  // namespace panoweave
