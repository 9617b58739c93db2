#include <cmath>
#include <functional>

#include "doctest.h"
#include "panoweave/errors.hpp"
#include "panoweave/nn.hpp"
#include "panoweave/rng.hpp"

using namespace panoweave;

namespace {

Batch random_batch(Rng& rng, int n, int c, int h, int w) {
  Batch b;
  for (int i = 0; i < n; ++i) {
    Tensor t(c, h, w);
    rng.fill_normal(t);
    b.push_back(std::move(t));
  }
  return b;
}

double batch_dot(const Batch& a, const Batch& b) {
  double acc = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    for (std::size_t i = 0; i < a[n].size(); ++i) acc += a[n][i] * b[n][i];
  }
  return acc;
}

double max_rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-8, std::abs(want));
}

/// Central finite difference of scalar(x + eps * dir) around x.
double directional_fd(const std::function<double(const Batch&)>& f, Batch x,
                      const Batch& dir, double eps) {
  Batch plus = x;
  Batch minus = std::move(x);
  for (std::size_t n = 0; n < plus.size(); ++n) {
    for (std::size_t i = 0; i < plus[n].size(); ++i) {
      plus[n][i] += eps * dir[n][i];
      minus[n][i] -= eps * dir[n][i];
    }
  }
  return (f(plus) - f(minus)) / (2.0 * eps);
}

}  // namespace

TEST_CASE("conv forward matches a hand-computed example") {
  // 1 channel, 3x3 kernel acting on a 2x3 image, zero padding. The kernel
  // picks out the left neighbour with weight 2 and adds bias 1.
  Conv2d conv(1, 1, 3, 1);
  conv.weight.setZero();
  conv.weight(0, 3) = 2.0;  // (ky=1, kx=0): left neighbour
  conv.bias[0] = 1.0;

  Tensor img(1, 2, 3);
  for (int i = 0; i < 6; ++i) img[i] = i + 1;  // rows [1 2 3; 4 5 6]

  Batch out = conv.forward({img}, PadMode::kZero);
  REQUIRE(out.size() == 1);
  CHECK(out[0].at(0, 0, 0) == 1.0);        // left of col 0 is zero pad
  CHECK(out[0].at(0, 0, 1) == 2.0 * 1 + 1);
  CHECK(out[0].at(0, 0, 2) == 2.0 * 2 + 1);
  CHECK(out[0].at(0, 1, 1) == 2.0 * 4 + 1);

  Batch wrapped = conv.forward({img}, PadMode::kCircular);
  CHECK(wrapped[0].at(0, 0, 0) == 2.0 * 3 + 1);  // wraps to column 2
  CHECK(wrapped[0].at(0, 1, 0) == 2.0 * 6 + 1);
}

TEST_CASE("stride-2 conv output size and content") {
  Conv2d conv(1, 1, 3, 2);
  conv.weight.setZero();
  conv.weight(0, 4) = 1.0;  // centre tap: strided identity
  CHECK(conv.out_size(8) == 4);
  CHECK(conv.out_size(7) == 4);

  Tensor img(1, 4, 4);
  for (int i = 0; i < 16; ++i) img[i] = i;
  Batch out = conv.forward({img}, PadMode::kZero);
  CHECK(out[0].height() == 2);
  CHECK(out[0].width() == 2);
  CHECK(out[0].at(0, 0, 0) == img.at(0, 0, 0));
  CHECK(out[0].at(0, 0, 1) == img.at(0, 0, 2));
  CHECK(out[0].at(0, 1, 1) == img.at(0, 2, 2));
}

TEST_CASE("circular conv commutes with horizontal shifts") {
  Rng rng(7);
  Conv2d conv(2, 3, 3, 1);
  conv.init_he(rng);
  Batch x = random_batch(rng, 1, 2, 6, 8);

  const int shift = 3;
  Tensor shifted(2, 6, 8);
  for (int c = 0; c < 2; ++c) {
    for (int y = 0; y < 6; ++y) {
      for (int i = 0; i < 8; ++i) {
        shifted.at(c, y, i) = x[0].at(c, y, (i + shift) % 8);
      }
    }
  }

  Batch a = conv.forward({shifted}, PadMode::kCircular);
  Batch b = conv.forward(x, PadMode::kCircular);
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 6; ++y) {
      for (int i = 0; i < 8; ++i) {
        worst = std::max(worst, std::abs(a[0].at(c, y, i) -
                                         b[0].at(c, y, (i + shift) % 8)));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("conv rejects bad constructions and ragged batches") {
  CHECK_THROWS_AS(Conv2d(1, 1, 2, 1), DomainError);   // even kernel
  CHECK_THROWS_AS(Conv2d(1, 1, 3, 3), DomainError);   // unsupported stride
  CHECK_THROWS_AS(Conv2d(0, 1, 3, 1), DomainError);

  Conv2d conv(1, 1, 3, 1);
  Batch ragged;
  ragged.emplace_back(1, 4, 4);
  ragged.emplace_back(1, 4, 5);
  CHECK_THROWS_AS(conv.forward(ragged, PadMode::kZero), ShapeError);
  CHECK_THROWS_AS(conv.forward(Batch{}, PadMode::kZero), ShapeError);
}

TEST_CASE("conv gradients match finite differences") {
  struct Case {
    int in_c, out_c, k, stride, n, h, w;
    PadMode pad;
  };
  const Case cases[] = {
      {2, 3, 3, 1, 2, 5, 6, PadMode::kZero},
      {2, 3, 3, 1, 1, 4, 8, PadMode::kCircular},
      {3, 2, 1, 1, 2, 3, 5, PadMode::kZero},
      {2, 2, 3, 2, 1, 6, 8, PadMode::kCircular},
      {2, 2, 1, 2, 1, 6, 8, PadMode::kZero},
  };
  Rng rng(123);
  for (const Case& cs : cases) {
    CAPTURE(cs.k);
    CAPTURE(cs.stride);
    Conv2d conv(cs.in_c, cs.out_c, cs.k, cs.stride);
    conv.init_he(rng);
    Batch x = random_batch(rng, cs.n, cs.in_c, cs.h, cs.w);

    // Scalar head: dot the output with a fixed random cotangent.
    Batch probe;
    {
      Batch y = conv.forward(x, cs.pad);
      probe = random_batch(rng, static_cast<int>(y.size()), y[0].channels(),
                           y[0].height(), y[0].width());
    }
    auto scalar = [&](const Batch& in) {
      return batch_dot(conv.forward(in, cs.pad), probe);
    };

    conv.weight_grad.setZero();
    conv.bias_grad.setZero();
    Batch dx = conv.backward(x, probe, cs.pad);

    // Input gradient along a random direction.
    Batch dir = random_batch(rng, cs.n, cs.in_c, cs.h, cs.w);
    const double fd = directional_fd(scalar, x, dir, 1e-6);
    const double an = batch_dot(dx, dir);
    CHECK(max_rel_err(an, fd) < 1e-4);

    // A few weight entries.
    for (int probe_i = 0; probe_i < 4; ++probe_i) {
      const int r = static_cast<int>(rng.integer(conv.weight.rows()));
      const int c = static_cast<int>(rng.integer(conv.weight.cols()));
      const double keep = conv.weight(r, c);
      const double eps = 1e-6;
      conv.weight(r, c) = keep + eps;
      const double up = batch_dot(conv.forward(x, cs.pad), probe);
      conv.weight(r, c) = keep - eps;
      const double dn = batch_dot(conv.forward(x, cs.pad), probe);
      conv.weight(r, c) = keep;
      CHECK(max_rel_err(conv.weight_grad(r, c), (up - dn) / (2 * eps)) < 1e-4);
    }
    // One bias entry.
    {
      const int r = static_cast<int>(rng.integer(conv.bias.size()));
      const double keep = conv.bias[r];
      const double eps = 1e-6;
      conv.bias[r] = keep + eps;
      const double up = batch_dot(conv.forward(x, cs.pad), probe);
      conv.bias[r] = keep - eps;
      const double dn = batch_dot(conv.forward(x, cs.pad), probe);
      conv.bias[r] = keep;
      CHECK(max_rel_err(conv.bias_grad[r], (up - dn) / (2 * eps)) < 1e-4);
    }
  }
}

TEST_CASE("silu values and gradient") {
  Tensor x(1, 1, 3);
  x[0] = 0.0;
  x[1] = 100.0;
  x[2] = -100.0;
  Batch y = silu({x});
  CHECK(y[0][0] == 0.0);
  CHECK(y[0][1] == doctest::Approx(100.0));
  CHECK(std::abs(y[0][2]) < 1e-12);

  Rng rng(3);
  Batch xin = random_batch(rng, 2, 2, 3, 4);
  Batch probe = random_batch(rng, 2, 2, 3, 4);
  Batch dir = random_batch(rng, 2, 2, 3, 4);
  auto scalar = [&](const Batch& in) { return batch_dot(silu(in), probe); };
  const double fd = directional_fd(scalar, xin, dir, 1e-6);
  const double an = batch_dot(silu_backward(xin, probe), dir);
  CHECK(max_rel_err(an, fd) < 1e-6);
}

TEST_CASE("nearest upsampling and its adjoint") {
  Tensor x(1, 1, 2);
  x[0] = 3.0;
  x[1] = 7.0;
  Batch up = upsample2x({x});
  CHECK(up[0].height() == 2);
  CHECK(up[0].width() == 4);
  CHECK(up[0].at(0, 0, 0) == 3.0);
  CHECK(up[0].at(0, 1, 1) == 3.0);
  CHECK(up[0].at(0, 0, 2) == 7.0);
  CHECK(up[0].at(0, 1, 3) == 7.0);

  // The backward op sums each 2x2 block: check adjoint identity
  // <up(x), y> == <x, up_backward(y)>.
  Rng rng(5);
  Batch a = random_batch(rng, 2, 3, 4, 6);
  Batch y = random_batch(rng, 2, 3, 8, 12);
  const double lhs = batch_dot(upsample2x(a), y);
  const double rhs = batch_dot(a, upsample2x_backward(y));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("time features are bounded and distinct") {
  Eigen::VectorXd f0 = time_features(0.0, 32);
  Eigen::VectorXd f1 = time_features(1.0, 32);
  Eigen::VectorXd f999 = time_features(999.0, 32);
  REQUIRE(f0.size() == 32);
  CHECK(f0.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(f999.cwiseAbs().maxCoeff() <= 1.0);
  CHECK((f0 - f1).cwiseAbs().maxCoeff() > 1e-3);
  // sin components of t = 0 vanish, cos components are 1.
  CHECK(f0[0] == 0.0);
  CHECK(f0[1] == 1.0);
  CHECK_THROWS_AS(time_features(0.0, 7), DomainError);
}

TEST_CASE("film conditions on timestep and class") {
  Rng rng(11);
  Film film(4, 3);
  film.init(rng);
  Batch x = random_batch(rng, 2, 4, 3, 5);

  Batch y0 = film.forward(x, 10, 0);
  Batch y1 = film.forward(x, 10, 1);
  Batch y2 = film.forward(x, 500, 0);
  CHECK(batch_dot(y0, y0) != batch_dot(y1, y1));
  CHECK(batch_dot(y0, y0) != batch_dot(y2, y2));
  CHECK_THROWS_AS(film.forward(x, 10, 3), DomainError);
  CHECK_THROWS_AS(film.forward(x, 10, -1), DomainError);
}

TEST_CASE("film gradients match finite differences") {
  Rng rng(13);
  Film film(3, 2);
  film.init(rng);
  const int t = 17, y = 1;
  Batch x = random_batch(rng, 2, 3, 2, 4);
  Batch probe = random_batch(rng, 2, 3, 2, 4);
  Batch dir = random_batch(rng, 2, 3, 2, 4);

  film.w_time_grad.setZero();
  film.b_grad.setZero();
  film.table_grad.setZero();
  Batch dx = film.backward(x, probe, t, y);

  auto scalar = [&](const Batch& in) {
    return batch_dot(film.forward(in, t, y), probe);
  };
  const double fd = directional_fd(scalar, x, dir, 1e-6);
  CHECK(max_rel_err(batch_dot(dx, dir), fd) < 1e-5);

  const double eps = 1e-6;
  for (int i = 0; i < 4; ++i) {
    const int r = static_cast<int>(rng.integer(film.w_time.rows()));
    const int c = static_cast<int>(rng.integer(film.w_time.cols()));
    const double keep = film.w_time(r, c);
    film.w_time(r, c) = keep + eps;
    const double up = batch_dot(film.forward(x, t, y), probe);
    film.w_time(r, c) = keep - eps;
    const double dn = batch_dot(film.forward(x, t, y), probe);
    film.w_time(r, c) = keep;
    CHECK(max_rel_err(film.w_time_grad(r, c), (up - dn) / (2 * eps)) < 1e-4);
  }
  {
    const int r = static_cast<int>(rng.integer(film.b.size()));
    const double keep = film.b[r];
    film.b[r] = keep + eps;
    const double up = batch_dot(film.forward(x, t, y), probe);
    film.b[r] = keep - eps;
    const double dn = batch_dot(film.forward(x, t, y), probe);
    film.b[r] = keep;
    CHECK(max_rel_err(film.b_grad[r], (up - dn) / (2 * eps)) < 1e-4);
  }
  {
    // Only the conditioned class row receives gradient.
    const int other = 0;
    CHECK(film.table_grad.row(other).cwiseAbs().maxCoeff() == 0.0);
    const int c = static_cast<int>(rng.integer(film.table.cols()));
    const double keep = film.table(y, c);
    film.table(y, c) = keep + eps;
    const double up = batch_dot(film.forward(x, t, y), probe);
    film.table(y, c) = keep - eps;
    const double dn = batch_dot(film.forward(x, t, y), probe);
    film.table(y, c) = keep;
    CHECK(max_rel_err(film.table_grad(y, c), (up - dn) / (2 * eps)) < 1e-4);
  }
}

TEST_CASE("param refs expose every trainable value") {
  Rng rng(1);
  Conv2d conv(2, 3, 3, 1);
  conv.init_he(rng);
  std::vector<ParamRef> refs;
  conv.collect_params("c", refs);
  REQUIRE(refs.size() == 2);
  CHECK(refs[0].name == "c.weight");
  CHECK(refs[0].size == static_cast<std::size_t>(conv.weight.size()));
  CHECK(refs[1].name == "c.bias");

  // Mutating through the ref mutates the layer.
  refs[0].value[0] = 42.0;
  CHECK(conv.weight(0, 0) == 42.0);

  Film film(4, 2);
  film.init(rng);
  refs.clear();
  film.collect_params("f", refs);
  REQUIRE(refs.size() == 3);
  CHECK(refs[0].name == "f.w_time");
  CHECK(refs[1].name == "f.b");
  CHECK(refs[2].name == "f.table");
}
