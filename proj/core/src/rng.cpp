#include "panoweave/rng.hpp"

#include <cmath>
#include <numbers>

#include "panoweave/errors.hpp"

namespace panoweave {

double Rng::uniform() {
  // 53 random bits, exactly representable in a double.
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t Rng::integer(std::uint64_t n) {
  if (n == 0) throw DomainError("Rng::integer: n must be positive");
  // Rejection sampling keeps the draw unbiased for any n.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = gen_();
  while (x >= limit) x = gen_();
  return x % n;
}

void Rng::fill_normal(Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal();
}

}  // namespace panoweave
