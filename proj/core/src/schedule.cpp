#include "panoweave/schedule.hpp"

#include <cmath>

#include "panoweave/errors.hpp"

namespace panoweave {

double NoiseSchedule::alpha_bar(int t) const {
  if (t == -1) return 1.0;
  if (t < 0 || t >= steps()) {
    throw DomainError("timestep out of range: " + std::to_string(t));
  }
  return alpha_bars[t];
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start,
                                    double beta_end) {
  if (steps < 1) throw DomainError("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end) {
    throw DomainError("betas must satisfy 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
    s.betas[t] = beta_start + frac * (beta_end - beta_start);
    s.alphas[t] = 1.0 - s.betas[t];
    prod *= s.alphas[t];
    s.alpha_bars[t] = prod;
  }
  return s;
}

Tensor add_noise(const NoiseSchedule& sched, const Tensor& x0,
                 const Tensor& noise, int t) {
  if (!x0.same_shape(noise)) {
    throw ShapeError("add_noise: signal and noise shapes differ");
  }
  const double ab = sched.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Tensor out(x0.channels(), x0.height(), x0.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a * x0[i] + b * noise[i];
  }
  return out;
}

}  // namespace panoweave
