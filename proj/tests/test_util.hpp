#ifndef HTMETA_TEST_UTIL_HPP
#define HTMETA_TEST_UTIL_HPP

#include <cmath>
#include <functional>
#include <vector>

// Test-only oracles, kept independent of the library's integrators.
namespace testutil {

// fixed-step RK4 on dy/dt = -g(y), finer step than the library default
inline double flow_oracle(const std::function<double(double)> &g, double x0, double t_end,
                          double dt = 1e-4) {
  double x = x0;
  for (double t = 0.0; t < t_end; t += dt) {
    const double k1 = -g(x);
    const double k2 = -g(x + 0.5 * dt * k1);
    const double k3 = -g(x + 0.5 * dt * k2);
    const double k4 = -g(x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// forward-Euler two-jump path oracle: jump w1 at time 0, flow gap, jump w2
inline double two_jump_euler_oracle(const std::function<double(double)> &g, double x0,
                                    double w1, double gap, double w2, double b,
                                    double sigma = 1.0, double dt = 1e-5) {
  auto clip = [b](double v) { return v > b ? b : (v < -b ? -b : v); };
  double x = x0 + clip(sigma * w1);
  for (double t = 0.0; t < gap; t += dt) x -= dt * g(x);
  return x + clip(sigma * w2);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double> &xs) {
  double s = 0.0, s2 = 0.0;
  for (double v : xs) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(xs.size());
  MeanSe r;
  r.mean = s / n;
  const double var = std::max(0.0, s2 / n - r.mean * r.mean);
  r.se = std::sqrt(var / n);
  return r;
}

} // namespace testutil

#endif
