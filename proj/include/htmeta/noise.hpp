#ifndef HTMETA_NOISE_HPP
#define HTMETA_NOISE_HPP

#include <cmath>
#include <functional>

#include "htmeta/common.hpp"
#include "htmeta/rng.hpp"

namespace htmeta {

// Regularly varying (or Gaussian baseline) gradient-noise models together with
// the time-scaling functions lambda(eta) and lambda*_b(eta).
struct NoiseModel {
  enum class Kind { SymmetricLomax, Gaussian, RadialSpherical };

  Kind kind = Kind::SymmetricLomax;
  int dim = 1;

  // SymmetricLomax: Z = c0 * U * W, U uniform sign, P(W > x) = (1 + x)^{-alpha}
  double c0 = 0.1;
  double alpha = 1.2; // tail index; +inf sentinel for Gaussian

  double stddev = 1.0; // Gaussian

  // RadialSpherical: Z = R * Theta. The closed-form tail is optional; scaling
  // operations report Unsupported without it. The requirement that the
  // spherical density is bounded away from zero is taken on trust here.
  std::function<double(Rng &)> radial_sampler;
  std::function<double(double)> radial_tail;
  std::function<Vec(Rng &)> direction_sampler;

  bool heavy_tailed() const { return kind != Kind::Gaussian; }
};

inline NoiseModel lomax_noise(double c0, double alpha) {
  NoiseModel m;
  m.kind = NoiseModel::Kind::SymmetricLomax;
  m.c0 = c0;
  m.alpha = alpha;
  m.dim = 1;
  return m;
}

inline NoiseModel gaussian_noise(double stddev) {
  NoiseModel m;
  m.kind = NoiseModel::Kind::Gaussian;
  m.stddev = stddev;
  m.alpha = kInf;
  m.dim = 1;
  return m;
}

// single scalar draw (dim == 1 models)
inline double sample1(const NoiseModel &m, Rng &rng) {
  switch (m.kind) {
  case NoiseModel::Kind::SymmetricLomax: {
    const double w = rng.lomax(m.alpha);
    return m.c0 * (rng.coin() ? w : -w);
  }
  case NoiseModel::Kind::Gaussian:
    return m.stddev * rng.normal();
  case NoiseModel::Kind::RadialSpherical: {
    const double r = m.radial_sampler(rng);
    return r * m.direction_sampler(rng)[0];
  }
  }
  return 0.0;
}

inline Vec sample(const NoiseModel &m, Rng &rng) {
  if (m.dim == 1) return Vec{sample1(m, rng)};
  if (m.kind == NoiseModel::Kind::Gaussian) {
    Vec z(static_cast<std::size_t>(m.dim));
    for (auto &v : z) v = m.stddev * rng.normal();
    return z;
  }
  if (m.kind == NoiseModel::Kind::RadialSpherical) {
    const double r = m.radial_sampler(rng);
    Vec dir = m.direction_sampler(rng);
    for (auto &v : dir) v *= r;
    return dir;
  }
  throw UnsupportedError("sample: SymmetricLomax is univariate");
}

// H(x) = P(|Z| > x)
inline double tail_h(const NoiseModel &m, double x) {
  switch (m.kind) {
  case NoiseModel::Kind::SymmetricLomax:
    return std::pow(1.0 + x / m.c0, -m.alpha);
  case NoiseModel::Kind::Gaussian:
    return std::erfc(x / (m.stddev * std::sqrt(2.0)));
  case NoiseModel::Kind::RadialSpherical:
    if (m.radial_tail) return m.radial_tail(x);
    throw UnsupportedError("tail_h: no closed-form tail for this radial model");
  }
  return 0.0;
}

// lambda(eta) = eta^{-1} H(eta^{-1})
inline double lambda_scale(const NoiseModel &m, double eta) {
  if (!m.heavy_tailed())
    throw UnsupportedError("lambda_scale: defined for heavy-tailed models only");
  return tail_h(m, 1.0 / eta) / eta;
}

// lambda*_b(eta) = eta * lambda(eta)^{J*_b}
inline double lambda_star(const NoiseModel &m, double eta, int j_star) {
  return eta * std::pow(lambda_scale(m, eta), j_star);
}

} // namespace htmeta

#endif
