#ifndef HTMETA_OPTIMIZER_HPP
#define HTMETA_OPTIMIZER_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "htmeta/common.hpp"
#include "htmeta/dynamics.hpp"
#include "htmeta/landscape.hpp"
#include "htmeta/rng.hpp"

namespace htmeta {

// Stochastic gradient oracle: small-batch / large-batch samplers and the
// full-data loss. g_true is optional and used by unbiasedness tests.
struct StochasticOracle {
  int dim = 1;
  std::function<Vec(const Vec &, Rng &)> g_sb;
  std::function<Vec(const Vec &, Rng &)> g_lb;
  std::function<Vec(const Vec &)> g_true;
  std::function<double(const Vec &)> loss;
};

struct HeavyTrainConfig {
  double eta = 0.01;
  double b = 0.5;          // clip threshold for the update
  double c = 0.5;          // scale of Z = c * W
  double alpha = 1.4;      // Pareto index of W
  long long steps = 10000;
  long long cooldown = 1000; // final steps run as plain large-batch descent
  bool independent_batches = true; // method 1; false shares the batch (method 2)
  enum class ParetoFamily { TypeI, Lomax } family = ParetoFamily::TypeI;
  double inject_threshold = 0.0; // inject only when Z > threshold (0 = always)
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  long long log_every = 100;
};

// g_heavy = g_SB*(theta) + Z (g_SB(theta) - g_LB(theta)), Z = c W with W
// Pareto(alpha). The inflation multiplies the gradient-noise estimate by a
// heavy-tailed factor; the mean is untouched.
inline Vec g_heavy(const StochasticOracle &oracle, const Vec &theta,
                   const HeavyTrainConfig &cfg, Rng &rng) {
  const Vec v_star = oracle.g_sb(theta, rng);
  const Vec v = cfg.independent_batches ? oracle.g_sb(theta, rng) : v_star;
  const Vec lb = oracle.g_lb(theta, rng);
  const double w = (cfg.family == HeavyTrainConfig::ParetoFamily::TypeI)
                       ? rng.pareto1(cfg.alpha)
                       : rng.lomax(cfg.alpha);
  double z = cfg.c * w;
  if (cfg.inject_threshold > 0.0 && z <= cfg.inject_threshold) z = 0.0;
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v_star[i] + z * (v[i] - lb[i]);
  return out;
}

// theta' = theta - phi_b(eta g_heavy); cooldown steps fall back to plain
// large-batch descent so the run settles into a minimum.
inline Vec train_step(const StochasticOracle &oracle, const Vec &theta,
                      const HeavyTrainConfig &cfg, Rng &rng, long long step_index = 0) {
  Vec move;
  if (step_index >= cfg.steps - cfg.cooldown) {
    const Vec lb = oracle.g_lb(theta, rng);
    move.resize(lb.size());
    for (std::size_t i = 0; i < lb.size(); ++i) move[i] = -cfg.eta * lb[i];
  } else {
    const Vec gh = g_heavy(oracle, theta, cfg, rng);
    move.resize(gh.size());
    for (std::size_t i = 0; i < gh.size(); ++i) move[i] = -cfg.eta * gh[i];
    move = clip(move, cfg.b);
  }
  if (!all_finite(move)) throw NonFiniteError("train_step: non-finite update");
  Vec out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] + move[i];
  return out;
}

struct TrainLogRow {
  long long step;
  double loss;
  double theta_norm;
  bool clipped;
};

struct TrainResult {
  Vec theta;
  std::vector<TrainLogRow> log;
};

inline TrainResult train(const StochasticOracle &oracle, Vec theta0,
                         const HeavyTrainConfig &cfg) {
  Rng rng(cfg.seed, cfg.stream);
  TrainResult res;
  res.theta = std::move(theta0);
  for (long long t = 0; t < cfg.steps; ++t) {
    const Vec prev = res.theta;
    res.theta = train_step(oracle, res.theta, cfg, rng, t);
    if (cfg.log_every > 0 && (t % cfg.log_every == 0 || t + 1 == cfg.steps)) {
      TrainLogRow row;
      row.step = t;
      row.loss = oracle.loss ? oracle.loss(res.theta) : std::nan("");
      row.theta_norm = norm2(res.theta);
      row.clipped = dist2(res.theta, prev) >= cfg.b * (1.0 - 1e-12);
      res.log.push_back(row);
    }
  }
  return res;
}

struct SharpnessEstimate {
  double value = 0.0;
  double se = 0.0;
};

// Expected sharpness: E |min(loss(theta* + nu), cap) - loss(theta*)| with
// nu ~ N(0, delta^2 I), Monte Carlo averaged.
inline SharpnessEstimate expected_sharpness(const std::function<double(const Vec &)> &loss,
                                            const Vec &theta_star, double delta = 0.01,
                                            int n_samples = 100, double loss_cap = 5.0,
                                            std::uint64_t seed = 0) {
  if (n_samples < 2) throw ConfigError("expected_sharpness: n_samples >= 2");
  Rng rng(seed);
  const double base = loss(theta_star);
  double s = 0.0, s2 = 0.0;
  Vec probe(theta_star.size());
  for (int n = 0; n < n_samples; ++n) {
    for (std::size_t i = 0; i < probe.size(); ++i)
      probe[i] = theta_star[i] + delta * rng.normal();
    const double v = std::abs(std::min(loss(probe), loss_cap) - base);
    s += v;
    s2 += v * v;
  }
  SharpnessEstimate est;
  est.value = s / n_samples;
  const double var = std::max(0.0, s2 / n_samples - est.value * est.value);
  est.se = std::sqrt(var / n_samples);
  return est;
}

// ---- toy oracles ---------------------------------------------------------------

// Linear least squares on a fixed synthetic design: minibatch gradients are
// unbiased for the full-data gradient.
inline StochasticOracle make_regression_oracle(int n_data, int dim, double label_noise,
                                               int small_batch, int large_batch,
                                               std::uint64_t seed) {
  Rng gen(seed);
  auto X = std::make_shared<std::vector<Vec>>();
  auto y = std::make_shared<std::vector<double>>();
  Vec truth(static_cast<std::size_t>(dim));
  for (auto &v : truth) v = gen.normal();
  for (int i = 0; i < n_data; ++i) {
    Vec row(static_cast<std::size_t>(dim));
    for (auto &v : row) v = gen.normal();
    double t = label_noise * gen.normal();
    for (int j = 0; j < dim; ++j) t += row[static_cast<std::size_t>(j)] * truth[static_cast<std::size_t>(j)];
    X->push_back(std::move(row));
    y->push_back(t);
  }
  auto batch_grad = [X, y, dim](const Vec &theta, Rng &rng, int bs) {
    Vec g(static_cast<std::size_t>(dim), 0.0);
    const std::size_t n = X->size();
    for (int s = 0; s < bs; ++s) {
      const std::size_t i = static_cast<std::size_t>(rng.below(n));
      double r = -(*y)[i];
      for (int j = 0; j < dim; ++j) r += (*X)[i][static_cast<std::size_t>(j)] * theta[static_cast<std::size_t>(j)];
      for (int j = 0; j < dim; ++j) g[static_cast<std::size_t>(j)] += r * (*X)[i][static_cast<std::size_t>(j)];
    }
    for (auto &v : g) v /= bs;
    return g;
  };
  StochasticOracle o;
  o.dim = dim;
  o.g_sb = [batch_grad, small_batch](const Vec &th, Rng &rng) { return batch_grad(th, rng, small_batch); };
  o.g_lb = [batch_grad, large_batch](const Vec &th, Rng &rng) { return batch_grad(th, rng, large_batch); };
  o.g_true = [X, y, dim](const Vec &theta) {
    Vec g(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t i = 0; i < X->size(); ++i) {
      double r = -(*y)[i];
      for (int j = 0; j < dim; ++j) r += (*X)[i][static_cast<std::size_t>(j)] * theta[static_cast<std::size_t>(j)];
      for (int j = 0; j < dim; ++j) g[static_cast<std::size_t>(j)] += r * (*X)[i][static_cast<std::size_t>(j)];
    }
    for (auto &v : g) v /= static_cast<double>(X->size());
    return g;
  };
  o.loss = [X, y, dim](const Vec &theta) {
    double L = 0.0;
    for (std::size_t i = 0; i < X->size(); ++i) {
      double r = -(*y)[i];
      for (int j = 0; j < dim; ++j) r += (*X)[i][static_cast<std::size_t>(j)] * theta[static_cast<std::size_t>(j)];
      L += 0.5 * r * r;
    }
    return L / static_cast<double>(X->size());
  };
  return o;
}

// 1-D landscape wrapped as a stochastic oracle with additive Gaussian gradient
// noise (small batch noisier than large batch).
inline StochasticOracle make_landscape_oracle(const Landscape &ls, double sb_noise,
                                              double lb_noise) {
  StochasticOracle o;
  o.dim = 1;
  auto grad = ls.grad1;
  o.g_sb = [grad, sb_noise](const Vec &th, Rng &rng) {
    return Vec{grad(th[0]) + sb_noise * rng.normal()};
  };
  o.g_lb = [grad, lb_noise](const Vec &th, Rng &rng) {
    return Vec{grad(th[0]) + lb_noise * rng.normal()};
  };
  o.g_true = [grad](const Vec &th) { return Vec{grad(th[0])}; };
  auto pot = ls.potential1;
  if (pot) o.loss = [pot](const Vec &th) { return pot(th[0]); };
  return o;
}

// Oracle whose gradient-noise estimate has fixed magnitude: the tail of
// g_heavy - g_SB* is then an exact power law, convenient for slope checks.
inline StochasticOracle make_fixed_noise_oracle(double noise_scale) {
  StochasticOracle o;
  o.dim = 1;
  o.g_sb = [noise_scale](const Vec &th, Rng &rng) {
    return Vec{th[0] + (rng.coin() ? noise_scale : -noise_scale)};
  };
  o.g_lb = [](const Vec &th, Rng &) { return Vec{th[0]}; };
  o.g_true = [](const Vec &th) { return Vec{th[0]}; };
  o.loss = [](const Vec &th) { return 0.5 * th[0] * th[0]; };
  return o;
}

} // namespace htmeta

#endif
