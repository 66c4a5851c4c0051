#ifndef HTMETA_ANALYSIS_HPP
#define HTMETA_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "htmeta/common.hpp"
#include "htmeta/dynamics.hpp"
#include "htmeta/landscape.hpp"
#include "htmeta/noise.hpp"

namespace htmeta {

// ---- occupation fractions -----------------------------------------------------

struct OccupancyReport {
  std::vector<double> fraction_per_minimum; // sojourn-reconstructed time fractions
  double fraction_widest = 0.0;
  std::vector<double> exact_ball_fraction;  // per-step indicator counters, when recorded
  double fraction_unlabeled = 0.0;          // time before the first marker
  double eps = 0.0;
  double horizon_scaled = 0.0; // total steps in lambda*_b units (0 if not supplied)
};

// Time-average occupation per minimum. The full-resolution indicator sequence
// is reconstructed from the exact transition events: each inter-marker segment
// is attributed to its sojourn's minimum, so thinning does not bias the
// average. The exact per-step ball counters are reported alongside when the
// trajectory recorded them at a matching radius.
inline OccupancyReport occupancy(const Trajectory &tr, const Landscape &ls,
                                 const std::vector<int> &widest, double eps,
                                 double lambda_star_value = 0.0) {
  OccupancyReport rep;
  rep.eps = eps;
  const std::size_t K = static_cast<std::size_t>(ls.n_minima());
  rep.fraction_per_minimum.assign(K, 0.0);
  const double T = static_cast<double>(tr.steps_run);
  if (T <= 0.0) return rep;

  long long prev_t = 0;
  int prev_field = -1;
  for (const auto &[t, f] : tr.transitions) {
    if (prev_field >= 0)
      rep.fraction_per_minimum[static_cast<std::size_t>(prev_field)] +=
          static_cast<double>(t - prev_t);
    else
      rep.fraction_unlabeled += static_cast<double>(t - prev_t);
    prev_t = t;
    prev_field = f;
  }
  if (prev_field >= 0)
    rep.fraction_per_minimum[static_cast<std::size_t>(prev_field)] +=
        static_cast<double>(tr.steps_run - prev_t);
  else
    rep.fraction_unlabeled += static_cast<double>(tr.steps_run - prev_t);
  for (auto &f : rep.fraction_per_minimum) f /= T;
  rep.fraction_unlabeled /= T;
  for (int w : widest) rep.fraction_widest += rep.fraction_per_minimum[static_cast<std::size_t>(w)];

  if (!tr.ball_steps.empty() && std::abs(tr.ball_eps - eps) < 1e-12) {
    rep.exact_ball_fraction.resize(K);
    for (std::size_t i = 0; i < K; ++i)
      rep.exact_ball_fraction[i] = static_cast<double>(tr.ball_steps[i]) / T;
  }
  if (lambda_star_value > 0.0) rep.horizon_scaled = T * lambda_star_value;
  return rep;
}

// ---- empirical transition kernels ----------------------------------------------

struct KernelReport {
  std::vector<std::vector<long long>> counts; // marker transitions i -> j
  std::vector<std::vector<double>> p_hat;     // row-normalized (rows with events)
  std::vector<double> mean_sojourn_scaled;    // per field, in lambda* units
  std::vector<long long> row_events;
};

inline constexpr int kMinKernelEvents = 20;

// Row-normalized marker transition frequencies pooled over a batch, plus mean
// scaled sojourns. Rows that were visited but hold fewer than min_events
// departures are an error: their frequencies would be statistically illegible.
inline KernelReport empirical_kernel(const std::vector<Trajectory> &batch, const Landscape &ls,
                                     double lambda_star_value = 1.0,
                                     int min_events = kMinKernelEvents) {
  const std::size_t K = static_cast<std::size_t>(ls.n_minima());
  KernelReport rep;
  rep.counts.assign(K, std::vector<long long>(K, 0));
  rep.row_events.assign(K, 0);
  rep.mean_sojourn_scaled.assign(K, 0.0);
  std::vector<long long> sojourn_steps(K, 0), sojourn_n(K, 0);
  std::vector<bool> visited(K, false);

  for (const auto &tr : batch) {
    for (std::size_t e = 0; e < tr.transitions.size(); ++e) {
      const auto [t, f] = tr.transitions[e];
      visited[static_cast<std::size_t>(f)] = true;
      if (e + 1 < tr.transitions.size()) {
        const auto [t2, f2] = tr.transitions[e + 1];
        ++rep.counts[static_cast<std::size_t>(f)][static_cast<std::size_t>(f2)];
        ++rep.row_events[static_cast<std::size_t>(f)];
        sojourn_steps[static_cast<std::size_t>(f)] += t2 - t;
        ++sojourn_n[static_cast<std::size_t>(f)];
      }
    }
  }
  bool any = false;
  for (std::size_t i = 0; i < K; ++i) any = any || rep.row_events[i] > 0;
  for (std::size_t i = 0; i < K; ++i) {
    if (visited[i] && rep.row_events[i] < min_events)
      throw InsufficientEventsError("empirical_kernel: field " + std::to_string(i + 1) +
                                    " has only " + std::to_string(rep.row_events[i]) +
                                    " departures");
  }
  if (!any)
    throw InsufficientEventsError("empirical_kernel: no transition events in the batch");

  rep.p_hat.assign(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    if (rep.row_events[i] == 0) continue;
    for (std::size_t j = 0; j < K; ++j)
      rep.p_hat[i][j] = static_cast<double>(rep.counts[i][j]) /
                        static_cast<double>(rep.row_events[i]);
    if (sojourn_n[i] > 0)
      rep.mean_sojourn_scaled[i] = lambda_star_value * static_cast<double>(sojourn_steps[i]) /
                                   static_cast<double>(sojourn_n[i]);
  }
  return rep;
}

// Kernel of the marker subsequence restricted to a state subset: intermediate
// visits to other minima are censored, so a path m2 -> m1 -> m2 contributes a
// self-transition of the restricted chain. This is the object the
// theta-composed embedded kernel of the limit chain describes.
inline KernelReport restricted_kernel(const std::vector<Trajectory> &batch,
                                      const Landscape &ls, const std::vector<int> &subset) {
  const std::size_t K = static_cast<std::size_t>(ls.n_minima());
  std::vector<bool> keep(K, false);
  for (int s : subset) keep[static_cast<std::size_t>(s)] = true;
  KernelReport rep;
  rep.counts.assign(K, std::vector<long long>(K, 0));
  rep.row_events.assign(K, 0);
  rep.mean_sojourn_scaled.assign(K, 0.0);
  for (const auto &tr : batch) {
    int prev = -1;
    for (const auto &[t, f] : tr.transitions) {
      (void)t;
      if (!keep[static_cast<std::size_t>(f)]) continue;
      if (prev >= 0) {
        ++rep.counts[static_cast<std::size_t>(prev)][static_cast<std::size_t>(f)];
        ++rep.row_events[static_cast<std::size_t>(prev)];
      }
      prev = f;
    }
  }
  rep.p_hat.assign(K, std::vector<double>(K, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    if (rep.row_events[i] == 0) continue;
    for (std::size_t j = 0; j < K; ++j)
      rep.p_hat[i][j] = static_cast<double>(rep.counts[i][j]) /
                        static_cast<double>(rep.row_events[i]);
  }
  return rep;
}

// ---- exit-time studies ----------------------------------------------------------

struct ExitStudy {
  std::vector<double> etas;
  std::vector<double> mean_steps;
  std::vector<long long> excluded; // HorizonExceeded replicas per eta
  std::vector<std::vector<double>> raw_steps;
  std::vector<double> scaled_times; // C * eta * lambda^J * tau at the smallest eta
  double calibration_c = 0.0;       // reciprocal empirical mean at the smallest eta
  double ks_statistic = 0.0;
  double ks_critical = 0.0; // parametric-bootstrap critical value
  double fitted_exponent = 0.0, fitted_lo = 0.0, fitted_hi = 0.0;
  int j_width = 0;
};

// one-sample KS distance against Exp(1)
inline double ks_exp_statistic(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = 1.0 - std::exp(-x[i]);
    d = std::max(d, std::abs(F - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(F - static_cast<double>(i) / n));
  }
  return d;
}

// Critical value for the KS test when the rate is estimated from the sample:
// parametric bootstrap of mean-normalized Exp(1) samples (Lilliefors-style).
inline double bootstrap_ks_critical(std::size_t n, double level, int resamples = 1000,
                                    std::uint64_t seed = 0xB0075ULL) {
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  Rng rng(seed);
  std::vector<double> x(n);
  for (int r = 0; r < resamples; ++r) {
    double mean = 0.0;
    for (auto &v : x) {
      v = rng.exponential(1.0);
      mean += v;
    }
    mean /= static_cast<double>(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / mean;
    stats[static_cast<std::size_t>(r)] = ks_exp_statistic(std::move(y));
  }
  std::sort(stats.begin(), stats.end());
  const auto idx = static_cast<std::size_t>(std::ceil((1.0 - level) * resamples)) - 1;
  return stats[std::min(idx, stats.size() - 1)];
}

struct OlsFit {
  double slope = 0.0, intercept = 0.0, slope_se = 0.0;
};

inline OlsFit ols(const std::vector<double> &x, const std::vector<double> &y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += sq(y[i] - f.intercept - f.slope * x[i]);
  if (n > 2) f.slope_se = std::sqrt(ss / (n - 2) / sxx);
  return f;
}

// First-exit replicas over an eta grid: scaling-exponent fit of log mean exit
// steps against log(1/eta), plus the exponential-law check of the scaled exit
// times at the smallest eta.
inline ExitStudy exit_study(const Landscape &ls, const NoiseModel &model, int field,
                            double b, std::vector<double> eta_grid, int replicas,
                            const RunConfig &proto, int workers = 0,
                            double ks_level = 0.01) {
  if (replicas < 2) throw ConfigError("exit_study: need at least 2 replicas");
  std::sort(eta_grid.begin(), eta_grid.end(), std::greater<double>());
  ExitStudy st;
  st.etas = eta_grid;
  st.j_width = jump_width(ls, field, b);

  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  for (std::size_t e = 0; e < eta_grid.size(); ++e) {
    const double eta = eta_grid[e];
    std::vector<double> taus;
    long long excluded = 0;
    std::vector<std::thread> pool;
    std::mutex mu;
    std::size_t next = 0;
    std::vector<double> results(static_cast<std::size_t>(replicas), -1.0);
    for (int w = 0; w < std::max(1, std::min(workers, replicas)); ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t r;
          {
            std::lock_guard<std::mutex> lk(mu);
            if (next >= results.size()) return;
            r = next++;
          }
          RunConfig cfg = proto;
          cfg.eta = eta;
          cfg.b = b;
          cfg.stream = 1000 * (e + 1) + r;
          if (cfg.x0.empty()) cfg.x0 = ls.minimum(field);
          try {
            results[r] = static_cast<double>(first_exit_time(ls, model, cfg, field).steps);
          } catch (const HorizonExceededError &) {
            results[r] = -1.0;
          }
        }
      });
    }
    for (auto &t : pool) t.join();
    for (double v : results) {
      if (v < 0)
        ++excluded;
      else
        taus.push_back(v);
    }
    if (taus.empty()) throw HorizonExceededError("exit_study: all replicas hit the horizon");
    double mean = 0.0;
    for (double v : taus) mean += v;
    mean /= static_cast<double>(taus.size());
    st.mean_steps.push_back(mean);
    st.excluded.push_back(excluded);
    st.raw_steps.push_back(std::move(taus));
  }

  // scaled times at the smallest eta (grid is sorted descending)
  const double eta_min = st.etas.back();
  const double lam = lambda_scale(model, eta_min);
  const double scale = eta_min * std::pow(lam, st.j_width);
  const auto &raw = st.raw_steps.back();
  double mean_scaled = 0.0;
  for (double v : raw) mean_scaled += v * scale;
  mean_scaled /= static_cast<double>(raw.size());
  st.calibration_c = 1.0 / mean_scaled;
  for (double v : raw) st.scaled_times.push_back(st.calibration_c * scale * v);
  st.ks_statistic = ks_exp_statistic(st.scaled_times);
  st.ks_critical = bootstrap_ks_critical(raw.size(), ks_level);

  std::vector<double> lx, ly;
  for (std::size_t e = 0; e < st.etas.size(); ++e) {
    lx.push_back(std::log(1.0 / st.etas[e]));
    ly.push_back(std::log(st.mean_steps[e]));
  }
  const OlsFit fit = ols(lx, ly);
  st.fitted_exponent = fit.slope;
  st.fitted_lo = fit.slope - 2.0 * fit.slope_se;
  st.fitted_hi = fit.slope + 2.0 * fit.slope_se;
  return st;
}

// ---- time-scaled path evaluator --------------------------------------------------

// t -> X_{floor(t / lambda*)} from the recorded (thinned) states; unrecorded
// steps resolve to the latest recorded state at or before the requested step.
inline std::function<Vec(double)> time_scaled_path(const Trajectory &tr, double lambda_star_value) {
  if (lambda_star_value <= 0.0) throw ConfigError("time_scaled_path: lambda* must be positive");
  return [&tr, lambda_star_value](double t) {
    const double raw = std::floor(t / lambda_star_value);
    if (raw < 0.0 || raw > static_cast<double>(tr.steps_run))
      throw OutOfHorizonError("time_scaled_path: t outside the recorded horizon");
    const long long step = static_cast<long long>(raw);
    auto it = std::upper_bound(tr.times.begin(), tr.times.end(), step);
    const std::size_t idx = static_cast<std::size_t>(it - tr.times.begin()) - 1;
    return tr.states[idx];
  };
}

} // namespace htmeta

#endif
