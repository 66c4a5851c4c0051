#ifndef HTMETA_DYNAMICS_HPP
#define HTMETA_DYNAMICS_HPP

#include <algorithm>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <utility>

#include "htmeta/common.hpp"
#include "htmeta/landscape.hpp"
#include "htmeta/noise.hpp"

namespace htmeta {

struct RunConfig {
  double eta = 1e-3;
  double b = 0.5; // clip threshold, kInf for the unclipped recursion
  long long steps = 1000;
  Vec x0;
  Vec box_lo, box_hi; // empty = no projection
  bool project = true; // allows disabling projection with a box present
  std::uint64_t seed = 0;
  std::uint64_t stream = 0; // replica index within a batch
  long long thin = 100;
  double eps_marker = 0.1;
  double occupancy_eps = 0.1; // radius of the exact per-minimum ball counters

  bool has_box() const { return project && !box_lo.empty(); }
};

struct Trajectory {
  std::vector<long long> times;  // recorded step indices (thinned)
  std::vector<Vec> states;       // recorded states
  std::vector<std::pair<long long, int>> transitions; // (step, field) marker events
  std::optional<long long> exited_at;
  Vec exit_point;
  Vec final_state;
  long long steps_run = 0;
  long long clip_count = 0; // steps on which the clip engaged
  std::vector<long long> ball_steps; // exact per-minimum occupancy counters
  double ball_eps = 0.0;
  double eta = 0.0, b = 0.0;
};

// phi_b: rescales to norm at most b, direction preserved; phi_b(0) = 0.
inline double clip1(double w, double b) {
  if (w > b) return b;
  if (w < -b) return -b;
  return w;
}

inline Vec clip(const Vec &w, double b) {
  const double n = norm2(w);
  if (n <= b || n == 0.0) return w;
  Vec out(w.size());
  const double s = b / n;
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = s * w[i];
  return out;
}

// One step of the clipped recursion; projection (if any) is applied after the
// clipped move, as a coordinatewise clamp.
inline Vec sgd_step(const Landscape &ls, const NoiseModel &model, const Vec &x,
                    double b, double eta, Rng &rng, const RunConfig *cfg = nullptr) {
  if (ls.dim == 1) {
    const double g = ls.grad_at1(x[0]);
    if (!std::isfinite(g)) throw NonFiniteError("sgd_step: non-finite gradient");
    const double z = sample1(model, rng);
    double nx = x[0] + clip1(-eta * g + eta * ls.sigma_at1(x[0]) * z, b);
    if (cfg && cfg->has_box()) nx = std::clamp(nx, cfg->box_lo[0], cfg->box_hi[0]);
    return Vec{nx};
  }
  Vec g = ls.grad(x);
  if (!all_finite(g)) throw NonFiniteError("sgd_step: non-finite gradient");
  Vec z = sample(model, rng);
  Vec move(x.size());
  if (ls.diffusion) {
    const auto sig = ls.diffusion(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      double sz = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) sz += sig[i][j] * z[j];
      move[i] = -eta * g[i] + eta * sz;
    }
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) move[i] = -eta * g[i] + eta * z[i];
  }
  move = clip(move, b);
  Vec nx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) nx[i] = x[i] + move[i];
  if (cfg && cfg->has_box())
    for (std::size_t i = 0; i < x.size(); ++i)
      nx[i] = std::clamp(nx[i], cfg->box_lo[i], cfg->box_hi[i]);
  return nx;
}

namespace detail {

// Shared 1-D driver for simulate / killed runs / first exits. The kill region
// is the union of the class fields' open intervals; leaving it ends the run.
struct KillRegion1 {
  bool active = false;
  std::vector<std::pair<double, double>> intervals;
  bool contains(double x) const {
    for (const auto &iv : intervals)
      if (x > iv.first && x < iv.second) return true;
    return false;
  }
};

inline Trajectory simulate1(const Landscape &ls, const NoiseModel &model,
                            const RunConfig &cfg, const KillRegion1 &kill) {
  Trajectory tr;
  tr.eta = cfg.eta;
  tr.b = cfg.b;
  tr.ball_eps = cfg.occupancy_eps;
  const std::size_t K = ls.minima1.size();
  tr.ball_steps.assign(K, 0);

  Rng rng(cfg.seed, cfg.stream);
  double x = cfg.x0[0];
  const double eta = cfg.eta, b = cfg.b;
  const bool boxed = cfg.has_box();
  const double blo = boxed ? cfg.box_lo[0] : -kInf;
  const double bhi = boxed ? cfg.box_hi[0] : kInf;
  const bool lomax = model.kind == NoiseModel::Kind::SymmetricLomax;
  const bool sig1 = !ls.sigma1;
  const double eps = cfg.eps_marker;
  int last_marker = -1;

  tr.times.push_back(0);
  tr.states.push_back(Vec{x});

  for (long long t = 1; t <= cfg.steps; ++t) {
    const double g = ls.grad1(x);
    if (!std::isfinite(g))
      throw NonFiniteError("simulate: non-finite gradient at step " + std::to_string(t));
    double z;
    if (lomax) {
      const double w = rng.lomax(model.alpha);
      z = model.c0 * (rng.coin() ? w : -w);
    } else {
      z = sample1(model, rng);
    }
    const double sig = sig1 ? 1.0 : ls.sigma1(x);
    double move = -eta * g + eta * sig * z;
    if (move > b) {
      move = b;
      ++tr.clip_count;
    } else if (move < -b) {
      move = -b;
      ++tr.clip_count;
    }
    x += move;
    if (boxed) x = std::clamp(x, blo, bhi);
    if (!std::isfinite(x))
      throw NonFiniteError("simulate: non-finite state at step " + std::to_string(t));

    for (std::size_t i = 0; i < K; ++i) {
      if (std::abs(x - ls.minima1[i]) < cfg.occupancy_eps) {
        ++tr.ball_steps[i];
        break; // eps below the minimal gap between minima: balls are disjoint
      }
    }
    if (last_marker < 0 || std::abs(x - ls.minima1[static_cast<std::size_t>(last_marker)]) >= eps) {
      for (std::size_t i = 0; i < K; ++i) {
        if (static_cast<int>(i) != last_marker && std::abs(x - ls.minima1[i]) < eps) {
          tr.transitions.emplace_back(t, static_cast<int>(i));
          last_marker = static_cast<int>(i);
          break;
        }
      }
    }
    if (cfg.thin > 0 && t % cfg.thin == 0) {
      tr.times.push_back(t);
      tr.states.push_back(Vec{x});
    }
    if (kill.active && !kill.contains(x)) {
      tr.exited_at = t;
      tr.exit_point = Vec{x};
      tr.final_state = Vec{x};
      tr.steps_run = t;
      if (tr.times.back() != t) {
        tr.times.push_back(t);
        tr.states.push_back(Vec{x});
      }
      return tr;
    }
  }
  tr.final_state = Vec{x};
  tr.steps_run = cfg.steps;
  return tr;
}

inline KillRegion1 kill_region(const Landscape &ls, const std::set<int> &class_fields) {
  KillRegion1 kr;
  kr.active = true;
  for (int f : class_fields) {
    const double lo = (f == 0) ? -kInf : ls.boundaries1[static_cast<std::size_t>(f - 1)];
    const double hi = (f == static_cast<int>(ls.boundaries1.size()))
                          ? kInf
                          : ls.boundaries1[static_cast<std::size_t>(f)];
    kr.intervals.emplace_back(lo, hi);
  }
  return kr;
}

} // namespace detail

// Runs the clipped recursion for cfg.steps iterations, recording thinned
// states, exact transition-marker events, and exact occupancy counters.
inline Trajectory simulate(const Landscape &ls, const NoiseModel &model, const RunConfig &cfg) {
  if (ls.dim == 1) return detail::simulate1(ls, model, cfg, {});
  // generic dimension: straightforward loop over sgd_step
  Trajectory tr;
  tr.eta = cfg.eta;
  tr.b = cfg.b;
  tr.ball_eps = cfg.occupancy_eps;
  const std::size_t K = ls.minima.size();
  tr.ball_steps.assign(K, 0);
  Rng rng(cfg.seed, cfg.stream);
  Vec x = cfg.x0;
  int last_marker = -1;
  tr.times.push_back(0);
  tr.states.push_back(x);
  for (long long t = 1; t <= cfg.steps; ++t) {
    x = sgd_step(ls, model, x, cfg.b, cfg.eta, rng, &cfg);
    for (std::size_t i = 0; i < K; ++i) {
      if (dist2(x, ls.minima[i]) < cfg.occupancy_eps) {
        ++tr.ball_steps[i];
        break;
      }
    }
    for (std::size_t i = 0; i < K; ++i) {
      if (static_cast<int>(i) != last_marker && dist2(x, ls.minima[i]) < cfg.eps_marker) {
        tr.transitions.emplace_back(t, static_cast<int>(i));
        last_marker = static_cast<int>(i);
        break;
      }
    }
    if (cfg.thin > 0 && t % cfg.thin == 0) {
      tr.times.push_back(t);
      tr.states.push_back(x);
    }
  }
  tr.final_state = x;
  tr.steps_run = cfg.steps;
  return tr;
}

// As simulate, but the run terminates (exited_at set) the first step the
// iterate's field leaves class_fields; boundary points kill as well.
inline Trajectory simulate_killed(const Landscape &ls, const NoiseModel &model,
                                  const RunConfig &cfg, const std::set<int> &class_fields) {
  if (class_fields.empty()) throw ConfigError("simulate_killed: empty class");
  if (ls.dim != 1)
    throw UnsupportedError("simulate_killed: general-d killed runs are not implemented");
  return detail::simulate1(ls, model, cfg, detail::kill_region(ls, class_fields));
}

struct ExitResult {
  long long steps = 0;
  Vec exit_point;
};

// First step at which the iterate leaves I_field (with the projected dynamics
// the box keeps the window bounded). Throws HorizonExceeded when cfg.steps is
// reached without an exit.
inline ExitResult first_exit_time(const Landscape &ls, const NoiseModel &model,
                                  const RunConfig &cfg, int field) {
  Trajectory tr = simulate_killed(ls, model, cfg, {field});
  if (!tr.exited_at)
    throw HorizonExceededError("first_exit_time: no exit within " +
                               std::to_string(cfg.steps) + " steps");
  return {*tr.exited_at, tr.exit_point};
}

// Independent replicas, stream r of the batch drawing from Rng(seed, r).
inline std::vector<Trajectory> simulate_batch(const Landscape &ls, const NoiseModel &model,
                                              const RunConfig &base, int replicas,
                                              int workers = 0) {
  std::vector<Trajectory> out(static_cast<std::size_t>(replicas));
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, replicas));
  std::vector<std::thread> pool;
  std::size_t next = 0;
  std::mutex mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t r;
        {
          std::lock_guard<std::mutex> lk(mu);
          if (next >= out.size()) return;
          r = next++;
        }
        RunConfig cfg = base;
        cfg.stream = r;
        out[r] = simulate(ls, model, cfg);
      }
    });
  }
  for (auto &t : pool) t.join();
  return out;
}

} // namespace htmeta

#endif
