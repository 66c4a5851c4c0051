#ifndef HTMETA_LIMIT_CHAIN_HPP
#define HTMETA_LIMIT_CHAIN_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

#include "htmeta/common.hpp"
#include "htmeta/dynamics.hpp"
#include "htmeta/geometry.hpp"
#include "htmeta/landscape.hpp"
#include "htmeta/noise.hpp"

namespace htmeta {

// ---- perturbed flow maps ------------------------------------------------------

struct PerturbedFlowSpec {
  Vec x0;
  std::vector<Vec> jumps;    // k jump vectors w_j
  std::vector<double> times; // strictly increasing, 0 < t_1 < ... < t_k <= horizon
  double b = kInf;
  double horizon = 0.0;
  double dt = 1e-3;
};

namespace detail {

inline void check_spec(const PerturbedFlowSpec &spec) {
  if (spec.jumps.size() != spec.times.size())
    throw ConfigError("perturbed_flow: jumps/times size mismatch");
  double prev = 0.0;
  for (double t : spec.times) {
    if (!(t > prev)) throw ConfigError("perturbed_flow: jump times must be strictly increasing");
    prev = t;
  }
}

inline Vec apply_jump(const Landscape &ls, const Vec &x, const Vec &w, double b) {
  if (ls.dim == 1) {
    const double d = clip1(ls.sigma_at1(x[0]) * w[0], b);
    return Vec{x[0] + d};
  }
  Vec sw(x.size(), 0.0);
  if (ls.diffusion) {
    const auto sig = ls.diffusion(x);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) sw[i] += sig[i][j] * w[j];
  } else {
    sw = w;
  }
  sw = clip(sw, b);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + sw[i];
  return out;
}

inline Vec flow_for(const Landscape &ls, Vec x, double duration, double dt) {
  double t = 0.0;
  while (t + dt <= duration + 1e-15) {
    x = (ls.dim == 1) ? Vec{rk4_step1(ls.grad1, x[0], dt)} : rk4_stepN(ls.grad, x, dt);
    if (!all_finite(x)) throw NonFiniteError("perturbed_flow: non-finite state");
    t += dt;
  }
  const double rem = duration - t;
  if (rem > 1e-15)
    x = (ls.dim == 1) ? Vec{rk4_step1(ls.grad1, x[0], rem)} : rk4_stepN(ls.grad, x, rem);
  return x;
}

} // namespace detail

// h^{(k)|b}: ODE path with clipped jumps applied at the given times. Returns an
// evaluator over [0, horizon]; k = 0 degenerates to the gradient flow.
inline std::function<Vec(double)> perturbed_flow(const Landscape &ls,
                                                 const PerturbedFlowSpec &spec) {
  detail::check_spec(spec);
  // precompute states right after each jump (and at 0)
  std::vector<Vec> knots{spec.x0};
  std::vector<double> knot_t{0.0};
  Vec x = spec.x0;
  double t = 0.0;
  for (std::size_t j = 0; j < spec.jumps.size(); ++j) {
    x = detail::flow_for(ls, x, spec.times[j] - t, spec.dt);
    t = spec.times[j];
    x = detail::apply_jump(ls, x, spec.jumps[j], spec.b);
    knots.push_back(x);
    knot_t.push_back(t);
  }
  return [ls, knots, knot_t, dt = spec.dt](double s) {
    std::size_t i = 0;
    while (i + 1 < knot_t.size() && knot_t[i + 1] <= s) ++i;
    return detail::flow_for(ls, knots[i], s - knot_t[i], dt);
  };
}

// g-check^{(k)|b}: location right after the last perturbation (x0 for k = 0).
inline Vec flow_endpoint(const Landscape &ls, const PerturbedFlowSpec &spec) {
  detail::check_spec(spec);
  if (spec.jumps.empty()) return spec.x0;
  Vec x = spec.x0;
  double t = 0.0;
  for (std::size_t j = 0; j < spec.jumps.size(); ++j) {
    x = detail::flow_for(ls, x, spec.times[j] - t, spec.dt);
    t = spec.times[j];
    x = detail::apply_jump(ls, x, spec.jumps[j], spec.b);
  }
  return x;
}

// ---- jump-measure Monte Carlo -------------------------------------------------

struct McSpec {
  long long samples = 1'000'000;
  double rel_tol = 0.05;      // warn when relative SE exceeds this
  double w_min_frac = 0.05;   // magnitude floor as a fraction of b
  bool auto_w_min = true;     // raise the floor to 0.9 * (geometric minimum jump)
  double t_gap_mult = 50.0;   // gap-proposal horizon in flow-relaxation times
  int blocks = 64;            // deterministic parallel reduction granularity
  std::uint64_t seed = 0x9e3779b9ULL;
  bool force_mc = false;      // bypass the k = 1 closed form
  double boundary_band = 1e-3;
  double flow_dt = 1e-3;
  double flow_tol = 1e-6;
  int workers = 0;
};

struct MassTarget {
  enum class Kind { Field, OwnComplement, Interval, BoundaryBand } kind = Kind::Field;
  int field = 0;        // for Field
  double lo = 0.0, hi = 0.0; // for Interval (open)
  static MassTarget field_of(int j) { return {Kind::Field, j, 0.0, 0.0}; }
  static MassTarget own_complement() { return {Kind::OwnComplement, 0, 0.0, 0.0}; }
  static MassTarget interval(double lo, double hi) { return {Kind::Interval, 0, lo, hi}; }
  static MassTarget boundary_band() { return {Kind::BoundaryBand, 0, 0.0, 0.0}; }
};

struct MassEstimate {
  double value = 0.0;
  double se = 0.0;
  double neglected_bound = 0.0; // analytic bound on mass excluded by the floors
  bool se_warning = false;      // relative SE exceeded rel_tol
  bool analytic = false;
  double max_endpoint_dist = 0.0; // max |endpoint - m_i| among contributing samples
};

namespace detail {

// One-sided flow table: positions of the flow started at the outermost
// in-field point, sampled on the dt grid until within flow_tol of the minimum.
struct FlowTable1 {
  double m = 0.0;
  double dt = 1e-3;
  std::vector<double> pos; // |pos - m| strictly decreasing
  double duration() const { return static_cast<double>(pos.size()) * dt; }
  // position after flowing for time g starting from p (p on this side of m)
  double flow(double p, double g) const {
    const double d = std::abs(p - m);
    // binary search for the first index with |pos - m| <= d
    std::size_t lo = 0, hi = pos.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (std::abs(pos[mid] - m) <= d)
        hi = mid;
      else
        lo = mid + 1;
    }
    const std::size_t offset = static_cast<std::size_t>(g / dt);
    const std::size_t idx = lo + offset;
    if (idx >= pos.size()) return m;
    return pos[idx];
  }
};

inline FlowTable1 build_flow_table(const Landscape &ls, double m, double start,
                                   double dt, double tol, double t_cap = 1000.0) {
  FlowTable1 tab;
  tab.m = m;
  tab.dt = dt;
  double x = start;
  double t = 0.0;
  tab.pos.push_back(x);
  while (std::abs(x - m) > tol && t < t_cap) {
    x = rk4_step1(ls.grad1, x, dt);
    t += dt;
    tab.pos.push_back(x);
  }
  return tab;
}

struct Interval {
  double lo = 0.0, hi = 0.0; // open interval
  bool contains(double x) const { return x > lo && x < hi; }
};

inline Interval field_interval(const Landscape &ls, int j) {
  const int K = ls.n_minima();
  const double lo = (j == 0) ? -kInf : ls.boundaries1[static_cast<std::size_t>(j - 1)];
  const double hi = (j == K - 1) ? kInf : ls.boundaries1[static_cast<std::size_t>(j)];
  return {lo, hi};
}

// nu_alpha interval mass for one clipped jump from m (1-D, constant sigma):
// the clip maps all magnitudes above b/sigma to the atom at displacement b.
inline double one_jump_interval_mass(double m, double sigma, double b, double alpha,
                                     const Interval &target) {
  double total = 0.0;
  for (int sgn : {1, -1}) {
    // displacement delta in (0, b]; endpoint m + sgn * delta
    double a1, a2; // required delta range from the target
    if (sgn > 0) {
      a1 = target.lo - m;
      a2 = target.hi - m;
    } else {
      a1 = m - target.hi;
      a2 = m - target.lo;
    }
    if (a2 <= 0.0) continue;
    if (a1 <= 0.0)
      throw UnsupportedError("one_jump_interval_mass: target touches the source point");
    if (a1 >= a2) continue;
    const double cont_hi = std::min(a2, b);
    if (a1 < cont_hi && a1 > 0.0)
      total += 0.5 * (std::pow(a1 / sigma, -alpha) - std::pow(cont_hi / sigma, -alpha));
    const double atom_pt = m + sgn * b;
    if (target.contains(atom_pt)) total += 0.5 * std::pow(b / sigma, -alpha);
  }
  return total;
}

// exit mass through one side at distance a (ray), one clipped jump
inline double one_jump_ray_mass(double a, double sigma, double b, double alpha) {
  if (std::isinf(a) || a > b) return 0.0;
  return 0.5 * std::pow(a / sigma, -alpha);
}

struct McContext {
  const Landscape *ls = nullptr;
  int i = 0;
  int k = 1;
  double b = 0.0;
  double alpha = 0.0;
  double m = 0.0;
  Interval own;
  double sigma_max = 1.0;
  double w_min = 0.0;
  double gap_rate = 1.0;
  double t_gap = 0.0;
  FlowTable1 left, right;
  double neglected = 0.0;
};

// target_dist: distance from m_i to the target set. Since |endpoint - m_i| is
// at most the sum of the k clipped jump sizes, any contributing path has every
// jump displacement >= target_dist - (k-1) b; the magnitude floor sits safely
// below that, so the restriction excludes no mass.
inline McContext make_mc_context(const Landscape &ls, const NoiseModel &model, int i,
                                 double b, int k, const McSpec &mc, double target_dist) {
  if (!model.heavy_tailed())
    throw UnsupportedError("jump measures are defined for heavy-tailed noise");
  McContext cx;
  cx.ls = &ls;
  cx.i = i;
  cx.k = k;
  cx.b = b;
  cx.alpha = model.alpha;
  cx.m = ls.minima1[static_cast<std::size_t>(i)];
  cx.own = field_interval(ls, i);
  const double r = effective_width(ls, i);

  // the farthest in-field point an intermediate state can occupy
  const double reach_in = std::min((k - 1) * b, r * (1.0 - 1e-9));
  cx.sigma_max = 1.0;
  if (ls.sigma1) {
    for (int s = -32; s <= 32; ++s) {
      const double x = cx.m + reach_in * s / 32.0;
      cx.sigma_max = std::max(cx.sigma_max, std::abs(ls.sigma1(x)));
    }
  }
  const double d_min = target_dist - (k - 1) * b;
  if (d_min <= mc.flow_tol)
    throw DegenerateGeometryError(
        "jump_measure_mass: the time integral diverges (target reachable from the "
        "fixed point with fewer jumps)");
  const double thr = d_min / cx.sigma_max;
  if (mc.auto_w_min) {
    cx.w_min = 0.9 * thr;
    cx.neglected = 0.0;
  } else {
    cx.w_min = mc.w_min_frac * b;
    if (cx.w_min > thr)
      throw ConfigError("jump_measure_mass: magnitude floor exceeds the geometric "
                        "minimum jump; lower w_min_frac or use auto_w_min");
    cx.neglected = 0.0;
  }

  if (k >= 2) {
    const double startL = cx.m - reach_in;
    const double startR = cx.m + reach_in;
    cx.left = build_flow_table(ls, cx.m, startL, mc.flow_dt, mc.flow_tol);
    cx.right = build_flow_table(ls, cx.m, startR, mc.flow_dt, mc.flow_tol);
    const double t_relax = std::max(cx.left.duration(), cx.right.duration());
    cx.gap_rate = 1.0 / t_relax;
    cx.t_gap = mc.t_gap_mult * t_relax;
  }
  return cx;
}

inline double flow_from(const McContext &cx, double p, double g) {
  if (p >= cx.m) return cx.right.flow(p, g);
  return cx.left.flow(p, g);
}

} // namespace detail

// Estimates C-check^{(k)|b}(target; m_i). k = 1 with constant sigma in 1-D uses
// the closed-form nu_alpha interval masses; k >= 2 uses importance sampling
// with Pareto-restricted magnitudes and truncated-exponential gap proposals.
inline MassEstimate jump_measure_mass(const Landscape &ls, const NoiseModel &model, int i,
                                      const MassTarget &target, double b, int k,
                                      const McSpec &mc = {}) {
  if (ls.dim != 1)
    throw UnsupportedError("jump_measure_mass: implemented for 1-D landscapes");
  if (k < 1) throw ConfigError("jump_measure_mass: k >= 1 required");

  const double m = ls.minima1[static_cast<std::size_t>(i)];
  const double sigma_i = ls.sigma_at1(m);
  const double alpha = model.alpha;
  const auto own = detail::field_interval(ls, i);

  auto target_min_dist = [&]() {
    switch (target.kind) {
    case MassTarget::Kind::Field: {
      const auto iv = detail::field_interval(ls, target.field);
      if (iv.contains(m)) return 0.0;
      return std::min(std::abs(m - iv.lo), std::abs(m - iv.hi));
    }
    case MassTarget::Kind::Interval: {
      const detail::Interval iv{target.lo, target.hi};
      if (iv.contains(m)) return 0.0;
      return std::min(std::abs(m - iv.lo), std::abs(m - iv.hi));
    }
    case MassTarget::Kind::OwnComplement:
      return effective_width(ls, i);
    case MassTarget::Kind::BoundaryBand: {
      double d = kInf;
      for (double s : ls.boundaries1) d = std::min(d, std::abs(m - s));
      return std::max(0.0, d - mc.boundary_band);
    }
    }
    return 0.0;
  };
  // support containment: targets beyond k*b are unreachable
  const double dist = target_min_dist();
  if (dist > k * b + 1e-12) return {0.0, 0.0, 0.0, false, true, 0.0};

  // widths: k below J_b(i) cannot leave the field
  const int j_width = jump_width(ls, i, b);
  if (target.kind == MassTarget::Kind::OwnComplement && k < j_width)
    return {0.0, 0.0, 0.0, false, true, 0.0};

  if (k == 1 && ls.sigma_constant && !mc.force_mc) {
    MassEstimate est;
    est.analytic = true;
    switch (target.kind) {
    case MassTarget::Kind::Field:
      est.value = detail::one_jump_interval_mass(m, sigma_i, b, alpha,
                                                 detail::field_interval(ls, target.field));
      break;
    case MassTarget::Kind::Interval:
      est.value = detail::one_jump_interval_mass(m, sigma_i, b, alpha,
                                                 {target.lo, target.hi});
      break;
    case MassTarget::Kind::OwnComplement:
      est.value = detail::one_jump_ray_mass(m - own.lo, sigma_i, b, alpha) +
                  detail::one_jump_ray_mass(own.hi - m, sigma_i, b, alpha);
      break;
    case MassTarget::Kind::BoundaryBand: {
      est.value = 0.0;
      for (double s : ls.boundaries1)
        est.value += detail::one_jump_interval_mass(
            m, sigma_i, b, alpha, {s - mc.boundary_band, s + mc.boundary_band});
      break;
    }
    }
    return est;
  }

  auto cx = detail::make_mc_context(ls, model, i, b, k, mc, dist);
  auto in_target = [&](double x) {
    switch (target.kind) {
    case MassTarget::Kind::Field:
      return detail::field_interval(ls, target.field).contains(x);
    case MassTarget::Kind::Interval:
      return x > target.lo && x < target.hi;
    case MassTarget::Kind::OwnComplement:
      return !(x > own.lo && x < own.hi);
    case MassTarget::Kind::BoundaryBand:
      for (double s : ls.boundaries1)
        if (std::abs(x - s) <= mc.boundary_band) return true;
      return false;
    }
    return false;
  };

  const long long N = mc.samples;
  const int blocks = std::max(1, mc.blocks);
  const long long per_block = (N + blocks - 1) / blocks;
  std::vector<double> bsum(static_cast<std::size_t>(blocks), 0.0);
  std::vector<double> bsum2(static_cast<std::size_t>(blocks), 0.0);
  std::vector<double> bmax(static_cast<std::size_t>(blocks), 0.0);

  const double jump_mass = std::pow(cx.w_min, -alpha); // restricted nu-tilde total per jump
  const double gap_norm = (k >= 2) ? (1.0 - std::exp(-cx.gap_rate * cx.t_gap)) : 1.0;

  auto run_block = [&](int blk) {
    Rng rng(mc.seed, static_cast<std::uint64_t>(blk) + 1);
    double s = 0.0, s2 = 0.0, mx = 0.0;
    for (long long n = 0; n < per_block; ++n) {
      double pos = cx.m;
      double w = 1.0;
      for (int j = 0; j < k; ++j) {
        if (j >= 1) {
          const double u = rng.uniform();
          const double g = -std::log(1.0 - u * gap_norm) / cx.gap_rate;
          w *= gap_norm / (cx.gap_rate * std::exp(-cx.gap_rate * g));
          pos = detail::flow_from(cx, pos, g);
        }
        const double mag = cx.w_min * std::pow(rng.uniform_pos(), -1.0 / alpha);
        const double sgn = rng.coin() ? 1.0 : -1.0;
        pos += sgn * std::min(ls.sigma_at1(pos) * mag, cx.b);
        w *= jump_mass;
      }
      const double contrib = in_target(pos) ? w : 0.0;
      if (contrib > 0.0) mx = std::max(mx, std::abs(pos - cx.m));
      s += contrib;
      s2 += contrib * contrib;
    }
    bsum[static_cast<std::size_t>(blk)] = s;
    bsum2[static_cast<std::size_t>(blk)] = s2;
    bmax[static_cast<std::size_t>(blk)] = mx;
  };

  int workers = mc.workers > 0 ? mc.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, blocks));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int blk = next.fetch_add(1);
        if (blk >= blocks) return;
        run_block(blk);
      }
    });
  for (auto &t : pool) t.join();

  const double total_n = static_cast<double>(per_block) * blocks;
  const double sum = std::accumulate(bsum.begin(), bsum.end(), 0.0);
  const double sum2 = std::accumulate(bsum2.begin(), bsum2.end(), 0.0);
  MassEstimate est;
  est.value = sum / total_n;
  const double var = std::max(0.0, sum2 / total_n - est.value * est.value);
  est.se = std::sqrt(var / total_n);
  est.neglected_bound = cx.neglected;
  est.max_endpoint_dist = *std::max_element(bmax.begin(), bmax.end());
  est.se_warning = est.value > 0.0 && est.se / est.value > mc.rel_tol;
  return est;
}

// ---- rate table ----------------------------------------------------------------

struct RateTable {
  std::vector<std::vector<double>> q;    // q_b(i,j), zero diagonal
  std::vector<std::vector<double>> se;   // standard errors (0 for analytic entries)
  std::vector<double> q_diag;            // q_b(i)
  std::vector<double> q_diag_se;
  std::vector<double> boundary_mass;     // band mass per source, should be ~0
  std::vector<int> j_b;
  double b = 0.0;
};

// q_b(i,j) = C-check^{(J_b(i))|b}(I_j; m_i); all targets of a source share one
// sampling pass so the row-sum identity is inherited up to boundary-band mass.
inline RateTable rate_table(const Landscape &ls, const NoiseModel &model, double b,
                            const WidthReport &wr, const McSpec &mc = {}) {
  if (ls.dim != 1) throw UnsupportedError("rate_table: 1-D landscapes only");
  const int K = ls.n_minima();
  RateTable rt;
  rt.b = b;
  rt.j_b = wr.j_b;
  rt.q.assign(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(K), 0.0));
  rt.se = rt.q;
  rt.q_diag.assign(static_cast<std::size_t>(K), 0.0);
  rt.q_diag_se.assign(static_cast<std::size_t>(K), 0.0);
  rt.boundary_mass.assign(static_cast<std::size_t>(K), 0.0);

  for (int i = 0; i < K; ++i) {
    const int k = wr.j_b[static_cast<std::size_t>(i)];
    McSpec mci = mc;
    mci.seed = mc.seed + static_cast<std::uint64_t>(i) * 7919ULL;
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      auto est = jump_measure_mass(ls, model, i, MassTarget::field_of(j), b, k, mci);
      rt.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = est.value;
      rt.se[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = est.se;
    }
    auto own = jump_measure_mass(ls, model, i, MassTarget::own_complement(), b, k, mci);
    rt.q_diag[static_cast<std::size_t>(i)] = own.value;
    rt.q_diag_se[static_cast<std::size_t>(i)] = own.se;
    auto band = jump_measure_mass(ls, model, i, MassTarget::boundary_band(), b, k, mci);
    rt.boundary_mass[static_cast<std::size_t>(i)] = band.value;
    if (band.value > mc.rel_tol * own.value)
      throw DegenerateGeometryError("rate_table: boundary band carries mass from source " +
                                    std::to_string(i + 1));
    double row = 0.0, row_se2 = own.se * own.se;
    for (int j = 0; j < K; ++j) {
      if (j == i) continue;
      row += rt.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      row_se2 += sq(rt.se[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    const double slack = mc.rel_tol * own.value + 3.0 * std::sqrt(row_se2);
    if (std::abs(row - own.value) > slack)
      throw RateSumMismatchError("rate_table: row " + std::to_string(i + 1) +
                                 " sums to " + std::to_string(row) + " vs q(i) = " +
                                 std::to_string(own.value));
    if (!(own.value > 0.0))
      throw DegenerateGeometryError("rate_table: q_b(i) must be positive");
  }
  return rt;
}

// ---- absorption probabilities and the limiting CTMC ----------------------------

namespace detail {

// dense Gaussian elimination with partial pivoting; A is n x n row-major
inline std::vector<double> solve_linear(std::vector<double> A, std::vector<double> rhs, int n) {
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[static_cast<std::size_t>(r * n + c)]) >
          std::abs(A[static_cast<std::size_t>(piv * n + c)]))
        piv = r;
    if (std::abs(A[static_cast<std::size_t>(piv * n + c)]) < 1e-14)
      throw SingularSystemError("solve_linear: singular system");
    if (piv != c) {
      for (int j = 0; j < n; ++j)
        std::swap(A[static_cast<std::size_t>(c * n + j)], A[static_cast<std::size_t>(piv * n + j)]);
      std::swap(rhs[static_cast<std::size_t>(c)], rhs[static_cast<std::size_t>(piv)]);
    }
    for (int r = c + 1; r < n; ++r) {
      const double f = A[static_cast<std::size_t>(r * n + c)] / A[static_cast<std::size_t>(c * n + c)];
      if (f == 0.0) continue;
      for (int j = c; j < n; ++j)
        A[static_cast<std::size_t>(r * n + j)] -= f * A[static_cast<std::size_t>(c * n + j)];
      rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(c)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = rhs[static_cast<std::size_t>(r)];
    for (int j = r + 1; j < n; ++j)
      s -= A[static_cast<std::size_t>(r * n + j)] * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(r)] = s / A[static_cast<std::size_t>(r * n + r)];
  }
  return x;
}

} // namespace detail

// theta(j | i): absorption probabilities of the embedded chain q(i,.)/q(i) with
// the widest minima absorbing. Rows are indexed by all K minima, columns by
// the widest set.
inline std::vector<std::vector<double>> absorption_probs(const RateTable &rt,
                                                         const std::vector<int> &widest) {
  const int K = static_cast<int>(rt.q_diag.size());
  const int W = static_cast<int>(widest.size());
  if (W == 0) throw ConfigError("absorption_probs: empty widest set");
  std::vector<bool> is_w(static_cast<std::size_t>(K), false);
  for (int w : widest) is_w[static_cast<std::size_t>(w)] = true;
  std::vector<int> transient;
  for (int i = 0; i < K; ++i)
    if (!is_w[static_cast<std::size_t>(i)]) transient.push_back(i);
  const int T = static_cast<int>(transient.size());

  std::vector<std::vector<double>> theta(static_cast<std::size_t>(K),
                                         std::vector<double>(static_cast<std::size_t>(W), 0.0));
  for (int w = 0; w < W; ++w)
    theta[static_cast<std::size_t>(widest[static_cast<std::size_t>(w)])]
         [static_cast<std::size_t>(w)] = 1.0;
  if (T == 0) return theta;

  for (int i = 0; i < T; ++i)
    if (!(rt.q_diag[static_cast<std::size_t>(transient[static_cast<std::size_t>(i)])] > 0.0))
      throw SingularSystemError("absorption_probs: transient state with zero exit rate");

  // (I - P_TT) X = P_TW, solved column by column
  std::vector<double> A(static_cast<std::size_t>(T * T), 0.0);
  for (int r = 0; r < T; ++r) {
    const int i = transient[static_cast<std::size_t>(r)];
    for (int c = 0; c < T; ++c) {
      const int j = transient[static_cast<std::size_t>(c)];
      const double p = rt.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] /
                       rt.q_diag[static_cast<std::size_t>(i)];
      A[static_cast<std::size_t>(r * T + c)] = (r == c ? 1.0 : 0.0) - p;
    }
  }
  for (int w = 0; w < W; ++w) {
    std::vector<double> rhs(static_cast<std::size_t>(T), 0.0);
    for (int r = 0; r < T; ++r) {
      const int i = transient[static_cast<std::size_t>(r)];
      rhs[static_cast<std::size_t>(r)] =
          rt.q[static_cast<std::size_t>(i)]
              [static_cast<std::size_t>(widest[static_cast<std::size_t>(w)])] /
          rt.q_diag[static_cast<std::size_t>(i)];
    }
    auto x = detail::solve_linear(A, rhs, T);
    for (int r = 0; r < T; ++r)
      theta[static_cast<std::size_t>(transient[static_cast<std::size_t>(r)])]
           [static_cast<std::size_t>(w)] = x[static_cast<std::size_t>(r)];
  }
  for (int i = 0; i < K; ++i) {
    double s = 0.0;
    for (int w = 0; w < W; ++w) s += theta[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)];
    if (std::abs(s - 1.0) > 1e-9)
      throw SingularSystemError("absorption_probs: a state cannot reach the widest set");
  }
  return theta;
}

// The limiting Markov jump process over the widest minima.
struct Ctmc {
  std::vector<int> states;          // minima indices (into the landscape)
  std::vector<Vec> points;          // their positions
  std::vector<double> initial_dist; // theta(. | i0)
  std::vector<std::vector<double>> Q;        // generator
  std::vector<std::vector<double>> embedded; // theta-composed kernel, self-jumps allowed
  std::vector<double> hold_rate;             // q_b(i) for i in the widest set
};

inline Ctmc build_ctmc(const RateTable &rt, const std::vector<std::vector<double>> &theta,
                       const std::vector<int> &widest, int i0, const Landscape &ls) {
  const int K = static_cast<int>(rt.q_diag.size());
  const int W = static_cast<int>(widest.size());
  Ctmc c;
  c.states = widest;
  for (int w : widest) c.points.push_back(ls.minimum(w));
  c.initial_dist.assign(static_cast<std::size_t>(W), 0.0);
  for (int w = 0; w < W; ++w)
    c.initial_dist[static_cast<std::size_t>(w)] = theta[static_cast<std::size_t>(i0)]
                                                       [static_cast<std::size_t>(w)];
  c.Q.assign(static_cast<std::size_t>(W), std::vector<double>(static_cast<std::size_t>(W), 0.0));
  c.embedded = c.Q;
  for (int a = 0; a < W; ++a) {
    const int i = widest[static_cast<std::size_t>(a)];
    c.hold_rate.push_back(rt.q_diag[static_cast<std::size_t>(i)]);
    for (int bcol = 0; bcol < W; ++bcol) {
      double q_ab = 0.0;
      for (int jp = 0; jp < K; ++jp) {
        if (jp == i) continue;
        q_ab += rt.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(jp)] *
                theta[static_cast<std::size_t>(jp)][static_cast<std::size_t>(bcol)];
      }
      c.embedded[static_cast<std::size_t>(a)][static_cast<std::size_t>(bcol)] =
          q_ab / rt.q_diag[static_cast<std::size_t>(i)];
      if (bcol != a) c.Q[static_cast<std::size_t>(a)][static_cast<std::size_t>(bcol)] = q_ab;
    }
    double off = 0.0;
    for (int bcol = 0; bcol < W; ++bcol)
      if (bcol != a) off += c.Q[static_cast<std::size_t>(a)][static_cast<std::size_t>(bcol)];
    c.Q[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = -off;
  }
  return c;
}

// ---- jump-process mapping Phi ---------------------------------------------------

struct JumpProcessInput {
  std::vector<double> U; // inter-arrival times, first may be 0
  std::vector<Vec> V;    // destinations
};

// Phi evaluation: V_{J(t)} with J(t) = max{J : sum_{j<=J} U_j <= t}; V_0 is the
// origin. Throws when the supplied finite sequences never pass t.
inline Vec jump_process_eval(const JumpProcessInput &in, double t) {
  if (in.U.size() != in.V.size()) throw ConfigError("jump_process_eval: U/V size mismatch");
  double s = 0.0;
  std::size_t j = 0;
  while (j < in.U.size() && s + in.U[j] <= t) {
    s += in.U[j];
    ++j;
  }
  if (j == in.U.size())
    throw InsufficientInputError("jump_process_eval: partial sums never exceed t");
  if (j == 0) return Vec(in.V.empty() ? 1 : in.V[0].size(), 0.0);
  return in.V[j - 1];
}

struct CtmcRealization {
  JumpProcessInput jumps;
  std::vector<int> state_seq; // widest-set indices parallel to jumps.V
};

// Samples the jump-process representation: holding times are exponential with
// the state's exit rate and destinations follow the theta-composed kernel
// (self-jumps are genuine draws and leave the path unchanged).
inline CtmcRealization simulate_ctmc(const Ctmc &c, double horizon, Rng &rng) {
  const int W = static_cast<int>(c.states.size());
  CtmcRealization out;
  auto draw = [&](const std::vector<double> &p) {
    double u = rng.uniform();
    double acc = 0.0;
    for (int w = 0; w < W; ++w) {
      acc += p[static_cast<std::size_t>(w)];
      if (u < acc) return w;
    }
    return W - 1;
  };
  int s = draw(c.initial_dist);
  out.jumps.U.push_back(0.0);
  out.jumps.V.push_back(c.points[static_cast<std::size_t>(s)]);
  out.state_seq.push_back(s);
  double t = 0.0;
  while (t <= horizon) {
    const double u = rng.exponential(c.hold_rate[static_cast<std::size_t>(s)]);
    const int nxt = draw(c.embedded[static_cast<std::size_t>(s)]);
    out.jumps.U.push_back(u);
    out.jumps.V.push_back(c.points[static_cast<std::size_t>(nxt)]);
    out.state_seq.push_back(nxt);
    t += u;
    s = nxt;
  }
  return out;
}

// stationary distribution of a generator (null space of Q^T), for diagnostics
inline std::vector<double> stationary_dist(const std::vector<std::vector<double>> &Q) {
  const int n = static_cast<int>(Q.size());
  // replace the last balance equation with normalization
  std::vector<double> A(static_cast<std::size_t>(n * n), 0.0), rhs(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int cidx = 0; cidx < n; ++cidx)
      A[static_cast<std::size_t>(r * n + cidx)] =
          Q[static_cast<std::size_t>(cidx)][static_cast<std::size_t>(r)];
  for (int cidx = 0; cidx < n; ++cidx) A[static_cast<std::size_t>((n - 1) * n + cidx)] = 1.0;
  rhs[static_cast<std::size_t>(n - 1)] = 1.0;
  return detail::solve_linear(A, rhs, n);
}

} // namespace htmeta

#endif
