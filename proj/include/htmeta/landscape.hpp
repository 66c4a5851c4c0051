#ifndef HTMETA_LANDSCAPE_HPP
#define HTMETA_LANDSCAPE_HPP

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include "htmeta/common.hpp"

namespace htmeta {

// Multimodal potential with its attraction-field decomposition.
// In one dimension the fields are the open intervals between consecutive
// boundary points (the local maxima of f); minima are stored refined so that
// |f'(m_i)| is numerically zero even when the nominal values are rounded.
struct Landscape {
  int dim = 1;

  std::function<double(double)> potential1; // optional (empty = unavailable)
  std::function<double(double)> grad1;
  std::function<double(double)> sigma1;     // empty = sigma == 1

  std::function<double(const Vec &)> potential;
  std::function<Vec(const Vec &)> grad;
  std::function<std::vector<Vec>(const Vec &)> diffusion; // row-major d x d; empty = identity

  std::vector<double> minima1;     // ascending, size K
  std::vector<double> boundaries1; // ascending, size K-1
  std::vector<Vec> minima;         // size K (equals minima1 boxed when dim == 1)

  bool sigma_constant = true;

  int n_minima() const { return static_cast<int>(dim == 1 ? minima1.size() : minima.size()); }

  double sigma_at1(double x) const { return sigma1 ? sigma1(x) : 1.0; }

  double grad_at1(double x) const { return grad1(x); }

  Vec minimum(int i) const {
    if (dim == 1) return Vec{minima1[static_cast<std::size_t>(i)]};
    return minima[static_cast<std::size_t>(i)];
  }
};

// ---- field classification ---------------------------------------------------

inline constexpr double kBoundaryTol = 1e-9;

// Interval lookup; nullopt means the point lies on (within boundary_tol of) a
// field boundary.
inline std::optional<int> classify_field1(const Landscape &ls, double x,
                                          double boundary_tol = kBoundaryTol) {
  const auto &bd = ls.boundaries1;
  for (double s : bd)
    if (std::abs(x - s) <= boundary_tol) return std::nullopt;
  int i = 0;
  while (i < static_cast<int>(bd.size()) && x > bd[static_cast<std::size_t>(i)]) ++i;
  return i;
}

struct FlowOptions {
  double flow_tol = 1e-6;
  double t_max = 1e4;
  double dt = 1e-3;     // classical RK4, fixed step
  bool record_path = false;
  double record_dt = 0.1;
};

struct FlowResult {
  Vec terminal;
  int terminal_field = -1;
  bool converged = false;
  double time = 0.0;
  std::vector<std::pair<double, Vec>> path; // only when record_path
};

namespace detail {

inline double rk4_step1(const std::function<double(double)> &grad, double x, double dt) {
  const double k1 = -grad(x);
  const double k2 = -grad(x + 0.5 * dt * k1);
  const double k3 = -grad(x + 0.5 * dt * k2);
  const double k4 = -grad(x + dt * k3);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Vec rk4_stepN(const std::function<Vec(const Vec &)> &grad, const Vec &x, double dt) {
  const std::size_t d = x.size();
  Vec k1 = grad(x);
  Vec t(d);
  for (std::size_t i = 0; i < d; ++i) t[i] = x[i] - 0.5 * dt * k1[i];
  Vec k2 = grad(t);
  for (std::size_t i = 0; i < d; ++i) t[i] = x[i] - 0.5 * dt * k2[i];
  Vec k3 = grad(t);
  for (std::size_t i = 0; i < d; ++i) t[i] = x[i] - dt * k3[i];
  Vec k4 = grad(t);
  Vec out(d);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = x[i] - dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

} // namespace detail

// Integrates dy/dt = -grad f(y) until the iterate is within flow_tol of a
// listed minimum or t exceeds t_max (converged = false in that case).
inline FlowResult gradient_flow(const Landscape &ls, const Vec &x0,
                                const FlowOptions &opt = {}) {
  FlowResult res;
  if (ls.dim == 1) {
    double x = x0[0];
    if (!std::isfinite(x)) throw NonFiniteError("gradient_flow: non-finite x0");
    double t = 0.0;
    double next_record = 0.0;
    while (t < opt.t_max) {
      for (std::size_t i = 0; i < ls.minima1.size(); ++i) {
        if (std::abs(x - ls.minima1[i]) <= opt.flow_tol) {
          res.terminal = Vec{x};
          res.terminal_field = static_cast<int>(i);
          res.converged = true;
          res.time = t;
          return res;
        }
      }
      if (opt.record_path && t >= next_record) {
        res.path.emplace_back(t, Vec{x});
        next_record += opt.record_dt;
      }
      x = detail::rk4_step1(ls.grad1, x, opt.dt);
      if (!std::isfinite(x)) throw NonFiniteError("gradient_flow: integrator produced non-finite state");
      t += opt.dt;
    }
    res.terminal = Vec{x};
    res.converged = false;
    res.time = t;
    // report the nearest minimum even without convergence
    double best = kInf;
    for (std::size_t i = 0; i < ls.minima1.size(); ++i) {
      const double d = std::abs(x - ls.minima1[i]);
      if (d < best) {
        best = d;
        res.terminal_field = static_cast<int>(i);
      }
    }
    return res;
  }

  Vec x = x0;
  if (!all_finite(x)) throw NonFiniteError("gradient_flow: non-finite x0");
  double t = 0.0;
  double next_record = 0.0;
  while (t < opt.t_max) {
    for (std::size_t i = 0; i < ls.minima.size(); ++i) {
      if (dist2(x, ls.minima[i]) <= opt.flow_tol) {
        res.terminal = x;
        res.terminal_field = static_cast<int>(i);
        res.converged = true;
        res.time = t;
        return res;
      }
    }
    if (opt.record_path && t >= next_record) {
      res.path.emplace_back(t, x);
      next_record += opt.record_dt;
    }
    x = detail::rk4_stepN(ls.grad, x, opt.dt);
    if (!all_finite(x)) throw NonFiniteError("gradient_flow: integrator produced non-finite state");
    t += opt.dt;
  }
  res.terminal = x;
  res.converged = false;
  res.time = t;
  double best = kInf;
  for (std::size_t i = 0; i < ls.minima.size(); ++i) {
    const double d = dist2(x, ls.minima[i]);
    if (d < best) {
      best = d;
      res.terminal_field = static_cast<int>(i);
    }
  }
  return res;
}

// Field index of x, or nullopt on a boundary. In one dimension this is
// interval lookup; otherwise the basin is identified by following the flow.
inline std::optional<int> classify_field(const Landscape &ls, const Vec &x,
                                         double boundary_tol = kBoundaryTol) {
  if (ls.dim == 1) return classify_field1(ls, x[0], boundary_tol);
  FlowResult fr = gradient_flow(ls, x);
  if (!fr.converged) return std::nullopt;
  return fr.terminal_field;
}

// ---- built-in landscapes ----------------------------------------------------

// Univariate four-well benchmark potential; boundaries at -1.3, 0.2, 0.7 are
// exact zeros of the squared factors, minima are refined numerically.
inline double paper_potential(double x) {
  const double p = (x + 1.6) * sq(x + 1.3) * sq(x - 0.2) * sq(x - 0.7) * (x - 1.6);
  const double t = std::pow(0.05 * std::abs(1.65 - x), 0.6);
  const double a = 1.0 + 1.0 / (0.01 + 4.0 * sq(x - 0.5));
  const double b = 1.0 + 1.0 / (0.1 + 4.0 * sq(x + 1.5));
  const double c = 1.0 - 0.25 * std::exp(-5.0 * sq(x + 0.8));
  return p * t * a * b * c;
}

inline constexpr double kFdStep = 1e-6;

namespace detail {

inline double refine_minimum(const std::function<double(double)> &grad, double lo, double hi) {
  double flo = grad(lo), fhi = grad(hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw ConfigError("refine_minimum: bracket does not straddle a minimum");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = grad(mid);
    if (fm < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline void finish_1d(Landscape &ls) {
  ls.minima.clear();
  for (double m : ls.minima1) ls.minima.push_back(Vec{m});
  if (!ls.grad && ls.grad1) {
    auto g1 = ls.grad1;
    ls.grad = [g1](const Vec &x) { return Vec{g1(x[0])}; };
  }
  if (!ls.potential && ls.potential1) {
    auto p1 = ls.potential1;
    ls.potential = [p1](const Vec &x) { return p1(x[0]); };
  }
}

inline void validate_1d(const Landscape &ls, double grad_tol) {
  if (ls.minima1.size() < 2)
    throw ConfigError("landscape: at least two attraction fields are required (K >= 2)");
  if (ls.boundaries1.size() + 1 != ls.minima1.size())
    throw ConfigError("landscape: need exactly K-1 interior boundaries");
  if (!std::is_sorted(ls.minima1.begin(), ls.minima1.end()) ||
      !std::is_sorted(ls.boundaries1.begin(), ls.boundaries1.end()))
    throw ConfigError("landscape: minima and boundaries must be ascending");
  for (std::size_t i = 0; i < ls.boundaries1.size(); ++i) {
    if (!(ls.minima1[i] < ls.boundaries1[i] && ls.boundaries1[i] < ls.minima1[i + 1]))
      throw ConfigError("landscape: boundaries must interleave minima");
  }
  for (std::size_t i = 0; i < ls.minima1.size(); ++i) {
    if (std::abs(ls.grad1(ls.minima1[i])) > grad_tol)
      throw ConfigError("landscape: gradient at minimum " + std::to_string(i + 1) +
                        " exceeds grad_tol");
    auto fld = classify_field1(ls, ls.minima1[i]);
    if (!fld || *fld != static_cast<int>(i))
      throw ConfigError("landscape: classifier does not map minimum to its own field");
    if (ls.sigma1 && ls.sigma1(ls.minima1[i]) == 0.0)
      throw ConfigError("landscape: singular diffusion at a minimum");
  }
}

} // namespace detail

// The four-well potential with Lomax-benchmark geometry: minima near
// (-1.51, -0.66, 0.49, 1.32), boundaries (-1.3, 0.2, 0.7), sigma == 1.
// The gradient is a central finite difference of the closed-form potential.
inline Landscape builtin_paper_landscape() {
  Landscape ls;
  ls.dim = 1;
  ls.potential1 = [](double x) { return paper_potential(x); };
  ls.grad1 = [](double x) {
    return (paper_potential(x + kFdStep) - paper_potential(x - kFdStep)) / (2.0 * kFdStep);
  };
  ls.boundaries1 = {-1.3, 0.2, 0.7};
  const double nominal[4] = {-1.51, -0.66, 0.49, 1.32};
  const double bracket[4][2] = {{-1.58, -1.44}, {-0.95, -0.45}, {0.35, 0.62}, {1.10, 1.45}};
  for (int i = 0; i < 4; ++i) {
    (void)nominal;
    ls.minima1.push_back(detail::refine_minimum(ls.grad1, bracket[i][0], bracket[i][1]));
  }
  detail::finish_1d(ls);
  detail::validate_1d(ls, 1e-3);
  return ls;
}

// f'(x) = scale * prod (x - r_j) over the interleaved minima/boundary roots;
// minima and boundaries are then exact critical points.
inline Landscape make_polywell_landscape(std::vector<double> minima,
                                         std::vector<double> boundaries,
                                         double scale = 1.0) {
  Landscape ls;
  ls.dim = 1;
  std::vector<double> roots;
  for (std::size_t i = 0; i < minima.size(); ++i) {
    roots.push_back(minima[i]);
    if (i < boundaries.size()) roots.push_back(boundaries[i]);
  }
  ls.grad1 = [roots, scale](double x) {
    double p = scale;
    for (double r : roots) p *= (x - r);
    return p;
  };
  // potential by Simpson quadrature of the closed-form gradient
  auto g = ls.grad1;
  ls.potential1 = [g](double x) {
    const int n = 400;
    const double a = 0.0;
    const double h = (x - a) / n;
    double s = g(a) + g(x);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
    return s * h / 3.0;
  };
  ls.minima1 = std::move(minima);
  ls.boundaries1 = std::move(boundaries);
  detail::finish_1d(ls);
  detail::validate_1d(ls, 1e-12);
  return ls;
}

// Three-well landscape with middle effective width 0.6: used for the
// transition-graph examples (irreducible at b = 0.5, two classes at b = 0.4).
inline Landscape make_fig2_landscape() {
  return make_polywell_landscape({-0.95, 0.0, 1.3}, {-0.6, 0.85});
}

// Natural cubic spline through (x, f) samples; user supplies minima/boundaries.
inline Landscape make_grid_landscape(std::vector<double> xs, std::vector<double> fs,
                                     std::vector<double> minima,
                                     std::vector<double> boundaries,
                                     double grad_tol = 1e-2) {
  const std::size_t n = xs.size();
  if (n < 4 || fs.size() != n) throw ConfigError("grid1d: need >= 4 (x, f) samples");
  if (!std::is_sorted(xs.begin(), xs.end())) throw ConfigError("grid1d: x samples must ascend");

  // second derivatives for the natural spline (tridiagonal solve)
  std::vector<double> h(n - 1), alpha(n, 0.0), l(n), mu(n), z(n), m2(n);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = xs[i + 1] - xs[i];
  for (std::size_t i = 1; i + 1 < n; ++i)
    alpha[i] = 3.0 * ((fs[i + 1] - fs[i]) / h[i] - (fs[i] - fs[i - 1]) / h[i - 1]);
  l[0] = 1.0;
  mu[0] = z[0] = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    l[i] = 2.0 * (xs[i + 1] - xs[i - 1]) - h[i - 1] * mu[i - 1];
    mu[i] = h[i] / l[i];
    z[i] = (alpha[i] - h[i - 1] * z[i - 1]) / l[i];
  }
  l[n - 1] = 1.0;
  z[n - 1] = m2[n - 1] = 0.0;
  for (std::size_t j = n - 1; j-- > 0;) m2[j] = z[j] - mu[j] * m2[j + 1];

  struct Spline {
    std::vector<double> x, f, m2, h;
    std::size_t seg(double q) const {
      auto it = std::upper_bound(x.begin(), x.end(), q);
      std::size_t i = (it == x.begin()) ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
      return std::min(i, x.size() - 2);
    }
    double eval(double q) const {
      const std::size_t i = seg(q);
      const double a = x[i + 1] - q, b = q - x[i], hi = h[i];
      return (m2[i] * a * a * a + m2[i + 1] * b * b * b) / (6.0 * hi) +
             (f[i] / hi - m2[i] * hi / 6.0) * a + (f[i + 1] / hi - m2[i + 1] * hi / 6.0) * b;
    }
    double deriv(double q) const {
      const std::size_t i = seg(q);
      const double a = x[i + 1] - q, b = q - x[i], hi = h[i];
      return (-m2[i] * a * a + m2[i + 1] * b * b) / (2.0 * hi) +
             (f[i + 1] - f[i]) / hi - (m2[i + 1] - m2[i]) * hi / 6.0;
    }
  };
  auto sp = std::make_shared<Spline>(Spline{std::move(xs), std::move(fs), std::move(m2), std::move(h)});

  Landscape ls;
  ls.dim = 1;
  ls.potential1 = [sp](double q) { return sp->eval(q); };
  ls.grad1 = [sp](double q) { return sp->deriv(q); };
  ls.minima1 = std::move(minima);
  ls.boundaries1 = std::move(boundaries);
  detail::finish_1d(ls);
  detail::validate_1d(ls, grad_tol);
  return ls;
}

// ---- assumption validation --------------------------------------------------

struct GridSpec {
  Vec box_lo;
  Vec box_hi;
  double annulus_radius = 0.05; // outermost radius probed around each minimum
  double spacing = 1e-3;        // radius/grid increment
  double grad_tol = 1e-3;
};

struct Violation {
  enum class Kind { Stationarity, Contraction, Dissipativity } kind;
  Vec where;
  double value; // the offending inner product / gradient magnitude
};

struct ValidationReport {
  std::vector<Violation> violations;
  long long points_checked = 0;
  bool clean() const { return violations.empty(); }
};

// Checks grad f(m_i) ~ 0, the contraction inequality grad f(x).(x - m_i) > 0 on
// annuli around each minimum, and dissipativity grad f(x).x > 0 on the box
// frontier. Violations are reported as data.
inline ValidationReport validate_assumptions(const Landscape &ls, const GridSpec &spec) {
  ValidationReport rep;
  if (ls.dim != 1)
    throw UnsupportedError("validate_assumptions: only 1-D landscapes are supported");
  const auto &mins = ls.minima1;
  for (std::size_t i = 0; i < mins.size(); ++i) {
    const double g = ls.grad1(mins[i]);
    ++rep.points_checked;
    if (std::abs(g) > spec.grad_tol)
      rep.violations.push_back({Violation::Kind::Stationarity, Vec{mins[i]}, std::abs(g)});
    for (double rho = spec.spacing; rho <= spec.annulus_radius + 1e-15; rho += spec.spacing) {
      for (int sgn : {-1, 1}) {
        const double x = mins[i] + sgn * rho;
        const double v = ls.grad1(x) * (x - mins[i]);
        ++rep.points_checked;
        if (!(v > 0.0))
          rep.violations.push_back({Violation::Kind::Contraction, Vec{x}, v});
      }
    }
  }
  for (double x : {spec.box_lo[0], spec.box_hi[0]}) {
    const double v = ls.grad1(x) * x;
    ++rep.points_checked;
    if (!(v > 0.0))
      rep.violations.push_back({Violation::Kind::Dissipativity, Vec{x}, v});
  }
  return rep;
}

} // namespace htmeta

#endif
