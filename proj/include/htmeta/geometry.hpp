#ifndef HTMETA_GEOMETRY_HPP
#define HTMETA_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "htmeta/common.hpp"
#include "htmeta/landscape.hpp"

namespace htmeta {

inline constexpr double kDegTol = 1e-9;

struct WidthReport {
  std::vector<double> r;   // effective widths r(i)
  std::vector<int> j_b;    // J_b(i)
  int j_star = 0;          // max_i J_b(i)
  std::vector<int> widest; // indices attaining j_star
  double b = 0.0;
};

struct TransitionGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;      // directed (i -> j), no self loops
  std::vector<std::vector<int>> classes;       // strongly connected communication classes
  std::vector<bool> class_absorbing;           // per class: no edge leaves it
  bool irreducible = false;
  double b = 0.0;
};

// r(i) = inf{ |m_i - y| : y outside I_i }; Infinity for a field with no finite
// boundary on either side.
inline double effective_width(const Landscape &ls, int i) {
  if (ls.dim != 1)
    throw UnsupportedError("effective_width: analytic widths are 1-D only");
  const double m = ls.minima1[static_cast<std::size_t>(i)];
  const auto &bd = ls.boundaries1;
  double left = (i == 0) ? kInf : m - bd[static_cast<std::size_t>(i - 1)];
  double right = (i == static_cast<int>(bd.size())) ? kInf : bd[static_cast<std::size_t>(i)] - m;
  return std::min(left, right);
}

// ---- sampled reachable sets (general construction) ---------------------------

struct ReachOptions {
  int n_dirs = 16;          // jump directions probed (1-D uses {-1, +1})
  int flow_samples = 64;    // points taken along each flow path
  double dedupe_res = 1e-3; // grid resolution for pruning the frontier
  int max_k = 16;
  FlowOptions flow;
};

namespace detail {

// One breadth level: from every frontier point, follow the flow, and from
// points along the path add clipped jumps of magnitude b in the probe
// directions. Exact for 1-D intervals; an approximation in general dimension.
inline std::vector<Vec> reach_expand(const Landscape &ls, const std::vector<Vec> &frontier,
                                     double b, const ReachOptions &opt) {
  std::vector<Vec> out;
  std::set<std::vector<long long>> seen;
  auto push = [&](const Vec &p) {
    std::vector<long long> key(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      key[i] = static_cast<long long>(std::llround(p[i] / opt.dedupe_res));
    if (seen.insert(key).second) out.push_back(p);
  };
  std::vector<Vec> dirs;
  if (ls.dim == 1) {
    dirs = {Vec{1.0}, Vec{-1.0}};
  } else {
    for (int k = 0; k < opt.n_dirs; ++k) {
      const double a = 2.0 * M_PI * k / opt.n_dirs;
      dirs.push_back(Vec{std::cos(a), std::sin(a)}); // d == 2 probe ring
    }
  }
  for (const auto &p : frontier) {
    FlowOptions fo = opt.flow;
    fo.record_path = true;
    fo.record_dt = std::max(fo.dt, fo.t_max / opt.flow_samples);
    FlowResult fr = gradient_flow(ls, p, fo);
    std::vector<Vec> along;
    along.push_back(p);
    for (const auto &tp : fr.path) along.push_back(tp.second);
    along.push_back(fr.terminal);
    for (const auto &q : along) {
      for (const auto &d : dirs) {
        Vec np = q;
        for (std::size_t c = 0; c < np.size(); ++c) np[c] += b * d[c];
        push(np);
      }
    }
  }
  return out;
}

inline bool any_outside_field(const Landscape &ls, const std::vector<Vec> &pts, int i) {
  for (const auto &p : pts) {
    auto f = classify_field(ls, p);
    if (!f || *f != i) return true; // boundary points lie outside every open field
  }
  return false;
}

} // namespace detail

// Minimum number of b-clipped perturbations of the flow needed to leave I_i,
// computed by breadth-k sampled reachability. 1-D flows keep each level inside
// the interval hull, so the result is exact there.
inline int jump_width_sampled(const Landscape &ls, int i, double b,
                              const ReachOptions &opt = {}) {
  std::vector<Vec> frontier{ls.minimum(i)};
  for (int k = 1; k <= opt.max_k; ++k) {
    frontier = detail::reach_expand(ls, frontier, b, opt);
    if (detail::any_outside_field(ls, frontier, i)) return k;
  }
  throw UnboundedFieldError("jump_width_sampled: no escape within max_k perturbations");
}

// 1-D analytic width ceil(r(i)/b); an exact integer ratio violates the
// bounded-away regularity condition and is surfaced as DegenerateThreshold.
inline int jump_width(const Landscape &ls, int i, double b, double deg_tol = kDegTol) {
  if (!(b > 0.0)) throw ConfigError("jump_width: b must be positive");
  if (ls.dim != 1 || !ls.sigma_constant) return jump_width_sampled(ls, i, b);
  const double r = effective_width(ls, i);
  if (std::isinf(r)) throw UnboundedFieldError("jump_width: field has no finite boundary");
  if (std::isinf(b)) return 1;
  const double ratio = r / b;
  if (std::abs(ratio - std::round(ratio)) <= deg_tol)
    throw DegenerateThresholdError("jump_width: r(i)/b is an exact multiple (field " +
                                   std::to_string(i + 1) + ")");
  return static_cast<int>(std::ceil(ratio));
}

inline WidthReport width_report(const Landscape &ls, double b) {
  WidthReport rep;
  rep.b = b;
  const int K = ls.n_minima();
  for (int i = 0; i < K; ++i) {
    rep.r.push_back(ls.dim == 1 ? effective_width(ls, i) : std::nan(""));
    rep.j_b.push_back(jump_width(ls, i, b));
  }
  rep.j_star = *std::max_element(rep.j_b.begin(), rep.j_b.end());
  for (int i = 0; i < K; ++i)
    if (rep.j_b[static_cast<std::size_t>(i)] == rep.j_star) rep.widest.push_back(i);
  return rep;
}

namespace detail {

// Tarjan strongly connected components, emitted in reverse topological order.
inline std::vector<std::vector<int>> scc(int n, const std::vector<std::pair<int, int>> &edges) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (auto [u, v] : edges) adj[static_cast<std::size_t>(u)].push_back(v);
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int counter = 0;

  std::function<void(int)> strongconnect = [&](int v) {
    index[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = counter++;
    stack.push_back(v);
    on_stack[static_cast<std::size_t>(v)] = true;
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (index[static_cast<std::size_t>(w)] < 0) {
        strongconnect(w);
        low[static_cast<std::size_t>(v)] =
            std::min(low[static_cast<std::size_t>(v)], low[static_cast<std::size_t>(w)]);
      } else if (on_stack[static_cast<std::size_t>(w)]) {
        low[static_cast<std::size_t>(v)] =
            std::min(low[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(w)]);
      }
    }
    if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
      std::vector<int> comp;
      for (;;) {
        int w = stack.back();
        stack.pop_back();
        on_stack[static_cast<std::size_t>(w)] = false;
        comp.push_back(w);
        if (w == v) break;
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
  };
  for (int v = 0; v < n; ++v)
    if (index[static_cast<std::size_t>(v)] < 0) strongconnect(v);
  return comps;
}

} // namespace detail

// Typical transition graph: edge i -> j iff the J_b(i)-jump reachable set from
// m_i meets the open field I_j. In 1-D the reachable set is the interval
// [m_i - J_b(i) b, m_i + J_b(i) b].
inline TransitionGraph build_graph(const Landscape &ls, double b, const WidthReport &wr) {
  TransitionGraph g;
  g.n = ls.n_minima();
  g.b = b;
  if (ls.dim == 1 && ls.sigma_constant) {
    for (int i = 0; i < g.n; ++i) {
      const double m = ls.minima1[static_cast<std::size_t>(i)];
      const double reach = wr.j_b[static_cast<std::size_t>(i)] * b;
      for (int j = 0; j < g.n; ++j) {
        if (j == i) continue;
        const double lo = (j == 0) ? -kInf : ls.boundaries1[static_cast<std::size_t>(j - 1)];
        const double hi = (j == g.n - 1) ? kInf : ls.boundaries1[static_cast<std::size_t>(j)];
        if (m - reach < hi && m + reach > lo) g.edges.emplace_back(i, j);
      }
    }
  } else {
    ReachOptions opt;
    for (int i = 0; i < g.n; ++i) {
      std::vector<Vec> frontier{ls.minimum(i)};
      for (int k = 0; k < wr.j_b[static_cast<std::size_t>(i)]; ++k)
        frontier = detail::reach_expand(ls, frontier, b, opt);
      std::set<int> hits;
      for (const auto &p : frontier) {
        auto f = classify_field(ls, p);
        if (f && *f != i) hits.insert(*f);
      }
      for (int j : hits) g.edges.emplace_back(i, j);
    }
  }
  g.classes = detail::scc(g.n, g.edges);
  g.irreducible = g.classes.size() == 1;
  g.class_absorbing.assign(g.classes.size(), true);
  std::vector<int> class_of(static_cast<std::size_t>(g.n), -1);
  for (std::size_t c = 0; c < g.classes.size(); ++c)
    for (int v : g.classes[c]) class_of[static_cast<std::size_t>(v)] = static_cast<int>(c);
  for (auto [u, v] : g.edges)
    if (class_of[static_cast<std::size_t>(u)] != class_of[static_cast<std::size_t>(v)])
      g.class_absorbing[static_cast<std::size_t>(class_of[static_cast<std::size_t>(u)])] = false;
  return g;
}

inline std::string graph_to_dot(const TransitionGraph &g, const Landscape &ls) {
  std::string s = "digraph transition_graph {\n";
  for (int i = 0; i < g.n; ++i) {
    s += "  m" + std::to_string(i + 1) + " [label=\"m" + std::to_string(i + 1);
    if (ls.dim == 1) s += " (" + std::to_string(ls.minima1[static_cast<std::size_t>(i)]) + ")";
    s += "\"];\n";
  }
  for (auto [u, v] : g.edges)
    s += "  m" + std::to_string(u + 1) + " -> m" + std::to_string(v + 1) + ";\n";
  s += "}\n";
  return s;
}

} // namespace htmeta

#endif
