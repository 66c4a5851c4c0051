#ifndef HTMETA_CONFIG_HPP
#define HTMETA_CONFIG_HPP

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "htmeta/common.hpp"
#include "htmeta/dynamics.hpp"
#include "htmeta/landscape.hpp"
#include "htmeta/limit_chain.hpp"
#include "htmeta/noise.hpp"
#include "htmeta/optimizer.hpp"

namespace htmeta {

using nlohmann::json;

inline std::uint64_t fnv1a(const std::string &s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const json &j) {
  std::ostringstream os;
  os << std::hex << fnv1a(j.dump());
  return os.str();
}

// {"kind": "paper1d"} | {"kind": "fig2"} | {"kind": "polywell", ...} |
// {"kind": "grid1d", "f_samples": [[x, f], ...], "minima": [...], "boundaries": [...]}
inline Landscape landscape_from_json(const json &j) {
  if (!j.contains("kind")) throw ConfigError("landscape: missing kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "paper1d") return builtin_paper_landscape();
  if (kind == "fig2") return make_fig2_landscape();
  if (kind == "polywell") {
    return make_polywell_landscape(j.at("minima").get<std::vector<double>>(),
                                   j.at("boundaries").get<std::vector<double>>(),
                                   j.value("scale", 1.0));
  }
  if (kind == "grid1d") {
    std::vector<double> xs, fs;
    for (const auto &p : j.at("f_samples")) {
      xs.push_back(p.at(0).get<double>());
      fs.push_back(p.at(1).get<double>());
    }
    return make_grid_landscape(std::move(xs), std::move(fs),
                               j.at("minima").get<std::vector<double>>(),
                               j.at("boundaries").get<std::vector<double>>(),
                               j.value("grad_tol", 1e-2));
  }
  throw ConfigError("landscape: unknown kind '" + kind + "'");
}

// {"kind": "lomax", "c0": 0.1, "alpha": 1.2} | {"kind": "gaussian", "std": 1.0}
inline NoiseModel noise_from_json(const json &j) {
  if (!j.contains("kind")) throw ConfigError("noise: missing kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lomax") return lomax_noise(j.value("c0", 0.1), j.value("alpha", 1.2));
  if (kind == "gaussian") return gaussian_noise(j.value("std", 1.0));
  throw ConfigError("noise: unknown kind '" + kind + "'");
}

inline double b_from_json(const json &j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    throw ConfigError("run.b: expected a number or \"inf\"");
  }
  return j.get<double>();
}

inline RunConfig run_from_json(const json &j) {
  RunConfig cfg;
  cfg.eta = j.value("eta", 1e-3);
  cfg.b = j.contains("b") ? b_from_json(j.at("b")) : 0.5;
  cfg.steps = j.value("steps", 1000000LL);
  if (cfg.steps < 1) throw ConfigError("run.steps must be >= 1");
  if (!(cfg.eta > 0.0)) throw ConfigError("run.eta must be positive");
  if (!(cfg.b > 0.0)) throw ConfigError("run.b must be positive or \"inf\"");
  if (j.contains("x0")) {
    if (j.at("x0").is_array())
      cfg.x0 = j.at("x0").get<Vec>();
    else
      cfg.x0 = Vec{j.at("x0").get<double>()};
  }
  if (j.contains("box")) {
    const auto &b = j.at("box");
    cfg.box_lo = Vec{b.at(0).get<double>()};
    cfg.box_hi = Vec{b.at(1).get<double>()};
  }
  cfg.project = j.value("project", true);
  cfg.seed = j.value("seed", 0ULL);
  cfg.thin = j.value("thin", 100LL);
  if (cfg.thin < 1) throw ConfigError("run.thin must be >= 1");
  cfg.eps_marker = j.value("eps_marker", 0.1);
  cfg.occupancy_eps = j.value("occupancy_eps", 0.1);
  return cfg;
}

inline McSpec mc_from_json(const json &j) {
  McSpec mc;
  mc.samples = j.value("samples", 1000000LL);
  mc.rel_tol = j.value("rel_tol", 0.05);
  mc.w_min_frac = j.value("w_min_frac", 0.05);
  mc.auto_w_min = j.value("auto_w_min", true);
  mc.t_gap_mult = j.value("t_gap_mult", 50.0);
  mc.seed = j.value("seed", 0x9e3779b9ULL);
  mc.force_mc = j.value("force_mc", false);
  mc.boundary_band = j.value("boundary_band", 1e-3);
  if (mc.samples < 1000) throw ConfigError("mc.samples too small to be meaningful");
  return mc;
}

inline HeavyTrainConfig train_from_json(const json &j) {
  HeavyTrainConfig cfg;
  cfg.eta = j.value("eta", 0.01);
  cfg.b = j.contains("b") ? b_from_json(j.at("b")) : 0.5;
  cfg.c = j.value("c", 0.5);
  cfg.alpha = j.value("alpha", 1.4);
  cfg.steps = j.value("steps", 10000LL);
  cfg.cooldown = j.value("cooldown", 1000LL);
  cfg.independent_batches = j.value("independent_batches", true);
  cfg.inject_threshold = j.value("inject_threshold", 0.0);
  cfg.seed = j.value("seed", 0ULL);
  cfg.log_every = j.value("log_every", 100LL);
  if (j.value("pareto_family", std::string("type1")) == "lomax")
    cfg.family = HeavyTrainConfig::ParetoFamily::Lomax;
  if (!(cfg.c > 0.0) || !(cfg.alpha > 1.0)) throw ConfigError("train: need c > 0 and alpha > 1");
  if (cfg.cooldown > cfg.steps) throw ConfigError("train: cooldown exceeds steps");
  return cfg;
}

// ---- presets -------------------------------------------------------------------

inline json preset_config(const std::string &name) {
  const json paper_run = {{"eta", 1e-3}, {"b", 0.5},      {"steps", 10000000},
                          {"x0", 0.3},   {"box", {-1.6, 1.6}}, {"seed", 2024},
                          {"thin", 100}, {"eps_marker", 0.1}};
  if (name == "paper-fig1b") {
    return {{"landscape", {{"kind", "paper1d"}}},
            {"noise", {{"kind", "lomax"}, {"c0", 0.1}, {"alpha", 1.2}}},
            {"run", paper_run},
            {"replicas", 10}};
  }
  if (name == "paper-fig1a") {
    json run = paper_run;
    run["b"] = "inf";
    return {{"landscape", {{"kind", "paper1d"}}},
            {"noise", {{"kind", "lomax"}, {"c0", 0.1}, {"alpha", 1.2}}},
            {"run", run},
            {"replicas", 10}};
  }
  if (name == "paper-fig1c" || name == "paper-fig1d") {
    json run = paper_run;
    run["steps"] = 1000000;
    if (name == "paper-fig1c") run["b"] = "inf";
    return {{"landscape", {{"kind", "paper1d"}}},
            {"noise", {{"kind", "gaussian"}, {"std", 1.0}}},
            {"run", run},
            {"replicas", 10}};
  }
  if (name == "fig2") {
    return {{"landscape", {{"kind", "fig2"}}},
            {"noise", {{"kind", "lomax"}, {"c0", 0.1}, {"alpha", 1.2}}},
            {"run", {{"eta", 1e-3}, {"b", 0.5}, {"steps", 1000000}, {"x0", 0.0}, {"seed", 7}}}};
  }
  if (name == "paper-exit2") {
    return {{"landscape", {{"kind", "paper1d"}}},
            {"noise", {{"kind", "lomax"}, {"c0", 0.1}, {"alpha", 1.2}}},
            {"run", paper_run},
            {"exit", {{"field", 2}, {"eta_grid", {4e-3, 2e-3, 1e-3}}, {"replicas", 200}}}};
  }
  if (name == "toy-train") {
    return {{"landscape", {{"kind", "paper1d"}}},
            {"train",
             {{"eta", 0.01},
              {"b", 0.5},
              {"c", 0.5},
              {"alpha", 1.4},
              {"steps", 20000},
              {"cooldown", 2000},
              {"seed", 11},
              {"oracle", {{"kind", "landscape"}, {"sb_noise", 1.0}, {"lb_noise", 0.1}, {"x0", 0.3}}}}}};
  }
  throw ConfigError("unknown preset '" + name + "'");
}

inline json load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception &e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return j;
}

// ---- output helpers -------------------------------------------------------------

struct CsvWriter {
  std::ofstream out;
  CsvWriter(const std::string &path, const std::string &hash, const std::string &header)
      : out(path) {
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << "# config_hash=" << hash << "\n" << header << "\n";
  }
};

inline void write_trajectory_csv(const std::string &path, const std::string &hash,
                                 const Trajectory &tr, int dim) {
  std::string header = "step";
  for (int d = 1; d <= dim; ++d) header += ",x" + std::to_string(d);
  CsvWriter w(path, hash, header);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    w.out << tr.times[i];
    for (double v : tr.states[i]) w.out << ',' << v;
    w.out << '\n';
  }
}

inline void write_transitions_csv(const std::string &path, const std::string &hash,
                                  const Trajectory &tr) {
  CsvWriter w(path, hash, "step,field");
  for (const auto &[t, f] : tr.transitions) w.out << t << ',' << (f + 1) << '\n';
}

inline void write_histogram_csv(const std::string &path, const std::string &hash,
                                const std::vector<Trajectory> &batch, double lo, double hi,
                                int bins) {
  std::vector<long long> count(static_cast<std::size_t>(bins), 0);
  for (const auto &tr : batch)
    for (const auto &s : tr.states) {
      const double x = s[0];
      if (x < lo || x >= hi) continue;
      ++count[static_cast<std::size_t>((x - lo) / (hi - lo) * bins)];
    }
  CsvWriter w(path, hash, "bin_left,bin_right,count");
  const double bw = (hi - lo) / bins;
  for (int i = 0; i < bins; ++i)
    w.out << lo + i * bw << ',' << lo + (i + 1) * bw << ',' << count[static_cast<std::size_t>(i)]
          << '\n';
}

inline json rate_table_to_json(const RateTable &rt) {
  json j;
  j["b"] = rt.b;
  j["j_b"] = rt.j_b;
  j["q"] = rt.q;
  j["q_se"] = rt.se;
  j["q_diag"] = rt.q_diag;
  j["q_diag_se"] = rt.q_diag_se;
  j["boundary_band_mass"] = rt.boundary_mass;
  return j;
}

inline json ctmc_to_json(const Ctmc &c) {
  json j;
  json states = json::array();
  for (int s : c.states) states.push_back(s + 1);
  j["states"] = states;
  j["initial_dist"] = c.initial_dist;
  j["generator"] = c.Q;
  j["embedded_kernel"] = c.embedded;
  j["hold_rates"] = c.hold_rate;
  return j;
}

inline json graph_to_json(const TransitionGraph &g) {
  json j;
  json nodes = json::array(), edges = json::array(), classes = json::array();
  for (int i = 0; i < g.n; ++i) nodes.push_back(i + 1);
  for (auto [u, v] : g.edges) edges.push_back({u + 1, v + 1});
  for (std::size_t c = 0; c < g.classes.size(); ++c) {
    json cls;
    json members = json::array();
    for (int v : g.classes[c]) members.push_back(v + 1);
    cls["members"] = members;
    cls["absorbing"] = static_cast<bool>(g.class_absorbing[c]);
    classes.push_back(cls);
  }
  j["nodes"] = nodes;
  j["edges"] = edges;
  j["classes"] = classes;
  j["irreducible"] = g.irreducible;
  j["b"] = g.b;
  return j;
}

inline json width_report_to_json(const WidthReport &wr) {
  json j;
  j["b"] = wr.b;
  j["r"] = wr.r;
  j["j_b"] = wr.j_b;
  j["j_star"] = wr.j_star;
  json widest = json::array();
  for (int w : wr.widest) widest.push_back(w + 1);
  j["widest"] = widest;
  return j;
}

} // namespace htmeta

#endif
