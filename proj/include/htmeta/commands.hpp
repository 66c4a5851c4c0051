#ifndef HTMETA_COMMANDS_HPP
#define HTMETA_COMMANDS_HPP

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "htmeta/analysis.hpp"
#include "htmeta/config.hpp"

namespace htmeta {

struct CommandOptions {
  std::string out_dir = ".";
  int workers = 0;
  bool dry_run = false;
  bool check = false;
};

namespace detail {

inline void apply_seed_override(json &cfg) {
  const char *env = std::getenv("HTMETA_SEED");
  if (!env) return;
  const auto seed = static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  if (cfg.contains("run")) cfg["run"]["seed"] = seed;
  if (cfg.contains("train")) cfg["train"]["seed"] = seed;
}

inline std::string out_path(const CommandOptions &opt, const std::string &name) {
  std::filesystem::create_directories(opt.out_dir);
  return (std::filesystem::path(opt.out_dir) / name).string();
}

inline void write_json(const CommandOptions &opt, const std::string &name, const json &j,
                       const std::string &hash) {
  json withmeta = j;
  withmeta["config_hash"] = hash;
  std::ofstream out(out_path(opt, name));
  out << withmeta.dump(2) << "\n";
}

inline std::vector<int> widest_or_all(const Landscape &ls, double b) {
  if (std::isinf(b)) {
    std::vector<int> all(static_cast<std::size_t>(ls.n_minima()));
    for (int i = 0; i < ls.n_minima(); ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  return width_report(ls, b).widest;
}

} // namespace detail

// simulate: trajectory CSVs, transitions CSVs, occupancy JSON, histogram CSV
inline int cmd_simulate(json cfg, const CommandOptions &opt) {
  detail::apply_seed_override(cfg);
  const Landscape ls = landscape_from_json(cfg.at("landscape"));
  const NoiseModel noise = noise_from_json(cfg.at("noise"));
  RunConfig run = run_from_json(cfg.at("run"));
  if (run.x0.empty()) throw ConfigError("run.x0 is required for simulate");
  const int replicas = cfg.value("replicas", 1);
  if (opt.dry_run) return 0;

  const std::string hash = config_hash(cfg);
  auto batch = simulate_batch(ls, noise, run, replicas, opt.workers);

  std::vector<int> widest;
  try {
    widest = detail::widest_or_all(ls, run.b);
  } catch (const DegenerateThresholdError &) {
    widest = {};
  }

  json occ_all = json::array();
  for (int r = 0; r < replicas; ++r) {
    const auto &tr = batch[static_cast<std::size_t>(r)];
    const std::string tag = "traj_" + std::to_string(r);
    write_trajectory_csv(detail::out_path(opt, tag + ".csv"), hash, tr, ls.dim);
    write_transitions_csv(detail::out_path(opt, tag + "_transitions.csv"), hash, tr);
    OccupancyReport rep = occupancy(tr, ls, widest, run.occupancy_eps);
    json jr;
    jr["replica"] = r;
    jr["fraction_per_minimum"] = rep.fraction_per_minimum;
    jr["fraction_widest"] = rep.fraction_widest;
    jr["fraction_unlabeled"] = rep.fraction_unlabeled;
    if (!rep.exact_ball_fraction.empty()) jr["exact_ball_fraction"] = rep.exact_ball_fraction;
    occ_all.push_back(jr);
  }
  json occ;
  occ["replicas"] = occ_all;
  json widest1 = json::array();
  for (int w : widest) widest1.push_back(w + 1);
  occ["widest"] = widest1;
  detail::write_json(opt, "occupancy.json", occ, hash);

  double lo = -2.0, hi = 2.0;
  if (!run.box_lo.empty()) {
    lo = run.box_lo[0];
    hi = run.box_hi[0];
  }
  write_histogram_csv(detail::out_path(opt, "histogram.csv"), hash, batch, lo, hi,
                      cfg.value("histogram_bins", 160));

  if (opt.check) {
    for (const auto &tr : batch) {
      double frac = 0.0;
      for (long long c : tr.ball_steps) frac += static_cast<double>(c);
      if (frac > static_cast<double>(tr.steps_run) + 0.5) return 4;
      for (std::size_t e = 1; e < tr.transitions.size(); ++e)
        if (tr.transitions[e].second == tr.transitions[e - 1].second) return 4;
      if (!std::isinf(run.b)) {
        const double slack = run.has_box() ? 1e-9 : 0.0;
        for (std::size_t i = 1; i < tr.states.size(); ++i) {
          const double steps_gap = static_cast<double>(tr.times[i] - tr.times[i - 1]);
          if (dist2(tr.states[i], tr.states[i - 1]) > steps_gap * (run.b + slack) + 1e-12)
            return 4;
        }
      }
    }
  }
  return 0;
}

// graph: width report + transition graph (JSON and DOT)
inline int cmd_graph(json cfg, const CommandOptions &opt) {
  const Landscape ls = landscape_from_json(cfg.at("landscape"));
  double b = 0.5;
  if (cfg.contains("run") && cfg.at("run").contains("b")) b = b_from_json(cfg.at("run").at("b"));
  if (cfg.contains("b")) b = b_from_json(cfg.at("b"));
  if (opt.dry_run) return 0;
  const std::string hash = config_hash(cfg);

  const WidthReport wr = width_report(ls, b);
  const TransitionGraph g = build_graph(ls, b, wr);
  detail::write_json(opt, "widths.json", width_report_to_json(wr), hash);
  detail::write_json(opt, "graph.json", graph_to_json(g), hash);
  std::ofstream dot(detail::out_path(opt, "graph.dot"));
  dot << graph_to_dot(g, ls);

  if (opt.check) {
    std::vector<int> seen(static_cast<std::size_t>(g.n), 0);
    for (const auto &cls : g.classes)
      for (int v : cls) ++seen[static_cast<std::size_t>(v)];
    for (int s : seen)
      if (s != 1) return 4;
    if (g.irreducible != (g.classes.size() == 1)) return 4;
    if (wr.widest.empty()) return 4;
  }
  return 0;
}

// limit: rate table, absorption probabilities, generator, sampled CTMC paths
inline int cmd_limit(json cfg, const CommandOptions &opt) {
  const Landscape ls = landscape_from_json(cfg.at("landscape"));
  const NoiseModel noise = noise_from_json(cfg.at("noise"));
  double b = 0.5;
  if (cfg.contains("run") && cfg.at("run").contains("b")) b = b_from_json(cfg.at("run").at("b"));
  if (cfg.contains("b")) b = b_from_json(cfg.at("b"));
  McSpec mc = cfg.contains("mc") ? mc_from_json(cfg.at("mc")) : McSpec{};
  mc.workers = opt.workers;
  const json lim = cfg.value("limit", json::object());
  const int i0 = lim.value("i0", 1) - 1;
  const int n_paths = lim.value("paths", 3);
  const double horizon = lim.value("horizon", 20.0);
  if (opt.dry_run) return 0;
  const std::string hash = config_hash(cfg);

  WidthReport wr;
  std::vector<int> widest;
  if (std::isinf(b)) {
    wr.b = b;
    wr.j_star = 1;
    for (int i = 0; i < ls.n_minima(); ++i) {
      wr.j_b.push_back(1);
      wr.r.push_back(effective_width(ls, i));
      wr.widest.push_back(i);
    }
  } else {
    wr = width_report(ls, b);
  }
  widest = wr.widest;

  const RateTable rt = rate_table(ls, noise, b, wr, mc);
  const auto theta = absorption_probs(rt, widest);
  const Ctmc ctmc = build_ctmc(rt, theta, widest, i0, ls);
  detail::write_json(opt, "rates.json", rate_table_to_json(rt), hash);
  json jt;
  jt["theta"] = theta;
  detail::write_json(opt, "theta.json", jt, hash);
  detail::write_json(opt, "ctmc.json", ctmc_to_json(ctmc), hash);

  Rng rng(cfg.value("seed", 99ULL));
  CsvWriter paths(detail::out_path(opt, "ctmc_paths.csv"), hash, "path,t,state");
  for (int p = 0; p < n_paths; ++p) {
    auto real = simulate_ctmc(ctmc, horizon, rng);
    double t = 0.0;
    for (std::size_t j = 0; j < real.jumps.U.size(); ++j) {
      t += real.jumps.U[j];
      if (t > horizon) break;
      paths.out << p << ',' << t << ',' << ctmc.states[static_cast<std::size_t>(real.state_seq[j])] + 1
                << '\n';
    }
  }

  if (opt.check) {
    const int K = ls.n_minima();
    for (int i = 0; i < K; ++i) {
      double row = 0.0;
      for (int j = 0; j < K; ++j) row += rt.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (std::abs(row - rt.q_diag[static_cast<std::size_t>(i)]) >
          0.05 * rt.q_diag[static_cast<std::size_t>(i)])
        return 4;
      double ts = 0.0;
      for (std::size_t w = 0; w < widest.size(); ++w) ts += theta[static_cast<std::size_t>(i)][w];
      if (std::abs(ts - 1.0) > 1e-10) return 4;
    }
    for (std::size_t a = 0; a < ctmc.Q.size(); ++a) {
      double row = 0.0;
      for (double v : ctmc.Q[a]) row += v;
      if (std::abs(row) > 1e-10) return 4;
    }
  }
  return 0;
}

// exit: scaling-exponent study CSV + exponential-law check
inline int cmd_exit(json cfg, const CommandOptions &opt) {
  detail::apply_seed_override(cfg);
  const Landscape ls = landscape_from_json(cfg.at("landscape"));
  const NoiseModel noise = noise_from_json(cfg.at("noise"));
  if (!cfg.contains("exit")) throw ConfigError("exit: missing 'exit' block");
  const json &ex = cfg.at("exit");
  const int field = ex.value("field", 1) - 1;
  if (field < 0 || field >= ls.n_minima()) throw ConfigError("exit.field out of range");
  const auto eta_grid = ex.at("eta_grid").get<std::vector<double>>();
  const int replicas = ex.value("replicas", 200);
  const double ks_level = ex.value("ks_level", 0.01);
  RunConfig proto = cfg.contains("run") ? run_from_json(cfg.at("run")) : RunConfig{};
  double b = proto.b;
  if (ex.contains("b")) b = b_from_json(ex.at("b"));
  proto.steps = ex.value("horizon", 400000000LL);
  proto.x0 = Vec{};
  if (ex.contains("x0")) proto.x0 = Vec{ex.at("x0").get<double>()};
  if (opt.dry_run) return 0;
  const std::string hash = config_hash(cfg);

  const ExitStudy st = exit_study(ls, noise, field, b, eta_grid, replicas, proto, opt.workers,
                                  ks_level);
  CsvWriter w(detail::out_path(opt, "exit_study.csv"), hash,
              "eta,mean_exit_steps,fitted_exponent_lo,fit,hi");
  for (std::size_t e = 0; e < st.etas.size(); ++e)
    w.out << st.etas[e] << ',' << st.mean_steps[e] << ',' << st.fitted_lo << ','
          << st.fitted_exponent << ',' << st.fitted_hi << '\n';
  CsvWriter ks(detail::out_path(opt, "exit_ks.csv"), hash,
               "field,eta,ks_stat,ks_critical,pass");
  ks.out << (field + 1) << ',' << st.etas.back() << ',' << st.ks_statistic << ','
         << st.ks_critical << ',' << (st.ks_statistic < st.ks_critical ? 1 : 0) << '\n';
  CsvWriter sc(detail::out_path(opt, "exit_scaled_times.csv"), hash, "scaled_time");
  for (double v : st.scaled_times) sc.out << v << '\n';

  if (opt.check) {
    if (st.ks_statistic >= st.ks_critical) return 4;
    if (ex.contains("expect_slope")) {
      const double want = ex.at("expect_slope").get<double>();
      const double tol = ex.value("slope_tol", 0.15);
      if (std::abs(st.fitted_exponent - want) > tol) return 4;
    }
  }
  return 0;
}

// train: tail-inflation training log + sharpness probe
inline int cmd_train(json cfg, const CommandOptions &opt) {
  detail::apply_seed_override(cfg);
  if (!cfg.contains("train")) throw ConfigError("train: missing 'train' block");
  const json &tj = cfg.at("train");
  const HeavyTrainConfig tcfg = train_from_json(tj);
  if (!tj.contains("oracle")) throw ConfigError("train: missing 'train.oracle' block");
  const json &oj = tj.at("oracle");
  const std::string kind = oj.value("kind", "");
  StochasticOracle oracle;
  Vec theta0;
  if (kind == "landscape") {
    const Landscape ls = landscape_from_json(cfg.value("landscape", json{{"kind", "paper1d"}}));
    oracle = make_landscape_oracle(ls, oj.value("sb_noise", 1.0), oj.value("lb_noise", 0.1));
    theta0 = Vec{oj.value("x0", 0.3)};
  } else if (kind == "regression") {
    oracle = make_regression_oracle(oj.value("n_data", 200), oj.value("dim", 2),
                                    oj.value("label_noise", 0.5), oj.value("small_batch", 10),
                                    oj.value("large_batch", 100), oj.value("data_seed", 5ULL));
    theta0 = Vec(static_cast<std::size_t>(oracle.dim), 0.0);
  } else {
    throw ConfigError("train.oracle.kind must be 'landscape' or 'regression'");
  }
  if (opt.dry_run) return 0;
  const std::string hash = config_hash(cfg);

  const TrainResult res = train(oracle, theta0, tcfg);
  CsvWriter log(detail::out_path(opt, "train_log.csv"), hash, "step,loss,theta_norm,clipped_flag");
  for (const auto &row : res.log)
    log.out << row.step << ',' << row.loss << ',' << row.theta_norm << ',' << (row.clipped ? 1 : 0)
            << '\n';

  json rep;
  rep["final_theta"] = res.theta;
  if (oracle.loss) {
    const json sj = tj.value("sharpness", json::object());
    const auto sh = expected_sharpness(oracle.loss, res.theta, sj.value("delta", 0.01),
                                       sj.value("n_samples", 100), sj.value("cap", 5.0),
                                       sj.value("seed", 17ULL));
    rep["expected_sharpness"] = sh.value;
    rep["expected_sharpness_se"] = sh.se;
    rep["final_loss"] = oracle.loss(res.theta);
  }
  detail::write_json(opt, "train_report.json", rep, hash);

  if (opt.check) {
    if (!all_finite(res.theta)) return 4;
  }
  return 0;
}

inline int run_command(const std::string &name, json cfg, const CommandOptions &opt) {
  if (name == "simulate") return cmd_simulate(std::move(cfg), opt);
  if (name == "graph") return cmd_graph(std::move(cfg), opt);
  if (name == "limit") return cmd_limit(std::move(cfg), opt);
  if (name == "exit") return cmd_exit(std::move(cfg), opt);
  if (name == "train") return cmd_train(std::move(cfg), opt);
  throw ConfigError("unknown command: " + name);
}

} // namespace htmeta

#endif
