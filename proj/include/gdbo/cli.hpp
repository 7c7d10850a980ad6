#pragma once

#include <gdbo/diagnostics.hpp>
#include <gdbo/io/config.hpp>
#include <gdbo/io/records.hpp>
#include <gdbo/theory.hpp>

#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

namespace gdbo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* code_version = "gdbo-1.0.0";
inline constexpr const char* output_root_env = "GDBO_OUTPUT_ROOT";

enum Exit : int { exit_ok = 0, exit_config = 2, exit_runtime = 3 };

struct Options {
  std::string config;     // config or scenario file
  std::string trace_dir;  // diagnose input
  std::string out;        // output root; empty falls back to env, then config
  std::string seeds;      // "1,2,7-9"; empty keeps the config list
  std::string svg;        // diagnose plot path
  unsigned jobs = 1;
};

/// Comma list of seeds and inclusive ranges a-b.
inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : io::split(text, ',')) {
    if (tok.empty()) throw Error(Errc::Config, "empty seed in list");
    auto num = [&](const std::string& s) {
      if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw Error(Errc::Config, "bad seed '" + tok + "'");
      return std::stoull(s);
    };
    const auto dash = tok.find('-');
    if (dash == std::string::npos) {
      out.push_back(num(tok));
      continue;
    }
    const auto a = num(tok.substr(0, dash)), b = num(tok.substr(dash + 1));
    if (b < a) throw Error(Errc::Config, "descending seed range '" + tok + "'");
    for (auto s = a; s <= b; ++s) out.push_back(s);
  }
  if (out.empty()) throw Error(Errc::Config, "no seeds given");
  return out;
}

/// --out, then the env override, then the config value.
inline fs::path output_root(const Options& opt, const std::string& from_config) {
  if (!opt.out.empty()) return opt.out;
  if (const char* env = std::getenv(output_root_env); env && *env) return env;
  return from_config;
}

/// Runs f(i) for i < n on up to `jobs` threads; rethrows the first failure after the join.
template <class F>
void fan_out(std::size_t n, unsigned jobs, F f) {
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(std::max(jobs, 1u), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lk(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < w; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot write " + p.string());
  f << s;
}

namespace detail {

struct Loaded {
  io::ExperimentConfig cfg;
  DesignSpace space;
  std::string hash;
  fs::path dir;
};

inline Loaded load(const Options& opt, const char* subdir) {
  Loaded l;
  l.cfg = io::load_config(opt.config);
  if (!opt.seeds.empty()) l.cfg.run.seeds = parse_seeds(opt.seeds);
  if (l.cfg.run.seeds.empty()) throw Error(Errc::Config, "seed list is empty");
  std::set<std::uint64_t> uniq(l.cfg.run.seeds.begin(), l.cfg.run.seeds.end());
  if (uniq.size() != l.cfg.run.seeds.size()) throw Error(Errc::Config, "duplicate seeds");
  try {
    l.space = io::build_landscape(l.cfg);
  } catch (const Error& e) {
    throw Error(Errc::Config, std::string("landscape: ") + e.what());
  }
  l.hash = io::config_hash(l.cfg);
  l.dir = output_root(opt, l.cfg.output_dir) / subdir;
  return l;
}

// Seed fan-out shared by simulate and baseline; returns runs in seed order.
template <class Run>
std::vector<RunResult> run_seeds(const Loaded& l, const Options& opt, const std::string& prefix, Run run,
                                 json& manifest) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(l.dir);
  const auto& seeds = l.cfg.run.seeds;
  std::vector<RunResult> runs(seeds.size());
  fan_out(seeds.size(), opt.jobs, [&](std::size_t i) {
    runs[i] = run(seeds[i]);
    io::write_jsonl_file((l.dir / (prefix + std::to_string(seeds[i]) + ".jsonl")).string(), runs[i]);
  });
  std::vector<io::SummaryRow> rows;
  for (const auto& r : runs) rows.push_back(io::summarize(r, l.space, l.cfg.run.tau_audit));
  std::ostringstream csv;
  io::write_summary_csv(csv, rows);
  write_text(l.dir / "summary.csv", csv.str());

  json list = json::array();
  for (auto s : seeds) list.push_back({{"seed", s}, {"trace", prefix + std::to_string(s) + ".jsonl"}});
  manifest["code_version"] = code_version;
  manifest["config_hash"] = l.hash;
  manifest["config"] = io::canonical(l.cfg);
  manifest["seeds"] = seeds;
  manifest["runs"] = list;
  manifest["summary"] = "summary.csv";
  manifest["jobs"] = opt.jobs;
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return runs;
}

template <class Body>
int guarded(Body body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::Config ? exit_config : exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
}

// Config problems surface as exit 2 even when the library reports another code.
template <class Body>
auto as_config(Body body) {
  try {
    return body();
  } catch (const Error& e) {
    if (e.code() == Errc::Config) throw;
    throw Error(Errc::Config, e.what());
  } catch (const json::exception& e) {
    throw Error(Errc::Config, e.what());
  }
}

}  // namespace detail

inline int cmd_simulate(const Options& opt) {
  return detail::guarded([&] {
    const auto l = detail::as_config([&] { return detail::load(opt, "gdbo"); });
    json manifest;
    manifest["command"] = "simulate";
    detail::run_seeds(
        l, opt, "seed_", [&](std::uint64_t s) { return run_gdbo(l.space, l.cfg.run, s, l.hash); }, manifest);
    write_text(l.dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << l.cfg.run.seeds.size() << " traces to " << l.dir.string() << '\n';
    return exit_ok;
  });
}

/// Random search at B = K + J; adds a table of mean best gap against the exact expectation.
inline int cmd_baseline(const Options& opt) {
  return detail::guarded([&] {
    const auto l = detail::as_config([&] {
      auto x = detail::load(opt, "random_search");
      if (x.cfg.run.K + x.cfg.run.J == 0) throw Error(Errc::Config, "baseline budget K + J is 0");
      return x;
    });
    const auto& rc = l.cfg.run;
    const std::size_t B = rc.K + rc.J;
    json manifest;
    manifest["command"] = "baseline";
    manifest["budget"] = B;
    auto runs = detail::run_seeds(
        l, opt, "seed_",
        [&](std::uint64_t s) { return run_random_search(l.space, B, rc.T, rc.noise, s, rc.n_init, l.hash); },
        manifest);

    const auto curve = diag::regret_curve(runs);
    std::ostringstream csv;
    csv << "t,evaluations,mean_best_gap,expected_gap,uniform_reference\n";
    for (std::size_t t = 0; t < curve.T(); ++t) {
      const double n = curve.evaluations[t];
      const double e = theory::random_expected_gap(l.space.profile(), n);
      csv << t + 1 << ',' << io::fmt(n) << ',' << io::fmt(curve.mean_gap[t]) << ',' << io::fmt(e) << ','
          << io::fmt(1.0 / (n + 1)) << '\n';
    }
    write_text(l.dir / "expected_gap.csv", csv.str());
    manifest["expected_gap"] = "expected_gap.csv";
    write_text(l.dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << rc.seeds.size() << " baseline traces to " << l.dir.string() << '\n';
    return exit_ok;
  });
}

namespace detail {

// Scenario inputs with strict key checking.
class Inputs {
 public:
  explicit Inputs(const json& j) : j_(j) {
    if (!j.is_object()) throw Error(Errc::Config, "inputs must be an object");
  }
  double num(const std::string& k) {
    seen_.insert(k);
    if (!j_.contains(k)) throw Error(Errc::Config, "missing input " + k);
    if (!j_.at(k).is_number()) throw Error(Errc::Config, "input " + k + " must be a number");
    return j_.at(k).get<double>();
  }
  double num(const std::string& k, double dflt) { return j_.contains(k) ? num(k) : (seen_.insert(k), dflt); }
  bool is_array(const std::string& k) const { return j_.contains(k) && j_.at(k).is_array(); }
  std::size_t length(const std::string& k) const { return j_.at(k).size(); }
  // scalar broadcast or per-round array of length T
  std::vector<double> seq(const std::string& k, std::size_t T) {
    if (!is_array(k)) return std::vector<double>(T, num(k));
    seen_.insert(k);
    std::vector<double> v;
    for (const auto& x : j_.at(k)) {
      if (!x.is_number()) throw Error(Errc::Config, "input " + k + " must hold numbers");
      v.push_back(x.get<double>());
    }
    if (v.size() != T) throw Error(Errc::Config, "input " + k + " must have length T");
    return v;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw Error(Errc::Config, "unknown input " + it.key());
  }

 private:
  const json& j_;
  std::set<std::string> seen_;
};

inline theory::BoundReport scalar(const std::string& formula, double v, std::map<std::string, double> terms = {}) {
  theory::BoundReport r;
  r.formula = formula;
  r.value = r.raw = v;
  r.terms = std::move(terms);
  return r;
}

inline theory::BoundReport miss_bound(Inputs& in) {
  static const char* keys[] = {"J", "N", "ell", "omega", "d2", "u"};
  std::size_t T = 0;
  for (const char* k : keys)
    if (in.is_array(k)) {
      if (T && in.length(k) != T) throw Error(Errc::Config, "per-round inputs differ in length");
      T = in.length(k);
    }
  if (in.is_array("T")) throw Error(Errc::Config, "T must be a number");
  const double t_in = in.num("T", static_cast<double>(T));
  if (t_in < 1 || t_in != std::floor(t_in)) throw Error(Errc::Config, "T must be a positive integer");
  if (T && static_cast<std::size_t>(t_in) != T) throw Error(Errc::Config, "T disagrees with per-round inputs");
  T = static_cast<std::size_t>(t_in);
  theory::MissBoundInputs m;
  m.J = in.seq("J", T);
  m.N = in.seq("N", T);
  m.ell = in.seq("ell", T);
  m.omega = in.seq("omega", T);
  m.d2 = in.seq("d2", T);
  m.u = in.seq("u", T);
  m.p0_star = in.num("p0_star");
  const double ta = in.num("T_act", 1);
  if (ta < 1 || ta != std::floor(ta)) throw Error(Errc::Config, "T_act must be a positive integer");
  m.T_act = static_cast<std::size_t>(ta);
  return theory::miss_probability_bound(m);
}

inline std::size_t count(double v, const char* name) {
  if (v < 0 || v != std::floor(v)) throw Error(Errc::Config, std::string(name) + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline const std::vector<std::string>& formula_ids() {
  static const std::vector<std::string> ids = {
      "hazard",         "miss_probability", "regret_decomposition", "safety",       "threshold_contraction",
      "p_prog",         "search_exponents", "random_tail",          "pool_hit",     "continuous_pool",
      "clean_rate",     "crossover_time",   "wilson"};
  return ids;
}

/// Evaluates one scenario {"id", "formula", "inputs"}; bad ids or inputs are config errors.
inline theory::BoundReport evaluate_scenario(const json& sc) {
  return detail::as_config([&] {
    if (!sc.is_object()) throw Error(Errc::Config, "scenario must be an object");
    for (auto it = sc.begin(); it != sc.end(); ++it)
      if (it.key() != "id" && it.key() != "formula" && it.key() != "inputs")
        throw Error(Errc::Config, "unknown scenario key " + it.key());
    const std::string f = sc.at("formula").get<std::string>();
    const json inputs = sc.value("inputs", json::object());
    detail::Inputs in(inputs);
    theory::BoundReport r;
    if (f == "hazard") {
      r = detail::scalar(f, theory::hazard(in.num("u")));
    } else if (f == "miss_probability") {
      r = detail::miss_bound(in);
    } else if (f == "regret_decomposition") {
      const double g = in.num("gamma"), L = in.num("L_a"), e = in.num("sup_error"), R = in.num("R_f"),
                   m = in.num("miss_prob");
      r = detail::scalar(f, theory::regret_decomposition_bound(g, L, e, R, m),
                         {{"gap", g}, {"score", 2 * L * e}, {"miss", R * m}});
    } else if (f == "safety") {
      const double L = in.num("L_a"), e = in.num("sup_error"), R = in.num("R_f"), p = in.num("p0_star"),
                   J = in.num("total_J");
      const double v = theory::safety_bound(L, e, R, p, J);
      r = detail::scalar(f, v, {{"score", 2 * L * e}, {"exploration", v - 2 * L * e}});
    } else if (f == "threshold_contraction") {
      const auto c = theory::threshold_contraction_bound(in.num("eta0"), in.num("eta_min", 0), in.num("p_prog"),
                                                         in.num("a"), in.num("rounds"));
      r = detail::scalar(f, c.bound, {{"relaxed", c.relaxed}});
    } else if (f == "p_prog") {
      r = detail::scalar(f, theory::p_prog_lower_bound(in.num("J"), in.num("M0_a_eta"), in.num("N"),
                                                       in.num("m_minus")));
    } else if (f == "search_exponents") {
      const double J = in.num("J"), K = in.num("K");
      const auto s = theory::search_exponents(in.num("M0_a_eta"), in.num("m"), in.num("B", J + K), J, K, in.num("N"));
      r = detail::scalar(f, s.gain, {{"lambda_rand", s.lambda_rand}, {"lambda_bo", s.lambda_bo}});
    } else if (f == "random_tail") {
      r = detail::scalar(f, theory::random_tail(in.num("M0_gamma"), in.num("n")));
    } else if (f == "pool_hit") {
      r = detail::scalar(f, diag::pool_hit_probability(in.num("nu"), in.num("N")));
    } else if (f == "continuous_pool") {
      r = detail::scalar(f, static_cast<double>(theory::continuous_pool_requirement(
                                in.num("gamma"), in.num("d_over_alpha"), in.num("C_cont"), in.num("c"))));
    } else if (f == "clean_rate") {
      theory::CleanRateConstants C;
      C.score = in.num("C_score", 1);
      C.activation = in.num("C_activation", 1);
      C.sampler = in.num("C_sampler", 1);
      C.search = in.num("C_search", 1);
      const auto p = theory::clean_rate_terms(in.num("T"), in.num("theta_a"), in.num("c_a", 0), in.num("kappa_a"),
                                              in.num("kappa_alg"), in.num("lambda_bo"), C);
      r = detail::scalar(f, p.score + p.activation + p.sampler + p.search,
                         {{"score", p.score},
                          {"activation", p.activation},
                          {"sampler", p.sampler},
                          {"search", p.search},
                          {"dominant", p.dominant}});
    } else if (f == "crossover_time") {
      r = detail::scalar(f, theory::crossover_time(in.num("lambda"), in.num("theta"), in.num("lo"), in.num("hi")));
    } else if (f == "wilson") {
      const auto e = diag::wilson(detail::count(in.num("hits"), "hits"), detail::count(in.num("m"), "m"),
                                  in.num("z", 1.959963984540054));
      if (e.hits > e.m) throw Error(Errc::Config, "hits exceeds m");
      r = detail::scalar(f, e.value, {{"lo", e.lo}, {"hi", e.hi}});
    } else {
      throw Error(Errc::Config, "unknown formula id '" + f + "'");
    }
    in.finish();
    return r;
  });
}

/// Scenario list from a bare array, {"scenarios": [...]}, or an experiment config's "bounds".
inline json load_scenarios(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Config, "cannot open scenario file " + path);
  json j;
  try {
    j = json::parse(f, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(Errc::Config, std::string("scenario file: ") + e.what());
  }
  if (j.is_array()) return j;
  if (j.is_object() && j.size() == 1 && j.contains("scenarios") && j["scenarios"].is_array()) return j["scenarios"];
  if (j.is_object()) return io::parse_config(j).bounds;
  throw Error(Errc::Config, "scenario file must hold an array or object");
}

inline std::string bounds_csv(const json& scenarios) {
  std::ostringstream os;
  os << "id,formula,value,raw,terms\n";
  std::size_t k = 0;
  for (const auto& sc : scenarios) {
    ++k;
    const auto r = evaluate_scenario(sc);
    const std::string id = sc.contains("id") ? sc.at("id").get<std::string>() : "scenario_" + std::to_string(k);
    if (id.find_first_of(",\"\n") != std::string::npos) throw Error(Errc::Config, "scenario id has CSV metacharacters");
    std::string terms;
    for (const auto& [name, v] : r.terms) terms += (terms.empty() ? "" : ";") + name + "=" + io::fmt(v);
    os << id << ',' << r.formula << ',' << io::fmt(r.value) << ',' << io::fmt(r.raw) << ',' << terms << '\n';
  }
  return os.str();
}

/// CSV to <out>/bounds.csv when an output root is set, else stdout.
inline int cmd_bounds(const Options& opt) {
  return detail::guarded([&] {
    const auto csv = detail::as_config([&] { return bounds_csv(load_scenarios(opt.config)); });
    const fs::path root = output_root(opt, "");
    if (root.empty()) {
      std::cout << csv;
    } else {
      fs::create_directories(root);
      write_text(root / "bounds.csv", csv);
      std::cout << "wrote " << (root / "bounds.csv").string() << '\n';
    }
    return exit_ok;
  });
}

struct DiagnoseReport {
  std::vector<std::string> warnings;
  std::vector<std::string> files;
};

namespace detail {

struct Group {
  std::vector<RunResult> runs;
  std::optional<std::array<double, 3>> nkj;  // N, K, J from a manifest
};

inline std::optional<std::array<double, 3>> budget_from_manifest(const fs::path& dir) {
  const auto p = dir / "manifest.json";
  if (!fs::exists(p)) return std::nullopt;
  std::ifstream f(p);
  try {
    const auto run = json::parse(f).at("config").at("run");
    return std::array<double, 3>{run.at("N").get<double>(), run.at("K").get<double>(), run.at("J").get<double>()};
  } catch (const json::exception&) {
    return std::nullopt;
  }
}


}  // namespace detail

/// Reads every trace under a directory and writes the four diagnostic tables.
inline DiagnoseReport diagnose(const fs::path& trace_dir, const fs::path& out, const std::string& svg_path,
                               std::optional<std::array<double, 3>> nkj_override = std::nullopt) {
  if (!fs::is_directory(trace_dir)) throw Error(Errc::Config, "no trace directory " + trace_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(trace_dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  if (files.empty()) throw Error(Errc::Config, "no .jsonl traces in " + trace_dir.string());
  std::sort(files.begin(), files.end());

  DiagnoseReport rep;
  std::map<std::string, detail::Group> groups;
  for (const auto& p : files) {
    RunResult r;
    try {
      r = io::read_jsonl_file(p.string());
    } catch (const std::exception& e) {
      throw Error(Errc::Config, "unreadable trace " + p.string() + ": " + e.what());
    }
    auto& g = groups[r.method];
    if (!g.runs.empty() && g.runs.front().config_hash != r.config_hash)
      rep.warnings.push_back(r.method + ": traces come from different configs");
    if (!g.nkj) g.nkj = nkj_override ? nkj_override : detail::budget_from_manifest(p.parent_path());
    g.runs.push_back(std::move(r));
  }
  fs::create_directories(out);

  std::map<std::string, diag::RegretCurve> curves;
  for (auto& [m, g] : groups) {
    std::sort(g.runs.begin(), g.runs.end(), [](const RunResult& a, const RunResult& b) { return a.seed < b.seed; });
    try {
      curves[m] = diag::regret_curve(g.runs);
    } catch (const Error& e) {
      rep.warnings.push_back(m + ": " + e.what() + "; phase fit skipped");
    }
  }
  const std::vector<double>* ref = curves.count("random_search") ? &curves["random_search"].mean_gap : nullptr;

  std::ostringstream phase;
  phase << "method,runs,T,t1,t2,level,search_slope,learning_slope,search_coverage,bic,degenerate,regime\n";
  for (const auto& [m, c] : curves) {
    if (c.T() < 3) {
      rep.warnings.push_back(m + ": fewer than 3 rounds; phase fit skipped");
      continue;
    }
    const auto fit = diag::fit_phases(c.mean_gap, c.T() >= 12 ? 2 : 1);
    std::string regime = "n/a";
    if (m != "random_search" && ref && ref->size() == c.T())
      regime = diag::regime_name(diag::classify_regime(fit, c.mean_gap, *ref));
    else if (m != "random_search")
      rep.warnings.push_back(m + ": no matched random_search traces; regime not classified");
    phase << m << ',' << groups[m].runs.size() << ',' << fit.T << ',' << fit.t1 << ',' << fit.t2 << ','
          << io::fmt(fit.level) << ',' << io::fmt(fit.search_slope) << ','
          << io::fmt(fit.learning_slope) << ',' << io::fmt(fit.search_coverage()) << ','
          << io::fmt(fit.bic) << ',' << (fit.degenerate ? 1 : 0) << ',' << regime << '\n';
  }

  std::ostringstream hz, lift, expo;
  hz << "method,seed,t,best_gap,cumulative_hazard\n";
  lift << "method,seed,t,prior_mass,guided_mass,lift,pool_hit,gain,constant_factor\n";
  expo << "method,mass,points,exponent,se\n";
  for (const auto& [m, g] : groups) {
    std::size_t missing = 0;
    std::vector<double> lv, prior, lv_a, guided;
    for (const auto& r : g.runs) {
      for (const auto& rec : r.rounds) {
        lv.push_back(rec.progress_level);
        prior.push_back(rec.prior_progress_mass);
        if (rec.audit_progress_mass) {
          lv_a.push_back(rec.progress_level);
          guided.push_back(*rec.audit_progress_mass);
        }
      }
      try {
        const auto H = diag::cumulative_hazard(r.rounds);
        for (std::size_t t = 0; t < H.size(); ++t)
          hz << m << ',' << r.seed << ',' << r.rounds[t].t << ',' << io::fmt(r.rounds[t].best_gap) << ','
             << io::fmt(H[t]) << '\n';
      } catch (const Error& e) {
        if (e.code() != Errc::MissingAudit) throw;
        ++missing;
      }
      if (!g.nkj) continue;
      const auto [N, K, J] = *g.nkj;
      for (const auto& row : diag::mass_lift_report(r.rounds, N, K, J))
        lift << m << ',' << r.seed << ',' << row.t << ',' << io::fmt(row.prior_mass) << ','
             << io::fmt(row.guided_mass) << ',' << io::fmt(row.lift) << ','
             << io::fmt(row.pool_hit) << ',' << io::fmt(row.gain) << ','
             << (row.constant_factor ? 1 : 0) << '\n';
    }
    if (missing)
      rep.warnings.push_back(m + ": " + std::to_string(missing) + " of " + std::to_string(g.runs.size()) +
                             " traces lack audit fields; hazard and mass-lift rows omitted for them");
    if (!g.nkj && m != "random_search")
      rep.warnings.push_back(m + ": no manifest with N, K, J; mass-lift table skipped");
    auto fit_row = [&](const char* kind, const std::vector<double>& x, const std::vector<double>& y) {
      try {
        const auto e = diag::fit_mass_exponent(x, y);
        expo << m << ',' << kind << ',' << e.used << ',' << io::fmt(e.exponent) << ','
             << io::fmt(e.se) << '\n';
      } catch (const Error& e) {
        if (e.code() != Errc::TooFew) throw;
        rep.warnings.push_back(m + ": " + kind + " exponent needs three positive points");
      }
    };
    if (m != "random_search") {
      fit_row("prior", lv, prior);
      if (!guided.empty()) fit_row("guided", lv_a, guided);
    }
  }

  auto emit = [&](const char* name, const std::string& s) {
    write_text(out / name, s);
    rep.files.push_back((out / name).string());
  };
  emit("phase_fit.csv", phase.str());
  emit("hazard.csv", hz.str());
  emit("mass_lift.csv", lift.str());
  emit("exponent.csv", expo.str());

  if (!svg_path.empty()) {
    std::vector<diag::Series> series;
    for (const auto& [m, c] : curves) {
      diag::Series s{m, {}, {}};
      for (std::size_t t = 0; t < c.T(); ++t) {
        if (c.mean_gap[t] <= 0) continue;
        s.x.push_back(static_cast<double>(t + 1));
        s.y.push_back(c.mean_gap[t]);
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
    if (series.empty()) {
      rep.warnings.push_back("no positive regret to plot; svg skipped");
    } else {
      const fs::path p = svg_path;
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      write_text(p, diag::svg_line_plot(series, "mean best gap per round", true));
      rep.files.push_back(p.string());
    }
  }
  return rep;
}

/// Output goes to --out (or the env root) and defaults to <trace dir>/diagnostics.
inline int cmd_diagnose(const Options& opt) {
  return detail::guarded([&] {
    std::optional<std::array<double, 3>> nkj;
    if (!opt.config.empty()) {
      const auto c = io::load_config(opt.config);
      nkj = std::array<double, 3>{double(c.run.N), double(c.run.K), double(c.run.J)};
    }
    fs::path out = output_root(opt, "");
    if (out.empty()) out = fs::path(opt.trace_dir) / "diagnostics";
    const auto rep = diagnose(opt.trace_dir, out, opt.svg, nkj);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& f : rep.files) std::cout << "wrote " << f << '\n';
    return exit_ok;
  });
}

}  // namespace gdbo::cli
