#include <gtest/gtest.h>

#include <gdbo/cli.hpp>

#include <atomic>

using namespace gdbo;
using namespace gdbo::cli;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gdbo_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path write_json(const fs::path& p, const json& j) {
  write_text(p, j.dump());
  return p;
}

json small_config() {
  return json::parse(R"({
    "landscape": {"kind": "geometry", "n_points": 300, "seed": 2},
    "run": {"T": 4, "N": 16, "K": 4, "n_init": 3, "audit_m": 100,
            "noise": {"kind": "gaussian", "scale": 0.05}, "seeds": [3, 1, 2]}
  })");
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(f, line);) rows.push_back(io::split(line, ','));
  return rows;
}

}  // namespace

TEST(Cli, ParseSeeds) {
  EXPECT_EQ(parse_seeds("4"), (std::vector<std::uint64_t>{4}));
  EXPECT_EQ(parse_seeds("1,5-7,2"), (std::vector<std::uint64_t>{1, 5, 6, 7, 2}));
  for (const char* bad : {"", "a", "3-1", "1,,2", "-4", "1.5"}) EXPECT_THROW(parse_seeds(bad), Error) << bad;
}

TEST(Cli, FanOutCoversAllAndRethrows) {
  std::vector<std::atomic<int>> hit(50);
  fan_out(hit.size(), 4, [&](std::size_t i) { ++hit[i]; });
  for (auto& h : hit) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(fan_out(10, 3,
                       [](std::size_t i) {
                         if (i == 7) throw Error(Errc::InvalidArgument, "boom");
                       }),
               Error);
}

TEST(Cli, BoundsHazard) {
  const auto r = evaluate_scenario(json::parse(R"({"formula": "hazard", "inputs": {"u": 0.5}})"));
  EXPECT_NEAR(r.value, 0.693147, 1e-6);
}

TEST(Cli, BoundsMissMatchesLibrary) {
  const auto r = evaluate_scenario(json::parse(R"({"id": "m", "formula": "miss_probability",
    "inputs": {"T": 10, "J": 1, "N": 8, "ell": 0.4, "omega": 0.1, "d2": 0.001, "u": 0.0, "p0_star": 0.05}})"));
  const auto lib = theory::miss_probability_bound(theory::MissBoundInputs::constant(10, 1, 8, 0.05, 0.4, 0.1, 0.001, 0));
  EXPECT_EQ(r.value, lib.value);
  EXPECT_EQ(r.raw, lib.raw);
  EXPECT_EQ(r.terms, lib.terms);

  auto in = theory::MissBoundInputs::constant(3, 1, 0, 0.001, 0, 0.05, 0, 0.01);
  in.N = {16, 32, 64};
  in.ell = {0.1, 0.2, 0.3};
  in.T_act = 2;
  const auto per = evaluate_scenario(json::parse(R"({"formula": "miss_probability",
    "inputs": {"N": [16, 32, 64], "ell": [0.1, 0.2, 0.3], "J": 1, "omega": 0.05, "d2": 0, "u": 0.01,
               "p0_star": 0.001, "T_act": 2}})"));
  EXPECT_EQ(per.value, theory::miss_probability_bound(in).value);
}

TEST(Cli, BoundsRejects) {
  for (const char* text : {
           R"({"formula": "nope", "inputs": {}})",
           R"({"formula": "hazard", "inputs": {"u": "half"}})",
           R"({"formula": "hazard", "inputs": {}})",
           R"({"formula": "hazard", "inputs": {"u": 0.5, "v": 1}})",
           R"({"formula": "hazard", "inputs": {"u": 1.5}})",
           R"({"formula": "hazard", "inputs": {"u": 0.5}, "extra": 1})",
           R"({"inputs": {"u": 0.5}})",
           R"({"formula": "miss_probability", "inputs": {"N": [1, 2], "ell": [0.1], "J": 1, "omega": 0.1,
               "d2": 0, "u": 0, "p0_star": 0}})",
           R"({"formula": "miss_probability", "inputs": {"J": 1, "N": 1, "ell": 0.1, "omega": 0.1,
               "d2": 0, "u": 0, "p0_star": 0}})",
           R"({"formula": "search_exponents", "inputs": {"M0_a_eta": 0.1, "m": 0.1, "J": 1, "K": 1, "N": 4,
               "B": 3}})",
       }) {
    try {
      evaluate_scenario(json::parse(text));
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::Config) << text;
    }
  }
}

TEST(Cli, BoundsCommandExitCodes) {
  const auto dir = scratch("bounds");
  Options o;
  o.config = write_json(dir / "ok.json", json::parse(R"([{"id": "h", "formula": "hazard", "inputs": {"u": 0.5}}])"))
                 .string();
  o.out = (dir / "out").string();
  EXPECT_EQ(cmd_bounds(o), exit_ok);
  const auto rows = read_csv(dir / "out" / "bounds.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "h");
  EXPECT_EQ(io::parse_double(rows[1][2]), theory::hazard(0.5));

  o.config = write_json(dir / "bad.json", json::parse(R"([{"formula": "zeta", "inputs": {}}])")).string();
  EXPECT_EQ(cmd_bounds(o), exit_config);
  write_text(dir / "broken.json", "[{\"formula\": ");
  o.config = (dir / "broken.json").string();
  EXPECT_EQ(cmd_bounds(o), exit_config);

  // scenarios embedded in an experiment config
  auto cfg = small_config();
  cfg["bounds"] = json::parse(R"([{"formula": "pool_hit", "inputs": {"nu": 0.5, "N": 2}}])");
  o.config = write_json(dir / "cfg.json", cfg).string();
  EXPECT_EQ(cmd_bounds(o), exit_ok);
  EXPECT_EQ(io::parse_double(read_csv(dir / "out" / "bounds.csv")[1][2]), 0.75);
}

TEST(Cli, SimulateDeterministicAndManifestComplete) {
  const auto dir = scratch("simulate");
  Options o;
  o.config = write_json(dir / "c.json", small_config()).string();
  o.out = (dir / "a").string();
  o.jobs = 1;
  ASSERT_EQ(cmd_simulate(o), exit_ok);
  o.out = (dir / "b").string();
  o.jobs = 3;
  ASSERT_EQ(cmd_simulate(o), exit_ok);

  const auto a = dir / "a" / "gdbo", b = dir / "b" / "gdbo";
  std::ifstream mf(a / "manifest.json");
  const auto m = json::parse(mf);
  EXPECT_EQ(m.at("seeds"), json::parse("[3, 1, 2]"));
  EXPECT_EQ(m.at("config_hash"), io::config_hash(io::load_config(o.config)));
  EXPECT_TRUE(m.contains("wall_clock_seconds"));
  EXPECT_TRUE(m.contains("code_version"));
  std::vector<io::SummaryRow> expect;
  const auto space = io::build_landscape(io::load_config(o.config));
  for (const auto& run : m.at("runs")) {
    const auto name = run.at("trace").get<std::string>();
    ASSERT_TRUE(fs::exists(a / name)) << name;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    const auto r = io::read_jsonl_file((a / name).string());
    EXPECT_EQ(r.seed, run.at("seed").get<std::uint64_t>());
    expect.push_back(io::summarize(r, space, 0.8));
  }
  std::ifstream sf(a / m.at("summary").get<std::string>());
  const auto rows = io::read_summary_csv(sf);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_TRUE(rows[i] == expect[i]);
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(Cli, SimulateSeedOverrideAndEnvRoot) {
  const auto dir = scratch("env");
  Options o;
  o.config = write_json(dir / "c.json", small_config()).string();
  o.seeds = "5-6";
  ::setenv(output_root_env, (dir / "root").c_str(), 1);
  const int rc = cmd_simulate(o);
  ::unsetenv(output_root_env);
  ASSERT_EQ(rc, exit_ok);
  EXPECT_TRUE(fs::exists(dir / "root" / "gdbo" / "seed_5.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "root" / "gdbo" / "seed_6.jsonl"));
  EXPECT_FALSE(fs::exists(dir / "root" / "gdbo" / "seed_1.jsonl"));
}

TEST(Cli, SimulateExitCodes) {
  const auto dir = scratch("codes");
  Options o;
  o.out = (dir / "out").string();
  o.config = (dir / "missing.json").string();
  EXPECT_EQ(cmd_simulate(o), exit_config);
  o.config = write_json(dir / "bad.json", json::parse(R"({"run": {"T": 5, "bogus": 1}})")).string();
  EXPECT_EQ(cmd_simulate(o), exit_config);
  o.config = write_json(dir / "dup.json", small_config()).string();
  o.seeds = "1,1";
  EXPECT_EQ(cmd_simulate(o), exit_config);
  o.seeds.clear();
  auto prior = small_config();
  prior["landscape"] = json::parse(R"({"kind": "explicit", "prior": [0.5, -0.5], "objective": [1, 0]})");
  o.config = write_json(dir / "prior.json", prior).string();
  EXPECT_EQ(cmd_simulate(o), exit_config);

  // output path blocked by a regular file: runtime failure
  write_text(dir / "blocker", "x");
  o.config = (dir / "dup.json").string();
  o.out = (dir / "blocker" / "sub").string();
  EXPECT_EQ(cmd_simulate(o), exit_runtime);
}

TEST(Cli, BaselineUniformGapColumns) {
  const auto dir = scratch("baseline");
  const std::size_t n = 100000;
  json prior = json::array(), obj = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    prior.push_back(1.0 / n);
    obj.push_back(1.0 - (static_cast<double>(i) + 0.5) / n);
  }
  auto cfg = small_config();
  cfg["landscape"] = {{"kind", "explicit"}, {"prior", prior}, {"objective", obj}};
  cfg["run"]["T"] = 10;
  cfg["run"]["K"] = 2;
  cfg["run"]["J"] = 1;
  cfg["run"]["n_init"] = 1;
  Options o;
  o.config = write_json(dir / "c.json", cfg).string();
  o.out = (dir / "out").string();
  ASSERT_EQ(cmd_baseline(o), exit_ok);
  const auto base = dir / "out" / "random_search";
  std::ifstream mf(base / "manifest.json");
  EXPECT_EQ(json::parse(mf).at("budget"), 3);
  const auto rows = read_csv(base / "expected_gap.csv");
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "evaluations", "mean_best_gap", "expected_gap",
                                               "uniform_reference"}));
  for (std::size_t t = 1; t < rows.size(); ++t) {
    const double evals = io::parse_double(rows[t][1]);
    EXPECT_EQ(evals, 1.0 + 3.0 * static_cast<double>(t));
    EXPECT_EQ(io::parse_double(rows[t][4]), 1.0 / (evals + 1));
    EXPECT_NEAR(io::parse_double(rows[t][3]), 1.0 / (evals + 1), 1e-4);
  }
  const auto tr = io::read_jsonl_file((base / "seed_1.jsonl").string());
  EXPECT_EQ(tr.method, "random_search");

  cfg["run"]["K"] = 0;
  o.config = write_json(dir / "zero.json", cfg).string();
  EXPECT_EQ(cmd_baseline(o), exit_config);
}

namespace {

// Flat for `act` rounds, then 0.4 decades per round until `search_end`, then t^-2.
RunResult phased_run(std::uint64_t seed, int act, int search_end, int T, bool audits) {
  RunResult r;
  r.method = "gdbo";
  r.seed = seed;
  r.config_hash = "synthetic";
  for (int t = 1; t <= T; ++t) {
    RoundRecord rec;
    rec.t = t;
    double lg;
    if (t <= act) lg = 0;
    else if (t <= search_end) lg = -0.4 * (t - act);
    else lg = -0.4 * (search_end - act) - 2 * std::log10(static_cast<double>(t) / search_end);
    rec.best_gap = std::pow(10.0, lg);
    rec.evaluations = static_cast<std::size_t>(t) * 4;
    rec.progress_level = 0.5 * rec.best_gap;
    rec.prior_progress_mass = std::pow(rec.progress_level, 1.5);
    if (audits) {
      rec.audit_progress_mass = std::min(1.0, 3 * rec.prior_progress_mass);
      rec.audit_threshold_mass = rec.audit_progress_mass;
      rec.pool_hit = diag::pool_hit_probability(*rec.audit_progress_mass, 16);
      rec.hazard_increment = theory::hazard(std::min(*rec.audit_progress_mass, 0.999));
    }
    r.rounds.push_back(rec);
  }
  r.evaluations = r.rounds.back().evaluations;
  r.final_regret = r.rounds.back().best_gap;
  return r;
}

}  // namespace

TEST(Cli, DiagnoseRecoversPhases) {
  const auto dir = scratch("phases");
  for (std::uint64_t s = 1; s <= 3; ++s)
    io::write_jsonl_file((dir / ("seed_" + std::to_string(s) + ".jsonl")).string(), phased_run(s, 5, 15, 30, true));
  diagnose(dir, dir / "diag", (dir / "plot.svg").string(), std::array<double, 3>{16, 4, 1});
  const auto rows = read_csv(dir / "diag" / "phase_fit.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(std::stod(rows[1][3]), 5, 2);
  EXPECT_NEAR(std::stod(rows[1][4]), 15, 2);
  EXPECT_EQ(read_csv(dir / "diag" / "hazard.csv").size(), 1u + 3 * 30);
  EXPECT_EQ(read_csv(dir / "diag" / "mass_lift.csv").size(), 1u + 3 * 30);
  const auto ex = read_csv(dir / "diag" / "exponent.csv");
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[1][1], "prior");
  EXPECT_NEAR(std::stod(ex[1][3]), 1.5, 1e-9);
  EXPECT_TRUE(fs::exists(dir / "plot.svg"));
  EXPECT_NE(slurp(dir / "plot.svg").find("<svg"), std::string::npos);
}

TEST(Cli, DiagnoseWithoutAuditsWarns) {
  const auto dir = scratch("noaudit");
  io::write_jsonl_file((dir / "seed_1.jsonl").string(), phased_run(1, 5, 15, 30, false));
  const auto rep = diagnose(dir, dir / "diag", "");
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(read_csv(dir / "diag" / "phase_fit.csv").size(), 2u);
  EXPECT_EQ(read_csv(dir / "diag" / "hazard.csv").size(), 1u);
  EXPECT_EQ(read_csv(dir / "diag" / "mass_lift.csv").size(), 1u);
}

TEST(Cli, DiagnosePairsWithBaseline) {
  const auto dir = scratch("pair");
  Options o;
  o.config = write_json(dir / "c.json", small_config()).string();
  o.out = (dir / "traces").string();
  ASSERT_EQ(cmd_simulate(o), exit_ok);
  ASSERT_EQ(cmd_baseline(o), exit_ok);
  o.trace_dir = o.out;
  o.out.clear();
  o.config.clear();
  ASSERT_EQ(cmd_diagnose(o), exit_ok);
  const auto rows = read_csv(dir / "traces" / "diagnostics" / "phase_fit.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "gdbo");
  EXPECT_NE(rows[1].back(), "n/a");
  EXPECT_EQ(rows[2][0], "random_search");
  // manifest supplies N, K, J, so the lift table has one row per audited round
  EXPECT_EQ(read_csv(dir / "traces" / "diagnostics" / "mass_lift.csv").size(), 1u + 3 * 4);
}

TEST(Cli, DiagnoseEmptyDir) {
  const auto dir = scratch("empty");
  Options o;
  o.trace_dir = dir.string();
  EXPECT_EQ(cmd_diagnose(o), exit_config);
  o.trace_dir = (dir / "absent").string();
  EXPECT_EQ(cmd_diagnose(o), exit_config);
  write_text(dir / "junk.jsonl", "not json\n");
  o.trace_dir = dir.string();
  EXPECT_EQ(cmd_diagnose(o), exit_config);
}
