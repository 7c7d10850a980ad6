#include <gtest/gtest.h>

#include <gdbo/diagnostics.hpp>

using namespace gdbo;
using namespace gdbo::diag;

namespace {

std::vector<double> three_piece(std::size_t T, std::size_t t1, std::size_t t2, double slope) {
  std::vector<double> r(T);
  const double top = 0.5;
  for (std::size_t i = 0; i < T; ++i) {
    const double t = static_cast<double>(i + 1);
    if (i < t1) {
      r[i] = top;
    } else if (i < t2) {
      r[i] = top * std::exp(-slope * (t - static_cast<double>(t1)));
    } else {
      const double at = top * std::exp(-slope * static_cast<double>(t2 - t1));
      r[i] = at * std::pow(t / static_cast<double>(t2), -0.5);
    }
  }
  return r;
}

}  // namespace

TEST(Diagnostics, PhaseFitSemiLog) {
  auto r = three_piece(40, 5, 30, 0.3);
  auto f = fit_phases(r, 3);
  EXPECT_NEAR(f.search_slope, -0.3 / std::log(10.0), 0.05 * 0.3 / std::log(10.0));
  EXPECT_NEAR(static_cast<double>(f.t1), 5, 2);
  EXPECT_NEAR(static_cast<double>(f.t2), 30, 2);
  EXPECT_FALSE(f.degenerate);
}

TEST(Diagnostics, PhaseFitPowerLaw) {
  std::vector<double> r(40);
  for (std::size_t i = 0; i < 40; ++i) r[i] = std::pow(static_cast<double>(i + 1), -0.5);
  auto f = fit_phases(r, 3);
  // the tail piece sits on the pure power law
  EXPECT_NEAR(f.learning_slope, -0.5, 0.05);
}

TEST(Diagnostics, PhaseFitConstantAndShort) {
  auto f = fit_phases(std::vector<double>(12, 0.3), 3);
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(classify_regime(f, std::vector<double>(12, 0.3), std::vector<double>(12, 1.0)), Regime::all_activation);
  try {
    fit_phases(std::vector<double>(5, 1.0), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooShort);
  }
}

TEST(Diagnostics, PhaseFitScaleInvariant) {
  auto r = three_piece(30, 4, 20, 0.25);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= 1 + 0.05 * std::sin(3.0 * i);
  auto a = fit_phases(r, 3);
  for (auto& v : r) v *= 37.0;
  auto b = fit_phases(r, 3);
  EXPECT_EQ(a.t1, b.t1);
  EXPECT_EQ(a.t2, b.t2);
  EXPECT_NEAR(a.search_slope, b.search_slope, 1e-9);
  EXPECT_NEAR(a.learning_slope, b.learning_slope, 1e-9);
}

TEST(Diagnostics, FloorExcluded) {
  auto r = three_piece(30, 4, 20, 0.25);
  for (std::size_t i = 25; i < 30; ++i) r[i] = 0.0;
  auto f = fit_phases(r, 3);
  EXPECT_EQ(f.n_used, 25u);
  EXPECT_LE(f.n_search, f.n_used);
  EXPECT_DOUBLE_EQ(f.search_coverage(), static_cast<double>(f.n_search) / 25);
}

TEST(Diagnostics, Regimes) {
  const std::size_t T = 30;
  auto fast = three_piece(T, 3, 25, 0.4);
  std::vector<double> ref(T), slow(T);
  for (std::size_t i = 0; i < T; ++i) {
    ref[i] = 0.5 / (i + 2.0);
    slow[i] = std::max(0.5 * std::exp(-0.4 * i), 0.2);
  }
  EXPECT_EQ(classify_regime(fit_phases(fast, 3), fast, ref), Regime::search_dominated);
  EXPECT_EQ(classify_regime(fit_phases(ref, 3), ref, ref), Regime::baseline_equivalent);
  EXPECT_EQ(classify_regime(fit_phases(slow, 3), slow, ref), Regime::floor_dominated);
}

TEST(Diagnostics, EmpiricalMass) {
  auto s = build_explicit_space({0.3, 0.7}, {1.0, 0.0});
  std::vector<std::size_t> in(50, 0), out(50, 1);
  EXPECT_EQ(empirical_mass_threshold(in, s, 0.8).value, 1.0);
  EXPECT_EQ(empirical_mass_threshold(out, s, 0.8).value, 0.0);
  EXPECT_EQ(empirical_mass_progress(in, s, 0.5, 1.0).value, 1.0);

  Rng rng(1, 0);
  Categorical cat(s.prior());
  int covered = 0;
  double mean = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    auto e = empirical_mass_threshold(cat.draw(10000, rng), s, 0.8);
    covered += e.lo <= 0.3 && 0.3 <= e.hi;
    mean += e.value;
  }
  EXPECT_GE(covered, 930);
  EXPECT_NEAR(mean / reps, 0.3, 3 * std::sqrt(0.21 / 10000 / reps));
}

TEST(Diagnostics, PoolHit) {
  EXPECT_EQ(pool_hit_probability(0, 128), 0.0);
  EXPECT_DOUBLE_EQ(pool_hit_probability(0.5, 1), 0.5);
  EXPECT_NEAR(pool_hit_probability(0.01, 128), 0.7237483323007917, 1e-12);
  double prev = 0;
  for (double nu = 0; nu <= 1; nu += 0.1) {
    const double v = pool_hit_probability(nu, 8);
    EXPECT_GE(v, prev);
    EXPECT_GE(pool_hit_probability(nu, 9), v);
    prev = v;
  }
}

TEST(Diagnostics, CumulativeHazard) {
  std::vector<RoundRecord> rs(5);
  for (auto& r : rs) r.hazard_increment = 0.0;
  for (double v : cumulative_hazard(rs)) EXPECT_EQ(v, 0.0);
  const double step = 128 * theory::hazard(0.01);
  for (auto& r : rs) r.hazard_increment = step;
  auto c = cumulative_hazard(rs);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_NEAR(c[t], step * (t + 1), 1e-12);
  rs[2].hazard_increment.reset();
  try {
    cumulative_hazard(rs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingAudit);
  }
}

TEST(Diagnostics, HazardCollapseOnContractionRun) {
  // uniform-gap landscape with exact progress-guided sampler: log best gap tracks cumulative hazard
  const std::size_t n = 100000;
  std::vector<double> p(n, 1.0 / n), f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = -static_cast<double>(i) / n;
  auto s = build_explicit_space(p, f);
  RunConfig c;
  c.T = 12;
  c.N = 2;
  c.K = 1;
  c.J = 1;
  c.n_init = 2;
  c.beta = 1;
  c.learner.kind = LearnerSpec::Kind::oracle;
  c.audit_m = 2000;
  auto r = run_gdbo(s, c, 3);
  auto H = cumulative_hazard(r.rounds);
  std::vector<double> x, y;
  for (std::size_t t = 0; t < r.rounds.size(); ++t) {
    if (r.rounds[t].best_gap <= 0) break;
    x.push_back(H[t]);
    y.push_back(std::log(r.rounds[t].best_gap));
  }
  ASSERT_GE(x.size(), 5u);
  EXPECT_GE(linear_fit(x, y).r2, 0.8);
  for (std::size_t t = 1; t < H.size(); ++t) EXPECT_GE(H[t], H[t - 1]);
}

TEST(Diagnostics, MassExponent) {
  std::vector<double> g, m;
  for (int i = 1; i <= 50; ++i) {
    g.push_back(i * 0.01);
    m.push_back(std::pow(i * 0.01, 2));
  }
  EXPECT_NEAR(fit_mass_exponent(g, m).exponent, 2.0, 1e-9);
  EXPECT_THROW(fit_mass_exponent({0.1, 0.2}, {0.1, 0.2}), Error);

  GeometryParams gp;
  gp.chi_f = 2;
  gp.d0 = 1;
  gp.n_points = 10000;
  auto land = generate_geometry_landscape(gp);
  EXPECT_NEAR(profile_exponent(land.space.profile(), land.window_gap).exponent, 0.5, 0.05);

  Rng rng(2, 0);
  std::vector<double> gg, mm;
  for (int i = 1; i <= 40; ++i) {
    const double gam = 0.02 * i, truth = gam;
    std::size_t hits = 0;
    for (int k = 0; k < 10000; ++k) hits += rng.uniform() < truth;
    gg.push_back(gam);
    mm.push_back(static_cast<double>(hits) / 10000);
  }
  auto e = fit_mass_exponent(gg, mm);
  EXPECT_NEAR(e.exponent, 1.0, 3 * e.se + 1e-3);
}

TEST(Diagnostics, MassLift) {
  auto same = mass_lift_report({0.1, 0.2}, {0.1, 0.2}, 32, 32, 1);
  for (const auto& r : same) {
    EXPECT_DOUBLE_EQ(r.lift, 1.0);
    EXPECT_NEAR(r.gain, 0.0, 1e-12);
  }
  auto zero = mass_lift_report({0.1}, {0.0}, 32, 32, 1);
  EXPECT_EQ(zero[0].lift, 0.0);
  EXPECT_TRUE(zero[0].constant_factor);
  EXPECT_THROW(mass_lift_report({0.1}, {0.1, 0.2}, 8, 8, 1), Error);
}

TEST(Diagnostics, MassLiftTrendOnUniformGaps) {
  // guided lift of U_{a eta} clears the (1 - a) / M0(eta) floor and tracks the exact tilt
  const std::size_t n = 100000;
  std::vector<double> p(n, 1.0 / n), f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = -static_cast<double>(i) / n;
  auto s = build_explicit_space(p, f);
  RunConfig c;
  c.T = 8;
  c.N = 2;
  c.K = 1;
  c.J = 1;
  c.n_init = 2;
  c.beta = 1;
  c.learner.kind = LearnerSpec::Kind::oracle;
  c.audit_m = 0;
  c.a_progress = 0.5;
  auto r = run_gdbo(s, c, 5);
  int checked = 0;
  for (const auto& rec : r.rounds) {
    if (rec.prior_progress_mass <= 0 || rec.eta_prev < 50.0 / n) continue;
    const double lift = rec.target_progress_mass / rec.prior_progress_mass;
    const double a = c.a_progress;
    const double floor = (1 - a) / s.mass_at(rec.eta_prev);
    const double exact = theory::ei_progress_mass(s.profile(), rec.eta_prev, a).value / s.mass_at(a * rec.eta_prev);
    EXPECT_GE(lift, floor);
    EXPECT_GE(lift, exact / 2);
    EXPECT_LE(lift, exact * 2);
    ++checked;
  }
  EXPECT_GE(checked, 2);
}

TEST(Diagnostics, SvgPlot) {
  auto svg = svg_line_plot({{"a", {1, 2, 3}, {1, 0.1, 0.01}}}, "regret", true);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}
