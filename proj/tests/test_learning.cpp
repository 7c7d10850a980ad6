#include <gtest/gtest.h>

#include <gdbo/learning.hpp>

using namespace gdbo;

namespace {

DesignSpace grid_space(std::size_t n) {
  std::vector<double> p(n, 1.0 / static_cast<double>(n)), f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<double>(i) / static_cast<double>(n);
  return build_explicit_space(p, f);
}

LabeledPool visit_all(const DesignSpace& s, int per_point, const NoiseModel& noise, Rng& rng) {
  LabeledPool pool;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int k = 0; k < per_point; ++k) pool.append({i, sample_observation(s, i, noise, rng), 0, Channel::init});
  return pool;
}

}  // namespace

TEST(Learning, TabularInterpolates) {
  auto s = grid_space(16);
  Rng rng(1, 0);
  auto pool = visit_all(s, 1, NoiseModel::none(), rng);
  auto est = fit_tabular(pool, s, AcquisitionSpec::mean());
  EXPECT_EQ(est.sup_error, 0.0);
  EXPECT_EQ(est.sup_error, est.recompute_sup_error());
}

TEST(Learning, TabularFallback) {
  auto s = grid_space(8);
  LabeledPool pool;
  pool.append({3, s.objective(3), 0, Channel::init});
  auto est = fit_tabular(pool, s, AcquisitionSpec::mean());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(est.values[i], s.objective(3));
  double dev = 0;
  for (std::size_t i = 0; i < s.size(); ++i) dev = std::max(dev, std::abs(s.objective(i) - s.objective(3)));
  EXPECT_DOUBLE_EQ(est.sup_error, dev);

  TabularOptions o;
  o.fallback = -5.0;
  auto est2 = fit_tabular(pool, s, AcquisitionSpec::mean(), o);
  EXPECT_EQ(est2.values[0], -5.0);
  EXPECT_THROW(fit_tabular(LabeledPool{}, s, AcquisitionSpec::mean()), Error);
}

TEST(Learning, TabularMaximalInequality) {
  auto s = grid_space(20);
  const auto noise = NoiseModel::gaussian(0.1);
  const double bound = 0.1 * 4 * std::sqrt(std::log(20.0) / 200);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(100 + trial, 0);
    auto pool = visit_all(s, 200, noise, rng);
    AcquisitionSpec m = AcquisitionSpec::mean();
    ok += fit_tabular(pool, s, m).sup_error <= bound;
  }
  EXPECT_GE(ok, 99);
}

TEST(Learning, TabularConsistency) {
  auto s = grid_space(10);
  const auto noise = NoiseModel::gaussian(0.5);
  std::vector<double> avg;
  for (int budget : {25, 50, 100, 200}) {
    double e = 0;
    for (int trial = 0; trial < 60; ++trial) {
      Rng rng(trial, budget);
      e += fit_tabular(visit_all(s, budget, noise, rng), s, AcquisitionSpec::mean()).sup_error;
    }
    avg.push_back(e / 60);
  }
  for (std::size_t k = 1; k < avg.size(); ++k) EXPECT_LT(avg[k], avg[k - 1]);
}

TEST(Learning, ReservoirOnly) {
  auto s = grid_space(4);
  LabeledPool pool;
  pool.append({0, 0.0, 0, Channel::init});
  pool.append({1, 10.0, 1, Channel::exploit});
  pool.append({2, s.objective(2), 1, Channel::prior_refresh});
  TabularOptions o;
  o.reservoir_only = true;
  auto est = fit_tabular(pool, s, AcquisitionSpec::mean(), o);
  EXPECT_EQ(est.values[1], 0.0);  // exploit label ignored; fallback = min
  auto all = fit_tabular(pool, s, AcquisitionSpec::mean());
  EXPECT_EQ(all.values[1], 10.0);
  EXPECT_EQ(pool.visited(), (PointSet{0, 1, 2}));
}

TEST(Learning, LfboPopulationFixedPoint) {
  auto s = grid_space(4);
  LabeledPool pool;
  pool.append({0, 1.0, 0, Channel::init});  // weight (y - 0)+ = 1
  auto spec = AcquisitionSpec::ei(0.0, NoiseModel::none());
  auto est = fit_lfbo(pool, s, spec);
  EXPECT_NEAR(est.values[0], 1.0, 1e-8);

  for (double a : {0.0, 0.3, 1.0, 4.0}) {
    const double c = a / (1 + a);
    EXPECT_NEAR(lfbo_logit_gradient(c, a), 0.0, 1e-12);
    if (a > 0) {
      const double h = 1e-6;
      const double num = (lfbo_point_loss(c + h, a) - lfbo_point_loss(c - h, a)) / (2 * h);
      EXPECT_NEAR(num, 0.0, 1e-8);
    }
  }
}

TEST(Learning, LfboZeroWeights) {
  auto s = grid_space(4);
  LabeledPool pool;
  for (std::size_t i = 0; i < 4; ++i) pool.append({i, -1.0, 0, Channel::init});
  LfboParams p;
  auto est = fit_lfbo(pool, s, AcquisitionSpec::ei(0.0, NoiseModel::none()), p);
  for (double v : est.values) EXPECT_NEAR(v, p.c_lo / (1 - p.c_lo), 1e-15);
}

TEST(Learning, LfboRecoversEi) {
  auto s = grid_space(6);
  const auto noise = NoiseModel::gaussian(0.3);
  const double tau = 0.5;
  Rng rng(5, 0);
  auto pool = visit_all(s, 10000, noise, rng);
  auto est = fit_lfbo(pool, s, AcquisitionSpec::ei(tau, noise));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(est.values[i], ideal_ei(s, i, tau, noise), 0.05);
  EXPECT_THROW(fit_lfbo(LabeledPool{}, s, AcquisitionSpec::ei(tau, noise)), Error);
}

TEST(Learning, LfboNonConvergence) {
  auto s = grid_space(2);
  LabeledPool pool;
  pool.append({0, 3.0, 0, Channel::init});
  LfboParams p;
  p.max_steps = 1;
  p.learning_rate = 0.01;
  try {
    fit_lfbo(pool, s, AcquisitionSpec::ei(0, NoiseModel::none()), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonConvergence);
  }
}

TEST(Learning, LfboExcessRiskIdentity) {
  Rng rng(6, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 8;
    std::vector<double> a(n), w(n), c(n), cs(n);
    double tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 3 * rng.uniform();
      tot += (w[i] = rng.uniform() + 0.01);
      c[i] = 0.01 + 0.98 * rng.uniform();
      cs[i] = a[i] / (1 + a[i]);
    }
    for (auto& v : w) v /= tot;
    double rhs = 0;
    for (std::size_t i = 0; i < n; ++i) rhs += w[i] * bernoulli_kl(cs[i], c[i]) / (1 - cs[i]);
    EXPECT_NEAR(lfbo_risk(c, a, w) - lfbo_risk(cs, a, w), rhs, 1e-8);
  }
}

TEST(Learning, SupErrorAudit) {
  auto s = grid_space(5);
  auto spec = AcquisitionSpec::mean();
  auto ideal = ideal_scores(spec, s);
  EXPECT_EQ(audit_sup_error(ideal, s, spec).global, 0.0);
  auto v = ideal;
  v[2] += 0.3;
  auto a = audit_sup_error(v, s, spec);
  EXPECT_NEAR(a.global, 0.3, 1e-15);
  PointSet sub{0, 1};
  auto r = audit_sup_error(v, s, spec, &sub);
  EXPECT_EQ(r.restricted, 0.0);
  EXPECT_LE(r.restricted, r.global);
}

TEST(Learning, ActivationTime) {
  EXPECT_EQ(activation_time(0.1, std::vector<double>(5, 0.0)), 1u);
  std::vector<double> inv;
  for (int t = 1; t <= 10; ++t) inv.push_back(1.0 / t);
  EXPECT_EQ(activation_time(0.25, inv), 4u);
  std::vector<double> bumpy{0.5, 0.1, 0.4, 0.1, 0.05};
  std::size_t manual = 0;
  for (std::size_t t = 0; t < bumpy.size(); ++t) {
    bool all = true;
    for (std::size_t s = t; s < bumpy.size(); ++s) all = all && bumpy[s] <= 0.2;
    if (all) {
      manual = t + 1;
      break;
    }
  }
  EXPECT_EQ(activation_time(0.2, bumpy), manual);
  try {
    activation_time(0.01, inv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NeverActivates);
  }
  EXPECT_DOUBLE_EQ(activation_margin(1.0, 2.0), 0.125);
}

TEST(Learning, OracleBounded) {
  auto s = grid_space(50);
  auto est = fit_oracle(s, AcquisitionSpec::mean(), 0.2, 3, 1);
  EXPECT_LE(est.sup_error, 0.2);
  EXPECT_GT(est.sup_error, 0.1);
  auto again = fit_oracle(s, AcquisitionSpec::mean(), 0.2, 3, 1);
  EXPECT_EQ(est.values, again.values);
}
