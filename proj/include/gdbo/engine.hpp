#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "acquisition.hpp"
#include "domain.hpp"
#include "learning.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "theory.hpp"

namespace gdbo {

struct LearnerSpec {
  enum class Kind { tabular, lfbo, oracle };
  Kind kind = Kind::tabular;
  bool reservoir_only = false;
  int steps = 500;
  double learning_rate = 1.0;
  double tolerance = 1e-10;
  double c_lo = 1e-4, c_hi = 1 - 1e-4;
  double oracle_error = 0.0;  // oracle only: sup-norm size of the injected perturbation
};

struct SamplerSpec {
  enum class Kind { exact, resample_prior, resample_proposal, contaminated };
  Kind kind = Kind::exact;
  std::size_t M = 256;
  double eps = 0.0;
  double omega = 0.0;  // certificate slack; 0 means half the target mass
};

inline const char* learner_name(LearnerSpec::Kind k) {
  switch (k) {
    case LearnerSpec::Kind::tabular: return "tabular";
    case LearnerSpec::Kind::lfbo: return "lfbo";
    case LearnerSpec::Kind::oracle: return "oracle";
  }
  return "tabular";
}

inline const char* sampler_name(SamplerSpec::Kind k) {
  switch (k) {
    case SamplerSpec::Kind::exact: return "exact";
    case SamplerSpec::Kind::resample_prior: return "resample_prior";
    case SamplerSpec::Kind::resample_proposal: return "resample_proposal";
    case SamplerSpec::Kind::contaminated: return "contaminated";
  }
  return "exact";
}

struct RunConfig {
  enum class Guidance { log_floor, linear };
  enum class Threshold { known, estimated };

  std::size_t T = 20, N = 128, K = 32, J = 1, n_init = 32;
  double beta = 1.0;
  AcquisitionSpec acquisition = AcquisitionSpec::progress(1.0);
  bool dynamic_threshold = true;
  Guidance guidance = Guidance::log_floor;
  Threshold threshold = Threshold::known;
  double fstar_margin = 0.0;
  LearnerSpec learner;
  SamplerSpec sampler;
  std::size_t audit_m = 1000;
  double tau_audit = 0.8;
  double a_progress = 0.75;
  NoiseModel noise;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const {
    require(T >= 1, Errc::InvalidArgument, "T must be >= 1");
    require(K >= 1 && N >= K, Errc::InvalidArgument, "need N >= K >= 1");
    require(n_init >= 1, Errc::InvalidArgument, "n_init must be >= 1");
    require(beta >= 0, Errc::BetaNegative, "beta must be >= 0");
    require(a_progress > 0 && a_progress < 1, Errc::InvalidArgument, "a_progress in (0,1)");
    require(tau_audit >= 0 && tau_audit <= 1, Errc::InvalidArgument, "tau_audit in [0,1]");
    require(sampler.eps >= 0 && sampler.eps <= 1, Errc::InvalidArgument, "sampler eps in [0,1]");
    require(sampler.M >= 1, Errc::InvalidArgument, "sampler M >= 1");
    require(sampler.omega >= 0, Errc::InvalidArgument, "omega >= 0");
    require(learner.kind != LearnerSpec::Kind::lfbo || acquisition.kind == AcquisitionSpec::Kind::ei,
            Errc::InvalidArgument, "lfbo learns the ei score only");
    acquisition.validate();
  }
};

struct QueriedPoint {
  std::size_t point = 0;
  Channel channel = Channel::exploit;
  double y = 0;
};

struct RoundRecord {
  int t = 0;
  std::vector<QueriedPoint> queries;
  double eta_prev = 0;            // best gap before the round
  double best_gap = 0;            // best gap after the round
  double recommendation_gap = 0;  // argmax of the round's estimate over data seen before the round
  double progress_level = 0;      // a * eta_prev
  double prior_progress_mass = 0;
  double target_progress_mass = 0;
  double law_progress_mass = 0;
  std::optional<double> audit_threshold_mass;
  std::optional<double> audit_progress_mass;
  std::optional<double> pool_hit;
  std::optional<double> hazard_increment;
  double sup_error = 0;
  SamplerCertificate certificate;
  std::size_t k_eff = 0;
  std::size_t evaluations = 0;  // cumulative
  bool progressed = false;
};

struct RunResult {
  std::string method = "gdbo";
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<QueriedPoint> init;
  std::vector<RoundRecord> rounds;
  std::size_t recommendation = 0;
  double final_regret = 0;
  std::vector<std::pair<std::size_t, double>> final_scores;  // estimate over evaluated points
  std::size_t evaluations = 0;
};

/// Dedup, rank by score (ties: lower index), keep the first K.
inline std::vector<std::size_t> top_k_select(std::vector<std::size_t> candidates, const std::vector<double>& scores,
                                             std::size_t K) {
  require(!candidates.empty(), Errc::EmptyCandidates, "no candidates");
  require(K >= 1, Errc::InvalidArgument, "K must be >= 1");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (candidates.size() > K) candidates.resize(K);
  return candidates;
}

/// argmax of the estimate over distinct evaluated points, ties to the lowest index
inline std::size_t recommend(const LabeledPool& pool, const std::vector<double>& estimate) {
  require(!pool.empty(), Errc::EmptyPool, "nothing evaluated");
  const PointSet v = pool.visited();
  std::size_t best = v.front();
  for (std::size_t i : v)
    if (estimate[i] > estimate[best]) best = i;
  return best;
}

inline std::size_t recommend(const LabeledPool& pool, const ScoreEstimate& est) { return recommend(pool, est.values); }

struct AuditMasses {
  double threshold_mass = 0;
  double progress_mass = 0;
  double pool_hit = 0;
};

/// Side-channel audit draws from the law; never added to the labeled pool.
inline AuditMasses audit_round(const DesignSpace& space, const TerminalLaw& law, double tau, double a, double eta_prev,
                               std::size_t m, std::size_t N, Rng& rng) {
  require(m >= 1, Errc::InvalidArgument, "audit size must be >= 1");
  const auto z = sample_law(law, m, rng);
  std::size_t hit_tau = 0, hit_prog = 0;
  for (std::size_t i : z) {
    if (space.normalized(i) >= tau) ++hit_tau;
    if (space.gap(i) <= a * eta_prev) ++hit_prog;
  }
  AuditMasses r;
  r.threshold_mass = static_cast<double>(hit_tau) / static_cast<double>(m);
  r.progress_mass = static_cast<double>(hit_prog) / static_cast<double>(m);
  r.pool_hit = 1 - std::pow(1 - r.progress_mass, static_cast<double>(N));
  return r;
}

namespace detail {

inline double best_gap(const DesignSpace& space, const LabeledPool& pool) {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& r : pool.records()) g = std::min(g, space.gap(r.point));
  return g;
}

inline double incumbent(const LabeledPool& pool, std::size_t n) {
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> cnt(n, 0);
  for (const auto& r : pool.records()) {
    sum[r.point] += r.y;
    cnt[r.point] += 1;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (cnt[i]) best = std::max(best, sum[i] / static_cast<double>(cnt[i]));
  return best;
}

// acquisition with this round's threshold resolved
inline AcquisitionSpec resolve(const RunConfig& cfg, const DesignSpace& space, const LabeledPool& pool, double eta,
                               std::optional<double>& fstar_hat) {
  using K = AcquisitionSpec::Kind;
  AcquisitionSpec s = cfg.acquisition;
  s.noise = cfg.noise;
  fstar_hat.reset();
  if (!cfg.dynamic_threshold) return s;
  if (s.kind == K::progress) {
    if (cfg.threshold == RunConfig::Threshold::estimated) {
      fstar_hat = incumbent(pool, space.size()) + cfg.fstar_margin;
      s.eta = std::max(cfg.fstar_margin, std::numeric_limits<double>::min());
    } else {
      s.eta = std::max(eta, std::numeric_limits<double>::min());
    }
  } else if (s.kind == K::ei || s.kind == K::log_ei || s.kind == K::pi) {
    s.tau = incumbent(pool, space.size());
  }
  return s;
}

inline ScoreEstimate fit(const RunConfig& cfg, const DesignSpace& space, const LabeledPool& pool,
                         const AcquisitionSpec& spec, const std::optional<double>& fstar_hat, std::uint64_t seed,
                         std::uint64_t round) {
  switch (cfg.learner.kind) {
    case LearnerSpec::Kind::tabular: {
      TabularOptions o;
      o.reservoir_only = cfg.learner.reservoir_only;
      o.f_star = fstar_hat;
      return fit_tabular(pool, space, spec, o);
    }
    case LearnerSpec::Kind::lfbo: {
      LfboParams p;
      p.c_lo = cfg.learner.c_lo;
      p.c_hi = cfg.learner.c_hi;
      p.max_steps = cfg.learner.steps;
      p.learning_rate = cfg.learner.learning_rate;
      p.tolerance = cfg.learner.tolerance;
      p.reservoir_only = cfg.learner.reservoir_only;
      return fit_lfbo(pool, space, spec, p);
    }
    case LearnerSpec::Kind::oracle:
      return fit_oracle(space, spec, cfg.learner.oracle_error, seed, round);
  }
  throw Error(Errc::InvalidArgument, "unknown learner");
}

inline std::vector<double> guidance_scores(const RunConfig& cfg, const AcquisitionSpec& spec,
                                           const std::vector<double>& est) {
  using K = AcquisitionSpec::Kind;
  const bool utility = spec.kind == K::ei || spec.kind == K::progress;
  if (cfg.guidance != RunConfig::Guidance::log_floor || !utility) return est;
  std::vector<double> g(est.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::log(std::max(est[i], 0.0) + spec.eps_ei);
  return g;
}

inline TerminalLaw realize(const RunConfig& cfg, const DesignSpace& space, const GibbsTarget& target,
                           const std::vector<double>& g, Rng& rng) {
  switch (cfg.sampler.kind) {
    case SamplerSpec::Kind::exact: return exact_law(target);
    case SamplerSpec::Kind::contaminated: return contaminated_sampler(target, cfg.sampler.eps);
    case SamplerSpec::Kind::resample_prior: return resample_prior_corrected(space, g, cfg.beta, cfg.sampler.M, rng);
    case SamplerSpec::Kind::resample_proposal: {
      const TerminalLaw prop = contaminated_sampler(target, cfg.sampler.eps);
      return resample_generic_proposal(space, log_weights(target), prop, cfg.sampler.M, rng);
    }
  }
  throw Error(Errc::InvalidArgument, "unknown sampler");
}

}  // namespace detail

/// One seeded run of the guided template.
inline RunResult run_gdbo(const DesignSpace& space, const RunConfig& cfg, std::uint64_t seed,
                          const std::string& config_hash = "") {
  cfg.validate();
  Rng rng(seed, 1);
  Rng audit_rng(seed, 2);
  const Categorical prior(space.prior());

  RunResult res;
  res.seed = seed;
  res.config_hash = config_hash;
  LabeledPool pool;
  auto evaluate = [&](std::size_t x, Channel ch, int round) {
    QueriedPoint q{x, ch, sample_observation(space, x, cfg.noise, rng)};
    pool.append({x, q.y, round, ch});
    ++res.evaluations;
    return q;
  };
  for (std::size_t i = 0; i < cfg.n_init; ++i) res.init.push_back(evaluate(prior(rng), Channel::init, 0));

  const PointSet xstar = space.optimizer_set();
  double eta = detail::best_gap(space, pool);
  const double a = cfg.a_progress;

  for (std::size_t t = 1; t <= cfg.T; ++t) {
    RoundRecord rec;
    rec.t = static_cast<int>(t);
    rec.eta_prev = eta;
    rec.progress_level = a * eta;

    std::optional<double> fstar_hat;
    const AcquisitionSpec spec = detail::resolve(cfg, space, pool, eta, fstar_hat);
    const ScoreEstimate est = detail::fit(cfg, space, pool, spec, fstar_hat, seed, t);
    rec.sup_error = est.sup_error;
    rec.recommendation_gap = space.gap(recommend(pool, est));

    const auto g = detail::guidance_scores(cfg, spec, est.values);
    const GibbsTarget target = build_gibbs(space, g, cfg.beta);
    const TerminalLaw law = detail::realize(cfg, space, target, g, rng);

    for (std::size_t i = 0; i < space.size(); ++i) {
      if (space.gap(i) > rec.progress_level) continue;
      rec.prior_progress_mass += space.prior(i);
      rec.target_progress_mass += target.probs[i];
      rec.law_progress_mass += law.probs[i];
    }
    const double ell = target.mass(xstar);
    rec.certificate = certificate_for_set(target, law, xstar, cfg.sampler.omega > 0 ? cfg.sampler.omega : ell / 2);

    if (cfg.audit_m > 0) {
      const auto am = audit_round(space, law, cfg.tau_audit, a, eta, cfg.audit_m, cfg.N, audit_rng);
      rec.audit_threshold_mass = am.threshold_mass;
      rec.audit_progress_mass = am.progress_mass;
      rec.pool_hit = am.pool_hit;
      rec.hazard_increment = theory::scaled_hazard(static_cast<double>(cfg.N), am.progress_mass);
    }

    const auto cand = Categorical(law.probs).draw(cfg.N, rng);
    const auto chosen = top_k_select(cand, est.values, cfg.K);
    rec.k_eff = chosen.size();
    for (std::size_t x : chosen) rec.queries.push_back(evaluate(x, Channel::exploit, rec.t));
    for (std::size_t j = 0; j < cfg.J; ++j) rec.queries.push_back(evaluate(prior(rng), Channel::prior_refresh, rec.t));

    eta = detail::best_gap(space, pool);
    rec.best_gap = eta;
    rec.progressed = eta <= rec.progress_level;
    rec.evaluations = res.evaluations;
    res.rounds.push_back(std::move(rec));
  }

  std::optional<double> fstar_hat;
  const AcquisitionSpec spec = detail::resolve(cfg, space, pool, eta, fstar_hat);
  const ScoreEstimate est = detail::fit(cfg, space, pool, spec, fstar_hat, seed, cfg.T + 1);
  res.recommendation = recommend(pool, est);
  res.final_regret = space.gap(res.recommendation);
  for (std::size_t x : pool.visited()) res.final_scores.emplace_back(x, est.values[x]);
  return res;
}

/// No-filtering baseline: B prior draws per round, recommendation by sample mean.
inline RunResult run_random_search(const DesignSpace& space, std::size_t B, std::size_t T, const NoiseModel& noise,
                                   std::uint64_t seed, std::size_t n_init = 0, const std::string& config_hash = "") {
  require(B * T > 0, Errc::InvalidArgument, "B * T must be > 0");
  Rng rng(seed, 1);
  const Categorical prior(space.prior());
  RunResult res;
  res.method = "random_search";
  res.seed = seed;
  res.config_hash = config_hash;
  LabeledPool pool;
  auto evaluate = [&](std::size_t x, Channel ch, int round) {
    QueriedPoint q{x, ch, sample_observation(space, x, noise, rng)};
    pool.append({x, q.y, round, ch});
    ++res.evaluations;
    return q;
  };
  for (std::size_t i = 0; i < n_init; ++i) res.init.push_back(evaluate(prior(rng), Channel::init, 0));
  double eta = pool.empty() ? space.range() : detail::best_gap(space, pool);
  for (std::size_t t = 1; t <= T; ++t) {
    RoundRecord rec;
    rec.t = static_cast<int>(t);
    rec.eta_prev = eta;
    for (std::size_t b = 0; b < B; ++b) rec.queries.push_back(evaluate(prior(rng), Channel::prior_refresh, rec.t));
    eta = detail::best_gap(space, pool);
    rec.best_gap = eta;
    rec.k_eff = 0;
    rec.evaluations = res.evaluations;
    res.rounds.push_back(std::move(rec));
  }
  const ScoreEstimate est = fit_tabular(pool, space, AcquisitionSpec::mean());
  res.recommendation = recommend(pool, est);
  res.final_regret = space.gap(res.recommendation);
  for (std::size_t x : pool.visited()) res.final_scores.emplace_back(x, est.values[x]);
  return res;
}

}  // namespace gdbo
