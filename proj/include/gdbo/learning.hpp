#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "acquisition.hpp"
#include "domain.hpp"

namespace gdbo {

enum class Channel { init, prior_refresh, exploit };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::init: return "init";
    case Channel::prior_refresh: return "prior_refresh";
    case Channel::exploit: return "exploit";
  }
  return "init";
}

struct LabeledRecord {
  std::size_t point = 0;
  double y = 0;
  int round = 0;
  Channel channel = Channel::init;
};

/// Append-only label store. Initial prior samples count as reservoir labels.
class LabeledPool {
 public:
  void append(const LabeledRecord& r) { records_.push_back(r); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<LabeledRecord>& records() const { return records_; }

  static bool in_reservoir(const LabeledRecord& r) { return r.channel != Channel::exploit; }

  /// distinct evaluated points, ascending
  PointSet visited() const {
    PointSet v;
    v.reserve(records_.size());
    for (const auto& r : records_) v.push_back(r.point);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

 private:
  std::vector<LabeledRecord> records_;
};

struct ScoreEstimate {
  std::vector<double> values;
  std::vector<double> ideal;
  double sup_error = 0;
  double envelope = std::numeric_limits<double>::infinity();
  bool within_envelope = true;

  double recompute_sup_error() const {
    double e = 0;
    for (std::size_t i = 0; i < values.size(); ++i) e = std::max(e, std::abs(values[i] - ideal[i]));
    return e;
  }

  void finalize(double env = std::numeric_limits<double>::infinity()) {
    sup_error = recompute_sup_error();
    envelope = env;
    within_envelope = sup_error <= envelope;
  }
};

struct TabularOptions {
  bool reservoir_only = false;
  std::optional<double> fallback;  // unset: pessimistic min of observed scores
  std::optional<double> f_star;    // plug-in optimum for the progress utility
};

namespace detail {
struct PointStats {
  std::vector<double> sum;
  std::vector<std::size_t> count;
};

inline PointStats collect(const LabeledPool& pool, std::size_t n, bool reservoir_only) {
  PointStats s{std::vector<double>(n, 0.0), std::vector<std::size_t>(n, 0)};
  for (const auto& r : pool.records()) {
    if (reservoir_only && !LabeledPool::in_reservoir(r)) continue;
    s.sum[r.point] += r.y;
    s.count[r.point] += 1;
  }
  return s;
}

inline void fill_unvisited(std::vector<double>& v, const std::vector<std::size_t>& count,
                           const std::optional<double>& fallback) {
  double fb = std::numeric_limits<double>::infinity();
  if (fallback) {
    fb = *fallback;
  } else {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (count[i] > 0) fb = std::min(fb, v[i]);
  }
  for (std::size_t i = 0; i < v.size(); ++i)
    if (count[i] == 0) v[i] = fb;
}
}  // namespace detail

/// Per-point sample mean pushed through the acquisition's plug-in form.
inline ScoreEstimate fit_tabular(const LabeledPool& pool, const DesignSpace& space, const AcquisitionSpec& spec,
                                 const TabularOptions& opt = {}) {
  spec.validate();
  const auto st = detail::collect(pool, space.size(), opt.reservoir_only);
  const bool any = std::any_of(st.count.begin(), st.count.end(), [](std::size_t c) { return c > 0; });
  require(any, Errc::EmptyPool, "no labels to fit");

  const double fs = opt.f_star.value_or(space.f_star());
  const double sd = spec.noise.stddev();
  ScoreEstimate est;
  est.values.assign(space.size(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (st.count[i] == 0) continue;
    const double n = static_cast<double>(st.count[i]);
    est.values[i] = plug_in_score(spec, st.sum[i] / n, sd / std::sqrt(n), fs);
  }
  detail::fill_unvisited(est.values, st.count, opt.fallback);
  est.ideal = ideal_scores(spec, space);
  est.finalize();
  return est;
}

struct LfboParams {
  double c_lo = 1e-4;
  double c_hi = 1.0 - 1e-4;
  int max_steps = 500;
  double learning_rate = 1.0;
  double tolerance = 1e-10;
  bool reservoir_only = false;
  std::optional<double> fallback;
};

inline double lfbo_point_loss(double c, double a) { return -a * std::log(c) - std::log1p(-c); }

/// derivative of lfbo_point_loss in the logit of c
inline double lfbo_logit_gradient(double c, double a) { return c - a * (1.0 - c); }

inline double bernoulli_kl(double p, double q) {
  double k = 0;
  if (p > 0) k += p * std::log(p / q);
  if (p < 1) k += (1 - p) * std::log((1 - p) / (1 - q));
  return k;
}

/// sum_x w(x) loss(c(x), a(x))
inline double lfbo_risk(const std::vector<double>& c, const std::vector<double>& a, const std::vector<double>& w) {
  require(c.size() == a.size() && a.size() == w.size(), Errc::LengthMismatch, "lfbo risk inputs");
  double r = 0;
  for (std::size_t i = 0; i < c.size(); ++i) r += w[i] * lfbo_point_loss(c[i], a[i]);
  return r;
}

/// Weighted classifier with one logit per visited point; EI read off the odds.
/// The loss separates across points, so full-batch descent is run with a
/// per-coordinate curvature step and projection onto the clip interval.
inline ScoreEstimate fit_lfbo(const LabeledPool& pool, const DesignSpace& space, const AcquisitionSpec& spec,
                              const LfboParams& prm = {}) {
  require(prm.c_lo > 0 && prm.c_lo < prm.c_hi && prm.c_hi < 1, Errc::InvalidArgument, "clip interval");
  require(prm.learning_rate > 0 && prm.learning_rate <= 1, Errc::InvalidArgument, "learning rate in (0,1]");
  const double tau = spec.tau;
  const std::size_t n = space.size();
  std::vector<double> wsum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const auto& r : pool.records()) {
    if (prm.reservoir_only && !LabeledPool::in_reservoir(r)) continue;
    wsum[r.point] += std::max(r.y - tau, 0.0);
    count[r.point] += 1;
  }
  PointSet vis;
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] > 0) vis.push_back(i);
  require(!vis.empty(), Errc::EmptyPool, "no labels to fit");

  auto logit = [](double c) { return std::log(c / (1 - c)); };
  auto sigmoid = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  const double lo = logit(prm.c_lo), hi = logit(prm.c_hi);

  std::vector<double> abar(vis.size()), theta(vis.size(), 0.0);
  for (std::size_t k = 0; k < vis.size(); ++k) abar[k] = wsum[vis[k]] / static_cast<double>(count[vis[k]]);

  bool converged = false;
  for (int step = 0; step < prm.max_steps && !converged; ++step) {
    double worst = 0;
    for (std::size_t k = 0; k < vis.size(); ++k) {
      const double c = sigmoid(theta[k]);
      const double g = lfbo_logit_gradient(c, abar[k]);
      // projected gradient: zero when pinned at a bound and pushing outward
      const bool pinned = (theta[k] <= lo && g > 0) || (theta[k] >= hi && g < 0);
      if (pinned) continue;
      worst = std::max(worst, std::abs(g));
      const double h = std::max(c * (1 - c) * (1 + abar[k]), 1e-12);
      const double d = std::clamp(prm.learning_rate * g / h, -4.0, 4.0);
      theta[k] = std::clamp(theta[k] - d, lo, hi);
    }
    converged = worst <= prm.tolerance;
  }
  if (!converged) {
    double worst = 0;
    for (std::size_t k = 0; k < vis.size(); ++k) {
      const double g = lfbo_logit_gradient(sigmoid(theta[k]), abar[k]);
      const bool pinned = (theta[k] <= lo && g > 0) || (theta[k] >= hi && g < 0);
      if (!pinned) worst = std::max(worst, std::abs(g));
    }
    if (worst > prm.tolerance) throw Error(Errc::NonConvergence, "lfbo gradient stalled above tolerance");
  }

  ScoreEstimate est;
  est.values.assign(n, 0.0);
  for (std::size_t k = 0; k < vis.size(); ++k) {
    const double c = std::clamp(sigmoid(theta[k]), prm.c_lo, prm.c_hi);
    est.values[vis[k]] = c / (1 - c);
  }
  detail::fill_unvisited(est.values, count, prm.fallback);
  AcquisitionSpec ei = spec;
  ei.kind = AcquisitionSpec::Kind::ei;
  est.ideal = ideal_scores(ei, space);
  est.finalize();
  return est;
}

/// Ideal score plus a bounded per-point perturbation of size `error`.
/// Stands in for a learner whose sup-norm error is known exactly.
inline ScoreEstimate fit_oracle(const DesignSpace& space, const AcquisitionSpec& spec, double error,
                                std::uint64_t seed, std::uint64_t round) {
  require(error >= 0 && std::isfinite(error), Errc::InvalidArgument, "oracle error must be >= 0");
  ScoreEstimate est;
  est.ideal = ideal_scores(spec, space);
  est.values = est.ideal;
  if (error > 0) {
    const std::uint64_t base = derive_seed(seed, 0x5c0e + round);
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double u = static_cast<double>(splitmix64(base + i) >> 11) * 0x1.0p-53;
      est.values[i] += error * (2 * u - 1);
    }
  }
  est.finalize();
  return est;
}

struct SupErrorAudit {
  double global = 0;
  double restricted = 0;  // equals global when no subset is given
};

inline SupErrorAudit audit_sup_error(const std::vector<double>& values, const DesignSpace& space,
                                     const AcquisitionSpec& spec, const PointSet* subset = nullptr) {
  require(values.size() == space.size(), Errc::LengthMismatch, "estimate size");
  SupErrorAudit a;
  for (std::size_t i = 0; i < space.size(); ++i)
    a.global = std::max(a.global, std::abs(values[i] - ideal_score(spec, space, i)));
  if (!subset) {
    a.restricted = a.global;
    return a;
  }
  for (std::size_t i : *subset) a.restricted = std::max(a.restricted, std::abs(values[i] - ideal_score(spec, space, i)));
  return a;
}

/// Threshold used by the activation time: delta_star / (4 L_a).
inline double activation_margin(double delta_star, double L_a) { return delta_star / (4 * L_a); }

/// First (1-based) round from which every later envelope value is <= margin.
inline std::size_t activation_time(double margin, const std::vector<double>& curve) {
  require(!curve.empty(), Errc::NeverActivates, "empty error curve");
  if (curve.back() > margin) throw Error(Errc::NeverActivates, "error curve ends above the margin");
  std::size_t t = curve.size();
  while (t > 0 && curve[t - 1] <= margin) --t;
  return t + 1;
}

}  // namespace gdbo
