#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace gdbo {

/// q(x) proportional to p0(x) exp(beta * score(x)), normalized in log domain.
struct GibbsTarget {
  double beta = 0;
  std::vector<double> probs;
  double log_partition = 0;  // log sum_x p0(x) exp(beta score(x))
  std::vector<double> scores;

  double mass(const PointSet& A) const {
    double m = 0;
    for (std::size_t i : A) m += probs[i];
    return m;
  }
};

inline GibbsTarget build_gibbs(const DesignSpace& space, const std::vector<double>& scores, double beta) {
  require(beta >= 0, Errc::BetaNegative, "beta must be >= 0");
  require(scores.size() == space.size(), Errc::LengthMismatch, "one score per point");
  for (double s : scores) require(std::isfinite(s), Errc::InvalidArgument, "scores must be finite");
  GibbsTarget g;
  g.beta = beta;
  g.scores = scores;
  if (beta == 0) {
    g.probs = space.prior();
    return g;
  }
  const std::size_t n = space.size();
  std::vector<double> lw(n);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    lw[i] = std::log(space.prior(i)) + beta * scores[i];
    m = std::max(m, lw[i]);
  }
  g.probs.resize(n);
  double z = 0;
  for (std::size_t i = 0; i < n; ++i) z += (g.probs[i] = std::exp(lw[i] - m));
  for (double& p : g.probs) p /= z;
  g.log_partition = m + std::log(z);
  return g;
}

/// Lower bound on q(A) given a score margin delta of A over its complement.
inline double gibbs_mass_lower_bound(double p0_A, double beta, double delta) {
  require(p0_A > 0, Errc::ZeroPriorMass, "set has zero prior mass");
  require(p0_A <= 1 && beta >= 0 && delta >= 0, Errc::InvalidArgument, "gibbs bound inputs");
  if (p0_A >= 1) return 1.0;
  const double t = std::log1p(-p0_A) - std::log(p0_A) - beta * delta;
  return 1.0 / (1.0 + std::exp(t));
}

/// Optimizer-set variant: margin delta_star / (2 L_a) once the score error is below delta_star / (4 L_a).
inline double gibbs_optimizer_mass_lower_bound(double p0_star, double beta, double delta_star, double L_a) {
  require(L_a > 0, Errc::InvalidArgument, "L_a must be > 0");
  return gibbs_mass_lower_bound(p0_star, beta, delta_star / (2 * L_a));
}

struct TerminalLaw {
  enum class Provenance { exact, resampled, proposal_resampled, mixed };
  std::vector<double> probs;
  Provenance provenance = Provenance::exact;
  std::size_t M = 0;   // proposal count for resampled laws
  double eps = 0;      // contamination for mixed laws
  double d2 = 0;       // RMS shortfall certificate, identical for every set
  std::uint64_t stream = 0;

  double mass(const PointSet& A) const {
    double m = 0;
    for (std::size_t i : A) m += probs[i];
    return m;
  }
};

inline const char* provenance_name(TerminalLaw::Provenance p) {
  switch (p) {
    case TerminalLaw::Provenance::exact: return "exact";
    case TerminalLaw::Provenance::resampled: return "resampled";
    case TerminalLaw::Provenance::proposal_resampled: return "proposal_resampled";
    case TerminalLaw::Provenance::mixed: return "mixed";
  }
  return "exact";
}

inline TerminalLaw exact_law(const GibbsTarget& target) {
  TerminalLaw l;
  l.probs = target.probs;
  return l;
}

/// Inverse-CDF sampler over a fixed probability vector.
class Categorical {
 public:
  explicit Categorical(const std::vector<double>& p) : cum_(p.size()) {
    require(!p.empty(), Errc::InvalidArgument, "empty law");
    std::partial_sum(p.begin(), p.end(), cum_.begin());
    require(cum_.back() > 0, Errc::InvalidArgument, "law has no mass");
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) --it;
    return static_cast<std::size_t>(it - cum_.begin());
  }

  std::vector<std::size_t> draw(std::size_t n, Rng& rng) const {
    std::vector<std::size_t> out(n);
    for (auto& x : out) x = (*this)(rng);
    return out;
  }

 private:
  std::vector<double> cum_;
};

inline std::vector<std::size_t> sample_law(const std::vector<double>& probs, std::size_t n, Rng& rng) {
  require(n >= 1, Errc::InvalidArgument, "need at least one draw");
  return Categorical(probs).draw(n, rng);
}

inline std::vector<std::size_t> sample_exact(const GibbsTarget& target, std::size_t n, Rng& rng) {
  return sample_law(target.probs, n, rng);
}

inline std::vector<std::size_t> sample_law(const TerminalLaw& law, std::size_t n, Rng& rng) {
  return sample_law(law.probs, n, rng);
}

namespace detail {
inline double oscillation(const std::vector<double>& v) {
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

// self-normalized weighted empirical law from draws z with log-weights lw(z)
inline std::vector<double> weighted_empirical(std::size_t n, const std::vector<std::size_t>& z,
                                              const std::vector<double>& logw) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i : z) m = std::max(m, logw[i]);
  std::vector<double> nu(n, 0.0);
  double tot = 0;
  for (std::size_t i : z) {
    const double w = std::exp(logw[i] - m);
    nu[i] += w;
    tot += w;
  }
  for (double& v : nu) v /= tot;
  return nu;
}
}  // namespace detail

/// M proposals from the prior, reweighted by exp(beta * score).
inline TerminalLaw resample_prior_corrected(const DesignSpace& space, const std::vector<double>& scores,
                                            double beta, std::size_t M, Rng& rng) {
  require(M >= 1, Errc::InvalidArgument, "M must be >= 1");
  require(beta >= 0, Errc::BetaNegative, "beta must be >= 0");
  require(scores.size() == space.size(), Errc::LengthMismatch, "one score per point");
  const auto z = Categorical(space.prior()).draw(M, rng);
  std::vector<double> lw(space.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = beta * scores[i];
  TerminalLaw l;
  l.probs = detail::weighted_empirical(space.size(), z, lw);
  l.provenance = TerminalLaw::Provenance::resampled;
  l.M = M;
  l.d2 = std::exp(2 * beta * detail::oscillation(scores)) / static_cast<double>(M);
  l.stream = rng.stream();
  return l;
}

/// Self-normalized resampling of a generic proposal g towards an unnormalized
/// target given by its log-weights. Certificate (W_max / W_min)^2 / M.
inline TerminalLaw resample_generic_proposal(const DesignSpace& space, const std::vector<double>& log_target,
                                             const TerminalLaw& proposal, std::size_t M, Rng& rng) {
  require(M >= 1, Errc::InvalidArgument, "M must be >= 1");
  require(log_target.size() == space.size() && proposal.probs.size() == space.size(), Errc::LengthMismatch,
          "target/proposal size");
  std::vector<double> lw(space.size(), -std::numeric_limits<double>::infinity());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (log_target[i] == -std::numeric_limits<double>::infinity()) continue;
    if (!(proposal.probs[i] > 0)) throw Error(Errc::SupportViolation, "proposal misses target support");
    lw[i] = log_target[i] - std::log(proposal.probs[i]);
    lo = std::min(lo, lw[i]);
    hi = std::max(hi, lw[i]);
  }
  const auto z = Categorical(proposal.probs).draw(M, rng);
  TerminalLaw l;
  l.probs = detail::weighted_empirical(space.size(), z, lw);
  l.provenance = TerminalLaw::Provenance::proposal_resampled;
  l.M = M;
  l.d2 = std::exp(2 * (hi - lo)) / static_cast<double>(M);
  l.stream = rng.stream();
  return l;
}

inline std::vector<double> log_weights(const GibbsTarget& t) {
  std::vector<double> lw(t.probs.size());
  for (std::size_t i = 0; i < lw.size(); ++i)
    lw[i] = t.probs[i] > 0 ? std::log(t.probs[i]) : -std::numeric_limits<double>::infinity();
  return lw;
}

/// (1 - eps) q + eps * uniform
inline TerminalLaw contaminated_sampler(const GibbsTarget& target, double eps) {
  require(eps >= 0 && eps <= 1, Errc::InvalidArgument, "eps must be in [0,1]");
  TerminalLaw l;
  const double u = 1.0 / static_cast<double>(target.probs.size());
  l.probs.resize(target.probs.size());
  for (std::size_t i = 0; i < l.probs.size(); ++i) l.probs[i] = (1 - eps) * target.probs[i] + eps * u;
  l.provenance = TerminalLaw::Provenance::mixed;
  l.eps = eps;
  l.d2 = eps * eps;
  return l;
}

inline double tv(const std::vector<double>& p, const std::vector<double>& q) {
  require(p.size() == q.size(), Errc::LengthMismatch, "tv on different supports");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// KL(p || q) in nats; +inf if q vanishes where p does not.
inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  require(p.size() == q.size(), Errc::LengthMismatch, "kl on different supports");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(s, 0.0);
}

/// Importance-weighted negative log score of `candidate` under draws from
/// `proposal`, minus the same for the target itself.
inline double genbo_logscore_excess(const GibbsTarget& target, const std::vector<double>& candidate,
                                    const std::vector<double>& proposal) {
  const auto& q = target.probs;
  require(candidate.size() == q.size() && proposal.size() == q.size(), Errc::LengthMismatch, "law sizes");
  double lc = 0, lt = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0) continue;
    if (!(proposal[i] > 0)) throw Error(Errc::SupportViolation, "proposal misses target support");
    const double w = q[i] / proposal[i];
    if (candidate[i] <= 0) return std::numeric_limits<double>::infinity();
    lc -= proposal[i] * w * std::log(candidate[i]);
    lt -= proposal[i] * w * std::log(q[i]);
  }
  return lc - lt;
}

struct SamplerCertificate {
  double ell = 0;    // lower bound on the target mass of A
  double d2 = 0;     // RMS shortfall bound, clipped to [0,1]
  double omega = 0;
  double m_star = 0; // [ell - omega]+
  double failure_bound = 0;  // d2 / omega^2
};

inline SamplerCertificate certificate_for_set(const GibbsTarget& target, const TerminalLaw& law, const PointSet& A,
                                              double omega, std::optional<double> ell = std::nullopt) {
  require(omega > 0, Errc::InvalidArgument, "omega must be > 0");
  SamplerCertificate c;
  c.ell = std::clamp(ell.value_or(target.mass(A)), 0.0, 1.0);
  c.d2 = std::clamp(law.d2, 0.0, 1.0);
  c.omega = omega;
  c.m_star = std::max(c.ell - omega, 0.0);
  c.failure_bound = c.d2 / (omega * omega);
  return c;
}

}  // namespace gdbo
