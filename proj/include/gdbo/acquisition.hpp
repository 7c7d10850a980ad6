#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "domain.hpp"

namespace gdbo {

struct AcquisitionSpec {
  enum class Kind { ei, log_ei, progress, pi, ucb, mean };
  Kind kind = Kind::mean;
  double tau = 0.0;      // ei, log_ei, pi
  double eps_ei = 1e-6;  // floor for log_ei and pi
  double eta = 1.0;      // progress
  double bonus = 0.0;    // ucb
  NoiseModel noise;

  static AcquisitionSpec mean() { return {}; }
  static AcquisitionSpec ei(double tau, NoiseModel n) { return {Kind::ei, tau, 1e-6, 1.0, 0.0, n}; }
  static AcquisitionSpec log_ei(double tau, double eps, NoiseModel n) {
    return {Kind::log_ei, tau, eps, 1.0, 0.0, n};
  }
  static AcquisitionSpec progress(double eta) { return {Kind::progress, 0.0, 1e-6, eta, 0.0, {}}; }
  static AcquisitionSpec pi(double tau, NoiseModel n) { return {Kind::pi, tau, 1e-6, 1.0, 0.0, n}; }
  static AcquisitionSpec ucb(double b, NoiseModel n) { return {Kind::ucb, 0.0, 1e-6, 1.0, b, n}; }

  void validate() const {
    require(std::isfinite(tau) && std::isfinite(eta) && std::isfinite(bonus), Errc::InvalidArgument,
            "acquisition parameters must be finite");
    if (kind == Kind::log_ei || kind == Kind::pi)
      require(eps_ei > 0, Errc::InvalidArgument, "eps_ei must be > 0");
    if (kind == Kind::progress) require(eta > 0, Errc::InvalidArgument, "eta must be > 0");
    if (kind == Kind::ucb) require(bonus >= 0, Errc::InvalidArgument, "ucb bonus must be >= 0");
  }
};

inline const char* acquisition_name(AcquisitionSpec::Kind k) {
  using K = AcquisitionSpec::Kind;
  switch (k) {
    case K::ei: return "ei";
    case K::log_ei: return "log_ei";
    case K::progress: return "progress";
    case K::pi: return "pi";
    case K::ucb: return "ucb";
    case K::mean: return "mean";
  }
  return "mean";
}

/// E[(Y - tau)+] at x.
inline double ideal_ei(const DesignSpace& space, std::size_t point, double tau, const NoiseModel& noise) {
  return noise.integrated_survival(tau - space.objective(point));
}

inline double progress_utility(const DesignSpace& space, std::size_t point, double eta) {
  require(eta > 0, Errc::InvalidArgument, "eta must be > 0");
  return std::max(eta - space.gap(point), 0.0);
}

/// Score implied by a mean estimate mu (and a spread estimate for ucb).
inline double plug_in_score(const AcquisitionSpec& s, double mu, double sigma_hat, double f_star) {
  using K = AcquisitionSpec::Kind;
  switch (s.kind) {
    case K::ei: return s.noise.integrated_survival(s.tau - mu);
    case K::log_ei: return std::log(s.noise.integrated_survival(s.tau - mu) + s.eps_ei);
    case K::progress: return std::max(s.eta - (f_star - mu), 0.0);
    case K::pi: return std::log(std::max(s.noise.survival(s.tau - mu), s.eps_ei));
    case K::ucb: return mu + s.bonus * sigma_hat;
    case K::mean: return mu;
  }
  return mu;
}

inline double ideal_score(const AcquisitionSpec& s, const DesignSpace& space, std::size_t point) {
  return plug_in_score(s, space.objective(point), 0.0, space.f_star());
}

inline std::vector<double> ideal_scores(const AcquisitionSpec& s, const DesignSpace& space) {
  std::vector<double> out(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) out[i] = ideal_score(s, space, i);
  return out;
}

struct CalibrationCertificate {
  double L_a = 1.0;
  bool valid = false;
  double s_band = 1.0;  // inf of the noise survival over the band
  double A_max = 0.0;   // sup of (EI + eps), log-EI only
};

/// Inverse-link constant over thresholds tau in [tau_min, tau_max].
inline CalibrationCertificate calibration_constants(const AcquisitionSpec& s, const DesignSpace& space,
                                                    double tau_min, double tau_max) {
  using K = AcquisitionSpec::Kind;
  s.validate();
  require(std::isfinite(tau_min) && std::isfinite(tau_max) && tau_min <= tau_max, Errc::InvalidArgument,
          "tau range");
  CalibrationCertificate c;
  switch (s.kind) {
    case K::mean:
    case K::ucb:
      c.valid = true;
      return c;
    case K::progress:
    case K::pi:
      return c;  // setwise certificates only
    case K::ei:
    case K::log_ei:
      break;
  }
  // survival is nonincreasing so its infimum over the band sits at the right end
  const double hi = tau_max - space.f_min();
  c.s_band = s.noise.survival(hi);
  if (c.s_band <= 0) {
    if (s.noise.degenerate()) return c;
    throw Error(Errc::ZeroSurvival, "noise survival vanishes on the threshold band");
  }
  c.valid = true;
  c.L_a = 1.0 / c.s_band;
  if (s.kind == K::log_ei) {
    c.A_max = s.noise.integrated_survival(tau_min - space.f_star()) + s.eps_ei;
    c.L_a = c.A_max / c.s_band;
  }
  return c;
}

/// inf over A minus sup over B.
template <class Scores>
double setwise_margin(const Scores& scores, const PointSet& A, const PointSet& B) {
  require(!A.empty() && !B.empty(), Errc::EmptySet, "setwise margin needs nonempty sets");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i : A) lo = std::min(lo, static_cast<double>(scores[i]));
  for (std::size_t j : B) hi = std::max(hi, static_cast<double>(scores[j]));
  return lo - hi;
}

inline PointSet complement(const PointSet& A, std::size_t n) {
  std::vector<char> in(n, 0);
  for (std::size_t i : A) in[i] = 1;
  PointSet out;
  for (std::size_t i = 0; i < n; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

struct SetwiseCertificate {
  double bound = 0;
  double exact = 0;  // +inf when the complement of U_eta is empty
};

/// Progress utility separates U_gamma from the complement of U_eta by eta - gamma.
inline SetwiseCertificate noiseless_ei_setwise_certificate(const DesignSpace& space, double eta, double gamma) {
  require(gamma >= 0 && gamma < eta, Errc::InvalidArgument, "need 0 <= gamma < eta");
  SetwiseCertificate c;
  c.bound = eta - gamma;
  const PointSet A = space.level_set(gamma);
  const PointSet B = complement(space.level_set(eta), space.size());
  if (B.empty()) {
    c.exact = std::numeric_limits<double>::infinity();
    return c;
  }
  std::vector<double> u(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) u[i] = progress_utility(space, i, eta);
  c.exact = setwise_margin(u, A, B);
  if (c.exact < c.bound - 1e-12 * std::max(1.0, std::abs(c.bound)))
    throw Error(Errc::InvalidArgument, "setwise certificate violated");
  return c;
}

inline double ucb_margin_bound(double delta_f, double e, double b, double sigma_lo_A, double sigma_hi_B) {
  require(e >= 0 && b >= 0 && sigma_lo_A >= 0 && sigma_hi_B >= 0, Errc::InvalidArgument,
          "ucb margin inputs must be nonnegative");
  return delta_f - 2 * e + b * (sigma_lo_A - sigma_hi_B);
}

}  // namespace gdbo
