#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"

namespace gdbo::theory {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Lambda(u) = -log(1 - u); +inf at u = 1.
inline double hazard(double u) {
  require(u >= 0 && u <= 1, Errc::OutOfRange, "hazard needs u in [0,1]");
  if (u == 1) return inf;
  return -std::log1p(-u);
}

// count * Lambda with 0 * inf = 0
inline double scaled_hazard(double count, double u) {
  if (count == 0) return 0.0;
  return count * hazard(u);
}

struct BoundReport {
  std::string formula;
  double value = 0;
  double raw = 0;  // before clipping
  std::vector<double> per_round;
  std::map<std::string, double> inputs;
  std::map<std::string, double> terms;
};

struct MissBoundInputs {
  std::vector<double> J, N, ell, omega, d2, u;
  double p0_star = 0;
  std::size_t T_act = 1;  // rounds before this are burn-in with no credit

  std::size_t T() const { return J.size(); }

  static MissBoundInputs constant(std::size_t T, double J, double N, double p0_star, double ell, double omega,
                                  double d2, double u) {
    MissBoundInputs m;
    m.J.assign(T, J);
    m.N.assign(T, N);
    m.ell.assign(T, ell);
    m.omega.assign(T, omega);
    m.d2.assign(T, d2);
    m.u.assign(T, u);
    m.p0_star = p0_star;
    return m;
  }
};

/// exp(-sum alpha) + sum_t exp(-sum_{s>t} alpha_s) (u_t + d2_t / omega_t^2),
/// alpha_t = J_t Lambda(p0*) + N_t Lambda([ell_t - omega_t]+).
inline BoundReport miss_probability_bound(const MissBoundInputs& in) {
  const std::size_t T = in.T();
  require(in.N.size() == T && in.ell.size() == T && in.omega.size() == T && in.d2.size() == T && in.u.size() == T,
          Errc::LengthMismatch, "miss bound sequences must share length T");
  require(in.p0_star >= 0 && in.p0_star <= 1, Errc::OutOfRange, "p0_star in [0,1]");
  require(in.T_act >= 1, Errc::OutOfRange, "T_act >= 1");
  std::vector<double> alpha(T, 0.0), fail(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (double p : {in.ell[t], in.d2[t], in.u[t]})
      require(p >= 0 && p <= 1, Errc::OutOfRange, "probabilities must lie in [0,1]");
    require(in.J[t] >= 0 && in.N[t] >= 0, Errc::OutOfRange, "counts must be >= 0");
    if (t + 1 < in.T_act) continue;
    const double m = std::max(in.ell[t] - in.omega[t], 0.0);
    alpha[t] = scaled_hazard(in.J[t], in.p0_star) + scaled_hazard(in.N[t], m);
    if (in.d2[t] > 0) {
      require(in.omega[t] > 0, Errc::OutOfRange, "omega must be > 0 when d2 > 0");
      fail[t] = in.u[t] + in.d2[t] / (in.omega[t] * in.omega[t]);
    } else {
      fail[t] = in.u[t];
    }
  }
  BoundReport r;
  r.formula = "miss_probability";
  double tail = 0;  // sum_{s>t} alpha_s, accumulated backwards
  double sum = 0;
  r.per_round.assign(T, 0.0);
  for (std::size_t k = T; k-- > 0;) {
    const double term = fail[k] * std::exp(-tail);
    r.per_round[k] = term;
    sum += term;
    tail += alpha[k];
  }
  r.terms["search"] = std::exp(-tail);
  r.terms["failures"] = sum;
  r.raw = std::exp(-tail) + sum;
  r.value = std::clamp(r.raw, 0.0, 1.0);
  r.inputs["T"] = static_cast<double>(T);
  r.inputs["p0_star"] = in.p0_star;
  r.inputs["T_act"] = static_cast<double>(in.T_act);
  return r;
}

inline double regret_decomposition_bound(double gamma, double L_a, double sup_error, double R_f, double miss_prob) {
  require(gamma >= 0 && L_a >= 0 && sup_error >= 0 && R_f >= 0 && miss_prob >= 0, Errc::OutOfRange,
          "regret decomposition inputs must be >= 0");
  return gamma + 2 * L_a * sup_error + R_f * miss_prob;
}

struct CleanRateConstants {
  double score = 1, activation = 1, sampler = 1, search = 1;
};

struct CleanRateProfile {
  double score = 0, activation = 0, sampler = 0, search = 0;
  int dominant = 0;  // 0 score, 1 activation, 2 sampler, 3 search
  static const char* name(int k) {
    static const char* names[] = {"score", "activation", "sampler", "search"};
    return names[k];
  }
};

inline CleanRateProfile clean_rate_terms(double T, double theta_a, double c_a, double kappa_a, double kappa_alg,
                                         double lambda_bo, const CleanRateConstants& C = {}) {
  require(T >= 1 && theta_a > 0 && kappa_a > 0 && kappa_alg > 0 && lambda_bo > 0, Errc::InvalidArgument,
          "clean rate exponents must be > 0");
  CleanRateProfile p;
  p.score = C.score * std::pow(T, -theta_a) * std::pow(std::log(T), c_a);
  p.activation = C.activation * std::pow(T, -1 - kappa_a);
  p.sampler = C.sampler * std::pow(T, -1 - kappa_alg);
  p.search = C.search * std::exp(-lambda_bo * T);
  const double v[] = {p.score, p.activation, p.sampler, p.search};
  p.dominant = static_cast<int>(std::max_element(v, v + 4) - v);
  return p;
}

/// T in [lo, hi] where exp(-lambda T) = T^-theta, by bisection on the log difference.
inline double crossover_time(double lambda, double theta, double lo, double hi) {
  require(lambda > 0 && theta > 0 && lo > 0 && hi > lo, Errc::InvalidArgument, "crossover inputs");
  auto g = [&](double t) { return -lambda * t + theta * std::log(t); };
  double glo = g(lo), ghi = g(hi);
  require((glo > 0) != (ghi > 0) || glo == 0 || ghi == 0, Errc::InvalidArgument, "no sign change on bracket");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double random_tail(double M0_gamma, double n) {
  require(M0_gamma >= 0 && M0_gamma <= 1 && n >= 0, Errc::OutOfRange, "random tail inputs");
  if (n == 0) return 1.0;
  return std::pow(1 - M0_gamma, n);
}

/// E[Gamma_n] = integral of the tail over [0, R_f]; exact for a step profile.
inline double random_expected_gap(const MassProfile& prof, double n) {
  const auto& lv = prof.levels();
  const auto& cum = prof.cumulative();
  double e = 0;
  for (std::size_t k = 0; k + 1 < lv.size(); ++k) e += (lv[k + 1] - lv[k]) * random_tail(std::min(cum[k], 1.0), n);
  if (!lv.empty()) e += lv[0] * 1.0;  // tail is 1 below the first level
  return e;
}

/// Same expectation from the point masses of the best gap.
inline double random_expected_gap_direct(const MassProfile& prof, double n) {
  const auto& lv = prof.levels();
  const auto& cum = prof.cumulative();
  double e = 0, prev_tail = 1.0;
  for (std::size_t k = 0; k < lv.size(); ++k) {
    const double tail = random_tail(std::min(cum[k], 1.0), n);
    e += lv[k] * (prev_tail - tail);
    prev_tail = tail;
  }
  return e;
}

struct ProgressMass {
  double value = 0;
  double lower_bound = 0;
};

/// EI-tilted mass of U_{a eta} relative to U_eta.
inline ProgressMass ei_progress_mass(const MassProfile& prof, double eta, double a) {
  require(eta > 0 && a > 0 && a <= 1, Errc::InvalidArgument, "need eta > 0, a in (0,1]");
  const auto& lv = prof.levels();
  const auto& m = prof.atom_mass();
  double num = 0, den = 0;
  for (std::size_t k = 0; k < lv.size() && lv[k] <= eta; ++k) {
    const double w = (eta - lv[k]) * m[k];
    den += w;
    if (lv[k] <= a * eta) num += w;
  }
  require(den > 0, Errc::ZeroImprovementMass, "no improvement mass below eta");
  ProgressMass r;
  r.value = num / den;
  r.lower_bound = (1 - a) * prof(a * eta) / prof(eta);
  return r;
}

/// M(a eta) / M(eta) for any mass function.
template <class MassFn>
double reverse_doubling(const MassFn& M, double a, double eta) {
  const double d = M(eta);
  require(d > 0, Errc::ZeroDenominator, "zero mass at eta");
  return M(a * eta) / d;
}

struct ContractionBound {
  double bound = 0;
  double relaxed = 0;
};

inline ContractionBound threshold_contraction_bound(double eta0, double eta_min, double p_prog, double a,
                                                    double rounds) {
  require(p_prog >= 0 && p_prog <= 1 && a > 0 && a < 1 && rounds >= 0, Errc::InvalidArgument,
          "contraction inputs");
  const double base = std::max(eta0 - eta_min, 0.0);
  ContractionBound c;
  c.bound = base * std::pow(1 - p_prog * (1 - a), rounds);
  c.relaxed = base * std::exp(-p_prog * (1 - a) * rounds);
  return c;
}

inline double p_prog_lower_bound(double J, double M0_a_eta, double N, double m_minus) {
  require(M0_a_eta >= 0 && M0_a_eta <= 1 && m_minus >= 0 && m_minus <= 1, Errc::OutOfRange,
          "probabilities in [0,1]");
  // log domain: many survival factors
  const double miss = -(scaled_hazard(J, M0_a_eta) + scaled_hazard(N, m_minus));
  return 1 - std::exp(miss);
}

struct SearchExponents {
  double lambda_rand = 0, lambda_bo = 0, gain = 0;
};

inline SearchExponents search_exponents(double M0_a_eta, double m, double B, double J, double K, double N) {
  require(B == J + K, Errc::InconsistentBudget, "random-search budget must equal J + K");
  SearchExponents s;
  s.lambda_rand = scaled_hazard(B, M0_a_eta);
  s.lambda_bo = scaled_hazard(J, M0_a_eta) + scaled_hazard(N, m);
  s.gain = scaled_hazard(N, m) - scaled_hazard(K, M0_a_eta);
  return s;
}

inline SearchExponents search_exponents(const MassProfile& prof, double eta, double a, double m, double B, double J,
                                        double K, double N) {
  return search_exponents(prof(a * eta), m, B, J, K, N);
}

struct ShellMass {
  double prior = 0;     // p0(U_{b eta} \ U_{a eta})
  double ei_exact = 0;  // EI-tilted mass of the shell
  double bound = 0;     // (1 - b) c_{a,b}
};

inline ShellMass shell_mass(const MassProfile& prof, double eta, double a, double b) {
  require(eta > 0 && a > 0 && a <= b && b <= 1, Errc::InvalidArgument, "need 0 < a <= b <= 1");
  const double Me = prof(eta);
  require(Me > 0, Errc::ZeroDenominator, "zero mass at eta");
  ShellMass s;
  s.prior = prof(b * eta) - prof(a * eta);
  s.bound = (1 - b) * s.prior / Me;
  const auto& lv = prof.levels();
  const auto& m = prof.atom_mass();
  double num = 0, den = 0;
  for (std::size_t k = 0; k < lv.size() && lv[k] <= eta; ++k) {
    const double w = (eta - lv[k]) * m[k];
    den += w;
    if (lv[k] > a * eta && lv[k] <= b * eta) num += w;
  }
  require(den > 0, Errc::ZeroDenominator, "no improvement mass below eta");
  s.ei_exact = num / den;
  return s;
}

struct ActiveFloorEnvelopes {
  std::function<double(double)> S, b, u_loc, v_act;
};

struct ActiveFloor {
  double exponent = 0;
  double eta_T = 0;
  double bound = 0;
  double S = 0, b = 0, u_loc = 0, v_act = 0;
};

inline ActiveFloor active_floor(double T, double chi_a, double theta_loc, double beta_act, double c_loc,
                                double C_eta, const ActiveFloorEnvelopes& env, double R_f) {
  require(T > 1 && chi_a > 0 && theta_loc > 0 && beta_act >= 0 && C_eta > 0 && R_f >= 0, Errc::InvalidArgument,
          "active floor inputs");
  const double den = 1 + chi_a * beta_act * theta_loc;
  ActiveFloor f;
  f.exponent = chi_a * theta_loc / den;
  f.eta_T = C_eta * std::pow(T, -f.exponent) * std::pow(std::log(T), chi_a * c_loc / den);
  auto ev = [&](const std::function<double(double)>& fn) { return fn ? fn(f.eta_T) : 0.0; };
  f.S = ev(env.S);
  f.b = ev(env.b);
  f.u_loc = ev(env.u_loc);
  f.v_act = ev(env.v_act);
  f.bound = f.eta_T + R_f * (f.S + f.b + f.u_loc + f.v_act);
  return f;
}

/// Smallest N with N Lambda(min(1, C gamma^(d/alpha))) >= log(1/(c gamma)).
inline std::size_t continuous_pool_requirement(double gamma, double d_over_alpha, double C_cont, double c) {
  require(gamma > 0 && gamma < 1 && d_over_alpha > 0 && C_cont > 0 && c > 0, Errc::InvalidArgument,
          "pool requirement inputs");
  const double need = std::log(1 / (c * gamma));
  if (need <= 0) return 0;
  const double mass = std::min(1.0, C_cont * std::pow(gamma, d_over_alpha));
  const double h = hazard(mass);
  if (h == inf) return 1;
  auto N = static_cast<std::size_t>(std::ceil(need / h));
  while (N > 1 && static_cast<double>(N - 1) * h >= need) --N;
  while (static_cast<double>(N) * h < need) ++N;
  return N;
}

/// S_T = sum_{t<=T} rho^{T-t} e_t for T = 1..len.
inline std::vector<double> geometric_weighted_sums(double rho, const std::vector<double>& e) {
  require(rho > 0 && rho < 1, Errc::InvalidArgument, "rho in (0,1)");
  std::vector<double> s(e.size());
  double acc = 0;
  for (std::size_t t = 0; t < e.size(); ++t) s[t] = acc = rho * acc + e[t];
  return s;
}

struct SmoothingCheck {
  std::vector<double> horizons, ratios;
  double max_ratio = 0;
};

/// Ratio of the smoothed sum to T^-nu (log T)^c for e_t = t^-nu (log t)^c.
inline SmoothingCheck geometric_smoothing_check(double rho, double nu, double c, const std::vector<double>& horizons) {
  require(!horizons.empty(), Errc::InvalidArgument, "need horizons");
  const auto Tmax = static_cast<std::size_t>(*std::max_element(horizons.begin(), horizons.end()));
  std::vector<double> e(Tmax);
  for (std::size_t t = 1; t <= Tmax; ++t) {
    const double lt = std::log(static_cast<double>(t));
    e[t - 1] = std::pow(static_cast<double>(t), -nu) * (c == 0 ? 1.0 : std::pow(lt, c));
  }
  const auto S = geometric_weighted_sums(rho, e);
  SmoothingCheck out;
  for (double T : horizons) {
    const auto k = static_cast<std::size_t>(T);
    require(k >= 2, Errc::InvalidArgument, "horizons must be >= 2");
    const double ref = std::pow(T, -nu) * (c == 0 ? 1.0 : std::pow(std::log(T), c));
    out.horizons.push_back(T);
    out.ratios.push_back(S[k - 1] / ref);
    out.max_ratio = std::max(out.max_ratio, out.ratios.back());
  }
  return out;
}

inline double safety_bound(double L_a, double sup_error, double R_f, double p0_star, double total_J) {
  require(L_a >= 0 && sup_error >= 0 && R_f >= 0 && p0_star >= 0 && total_J >= 0, Errc::OutOfRange,
          "safety inputs must be >= 0");
  return 2 * L_a * sup_error + R_f * std::exp(-p0_star * total_J);
}

}  // namespace gdbo::theory
