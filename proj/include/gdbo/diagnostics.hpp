#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "domain.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "theory.hpp"

namespace gdbo::diag {

struct RegretCurve {
  std::vector<double> mean_gap;
  std::vector<std::vector<double>> per_seed;
  std::vector<double> evaluations;  // mean cumulative evaluations per round
  std::size_t T() const { return mean_gap.size(); }
};

inline RegretCurve regret_curve(const std::vector<RunResult>& runs) {
  require(!runs.empty(), Errc::Alignment, "no runs");
  const std::size_t T = runs.front().rounds.size();
  RegretCurve c;
  c.mean_gap.assign(T, 0.0);
  c.evaluations.assign(T, 0.0);
  for (const auto& r : runs) {
    require(r.rounds.size() == T, Errc::Alignment, "runs have different horizons");
    std::vector<double> g(T);
    for (std::size_t t = 0; t < T; ++t) {
      g[t] = r.rounds[t].best_gap;
      c.mean_gap[t] += g[t];
      c.evaluations[t] += static_cast<double>(r.rounds[t].evaluations);
    }
    c.per_seed.push_back(std::move(g));
  }
  for (std::size_t t = 0; t < T; ++t) {
    c.mean_gap[t] /= static_cast<double>(runs.size());
    c.evaluations[t] /= static_cast<double>(runs.size());
  }
  return c;
}

struct LinearFit {
  double intercept = 0, slope = 0, r2 = 0, se_slope = 0, rss = 0;
  std::size_t n = 0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), Errc::Alignment, "x and y lengths differ");
  LinearFit f;
  f.n = x.size();
  if (f.n == 0) return f;
  const double n = static_cast<double>(f.n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.rss += r * r;
  }
  f.r2 = syy > 0 ? 1 - f.rss / syy : 1.0;
  f.se_slope = (f.n > 2 && sxx > 0) ? std::sqrt(f.rss / (n - 2) / sxx) : 0.0;
  return f;
}

inline constexpr double regret_floor = 1e-12;

struct PhaseFit {
  std::size_t T = 0, t1 = 0, t2 = 0;  // activation 1..t1, search t1+1..t2, learning t2+1..T
  double level = 0;                   // activation constant (log10)
  double search_intercept = 0, search_slope = 0;      // log10 regret vs t
  double learning_intercept = 0, learning_slope = 0;  // log10 regret vs log10 t
  double rss = 0, bic = 0;
  std::size_t n_used = 0;    // rounds above the regret floor
  std::size_t n_search = 0;  // of those, inside the search segment
  bool degenerate = false;  // flat curve: everything is activation

  // share of fitted rounds; floor rounds carry no regret information
  double search_coverage() const {
    return n_used ? static_cast<double>(n_search) / static_cast<double>(n_used) : 0.0;
  }
};

namespace detail {
struct Seg {
  double a = 0, b = 0, rss = 0;
};

inline Seg fit_segment(const std::vector<double>& x, const std::vector<double>& y, const std::vector<char>& use,
                       std::size_t lo, std::size_t hi, bool constant) {
  std::vector<double> xs, ys;
  for (std::size_t i = lo; i < hi; ++i)
    if (use[i]) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  Seg s;
  if (xs.empty()) return s;
  if (constant || xs.size() < 2) {
    s.a = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    for (double v : ys) s.rss += (v - s.a) * (v - s.a);
    return s;
  }
  const auto f = linear_fit(xs, ys);
  s.a = f.intercept;
  s.b = f.slope;
  s.rss = f.rss;
  return s;
}
}  // namespace detail

/// Three-piece fit of log10 regret: constant, linear in t, linear in log10 t.
/// Breakpoints by exhaustive BIC search with a fixed parameter count of 8.
inline PhaseFit fit_phases(const std::vector<double>& regret, std::size_t min_segment) {
  const std::size_t T = regret.size();
  require(min_segment >= 1 && T >= 3 * min_segment, Errc::TooShort, "curve shorter than three minimum segments");
  std::vector<double> t(T), lt(T), y(T);
  std::vector<char> use(T);
  std::size_t n = 0;
  for (std::size_t i = 0; i < T; ++i) {
    t[i] = static_cast<double>(i + 1);
    lt[i] = std::log10(t[i]);
    use[i] = regret[i] > regret_floor;
    y[i] = std::log10(std::max(regret[i], regret_floor));
    n += use[i];
  }
  PhaseFit best;
  best.T = T;
  best.n_used = n;
  best.bic = std::numeric_limits<double>::infinity();
  const double nn = std::max<double>(static_cast<double>(n), 1.0);
  for (std::size_t t1 = min_segment; t1 + 2 * min_segment <= T; ++t1) {
    for (std::size_t t2 = t1 + min_segment; t2 + min_segment <= T; ++t2) {
      const auto s1 = detail::fit_segment(t, y, use, 0, t1, true);
      const auto s2 = detail::fit_segment(t, y, use, t1, t2, false);
      const auto s3 = detail::fit_segment(lt, y, use, t2, T, false);
      const double rss = s1.rss + s2.rss + s3.rss;
      const double bic = nn * std::log(std::max(rss / nn, 1e-20)) + 8.0 * std::log(nn);
      if (bic < best.bic - 1e-9) {
        best.t1 = t1;
        best.t2 = t2;
        best.level = s1.a;
        best.search_intercept = s2.a;
        best.search_slope = s2.b;
        best.learning_intercept = s3.a;
        best.learning_slope = s3.b;
        best.rss = rss;
        best.bic = bic;
      }
    }
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < T; ++i)
    if (use[i]) {
      lo = std::min(lo, y[i]);
      hi = std::max(hi, y[i]);
    }
  best.degenerate = n == 0 || hi - lo <= 1e-9;
  for (std::size_t i = best.t1; i < best.t2; ++i) best.n_search += use[i];
  return best;
}

enum class Regime { search_dominated, floor_dominated, baseline_equivalent, all_activation };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::search_dominated: return "search_dominated";
    case Regime::floor_dominated: return "floor_dominated";
    case Regime::baseline_equivalent: return "baseline_equivalent";
    case Regime::all_activation: return "all_activation";
  }
  return "";
}

struct RegimeRule {
  double min_coverage = 0.4;       // semi-log share of rounds
  double min_decades = 1.0;        // drop across the search segment
  double baseline_factor = 2.0;    // geometric-mean distance from the reference curve
};

/// Mean |log10(curve / reference)| over rounds.
inline double log_distance(const std::vector<double>& curve, const std::vector<double>& ref) {
  require(curve.size() == ref.size() && !curve.empty(), Errc::Alignment, "curve lengths differ");
  double s = 0;
  for (std::size_t i = 0; i < curve.size(); ++i)
    s += std::abs(std::log10(std::max(curve[i], regret_floor) / std::max(ref[i], regret_floor)));
  return s / static_cast<double>(curve.size());
}

inline Regime classify_regime(const PhaseFit& fit, const std::vector<double>& curve,
                              const std::vector<double>& reference, const RegimeRule& rule = {}) {
  if (fit.degenerate) return Regime::all_activation;
  if (log_distance(curve, reference) <= std::log10(rule.baseline_factor)) return Regime::baseline_equivalent;
  const double drop = -fit.search_slope * static_cast<double>(fit.t2 - fit.t1);
  if (fit.search_coverage() >= rule.min_coverage && drop >= rule.min_decades) return Regime::search_dominated;
  return Regime::floor_dominated;
}

struct MassEstimate {
  double value = 0, lo = 0, hi = 0;
  std::size_t hits = 0, m = 0;
};

inline MassEstimate wilson(std::size_t hits, std::size_t m, double z = 1.959963984540054) {
  require(m >= 1, Errc::InvalidArgument, "need at least one sample");
  MassEstimate e;
  e.hits = hits;
  e.m = m;
  const double n = static_cast<double>(m);
  const double p = static_cast<double>(hits) / n;
  e.value = p;
  const double z2 = z * z;
  const double den = 1 + z2 / n;
  const double mid = (p + z2 / (2 * n)) / den;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / den;
  e.lo = std::max(0.0, mid - half);
  e.hi = std::min(1.0, mid + half);
  return e;
}

template <class Pred>
MassEstimate empirical_mass(const std::vector<std::size_t>& samples, Pred&& in_set) {
  std::size_t k = 0;
  for (std::size_t i : samples) k += in_set(i) ? 1 : 0;
  return wilson(k, samples.size());
}

/// fraction of samples with normalized objective >= tau
inline MassEstimate empirical_mass_threshold(const std::vector<std::size_t>& samples, const DesignSpace& space,
                                             double tau) {
  return empirical_mass(samples, [&](std::size_t i) { return space.normalized(i) >= tau; });
}

/// fraction of samples in U_{a eta}
inline MassEstimate empirical_mass_progress(const std::vector<std::size_t>& samples, const DesignSpace& space,
                                            double a, double eta) {
  return empirical_mass(samples, [&](std::size_t i) { return space.gap(i) <= a * eta; });
}

inline double pool_hit_probability(double nu, double N) {
  require(nu >= 0 && nu <= 1 && N >= 1, Errc::OutOfRange, "pool hit inputs");
  return -std::expm1(N * std::log1p(-nu));
}

inline std::vector<double> cumulative_hazard(const std::vector<RoundRecord>& rounds) {
  std::vector<double> out;
  double acc = 0;
  for (const auto& r : rounds) {
    if (!r.hazard_increment) throw Error(Errc::MissingAudit, "round " + std::to_string(r.t) + " has no audit");
    acc += *r.hazard_increment;
    out.push_back(acc);
  }
  return out;
}

struct ExponentFit {
  double exponent = 0, se = 0;
  std::size_t used = 0;
};

/// Slope of log M against log gamma, dropping the top and bottom decile of gamma.
inline ExponentFit fit_mass_exponent(std::vector<double> gamma, std::vector<double> mass) {
  require(gamma.size() == mass.size(), Errc::Alignment, "gamma and mass lengths differ");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    if (gamma[i] > 0 && mass[i] > 0) idx.push_back(i);
  require(idx.size() >= 3, Errc::TooFew, "need at least three positive points");
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return gamma[a] < gamma[b]; });
  const std::size_t cut = idx.size() / 10;
  std::vector<double> x, y;
  for (std::size_t k = cut; k + cut < idx.size(); ++k) {
    x.push_back(std::log(gamma[idx[k]]));
    y.push_back(std::log(mass[idx[k]]));
  }
  require(x.size() >= 3, Errc::TooFew, "too few points after trimming");
  const auto f = linear_fit(x, y);
  return {f.slope, f.se_slope, x.size()};
}

/// Exponent of the exact prior profile on gap levels inside (0, window].
inline ExponentFit profile_exponent(const MassProfile& prof, double window) {
  std::vector<double> g, m;
  for (std::size_t k = 0; k < prof.size(); ++k) {
    const double lv = prof.levels()[k];
    if (lv <= 0 || lv > window) continue;
    g.push_back(lv);
    m.push_back(prof.cumulative()[k]);
  }
  return fit_mass_exponent(std::move(g), std::move(m));
}

struct LiftRow {
  int t = 0;
  double prior_mass = 0, guided_mass = 0, lift = 0, pool_hit = 0, gain = 0;
  bool constant_factor = false;
};

inline std::vector<LiftRow> mass_lift_report(const std::vector<double>& prior_mass,
                                             const std::vector<double>& guided_mass, double N, double K, double J) {
  require(prior_mass.size() == guided_mass.size(), Errc::Alignment, "mass traces differ in length");
  std::vector<LiftRow> rows;
  for (std::size_t i = 0; i < prior_mass.size(); ++i) {
    LiftRow r;
    r.t = static_cast<int>(i + 1);
    r.prior_mass = prior_mass[i];
    r.guided_mass = guided_mass[i];
    r.lift = prior_mass[i] > 0 ? guided_mass[i] / prior_mass[i] : std::numeric_limits<double>::quiet_NaN();
    r.pool_hit = pool_hit_probability(guided_mass[i], N);
    r.gain = theory::search_exponents(prior_mass[i], guided_mass[i], J + K, J, K, N).gain;
    r.constant_factor = guided_mass[i] <= prior_mass[i];
    rows.push_back(r);
  }
  return rows;
}

/// Lift table from a trace; rounds without audits are skipped.
inline std::vector<LiftRow> mass_lift_report(const std::vector<RoundRecord>& rounds, double N, double K, double J) {
  std::vector<double> p, g;
  std::vector<int> ts;
  for (const auto& r : rounds) {
    if (!r.audit_progress_mass) continue;
    p.push_back(r.prior_progress_mass);
    g.push_back(*r.audit_progress_mass);
    ts.push_back(r.t);
  }
  auto rows = mass_lift_report(p, g, N, K, J);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].t = ts[i];
  return rows;
}

struct Series {
  std::string name;
  std::vector<double> x, y;
};

/// Minimal static line plot; log10 y axis when requested.
inline std::string svg_line_plot(const std::vector<Series>& series, const std::string& title, bool log_y) {
  const double W = 640, H = 400, L = 60, R = 20, Tm = 30, B = 40;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, regret_floor)) : v; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return Tm + (y1 - ty(v)) / (y1 - y0) * (H - Tm - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream o;
  char buf[64];
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  std::snprintf(buf, sizeof buf, "%.3g", y1);
  o << "<text x=\"5\" y=\"" << Tm + 5 << "\" font-size=\"11\">" << (log_y ? "1e" : "") << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", y0);
  o << "<text x=\"5\" y=\"" << H - B << "\" font-size=\"11\">" << (log_y ? "1e" : "") << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", x1);
  o << "<text x=\"" << W - R - 30 << "\" y=\"" << H - B + 15 << "\" font-size=\"11\">" << buf << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 6];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      o << buf;
    }
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 150 << "\" y=\"" << Tm + 15 * (k + 1) << "\" font-size=\"11\" fill=\"" << c << "\">"
      << s.name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace gdbo::diag
