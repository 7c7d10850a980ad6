#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "normal.hpp"
#include "rng.hpp"

namespace gdbo {

using PointSet = std::vector<std::size_t>;

/// Observation noise added to f(x). Survival is P(xi >= u).
struct NoiseModel {
  enum class Kind { none, gaussian, uniform };
  Kind kind = Kind::none;
  double scale = 0.0;  // sigma for gaussian, half-width for uniform

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma) {
    require(std::isfinite(sigma) && sigma >= 0, Errc::InvalidArgument, "sigma must be >= 0");
    return {Kind::gaussian, sigma};
  }
  static NoiseModel uniform(double w) {
    require(std::isfinite(w) && w >= 0, Errc::InvalidArgument, "half-width must be >= 0");
    return {Kind::uniform, w};
  }

  bool degenerate() const { return kind == Kind::none || scale == 0.0; }

  double survival(double u) const {
    if (degenerate()) return u <= 0 ? 1.0 : 0.0;
    if (kind == Kind::gaussian) return normal::sf(u / scale);
    if (u <= -scale) return 1.0;
    if (u >= scale) return 0.0;
    return (scale - u) / (2 * scale);
  }

  /// E[(xi - u)+], i.e. the survival integrated from u to infinity.
  double integrated_survival(double u) const {
    if (degenerate()) return std::max(-u, 0.0);
    if (kind == Kind::gaussian) {
      const double d = -u;
      const double z = d / scale;
      return d * normal::cdf(z) + scale * normal::pdf(z);
    }
    if (u <= -scale) return -u;
    if (u >= scale) return 0.0;
    return (scale - u) * (scale - u) / (4 * scale);
  }

  double stddev() const {
    if (degenerate()) return 0.0;
    return kind == Kind::gaussian ? scale : scale / std::sqrt(3.0);
  }

  double draw(Rng& rng) const {
    if (degenerate()) return 0.0;
    if (kind == Kind::gaussian) return scale * rng.normal();
    return scale * (2 * rng.uniform() - 1);
  }
};

inline const char* noise_kind_name(NoiseModel::Kind k) {
  switch (k) {
    case NoiseModel::Kind::none: return "none";
    case NoiseModel::Kind::gaussian: return "gaussian";
    case NoiseModel::Kind::uniform: return "uniform";
  }
  return "none";
}

/// Right-continuous step function M0(gamma) = prior mass of gaps <= gamma.
class MassProfile {
 public:
  MassProfile() = default;

  /// From (gap, mass) atoms in any order. Equal gaps are merged.
  MassProfile(std::vector<double> gaps, std::vector<double> masses) {
    require(gaps.size() == masses.size(), Errc::LengthMismatch, "profile atoms");
    std::vector<std::size_t> order(gaps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gaps[a] < gaps[b]; });
    for (std::size_t i : order) {
      require(gaps[i] >= 0 && std::isfinite(gaps[i]), Errc::InvalidArgument, "gap levels must be >= 0");
      require(masses[i] >= 0, Errc::InvalidArgument, "atom masses must be >= 0");
      if (!levels_.empty() && levels_.back() == gaps[i]) {
        mass_.back() += masses[i];
      } else {
        levels_.push_back(gaps[i]);
        mass_.push_back(masses[i]);
      }
    }
    cum_.resize(mass_.size());
    std::partial_sum(mass_.begin(), mass_.end(), cum_.begin());
  }

  double operator()(double gamma) const {
    auto it = std::upper_bound(levels_.begin(), levels_.end(), gamma);
    if (it == levels_.begin()) return 0.0;
    return std::min(1.0, cum_[static_cast<std::size_t>(it - levels_.begin()) - 1]);
  }

  const std::vector<double>& levels() const { return levels_; }
  const std::vector<double>& atom_mass() const { return mass_; }
  const std::vector<double>& cumulative() const { return cum_; }
  std::size_t size() const { return levels_.size(); }
  double total() const { return cum_.empty() ? 0.0 : cum_.back(); }

 private:
  std::vector<double> levels_, mass_, cum_;
};

class DesignSpace {
 public:
  DesignSpace() = default;

  std::size_t size() const { return prior_.size(); }
  double prior(std::size_t i) const { return prior_[i]; }
  double objective(std::size_t i) const { return objective_[i]; }
  double gap(std::size_t i) const { return f_star_ - objective_[i]; }
  const std::vector<double>& prior() const { return prior_; }
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<std::vector<double>>& features() const { return features_; }
  double f_star() const { return f_star_; }
  double f_min() const { return f_min_; }
  double range() const { return f_star_ - f_min_; }  // R_f
  const MassProfile& profile() const { return profile_; }
  double mass_at(double gamma) const { return profile_(gamma); }

  /// prior mass of the optimizer set
  double p0_star() const { return profile_(0.0); }

  /// f* minus the best value off the optimizer set; +inf if f is constant.
  double delta_star() const {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : objective_)
      if (v < f_star_) best = std::max(best, v);
    return f_star_ - best;
  }

  PointSet optimizer_set() const { return level_set(0.0); }

  PointSet level_set(double gamma) const {
    PointSet out;
    for (std::size_t i = 0; i < size(); ++i)
      if (gap(i) <= gamma) out.push_back(i);
    return out;
  }

  double prior_mass(const PointSet& A) const {
    double m = 0;
    for (std::size_t i : A) m += prior_[i];
    return m;
  }

  /// objective rescaled to [0,1] (1 at the optimum)
  double normalized(std::size_t i) const {
    return range() > 0 ? (objective_[i] - f_min_) / range() : 1.0;
  }

 private:
  friend DesignSpace build_explicit_space(std::vector<double>, std::vector<double>,
                                          std::vector<std::vector<double>>);
  std::vector<double> prior_, objective_;
  std::vector<std::vector<double>> features_;
  double f_star_ = 0, f_min_ = 0;
  MassProfile profile_;
};

inline DesignSpace build_explicit_space(std::vector<double> prior, std::vector<double> objective,
                                        std::vector<std::vector<double>> features = {}) {
  require(!prior.empty(), Errc::LengthMismatch, "empty design space");
  require(prior.size() == objective.size(), Errc::LengthMismatch, "prior and objective lengths differ");
  require(features.empty() || features.size() == prior.size(), Errc::LengthMismatch,
          "feature rows do not match point count");
  double total = 0;
  for (double p : prior) {
    require(std::isfinite(p) && p > 0, Errc::NonPositivePrior, "prior entries must be > 0");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, Errc::InvalidArgument, "prior does not sum to 1");
  for (double& p : prior) p /= total;
  for (double v : objective) require(std::isfinite(v), Errc::InvalidArgument, "objective must be finite");
  for (const auto& row : features)
    for (double c : row)
      require(c >= 0 && c <= 1, Errc::InvalidArgument, "features must lie in [0,1]");

  DesignSpace s;
  s.f_star_ = *std::max_element(objective.begin(), objective.end());
  s.f_min_ = *std::min_element(objective.begin(), objective.end());
  std::vector<double> gaps(objective.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = s.f_star_ - objective[i];
  s.profile_ = MassProfile(std::move(gaps), prior);
  s.prior_ = std::move(prior);
  s.objective_ = std::move(objective);
  s.features_ = std::move(features);
  return s;
}

inline PointSet gamma_set(const DesignSpace& space, double gamma) {
  require(gamma >= 0, Errc::InvalidArgument, "gamma must be >= 0");
  return space.level_set(gamma);
}

inline double sample_observation(const DesignSpace& space, std::size_t point,
                                 const NoiseModel& noise, Rng& rng) {
  require(point < space.size(), Errc::OutOfRange, "point index");
  return space.objective(point) + noise.draw(rng);
}

struct GeometryParams {
  double chi_f = 1.0;
  double d0 = 1.0;
  double r0 = 1.0;
  std::size_t n_points = 1000;
  std::size_t multiplicity = 1;
  std::uint64_t seed = 0;
  double p_star = 1e-4;
};

struct GeometryLandscape {
  DesignSpace space;
  double alpha0 = 0;       // d0 / chi_f
  double window_gap = 0;   // r0^chi_f
  std::vector<double> radius;
};

/// Points at equal prior quantiles of the r^d0 small-ball profile, gaps r^chi_f,
/// plus an optimizer atom carrying p_star split over `multiplicity` points.
inline GeometryLandscape generate_geometry_landscape(const GeometryParams& g) {
  require(g.chi_f > 0 && g.d0 > 0, Errc::InvalidArgument, "exponents must be > 0");
  require(g.r0 > 0 && g.r0 <= 1, Errc::InvalidArgument, "r0 must be in (0,1]");
  require(g.n_points >= 2, Errc::InvalidArgument, "need at least two points");
  require(g.multiplicity >= 1 && g.multiplicity < g.n_points, Errc::InvalidArgument, "multiplicity");
  require(g.p_star > 0 && g.p_star < 1, Errc::InvalidArgument, "p_star must be in (0,1)");

  const std::size_t m = g.multiplicity;
  const std::size_t rest = g.n_points - m;
  require(std::pow(g.r0, g.d0) > 0, Errc::DegenerateWindow, "r0^d0 underflows");
  const double r1 = g.r0 * std::pow(1.0 / static_cast<double>(rest), 1.0 / g.d0);
  const double rho1 = std::pow(r1, g.chi_f);
  require(rho1 > 0 && std::isnormal(rho1), Errc::DegenerateWindow, "smallest gap underflows");

  std::vector<double> radius(g.n_points, 0.0), prior(g.n_points), obj(g.n_points);
  for (std::size_t i = 0; i < m; ++i) prior[i] = g.p_star / static_cast<double>(m);
  for (std::size_t k = 1; k <= rest; ++k) {
    const double q = static_cast<double>(k) / static_cast<double>(rest);
    radius[m + k - 1] = g.r0 * std::pow(q, 1.0 / g.d0);
    prior[m + k - 1] = (1.0 - g.p_star) / static_cast<double>(rest);
  }

  std::vector<std::size_t> perm(g.n_points);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(g.seed, 0x6e0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<double> r(g.n_points), p(g.n_points);
  std::vector<std::vector<double>> feat(g.n_points);
  for (std::size_t i = 0; i < g.n_points; ++i) {
    r[i] = radius[perm[i]];
    p[i] = prior[perm[i]];
    obj[i] = -std::pow(r[i], g.chi_f);
    feat[i] = {r[i] / g.r0};
  }
  double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;

  GeometryLandscape out;
  out.space = build_explicit_space(std::move(p), std::move(obj), std::move(feat));
  out.alpha0 = g.d0 / g.chi_f;
  out.window_gap = std::pow(g.r0, g.chi_f);
  out.radius = std::move(r);
  return out;
}

namespace detail {
inline bool parse_double(std::string_view tok, double& out) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  if (tok.empty()) return false;
  if (tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}
}  // namespace detail

/// CSV with columns prior, objective[, feature...]. A non-numeric first row is a header.
inline DesignSpace load_space_csv(std::istream& in) {
  std::vector<double> prior, obj;
  std::vector<std::vector<double>> feat;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      double v;
      if (!detail::parse_double(tok, v)) { numeric = false; break; }
      row.push_back(v);
    }
    if (!numeric) {
      if (prior.empty()) continue;  // header
      throw Error(Errc::Io, "non-numeric value on line " + std::to_string(lineno));
    }
    if (row.size() < 2) throw Error(Errc::Io, "need prior and objective on line " + std::to_string(lineno));
    if (width == 0) width = row.size();
    if (row.size() != width) throw Error(Errc::LengthMismatch, "ragged row on line " + std::to_string(lineno));
    prior.push_back(row[0]);
    obj.push_back(row[1]);
    if (row.size() > 2) feat.emplace_back(row.begin() + 2, row.end());
  }
  return build_explicit_space(std::move(prior), std::move(obj), std::move(feat));
}

inline DesignSpace load_space_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Io, "cannot open " + path);
  return load_space_csv(f);
}

}  // namespace gdbo
