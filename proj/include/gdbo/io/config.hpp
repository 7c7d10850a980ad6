#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "../domain.hpp"
#include "../engine.hpp"
#include "format.hpp"

namespace gdbo::io {

using nlohmann::json;

struct LandscapeConfig {
  enum class Kind { geometry, explicit_csv, explicit_inline };
  Kind kind = Kind::geometry;
  GeometryParams geometry;
  std::string file;
  std::vector<double> prior, objective;
};

struct ExperimentConfig {
  int format_version = 1;
  LandscapeConfig landscape;
  RunConfig run;
  std::string output_dir = "gdbo_out";
  json bounds = json::array();  // scenario list for `bounds`
  std::string base_dir;         // resolves relative landscape files
};

namespace detail {

// Object reader that rejects keys it was never asked about.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw Error(Errc::Config, path_ + " must be an object");
  }
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw Error(Errc::Config, "unknown key " + path_ + "." + it.key());
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k);
  }

  template <class T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    try {
      out = j_.at(k).get<T>();
    } catch (const json::exception&) {
      throw Error(Errc::Config, "bad type for " + path_ + "." + k);
    }
  }

  const json& at(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }

  std::string path(const std::string& k) const { return path_ + "." + k; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E pick(const std::string& v, std::initializer_list<std::pair<const char*, E>> opts, const std::string& what) {
  for (const auto& [name, e] : opts)
    if (v == name) return e;
  throw Error(Errc::Config, "unknown " + what + " '" + v + "'");
}

inline NoiseModel parse_noise(const json& j, const std::string& path) {
  Obj o(j, path);
  std::string kind = "none";
  double scale = 0;
  o.get("kind", kind);
  o.get("scale", scale);
  o.done();
  if (!(scale >= 0)) throw Error(Errc::Config, path + ".scale must be >= 0");
  using K = NoiseModel::Kind;
  return {pick<K>(kind, {{"none", K::none}, {"gaussian", K::gaussian}, {"uniform", K::uniform}}, "noise kind"),
          scale};
}

inline AcquisitionSpec parse_acquisition(const json& j, const std::string& path) {
  Obj o(j, path);
  AcquisitionSpec s;
  std::string kind = "progress";
  o.get("kind", kind);
  using K = AcquisitionSpec::Kind;
  s.kind = pick<K>(kind,
                   {{"ei", K::ei}, {"log_ei", K::log_ei}, {"progress", K::progress}, {"pi", K::pi},
                    {"ucb", K::ucb}, {"mean", K::mean}},
                   "acquisition kind");
  o.get("tau", s.tau);
  o.get("eps_ei", s.eps_ei);
  o.get("eta", s.eta);
  o.get("bonus", s.bonus);
  o.done();
  return s;
}

inline LearnerSpec parse_learner(const json& j, const std::string& path) {
  Obj o(j, path);
  LearnerSpec l;
  std::string kind = "tabular";
  o.get("kind", kind);
  using K = LearnerSpec::Kind;
  l.kind = pick<K>(kind, {{"tabular", K::tabular}, {"lfbo", K::lfbo}, {"oracle", K::oracle}}, "learner kind");
  o.get("reservoir_only", l.reservoir_only);
  o.get("steps", l.steps);
  o.get("learning_rate", l.learning_rate);
  o.get("tolerance", l.tolerance);
  o.get("c_lo", l.c_lo);
  o.get("c_hi", l.c_hi);
  o.get("oracle_error", l.oracle_error);
  o.done();
  return l;
}

inline SamplerSpec parse_sampler(const json& j, const std::string& path) {
  Obj o(j, path);
  SamplerSpec s;
  std::string kind = "exact";
  o.get("kind", kind);
  using K = SamplerSpec::Kind;
  s.kind = pick<K>(kind,
                   {{"exact", K::exact}, {"resample_prior", K::resample_prior},
                    {"resample_proposal", K::resample_proposal}, {"contaminated", K::contaminated}},
                   "sampler kind");
  o.get("M", s.M);
  o.get("eps", s.eps);
  o.get("omega", s.omega);
  o.done();
  return s;
}

inline RunConfig parse_run(const json& j) {
  Obj o(j, "run");
  RunConfig c;
  o.get("T", c.T);
  o.get("N", c.N);
  o.get("K", c.K);
  o.get("J", c.J);
  o.get("n_init", c.n_init);
  o.get("beta", c.beta);
  if (o.has("acquisition")) c.acquisition = parse_acquisition(o.at("acquisition"), o.path("acquisition"));
  o.get("dynamic_threshold", c.dynamic_threshold);
  if (o.has("guidance")) {
    using G = RunConfig::Guidance;
    c.guidance = pick<G>(o.at("guidance").get<std::string>(), {{"log_floor", G::log_floor}, {"linear", G::linear}},
                         "guidance");
  }
  if (o.has("threshold")) {
    using H = RunConfig::Threshold;
    c.threshold = pick<H>(o.at("threshold").get<std::string>(), {{"known", H::known}, {"estimated", H::estimated}},
                          "threshold mode");
  }
  o.get("fstar_margin", c.fstar_margin);
  if (o.has("learner")) c.learner = parse_learner(o.at("learner"), o.path("learner"));
  if (o.has("sampler")) c.sampler = parse_sampler(o.at("sampler"), o.path("sampler"));
  o.get("audit_m", c.audit_m);
  o.get("tau_audit", c.tau_audit);
  o.get("a_progress", c.a_progress);
  if (o.has("noise")) c.noise = parse_noise(o.at("noise"), o.path("noise"));
  o.get("seeds", c.seeds);
  o.done();
  return c;
}

inline LandscapeConfig parse_landscape(const json& j) {
  Obj o(j, "landscape");
  LandscapeConfig l;
  std::string kind = "geometry";
  o.get("kind", kind);
  using K = LandscapeConfig::Kind;
  l.kind = pick<K>(kind, {{"geometry", K::geometry}, {"csv", K::explicit_csv}, {"explicit", K::explicit_inline}},
                   "landscape kind");
  auto& g = l.geometry;
  switch (l.kind) {
    case K::geometry:
      o.get("chi_f", g.chi_f);
      o.get("d0", g.d0);
      o.get("r0", g.r0);
      o.get("n_points", g.n_points);
      o.get("multiplicity", g.multiplicity);
      o.get("seed", g.seed);
      o.get("p_star", g.p_star);
      break;
    case K::explicit_csv:
      if (!o.has("file")) throw Error(Errc::Config, "landscape.file is required for csv landscapes");
      o.get("file", l.file);
      break;
    case K::explicit_inline:
      if (!o.has("prior") || !o.has("objective"))
        throw Error(Errc::Config, "explicit landscapes need prior and objective");
      o.get("prior", l.prior);
      o.get("objective", l.objective);
      break;
  }
  o.done();
  return l;
}

}  // namespace detail

inline json to_json(const NoiseModel& n) { return {{"kind", noise_kind_name(n.kind)}, {"scale", n.scale}}; }

inline json to_json(const RunConfig& c) {
  const auto& a = c.acquisition;
  return {{"T", c.T},
          {"N", c.N},
          {"K", c.K},
          {"J", c.J},
          {"n_init", c.n_init},
          {"beta", c.beta},
          {"acquisition",
           {{"kind", acquisition_name(a.kind)}, {"tau", a.tau}, {"eps_ei", a.eps_ei}, {"eta", a.eta}, {"bonus", a.bonus}}},
          {"dynamic_threshold", c.dynamic_threshold},
          {"guidance", c.guidance == RunConfig::Guidance::log_floor ? "log_floor" : "linear"},
          {"threshold", c.threshold == RunConfig::Threshold::known ? "known" : "estimated"},
          {"fstar_margin", c.fstar_margin},
          {"learner",
           {{"kind", learner_name(c.learner.kind)},
            {"reservoir_only", c.learner.reservoir_only},
            {"steps", c.learner.steps},
            {"learning_rate", c.learner.learning_rate},
            {"tolerance", c.learner.tolerance},
            {"c_lo", c.learner.c_lo},
            {"c_hi", c.learner.c_hi},
            {"oracle_error", c.learner.oracle_error}}},
          {"sampler",
           {{"kind", sampler_name(c.sampler.kind)}, {"M", c.sampler.M}, {"eps", c.sampler.eps}, {"omega", c.sampler.omega}}},
          {"audit_m", c.audit_m},
          {"tau_audit", c.tau_audit},
          {"a_progress", c.a_progress},
          {"noise", to_json(c.noise)},
          {"seeds", c.seeds}};
}

inline json to_json(const LandscapeConfig& l) {
  switch (l.kind) {
    case LandscapeConfig::Kind::geometry: {
      const auto& g = l.geometry;
      return {{"kind", "geometry"}, {"chi_f", g.chi_f}, {"d0", g.d0}, {"r0", g.r0}, {"n_points", g.n_points},
              {"multiplicity", g.multiplicity}, {"seed", g.seed}, {"p_star", g.p_star}};
    }
    case LandscapeConfig::Kind::explicit_csv: return {{"kind", "csv"}, {"file", l.file}};
    case LandscapeConfig::Kind::explicit_inline:
      return {{"kind", "explicit"}, {"prior", l.prior}, {"objective", l.objective}};
  }
  return {};
}

/// Canonical form: defaults filled in, keys sorted. The output directory is
/// not part of the experiment's identity and is left out.
inline json canonical(const ExperimentConfig& c) {
  return {{"format_version", c.format_version},
          {"landscape", to_json(c.landscape)},
          {"run", to_json(c.run)},
          {"bounds", c.bounds}};
}

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(canonical(c).dump())); }

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  try {
    detail::Obj o(j, "config");
    o.get("format_version", c.format_version);
    if (c.format_version != 1) throw Error(Errc::Config, "unsupported format_version");
    if (o.has("landscape")) c.landscape = detail::parse_landscape(o.at("landscape"));
    if (o.has("run")) c.run = detail::parse_run(o.at("run"));
    o.get("output_dir", c.output_dir);
    if (o.has("bounds")) {
      c.bounds = o.at("bounds");
      if (!c.bounds.is_array()) throw Error(Errc::Config, "bounds must be a list");
    }
    o.done();
  } catch (const json::exception& e) {
    throw Error(Errc::Config, e.what());
  }
  try {
    c.run.validate();
  } catch (const Error& e) {
    throw Error(Errc::Config, e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Config, "cannot open config " + path);
  json j;
  try {
    j = json::parse(f, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(Errc::Config, std::string("config is not valid JSON: ") + e.what());
  }
  auto c = parse_config(j);
  c.base_dir = std::filesystem::path(path).parent_path().string();
  return c;
}

inline DesignSpace build_landscape(const ExperimentConfig& c) {
  const auto& l = c.landscape;
  try {
    switch (l.kind) {
      case LandscapeConfig::Kind::geometry: return generate_geometry_landscape(l.geometry).space;
      case LandscapeConfig::Kind::explicit_csv: {
        std::filesystem::path p(l.file);
        if (p.is_relative() && !c.base_dir.empty()) p = std::filesystem::path(c.base_dir) / p;
        return load_space_csv(p.string());
      }
      case LandscapeConfig::Kind::explicit_inline: return build_explicit_space(l.prior, l.objective);
    }
  } catch (const Error& e) {
    throw Error(Errc::Config, e.what());
  }
  throw Error(Errc::Config, "unknown landscape");
}

}  // namespace gdbo::io
