#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../engine.hpp"
#include "../theory.hpp"
#include "format.hpp"

namespace gdbo::io {

using nlohmann::json;

// non-finite values travel as strings so the trace stays valid JSON
inline json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

inline double get_num(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  return j.get<double>();
}

inline json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

inline std::optional<double> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_num(j.at(key));
}

inline Channel channel_from(const std::string& s) {
  if (s == "init") return Channel::init;
  if (s == "prior_refresh") return Channel::prior_refresh;
  if (s == "exploit") return Channel::exploit;
  throw Error(Errc::Io, "unknown channel " + s);
}

inline json to_json(const QueriedPoint& q) { return json::array({q.point, channel_name(q.channel), num(q.y)}); }

inline QueriedPoint query_from(const json& j) {
  return {j.at(0).get<std::size_t>(), channel_from(j.at(1).get<std::string>()), get_num(j.at(2))};
}

inline json to_json(const RoundRecord& r) {
  json j;
  j["type"] = "round";
  j["t"] = r.t;
  json q = json::array();
  for (const auto& x : r.queries) q.push_back(to_json(x));
  j["queries"] = q;
  j["eta_prev"] = num(r.eta_prev);
  j["best_gap"] = num(r.best_gap);
  j["recommendation_gap"] = num(r.recommendation_gap);
  j["progress_level"] = num(r.progress_level);
  j["prior_progress_mass"] = num(r.prior_progress_mass);
  j["target_progress_mass"] = num(r.target_progress_mass);
  j["law_progress_mass"] = num(r.law_progress_mass);
  j["audit_threshold_mass"] = opt_num(r.audit_threshold_mass);
  j["audit_progress_mass"] = opt_num(r.audit_progress_mass);
  j["pool_hit"] = opt_num(r.pool_hit);
  j["hazard_increment"] = opt_num(r.hazard_increment);
  j["sup_error"] = num(r.sup_error);
  j["certificate"] = {{"ell", num(r.certificate.ell)},
                      {"d2", num(r.certificate.d2)},
                      {"omega", num(r.certificate.omega)},
                      {"m_star", num(r.certificate.m_star)},
                      {"failure_bound", num(r.certificate.failure_bound)}};
  j["k_eff"] = r.k_eff;
  j["evaluations"] = r.evaluations;
  j["progressed"] = r.progressed;
  return j;
}

inline RoundRecord round_from(const json& j) {
  RoundRecord r;
  r.t = j.at("t").get<int>();
  for (const auto& q : j.at("queries")) r.queries.push_back(query_from(q));
  r.eta_prev = get_num(j.at("eta_prev"));
  r.best_gap = get_num(j.at("best_gap"));
  r.recommendation_gap = get_num(j.value("recommendation_gap", json(0.0)));
  r.progress_level = get_num(j.value("progress_level", json(0.0)));
  r.prior_progress_mass = get_num(j.value("prior_progress_mass", json(0.0)));
  r.target_progress_mass = get_num(j.value("target_progress_mass", json(0.0)));
  r.law_progress_mass = get_num(j.value("law_progress_mass", json(0.0)));
  r.audit_threshold_mass = get_opt(j, "audit_threshold_mass");
  r.audit_progress_mass = get_opt(j, "audit_progress_mass");
  r.pool_hit = get_opt(j, "pool_hit");
  r.hazard_increment = get_opt(j, "hazard_increment");
  r.sup_error = get_num(j.value("sup_error", json(0.0)));
  if (j.contains("certificate")) {
    const auto& c = j.at("certificate");
    r.certificate.ell = get_num(c.at("ell"));
    r.certificate.d2 = get_num(c.at("d2"));
    r.certificate.omega = get_num(c.at("omega"));
    r.certificate.m_star = get_num(c.at("m_star"));
    r.certificate.failure_bound = get_num(c.at("failure_bound"));
  }
  r.k_eff = j.value("k_eff", std::size_t{0});
  r.evaluations = j.value("evaluations", std::size_t{0});
  r.progressed = j.value("progressed", false);
  return r;
}

/// Header line, one line per round, final line.
inline void write_jsonl(std::ostream& os, const RunResult& r) {
  json h;
  h["type"] = "run";
  h["method"] = r.method;
  h["seed"] = r.seed;
  h["config_hash"] = r.config_hash;
  json init = json::array();
  for (const auto& q : r.init) init.push_back(to_json(q));
  h["init"] = init;
  os << h.dump() << '\n';
  for (const auto& rec : r.rounds) os << to_json(rec).dump() << '\n';
  json f;
  f["type"] = "final";
  f["recommendation"] = r.recommendation;
  f["final_regret"] = num(r.final_regret);
  f["evaluations"] = r.evaluations;
  json sc = json::array();
  for (const auto& [p, v] : r.final_scores) sc.push_back(json::array({p, num(v)}));
  f["final_scores"] = sc;
  os << f.dump() << '\n';
}

inline RunResult read_jsonl(std::istream& is) {
  RunResult r;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::Io, std::string("bad trace line: ") + e.what());
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "run") {
      header = true;
      r.method = j.at("method").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.config_hash = j.at("config_hash").get<std::string>();
      for (const auto& q : j.at("init")) r.init.push_back(query_from(q));
    } else if (type == "round") {
      r.rounds.push_back(round_from(j));
    } else if (type == "final") {
      r.recommendation = j.at("recommendation").get<std::size_t>();
      r.final_regret = get_num(j.at("final_regret"));
      r.evaluations = j.at("evaluations").get<std::size_t>();
      for (const auto& p : j.at("final_scores"))
        r.final_scores.emplace_back(p.at(0).get<std::size_t>(), get_num(p.at(1)));
    } else {
      throw Error(Errc::Io, "unknown record type " + type);
    }
  }
  if (!header) throw Error(Errc::Io, "trace has no header line");
  return r;
}

inline void write_jsonl_file(const std::string& path, const RunResult& r) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::Io, "cannot write " + path);
  write_jsonl(f, r);
}

inline RunResult read_jsonl_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Io, "cannot read " + path);
  return read_jsonl(f);
}

struct SummaryRow {
  std::uint64_t seed = 0;
  std::string method;
  double final_regret = 0;
  double best_gap = 0;
  long rounds_to_threshold = -1;  // first round with normalized best value >= tau_audit
  std::size_t evaluations = 0;
  std::string config_hash;
};

inline SummaryRow summarize(const RunResult& r, const DesignSpace& space, double tau_audit) {
  SummaryRow s;
  s.seed = r.seed;
  s.method = r.method;
  s.final_regret = r.final_regret;
  s.best_gap = r.rounds.empty() ? 0.0 : r.rounds.back().best_gap;
  s.evaluations = r.evaluations;
  s.config_hash = r.config_hash;
  const double target_gap = (1 - tau_audit) * space.range();
  for (const auto& rec : r.rounds)
    if (rec.best_gap <= target_gap) {
      s.rounds_to_threshold = rec.t;
      break;
    }
  return s;
}

inline const char* summary_header = "seed,method,final_regret,best_gap,rounds_to_threshold,evaluations,config_hash";

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << summary_header << '\n';
  for (const auto& s : rows)
    os << s.seed << ',' << s.method << ',' << fmt(s.final_regret) << ',' << fmt(s.best_gap) << ','
       << s.rounds_to_threshold << ',' << s.evaluations << ',' << s.config_hash << '\n';
}

inline std::vector<SummaryRow> read_summary_csv(std::istream& is) {
  std::vector<SummaryRow> rows;
  std::string line;
  if (!std::getline(is, line) || split(line, ',') != split(summary_header, ','))
    throw Error(Errc::Io, "summary header mismatch");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 7) throw Error(Errc::Io, "summary row has wrong width");
    SummaryRow s;
    s.seed = std::stoull(c[0]);
    s.method = c[1];
    s.final_regret = parse_double(c[2]);
    s.best_gap = parse_double(c[3]);
    s.rounds_to_threshold = std::stol(c[4]);
    s.evaluations = std::stoull(c[5]);
    s.config_hash = c[6];
    rows.push_back(s);
  }
  return rows;
}

inline bool operator==(const SummaryRow& a, const SummaryRow& b) {
  return a.seed == b.seed && a.method == b.method && a.final_regret == b.final_regret && a.best_gap == b.best_gap &&
         a.rounds_to_threshold == b.rounds_to_threshold && a.evaluations == b.evaluations &&
         a.config_hash == b.config_hash;
}

/// Field-wise equality; NaN compares equal to NaN.
inline bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

inline bool same(const std::optional<double>& a, const std::optional<double>& b) {
  return a.has_value() == b.has_value() && (!a || same(*a, *b));
}

inline bool same(const RunResult& a, const RunResult& b) {
  auto sq = [](const QueriedPoint& x, const QueriedPoint& y) {
    return x.point == y.point && x.channel == y.channel && same(x.y, y.y);
  };
  if (a.method != b.method || a.seed != b.seed || a.config_hash != b.config_hash) return false;
  if (a.recommendation != b.recommendation || !same(a.final_regret, b.final_regret)) return false;
  if (a.evaluations != b.evaluations || a.init.size() != b.init.size() || a.rounds.size() != b.rounds.size())
    return false;
  for (std::size_t i = 0; i < a.init.size(); ++i)
    if (!sq(a.init[i], b.init[i])) return false;
  if (a.final_scores.size() != b.final_scores.size()) return false;
  for (std::size_t i = 0; i < a.final_scores.size(); ++i)
    if (a.final_scores[i].first != b.final_scores[i].first ||
        !same(a.final_scores[i].second, b.final_scores[i].second))
      return false;
  for (std::size_t k = 0; k < a.rounds.size(); ++k) {
    const auto &x = a.rounds[k], &y = b.rounds[k];
    if (x.t != y.t || x.queries.size() != y.queries.size() || x.k_eff != y.k_eff || x.evaluations != y.evaluations ||
        x.progressed != y.progressed)
      return false;
    for (std::size_t i = 0; i < x.queries.size(); ++i)
      if (!sq(x.queries[i], y.queries[i])) return false;
    const double xs[] = {x.eta_prev, x.best_gap, x.recommendation_gap, x.progress_level, x.prior_progress_mass,
                         x.target_progress_mass, x.law_progress_mass, x.sup_error, x.certificate.ell,
                         x.certificate.d2, x.certificate.omega, x.certificate.m_star, x.certificate.failure_bound};
    const double ys[] = {y.eta_prev, y.best_gap, y.recommendation_gap, y.progress_level, y.prior_progress_mass,
                         y.target_progress_mass, y.law_progress_mass, y.sup_error, y.certificate.ell,
                         y.certificate.d2, y.certificate.omega, y.certificate.m_star, y.certificate.failure_bound};
    for (std::size_t i = 0; i < std::size(xs); ++i)
      if (!same(xs[i], ys[i])) return false;
    if (!same(x.audit_threshold_mass, y.audit_threshold_mass) || !same(x.audit_progress_mass, y.audit_progress_mass) ||
        !same(x.pool_hit, y.pool_hit) || !same(x.hazard_increment, y.hazard_increment))
      return false;
  }
  return true;
}

}  // namespace gdbo::io
