#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fracsde::regimes {

inline constexpr double inf = std::numeric_limits<double>::infinity();

struct RegimeParams {
  double H = 0.3;
  int d = 1;
  double p = inf;
  double q = inf;
};

inline double recip(double x) { return std::isinf(x) ? 0.0 : 1.0 / x; }

inline void validate(const RegimeParams& r) {
  if (!(r.H > 0.0 && r.H < 1.0)) throw std::domain_error("regimes: H must lie in (0,1)");
  if (r.d < 1) throw std::domain_error("regimes: d must be >= 1");
  if (!(r.p >= 1.0) || !(r.q >= 1.0)) throw std::domain_error("regimes: p, q must lie in [1, inf]");
}

struct Check {
  bool ok = false;
  double residual = 0.0;  // positive iff the strict inequality holds
};

inline Check check_h1(const RegimeParams& r) {
  const double res = (1.0 - r.H) - recip(r.q) - r.H * r.d * recip(r.p);
  return {res > 0.0, res};
}

inline bool check_h2(const RegimeParams& r) { return r.p >= 2.0 && r.H * r.q >= 1.0 && r.H < 0.5; }

// (H2) without its H < 1/2 clause; used for the H = 1/2 reduction.
inline bool h2_inequalities(const RegimeParams& r) { return r.p >= 2.0 && r.H * r.q >= 1.0; }

inline Check check_weak_existence(const RegimeParams& r) {
  const double res = (1.0 - r.H) - (1.0 - r.H) * recip(r.q) - r.H * r.d * recip(r.p);
  return {res > 0.0, res};
}

inline double kappa(const RegimeParams& r) { return 1.0 - r.H - r.H * r.d * recip(r.p) - recip(r.q); }

// ---------------------------------------------------------------- comparison table

enum class Verdict { applies, fails, not_claimed, not_encoded };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::applies: return "applies";
    case Verdict::fails: return "fails";
    case Verdict::not_claimed: return "not_claimed";
    case Verdict::not_encoded: return "not_encoded";
  }
  return "?";
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "applies") return Verdict::applies;
  if (s == "fails") return Verdict::fails;
  if (s == "not_claimed") return Verdict::not_claimed;
  if (s == "not_encoded") return Verdict::not_encoded;
  throw std::invalid_argument("unknown verdict '" + s + "'");
}

// One rendered inequality of a row, e.g. "2/q + d/p = 0.667 < 1".
struct Atom {
  std::string text;
  bool ok = false;
  bool operator==(const Atom&) const = default;
};

struct Condition {
  Verdict verdict = Verdict::not_claimed;
  std::vector<Atom> atoms;
  bool operator==(const Condition&) const = default;
};

struct TableRow {
  std::string reference;
  Condition weak;
  Condition strong;
  bool operator==(const TableRow&) const = default;
};

namespace detail {

inline std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline std::string term(const std::string& name, double v) { return name == num(v) ? name : name + " = " + num(v); }

inline Atom lt(const std::string& lhs_name, double lhs, const std::string& rhs_name, double rhs) {
  const bool ok = lhs < rhs;
  return {term(lhs_name, lhs) + (ok ? " < " : " >= ") + term(rhs_name, rhs), ok};
}

inline Atom ge(const std::string& lhs_name, double lhs, const std::string& rhs_name, double rhs) {
  const bool ok = lhs >= rhs;
  return {term(lhs_name, lhs) + (ok ? " >= " : " < ") + term(rhs_name, rhs), ok};
}

inline Atom flag(const std::string& text, bool ok) { return {text + (ok ? " holds" : " fails"), ok}; }

inline Condition all(std::vector<Atom> atoms) {
  const bool ok = std::all_of(atoms.begin(), atoms.end(), [](const Atom& a) { return a.ok; });
  return {ok ? Verdict::applies : Verdict::fails, std::move(atoms)};
}

inline Condition none() { return {Verdict::not_claimed, {}}; }

}  // namespace detail

inline std::vector<TableRow> table_rows(const RegimeParams& r) {
  using namespace detail;
  const double H = r.H, d = r.d, ip = recip(r.p), iq = recip(r.q);
  const bool qinf = std::isinf(r.q);
  std::vector<TableRow> rows;

  rows.push_back({"Krylov-Rockner", none(),
                  all({lt("2/q + d/p", 2 * iq + d * ip, "1", 1.0), ge("p", r.p, "2", 2.0), ge("q", r.q, "2", 2.0),
                       flag("H = 1/2", H == 0.5)})});

  rows.push_back({"Anzeletti et al.",
                  all({flag("q = inf", qinf), lt("d/p", d * ip, "1/(2H) - 1/2", 1 / (2 * H) - 0.5)}),
                  all({flag("q = inf", qinf), lt("d/p", d * ip, "1/(2H) - 1", 1 / (2 * H) - 1), flag("H < 1/2", H < 0.5)})});

  rows.push_back({"Butkovsky-Gallay", all({lt("(1-H)/q + Hd/p", (1 - H) * iq + H * d * ip, "1 - H", 1 - H)}), none()});

  {
    std::vector<Atom> atoms{ge("p", r.p, "2dH", 2 * d * H), lt("Hd/p + 1/q", H * d * ip + iq, "1 - H", 1 - H),
                            flag("H < 1/2", H < 0.5)};
    const bool guard = r.p < 1.0 / (1.0 - H) && r.q > 2.0;
    if (guard)
      atoms.push_back(lt("Hd/p", H * d * ip, "(1/p - 1/q)/(1/p - 1/2)(1/2 - H)", (ip - iq) / (ip - 0.5) * (0.5 - H)));
    else
      atoms.push_back({"third condition inactive (p >= 1/(1-H) or q <= 2)", true});
    auto c = all(atoms);
    rows.push_back({"Butkovsky et al. (2024)", c, c});
  }

  rows.push_back({"Butkovsky et al. (2023)",
                  all({flag("q = inf", qinf), lt("Hd/p", H * d * ip, "1 - H", 1 - H)}), none()});

  rows.push_back({"Catellier-Gubinelli",
                  all({flag("q = inf", qinf), lt("Hd/p", H * d * ip, "1/(2H) - 1", 1 / (2 * H) - 1), flag("H < 1/2", H < 0.5)}),
                  none()});

  {
    TableRow row{"Galeati-Gerencser",
                 all({lt("1/q + Hd/p", iq + H * d * ip, "1 - H", 1 - H), lt("d/p", d * ip, "1/(2H) - 1/2", 1 / (2 * H) - 0.5)}),
                 all({lt("1/min(q,2) + Hd/p", recip(std::min(r.q, 2.0)) + H * d * ip, "1 - H", 1 - H)})};
    if (!(H > 0.0 && H < 1.0)) row.strong = {Verdict::not_encoded, {{"H outside (0,1) not encoded", false}}};
    rows.push_back(row);
  }

  rows.push_back({"Le",
                  all({lt("1/q + Hd/p", iq + H * d * ip, "1/2", 0.5), flag("H < 1/2", H < 0.5), ge("p", r.p, "2", 2.0),
                       ge("q", r.q, "2", 2.0)}),
                  all({lt("1/q + Hd/p", iq + H * d * ip, "1/2 - H", 0.5 - H), flag("H < 1/2", H < 0.5), ge("p", r.p, "2", 2.0),
                       ge("q", r.q, "2", 2.0)})});
  return rows;
}

// ---------------------------------------------------------------- report

struct HolderBounds {
  double time_bound = 0.0;
  double space_bound = 1.0;
  bool operator==(const HolderBounds&) const = default;
};

// Time exponent bound min(H, 1-H-Hd/p-(1-H)/q, (1-1/q)/2); empty when (H1) fails.
inline std::optional<HolderBounds> holder_exponents(const RegimeParams& r) {
  if (!check_h1(r).ok) return std::nullopt;
  const double iq = recip(r.q);
  return HolderBounds{std::min({r.H, 1.0 - r.H - r.H * r.d * recip(r.p) - (1.0 - r.H) * iq, 0.5 * (1.0 - iq)}), 1.0};
}

struct RegimeReport {
  RegimeParams params;
  bool h1 = false;
  double h1_residual = 0.0;
  bool h2 = false;
  bool weak_existence = false;
  double weak_existence_residual = 0.0;
  double kappa = 0.0;
  std::vector<TableRow> prior_results;
  TableRow present;
  std::optional<HolderBounds> holder;

  bool operator==(const RegimeReport& o) const {
    auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
    return same(params.H, o.params.H) && params.d == o.params.d && same(params.p, o.params.p) &&
           same(params.q, o.params.q) && h1 == o.h1 && same(h1_residual, o.h1_residual) && h2 == o.h2 &&
           weak_existence == o.weak_existence && same(weak_existence_residual, o.weak_existence_residual) && same(kappa, o.kappa) &&
           prior_results == o.prior_results && present == o.present && holder == o.holder;
  }
};

inline RegimeReport classify(const RegimeParams& r) {
  validate(r);
  RegimeReport rep;
  rep.params = r;
  const auto h1 = check_h1(r);
  const auto w = check_weak_existence(r);
  rep.h1 = h1.ok;
  rep.h1_residual = h1.residual;
  rep.h2 = check_h2(r);
  rep.weak_existence = w.ok;
  rep.weak_existence_residual = w.residual;
  rep.kappa = kappa(r);
  rep.prior_results = table_rows(r);
  using namespace detail;
  const double ip = recip(r.p), iq = recip(r.q);
  rep.present = {"present result",
                    all({lt("(1-H)/q + Hd/p", (1 - r.H) * iq + r.H * r.d * ip, "1 - H", 1 - r.H)}),
                    all({lt("1/q + Hd/p", iq + r.H * r.d * ip, "1 - H", 1 - r.H), ge("p", r.p, "2", 2.0),
                         ge("Hq", r.H * r.q, "1", 1.0), flag("H < 1/2", r.H < 0.5)})};
  rep.holder = holder_exponents(r);
  return rep;
}

// At H = 1/2 the two conditions reduce to 2/q + d/p < 1 with p, q >= 2.
struct Reduction {
  bool ours = false;
  bool krylov_rockner = false;
};

inline Reduction reduction_at_half(int d, double p, double q) {
  const RegimeParams r{0.5, d, p, q};
  return {check_h1(r).ok && h2_inequalities(r), 2 * recip(q) + d * recip(p) < 1.0 && p >= 2.0 && q >= 2.0};
}

// ---------------------------------------------------------------- JSON

namespace detail {

inline nlohmann::ordered_json num_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double num_from_json(const nlohmann::ordered_json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return inf;
    if (s == "-inf") return -inf;
    throw std::invalid_argument("bad number '" + s + "'");
  }
  return j.get<double>();
}

inline nlohmann::ordered_json cond_json(const Condition& c) {
  nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
  for (const auto& a : c.atoms) atoms.push_back({{"text", a.text}, {"ok", a.ok}});
  return {{"verdict", to_string(c.verdict)}, {"atoms", atoms}};
}

inline Condition cond_from_json(const nlohmann::ordered_json& j) {
  Condition c{verdict_from_string(j.at("verdict").get<std::string>()), {}};
  for (const auto& a : j.at("atoms")) c.atoms.push_back({a.at("text").get<std::string>(), a.at("ok").get<bool>()});
  return c;
}

inline nlohmann::ordered_json row_json(const TableRow& r) {
  return {{"reference", r.reference}, {"weak", cond_json(r.weak)}, {"strong", cond_json(r.strong)}};
}

inline TableRow row_from_json(const nlohmann::ordered_json& j) {
  return {j.at("reference").get<std::string>(), cond_from_json(j.at("weak")), cond_from_json(j.at("strong"))};
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const RegimeReport& r) {
  using detail::num_json;
  nlohmann::ordered_json j;
  j["params"] = {{"H", r.params.H}, {"d", r.params.d}, {"p", num_json(r.params.p)}, {"q", num_json(r.params.q)}};
  j["h1"] = r.h1;
  j["h1_residual"] = num_json(r.h1_residual);
  j["h2"] = r.h2;
  j["weak_existence"] = r.weak_existence;
  j["weak_existence_residual"] = num_json(r.weak_existence_residual);
  j["kappa"] = num_json(r.kappa);
  j["prior_results"] = nlohmann::ordered_json::array();
  for (const auto& row : r.prior_results) j["prior_results"].push_back(detail::row_json(row));
  j["present"] = detail::row_json(r.present);
  if (r.holder)
    j["holder"] = {{"applicable", true}, {"time_bound", r.holder->time_bound}, {"space_bound", r.holder->space_bound}};
  else
    j["holder"] = {{"applicable", false}};
  return j;
}

inline std::string render(const RegimeReport& r) { return to_json(r).dump(2); }

inline RegimeReport parse_report(const std::string& text) {
  const auto j = nlohmann::ordered_json::parse(text);
  using detail::num_from_json;
  RegimeReport r;
  const auto& p = j.at("params");
  r.params = {p.at("H").get<double>(), p.at("d").get<int>(), num_from_json(p.at("p")), num_from_json(p.at("q"))};
  r.h1 = j.at("h1").get<bool>();
  r.h1_residual = num_from_json(j.at("h1_residual"));
  r.h2 = j.at("h2").get<bool>();
  r.weak_existence = j.at("weak_existence").get<bool>();
  r.weak_existence_residual = num_from_json(j.at("weak_existence_residual"));
  r.kappa = num_from_json(j.at("kappa"));
  for (const auto& row : j.at("prior_results")) r.prior_results.push_back(detail::row_from_json(row));
  r.present = detail::row_from_json(j.at("present"));
  const auto& h = j.at("holder");
  if (h.at("applicable").get<bool>()) r.holder = HolderBounds{h.at("time_bound").get<double>(), h.at("space_bound").get<double>()};
  return r;
}

// ---------------------------------------------------------------- region sweep

// Row code: S strong applies, W weak only, - neither, NE not encoded.
inline std::string row_code(const TableRow& row) {
  if (row.strong.verdict == Verdict::not_encoded) return "NE";
  if (row.strong.verdict == Verdict::applies) return "S";
  if (row.weak.verdict == Verdict::applies) return "W";
  return "-";
}

struct RegionPoint {
  double p = 0.0, q = 0.0;
  bool h1 = false, h2 = false, weak_existence = false;
  std::vector<std::string> rows;
};

inline std::vector<RegionPoint> region_sample(double H, int d, const std::vector<double>& p_values,
                                              const std::vector<double>& q_values) {
  std::vector<RegionPoint> out;
  for (double p : p_values)
    for (double q : q_values) {
      const RegimeParams r{H, d, p, q};
      validate(r);
      RegionPoint pt{p, q, check_h1(r).ok, check_h2(r), check_weak_existence(r).ok, {}};
      for (const auto& row : table_rows(r)) pt.rows.push_back(row_code(row));
      out.push_back(std::move(pt));
    }
  return out;
}

inline std::vector<double> lattice(double lo, double hi, std::size_t n, bool with_inf) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  if (with_inf) v.push_back(inf);
  return v;
}

inline void write_region_csv(std::ostream& os, const std::vector<RegionPoint>& pts) {
  os << "p,q,h1,h2,weak_existence";
  const std::size_t nrows = pts.empty() ? 0 : pts.front().rows.size();
  for (std::size_t k = 1; k <= nrows; ++k) os << ",row_" << k;
  os << '\n';
  for (const auto& pt : pts) {
    os << detail::num(pt.p) << ',' << detail::num(pt.q) << ',' << pt.h1 << ',' << pt.h2 << ',' << pt.weak_existence;
    for (const auto& c : pt.rows) os << ',' << c;
    os << '\n';
  }
}

}  // namespace fracsde::regimes
