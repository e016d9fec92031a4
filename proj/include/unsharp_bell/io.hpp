#pragma once

// JSON and CSV serialization: probability tables, quadruple distributions,
// operators, measurement programmes, charts and scan tables.

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <system_error>

#include "json.hpp"
#include "unsharp_bell/bell.hpp"
#include "unsharp_bell/error.hpp"
#include "unsharp_bell/fine.hpp"
#include "unsharp_bell/operators.hpp"
#include "unsharp_bell/probability_table.hpp"
#include "unsharp_bell/relativistic.hpp"

namespace ubell::io {

using Json = nlohmann::ordered_json;

// Shortest round-trip decimal, '.' separator regardless of locale.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw PreconditionError(what + ": malformed JSON (" + e.what() + ")");
  }
}

// ---------------------------------------------------------------------------
// Probability tables.

inline std::string pair_key(int i, int j) { return std::to_string(i) + "," + std::to_string(j); }

inline Json to_json(const ProbabilityTable& t) {
  Json singles = Json::object();
  for (int k : kSingleIndices) singles[std::to_string(k)] = t.single(k);
  Json pairs = Json::object();
  for (int i : kFirstSideIndices)
    for (int j : kSecondSideIndices) pairs[pair_key(i, j)] = t.pair(i, j);
  return Json{{"singles", singles}, {"pairs", pairs}};
}

inline ProbabilityTable table_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("singles") || !j.contains("pairs"))
    throw PreconditionError("table JSON needs 'singles' and 'pairs' objects");
  const auto& singles = j.at("singles");
  const auto& pairs = j.at("pairs");
  if (!singles.is_object() || singles.size() != 8) throw PreconditionError("table JSON needs exactly 8 singles");
  if (!pairs.is_object() || pairs.size() != 16) throw PreconditionError("table JSON needs exactly 16 pairs");
  auto number = [](const Json& obj, const std::string& key) {
    if (!obj.contains(key)) throw PreconditionError("table JSON is missing key '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw PreconditionError("table JSON entry '" + key + "' is not a number");
    return v.get<double>();
  };
  ProbabilityTable t;
  for (int k : kSingleIndices) t.single(k) = number(singles, std::to_string(k));
  for (int i : kFirstSideIndices)
    for (int jj : kSecondSideIndices) t.pair(i, jj) = number(pairs, pair_key(i, jj));
  return t;
}

// Columns i, j, p; singles carry j = 0.
inline std::string table_to_csv(const ProbabilityTable& t) {
  std::string out = "i,j,p\n";
  for (int k : kSingleIndices) out += std::to_string(k) + ",0," + format_number(t.single(k)) + "\n";
  for (int i : kFirstSideIndices)
    for (int j : kSecondSideIndices) out += std::to_string(i) + "," + std::to_string(j) + "," + format_number(t.pair(i, j)) + "\n";
  return out;
}

// "+-+-" style key, one sign per variable 1..4.
inline std::string jpd_key(std::size_t slot) {
  std::string k;
  for (int v = 0; v < 4; ++v) k += Jpd4::sign_of(slot, v) > 0 ? '+' : '-';
  return k;
}

inline Json to_json(const Jpd4& jpd) {
  Json j = Json::object();
  for (std::size_t s = 0; s < 16; ++s) j[jpd_key(s)] = jpd[s];
  return j;
}

inline Json to_json(const ChshWitness& w) {
  return Json{{"inequality", w.inequality}, {"value", w.value}, {"slack", w.slack}};
}

inline Json to_json(const ChshCheck& c) {
  return Json{{"all_hold", c.all_hold},
              {"bell1", c.bell1},
              {"bell2", c.bell2},
              {"form_disagreement", c.form_disagreement},
              {"worst", to_json(c.worst())}};
}

inline Json to_json(const FeasibilityResult& r, const ProbabilityTable& t) {
  Json j{{"feasible", r.feasible()}, {"decided_by", r.decided_by}};
  if (r.feasible()) {
    j["jpd"] = to_json(r.jpd());
    j["round_trip_residual"] = marginal_residual(r.jpd(), t);
  } else {
    j["witness"] = to_json(r.witness());
  }
  return j;
}

// ---------------------------------------------------------------------------
// Operators: rows of [re, im] pairs.

template <std::size_t N>
Json to_json(const Hermitian<N>& h) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < N; ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < N; ++k) row.push_back(Json::array({h(i, k).real(), h(i, k).imag()}));
    rows.push_back(row);
  }
  return rows;
}

template <std::size_t N>
Hermitian<N> hermitian_from_json(const Json& j) {
  if (!j.is_array() || j.size() != N) throw PreconditionError("operator JSON has the wrong number of rows");
  Matrix<N> m;
  for (std::size_t r = 0; r < N; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != N) throw PreconditionError("operator JSON has the wrong number of columns");
    for (std::size_t c = 0; c < N; ++c) {
      const auto& e = row[c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw PreconditionError("operator JSON entries must be [re, im] pairs");
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return Hermitian<N>::from(m, kHermitianInputTol);
}

// ---------------------------------------------------------------------------
// Measurement programmes.

inline Json to_json(const SpacetimeEvent& e) { return Json::array({e.t, e.x, e.y, e.z}); }

inline SpacetimeEvent event_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw PreconditionError("event must be [t, x, y, z]");
  for (const auto& v : j)
    if (!v.is_number()) throw PreconditionError("event coordinates must be numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline Vec3 vec3_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw PreconditionError(what + " must be [x, y, z]");
  for (const auto& v : j)
    if (!v.is_number()) throw PreconditionError(what + " components must be numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Programme JSON:
// {"initial": "singlet" | "maximally_mixed" | [[[re,im],...],...],
//  "lambda": l, "measurements": [{"event": [t,x,y,z], "axis": [x,y,z],
//  "subsystem": 1|2}, ...], "outcomes": [1, -1]}
inline MeasurementProgramme programme_from_json(const Json& j) {
  if (!j.is_object()) throw PreconditionError("programme JSON must be an object");
  if (!j.contains("lambda") || !j.at("lambda").is_number()) throw PreconditionError("programme JSON needs numeric 'lambda'");
  const double lambda = j.at("lambda").get<double>();
  require_sharpness(lambda);
  MeasurementProgramme prog;
  const Json initial = j.value("initial", Json("singlet"));
  if (initial.is_string()) {
    const auto name = initial.get<std::string>();
    if (name == "singlet")
      prog.initial_state = singlet_state();
    else if (name == "maximally_mixed")
      prog.initial_state = DensityOperator<4>::maximally_mixed();
    else
      throw PreconditionError("unknown initial state '" + name + "'");
  } else {
    prog.initial_state = DensityOperator<4>::from(hermitian_from_json<4>(initial));
  }
  if (!j.contains("measurements") || !j.at("measurements").is_array())
    throw PreconditionError("programme JSON needs a 'measurements' array");
  for (const auto& m : j.at("measurements")) {
    if (!m.is_object() || !m.contains("event") || !m.contains("axis") || !m.contains("subsystem"))
      throw PreconditionError("each measurement needs 'event', 'axis' and 'subsystem'");
    const int sub = m.at("subsystem").get<int>();
    if (sub != 1 && sub != 2) throw PreconditionError("subsystem must be 1 or 2");
    prog.measurements.push_back({event_from_json(m.at("event")),
                                 UnsharpSpinObservable(UnitVector3(vec3_from_json(m.at("axis"), "axis")), lambda),
                                 sub == 1 ? Subsystem::First : Subsystem::Second});
  }
  if (j.contains("outcomes") && !j.at("outcomes").is_null()) prog.outcomes = j.at("outcomes").get<std::vector<int>>();
  prog.validate();
  return prog;
}

inline Json to_json(const MeasurementProgramme& prog) {
  Json ms = Json::array();
  for (const auto& m : prog.measurements) {
    const auto& a = m.observable.axis();
    ms.push_back(Json{{"event", to_json(m.event)},
                      {"axis", Json::array({a.x(), a.y(), a.z()})},
                      {"subsystem", m.subsystem == Subsystem::First ? 1 : 2}});
  }
  Json j{{"initial", to_json(prog.initial_state.op())},
         {"lambda", prog.measurements.empty() ? 1.0 : prog.measurements.front().observable.lambda()},
         {"measurements", ms}};
  if (prog.outcomes) j["outcomes"] = *prog.outcomes;
  return j;
}

inline Json to_json(const MChart& chart) {
  Json regions = Json::array();
  for (std::size_t r = 0; r < chart.entries.size(); ++r) {
    const auto& e = chart.entries[r];
    Json influenced = Json::array();
    for (std::size_t i = 0; i < chart.cover.events.size(); ++i)
      if (e.influence_mask & (1u << i)) influenced.push_back(measurement_name(i));
    regions.push_back(Json{{"region", "M" + std::to_string(r + 1)},
                           {"influenced_by", influenced},
                           {"empty", e.empty_region},
                           {"selective", e.selective()},
                           {"trace", e.state.trace()},
                           {"state", to_json(e.state)},
                           {"values", e.definite_values}});
  }
  return Json{{"observer", to_json(chart.observer)},
              {"information_region", "N" + std::to_string(chart.information_region + 1)},
              {"order_deviation", chart.order_deviation},
              {"regions", regions}};
}

// ---------------------------------------------------------------------------
// Scan tables: lambda, f, F, max_op_violation, violated.

inline Json to_json(const ScanResult& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows)
    rows.push_back(Json{{"lambda", r.lambda},
                        {"f", r.f},
                        {"F", std::isfinite(r.F) ? Json(r.F) : Json("inf")},
                        {"max_op_violation", r.max_op_violation},
                        {"violated", r.violated()}});
  return Json{{"lambda_star", s.lambda_star},
              {"lambda_star_singlet", s.lambda_star_singlet},
              {"lambda_star_operator", s.lambda_star_operator},
              {"rows", rows}};
}

inline std::string scan_to_csv(const ScanResult& s) {
  std::string out = "lambda,f,F,max_op_violation,violated\n";
  for (const auto& r : s.rows)
    out += format_number(r.lambda) + "," + format_number(r.f) + "," + (std::isfinite(r.F) ? format_number(r.F) : "inf") +
           "," + format_number(r.max_op_violation) + "," + (r.violated() ? "1" : "0") + "\n";
  return out;
}

}  // namespace ubell::io
