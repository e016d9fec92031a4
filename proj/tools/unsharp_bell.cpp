// Command-line front end: coexistence, joint observables, Bell operators,
// CHSH tables, threshold scans, joint-distribution feasibility, Lueders
// measurements, the EPR walk-through, observer charts and the invariant
// suite.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unsharp_bell/bell.hpp"
#include "unsharp_bell/fine.hpp"
#include "unsharp_bell/instruments.hpp"
#include "unsharp_bell/io.hpp"
#include "unsharp_bell/random.hpp"
#include "unsharp_bell/relativistic.hpp"
#include "unsharp_bell/spin_povm.hpp"
#include "unsharp_bell/verify.hpp"

namespace {

using namespace ubell;
using io::Json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
  std::string format = "json";
  std::string output;
  std::uint64_t seed = kDefaultSeed;
  double lambda = 1.0;
  std::string n1 = "0,0,1", n2 = "1,0,0", n3, n4;
  std::optional<double> theta;
  int grid = 10000;
  unsigned threads = 0;
  std::string table;
  std::string programme;
  std::string observer;
  std::string state;
  std::string axis = "0,0,1";
  int outcome = 1;
  std::optional<double> epsilon;
  bool quick = false;
};

// Syntax of vector flags: comma-separated finite numbers.
std::optional<std::vector<double>> parse_numbers(const std::string& text, std::size_t count) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find(',', pos);
    const auto field = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    while (first < last && *first == ' ') ++first;
    if (first < last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) return std::nullopt;
    out.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (out.size() != count) return std::nullopt;
  return out;
}

CLI::Validator vector_of(std::size_t count, const std::string& what) {
  return CLI::Validator(
      [count, what](std::string& s) -> std::string {
        return parse_numbers(s, count) ? std::string() : what + " must be " + std::to_string(count) + " comma-separated numbers";
      },
      what);
}

UnitVector3 direction(const std::string& text) {
  const auto v = *parse_numbers(text, 3);
  return UnitVector3(v[0], v[1], v[2]);
}

SpacetimeEvent event(const std::string& text) {
  const auto v = *parse_numbers(text, 4);
  return {v[0], v[1], v[2], v[3]};
}

class Output {
 public:
  explicit Output(const RunConfig& cfg) : cfg_(cfg) {}

  void json(const Json& j) { write(j.dump(2) + "\n"); }

  // Scalar reports as two-column CSV.
  void key_values(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string out = "key,value\n";
    for (const auto& [k, v] : rows) out += k + "," + v + "\n";
    write(out);
  }

  void write(const std::string& text) {
    if (cfg_.output.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream f(cfg_.output);
    if (!f) throw PreconditionError("cannot write '" + cfg_.output + "'");
    f << text;
  }

  bool csv() const { return cfg_.format == "csv"; }
  bool text() const { return cfg_.format == "text"; }

 private:
  const RunConfig& cfg_;
};

std::string num(double x) { return io::format_number(x); }
std::string flag(bool b) { return b ? "true" : "false"; }

BellConfiguration bell_configuration(const RunConfig& rc) {
  if (rc.theta) return coplanar_configuration(rc.lambda, *rc.theta);
  if (rc.n3.empty() || rc.n4.empty()) return cirelson_configuration(rc.lambda);
  return BellConfiguration(rc.lambda, direction(rc.n1), direction(rc.n2), direction(rc.n3), direction(rc.n4));
}

Json configuration_json(const BellConfiguration& cfg) {
  Json dirs = Json::object();
  for (int k = 1; k <= 4; ++k) {
    const auto& n = cfg.direction(k);
    dirs["n" + std::to_string(k)] = Json::array({n.x(), n.y(), n.z()});
  }
  return Json{{"lambda", cfg.lambda}, {"directions", dirs}};
}

int cmd_coexist(const RunConfig& rc, Output& out) {
  const auto r = pair_coexistent(rc.lambda, direction(rc.n1), direction(rc.n2));
  if (out.csv())
    out.key_values({{"lambda", num(rc.lambda)}, {"coexistent", flag(r.coexistent)}, {"margin", num(r.margin)}});
  else
    out.json(Json{{"lambda", rc.lambda}, {"coexistent", r.coexistent}, {"margin", r.margin}});
  return kExitOk;
}

std::string signs_key(const std::vector<int>& signs) {
  std::string s;
  for (int v : signs) s += v > 0 ? '+' : '-';
  return s;
}

template <std::size_t N>
void emit_joint(const JointObservable<N>& joint, Output& out) {
  const double defect = max_abs_diff(joint.total(), Hermitian<N>::identity());
  if (out.csv()) {
    std::string text = "signs,min_eigenvalue,max_eigenvalue\n";
    for (const auto& o : joint.outcomes) {
      const auto vals = eigenvalues(o.effect.op());
      text += signs_key(o.signs) + "," + num(vals.front()) + "," + num(vals.back()) + "\n";
    }
    out.write(text);
    return;
  }
  Json outcomes = Json::array();
  for (const auto& o : joint.outcomes)
    outcomes.push_back(Json{{"signs", o.signs}, {"min_eigenvalue", min_eigenvalue(o.effect.op())}, {"effect", io::to_json(o.effect.op())}});
  out.json(Json{{"normalization_defect", defect}, {"outcomes", outcomes}});
}

int cmd_joint(const RunConfig& rc, Output& out) {
  if (rc.n3.empty() != rc.n4.empty()) throw PreconditionError("--n3 and --n4 must be given together");
  if (rc.n3.empty())
    emit_joint(joint_observable_pair(rc.lambda, direction(rc.n1), direction(rc.n2)), out);
  else
    emit_joint(quadruple_joint(rc.lambda, direction(rc.n1), direction(rc.n2), direction(rc.n3), direction(rc.n4)), out);
  return kExitOk;
}

int cmd_bell_op(const RunConfig& rc, Output& out) {
  const auto cfg = bell_configuration(rc);
  const auto b = bell_operator(cfg);
  const double norm = spectral_norm(b);
  const double closed = bell_norm_closed_form(cfg);
  const auto gen = generalized_bell_operator(cfg);
  const double closed_gap = max_abs_diff(gen, generalized_bell_closed_form(cfg));
  const auto chsh = operator_chsh_holds(cfg);
  if (out.csv()) {
    out.key_values({{"lambda", num(cfg.lambda)},
                    {"norm", num(norm)},
                    {"norm_closed_form", num(closed)},
                    {"generalized_min_eigenvalue", num(chsh.min_eig)},
                    {"generalized_max_eigenvalue", num(chsh.max_eig)},
                    {"generalized_closed_form_deviation", num(closed_gap)},
                    {"operator_chsh_holds", flag(chsh.holds)}});
    return kExitOk;
  }
  out.json(Json{{"configuration", configuration_json(cfg)},
                {"norm", norm},
                {"norm_closed_form", closed},
                {"bell_operator", io::to_json(b)},
                {"generalized_bell_operator", io::to_json(gen)},
                {"generalized_spectrum", eigenvalues(gen)},
                {"generalized_closed_form_deviation", closed_gap},
                {"operator_chsh_holds", chsh.holds},
                {"operator_chsh_holds_via_norm", chsh.holds_via_norm}});
  return kExitOk;
}

int cmd_chsh(const RunConfig& rc, Output& out) {
  const auto cfg = bell_configuration(rc);
  const auto r = chsh_report(cfg);
  if (out.csv()) {
    out.write(io::table_to_csv(r.pair_probs));
    return kExitOk;
  }
  out.json(Json{{"configuration", configuration_json(cfg)},
                {"f", r.f},
                {"F", std::isfinite(r.F) ? Json(r.F) : Json("inf")},
                {"epsilon", r.epsilon},
                {"violated", r.violated},
                {"table", io::to_json(r.pair_probs)}});
  return kExitOk;
}

int cmd_scan(const RunConfig& rc, Output& out) {
  const auto s = scan_lambda_threshold(rc.grid, rc.threads);
  if (out.csv())
    out.write(io::scan_to_csv(s));
  else
    out.json(io::to_json(s));
  return kExitOk;
}

ProbabilityTable load_table(const RunConfig& rc) {
  if (rc.table.empty()) throw PreconditionError("--table is required");
  return io::table_from_json(io::parse_json(io::read_file(rc.table), rc.table));
}

int cmd_fine_check(const RunConfig& rc, Output& out) {
  const auto t = load_table(rc);
  const auto c = chsh_check(t);
  if (out.csv()) {
    std::string text = "inequality,value\n";
    for (std::size_t i = 0; i < 4; ++i) text += "bell1[" + std::to_string(i + 1) + "]," + num(c.bell1[i]) + "\n";
    for (std::size_t i = 0; i < 4; ++i) text += "bell2[" + std::to_string(i + 1) + "]," + num(c.bell2[i]) + "\n";
    out.write(text);
  } else {
    out.json(io::to_json(c));
  }
  return kExitOk;
}

int cmd_fine_solve(const RunConfig& rc, Output& out) {
  const auto t = load_table(rc);
  const auto r = reconstruct_jpd(t);
  if (out.csv()) {
    if (r.feasible()) {
      std::string text = "signs,p\n";
      for (std::size_t s = 0; s < 16; ++s) text += io::jpd_key(s) + "," + num(r.jpd()[s]) + "\n";
      out.write(text);
    } else {
      out.key_values({{"feasible", "false"}, {"inequality", r.witness().inequality}, {"value", num(r.witness().value)}});
    }
    return kExitOk;
  }
  out.json(io::to_json(r, t));
  return kExitOk;
}

int cmd_lueders(const RunConfig& rc, Output& out) {
  const UnsharpSpinObservable obs(direction(rc.axis), rc.lambda);
  Sampler rng(rc.seed);
  const auto rho = rc.state.empty() ? rng.density<2>()
                                    : DensityOperator<2>::from(io::hermitian_from_json<2>(io::parse_json(io::read_file(rc.state), rc.state)));
  const auto effect = obs.effect(rc.outcome);
  const auto sel = lueders_selective(rho, effect, rc.outcome);
  const auto nonsel = lueders_nonselective(rho, spin_instrument(obs));
  Json j{{"lambda", rc.lambda},
         {"outcome", rc.outcome},
         {"state", io::to_json(rho.op())},
         {"probability", sel.probability},
         {"null_outcome", sel.null_outcome()},
         {"post_state", sel.post_state ? io::to_json(sel.post_state->op()) : Json(nullptr)},
         {"nonselective_state", io::to_json(nonsel.op())}};
  const double eps = rc.epsilon.value_or(1.0 - sel.probability);
  if (eps >= 0.0 && eps < 0.5 && sel.probability >= 1.0 - eps) {
    const auto d = disturbance_report(rho, effect, rc.epsilon);
    j["disturbance"] = Json{{"epsilon", d.epsilon},
                            {"trace_distance", d.trace_distance},
                            {"bound", d.bound},
                            {"bound_holds", d.bound_holds},
                            {"probability_after", d.prob_after},
                            {"monotone", d.monotone}};
  } else if (rc.epsilon) {
    disturbance_report(rho, effect, rc.epsilon);
  } else {
    j["disturbance"] = nullptr;
  }
  if (out.csv()) {
    std::vector<std::pair<std::string, std::string>> rows = {{"probability", num(sel.probability)},
                                                             {"null_outcome", flag(sel.null_outcome())}};
    if (!j["disturbance"].is_null())
      for (const auto& [k, v] : j["disturbance"].items()) rows.emplace_back(k, v.dump());
    out.key_values(rows);
  } else {
    out.json(j);
  }
  return kExitOk;
}

// Two measurements of the same axis on the singlet at spacelike separation,
// with the chart seen from one observer in each information region.
MeasurementProgramme epr_programme(double lambda, const UnitVector3& n, int outcome) {
  MeasurementProgramme prog;
  prog.measurements.push_back({{0.0, -1.0, 0.0, 0.0}, UnsharpSpinObservable(n, lambda), Subsystem::First});
  prog.measurements.push_back({{0.0, 1.0, 0.0, 0.0}, UnsharpSpinObservable(n, lambda), Subsystem::Second});
  prog.initial_state = singlet_state();
  prog.outcomes = std::vector<int>{outcome, -outcome};
  return prog;
}

int cmd_epr(const RunConfig& rc, Output& out) {
  const auto n = direction(rc.axis);
  const auto r = epr_measurement(rc.lambda, n, rc.outcome);
  if (out.csv()) {
    out.key_values({{"lambda", num(rc.lambda)},
                    {"outcome", std::to_string(rc.outcome)},
                    {"anticorrelated_probability_before", num(r.outcome_prob_before)},
                    {"anticorrelated_probability_after", num(r.outcome_prob_after)},
                    {"reduced_state_change", num(max_abs_diff(r.reduced_pre, r.reduced_post))}});
    return kExitOk;
  }
  const auto prog = epr_programme(rc.lambda, n, rc.outcome);
  Json charts = Json::array();
  for (const SpacetimeEvent u : {SpacetimeEvent{-5, 0, 0, 0}, SpacetimeEvent{1.5, -1.5, 0, 0},
                                 SpacetimeEvent{1.5, 1.5, 0, 0}, SpacetimeEvent{5, 0, 0, 0}})
    charts.push_back(io::to_json(observer_chart(u, prog)));
  out.json(Json{{"lambda", rc.lambda},
                {"axis", Json::array({n.x(), n.y(), n.z()})},
                {"outcome", rc.outcome},
                {"reduced_pre", io::to_json(r.reduced_pre)},
                {"reduced_post", io::to_json(r.reduced_post)},
                {"reduced_post_components", Json::array({io::to_json(r.reduced_post_components[0]),
                                                         io::to_json(r.reduced_post_components[1])})},
                {"joint_post_mixture", io::to_json(r.joint_post_mixture.op())},
                {"anticorrelated_probability_before", r.outcome_prob_before},
                {"anticorrelated_probability_after", r.outcome_prob_after},
                {"programme", io::to_json(prog)},
                {"charts", charts}});
  return kExitOk;
}

int cmd_chart(const RunConfig& rc, Output& out) {
  if (rc.programme.empty()) throw PreconditionError("--programme is required");
  const auto prog = io::programme_from_json(io::parse_json(io::read_file(rc.programme), rc.programme));
  const auto chart = observer_chart(event(rc.observer), prog);
  if (out.csv()) {
    std::string text = "region,selective,trace,values\n";
    for (std::size_t r = 0; r < chart.entries.size(); ++r) {
      const auto& e = chart.entries[r];
      std::string values;
      for (const auto& v : e.definite_values) values += (values.empty() ? "" : "; ") + v;
      text += "M" + std::to_string(r + 1) + "," + flag(e.selective()) + "," + num(e.state.trace()) + ",\"" + values + "\"\n";
    }
    out.write(text);
  } else {
    out.json(io::to_json(chart));
  }
  return kExitOk;
}

int cmd_verify_all(const RunConfig& rc, Output& out) {
  verify::Options opt;
  opt.seed = rc.seed;
  if (rc.quick) {
    opt.scan_grid = 1000;
    opt.bell_samples = 10000;
    opt.fine_tables = 200;
    opt.lueders_samples = 2000;
    opt.programmes = 20;
    opt.partition_points = 10000;
    opt.boosts = 20;
  }
  auto results = verify::run_all(opt);
  bool all = true;
  double worst = 0.0;
  for (const auto& r : results) {
    all = all && r.passed;
    worst = std::max(worst, r.max_deviation);
  }
  results.push_back({10, "verify-all", all, worst, "criteria 1-9 " + std::string(all ? "all pass" : "have failures")});

  if (out.csv()) {
    std::string text = "id,criterion,result,max_deviation\n";
    for (const auto& r : results)
      text += std::to_string(r.id) + "," + r.name + "," + (r.passed ? "PASS" : "FAIL") + "," + num(r.max_deviation) + "\n";
    out.write(text);
  } else if (out.text()) {
    std::ostringstream os;
    for (const auto& r : results) {
      os << std::setw(2) << r.id << "  " << std::left << std::setw(28) << r.name << std::right << (r.passed ? "PASS" : "FAIL")
         << "  max_dev=" << num(r.max_deviation) << "  " << r.detail << "\n";
    }
    out.write(os.str());
  } else {
    Json rows = Json::array();
    for (const auto& r : results)
      rows.push_back(Json{{"id", r.id}, {"criterion", r.name}, {"passed", r.passed}, {"max_deviation", r.max_deviation}, {"detail", r.detail}});
    out.json(Json{{"seed", rc.seed}, {"all_passed", all}, {"criteria", rows}});
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"Unsharp spin observables, Bell inequalities and relativistic state reduction"};
  app.require_subcommand(1);
  app.fallthrough();
  auto* format = app.add_option("--format", rc.format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("-o,--output", rc.output, "Write output to this file instead of stdout");
  app.add_option("--seed", rc.seed, "Seed for randomized operations (UNSHARP_BELL_SEED overrides)");

  const auto vec3 = vector_of(3, "DIRECTION");
  auto lambda_opt = [&rc](CLI::App* sub) {
    sub->add_option("--lambda", rc.lambda, "Sharpness in [0, 1]");
  };
  auto directions = [&rc, &vec3](CLI::App* sub, bool four) {
    sub->add_option("--n1", rc.n1, "Direction n1 as x,y,z")->check(vec3);
    sub->add_option("--n2", rc.n2, "Direction n2 as x,y,z")->check(vec3);
    if (four) {
      sub->add_option("--n3", rc.n3, "Direction n3 as x,y,z")->check(vec3);
      sub->add_option("--n4", rc.n4, "Direction n4 as x,y,z")->check(vec3);
    }
  };

  std::vector<std::pair<CLI::App*, std::function<int(const RunConfig&, Output&)>>> commands;
  auto add = [&](const std::string& name, const std::string& help, std::function<int(const RunConfig&, Output&)> fn) {
    auto* sub = app.add_subcommand(name, help);
    commands.emplace_back(sub, std::move(fn));
    return sub;
  };

  auto* coexist = add("coexist", "Pairwise coexistence of two unsharp spin observables", cmd_coexist);
  lambda_opt(coexist);
  directions(coexist, false);

  auto* joint = add("joint", "Joint observable for one pair (n1, n2) or two pairs (n1..n4)", cmd_joint);
  lambda_opt(joint);
  directions(joint, true);

  auto* bell_op = add("bell-op", "Bell operator norm and generalized Bell operator spectrum", cmd_bell_op);
  lambda_opt(bell_op);
  directions(bell_op, true);
  bell_op->add_option("--theta", rc.theta, "Use the coplanar family at this angle instead of explicit directions");

  auto* chsh = add("chsh", "Singlet probabilities and the CHSH correlation sum", cmd_chsh);
  lambda_opt(chsh);
  directions(chsh, true);
  chsh->add_option("--theta", rc.theta, "Use the coplanar family at this angle instead of explicit directions");

  auto* scan = add("scan", "Sharpness scan of CHSH validity", cmd_scan);
  scan->add_option("--grid", rc.grid, "Number of sharpness steps (lambda = k / grid)")->check(CLI::Range(10, 10000000));
  scan->add_option("--threads", rc.threads, "Worker threads (0 = hardware concurrency)");

  auto* fine_check = add("fine-check", "Evaluate the CHSH inequalities on a probability table", cmd_fine_check);
  fine_check->add_option("--table", rc.table, "Table JSON file")->required();

  auto* fine_solve = add("fine-solve", "Construct a joint distribution for a probability table", cmd_fine_solve);
  fine_solve->add_option("--table", rc.table, "Table JSON file")->required();

  auto* lueders = add("lueders", "Lueders measurement of an unsharp spin on a qubit state", cmd_lueders);
  lambda_opt(lueders);
  lueders->add_option("--axis", rc.axis, "Spin axis as x,y,z")->check(vec3);
  lueders->add_option("--outcome", rc.outcome, "Outcome +1 or -1")->check(CLI::IsMember({1, -1}));
  lueders->add_option("--state", rc.state, "State JSON file (random state from the seed when omitted)");
  lueders->add_option("--epsilon", rc.epsilon, "Epsilon for the disturbance bound (default 1 - tr[rho E])");

  auto* epr = add("epr", "Measurement on one half of the singlet and the resulting observer charts", cmd_epr);
  lambda_opt(epr);
  epr->add_option("--axis", rc.axis, "Spin axis as x,y,z")->check(vec3);
  epr->add_option("--outcome", rc.outcome, "Outcome +1 or -1")->check(CLI::IsMember({1, -1}));

  auto* chart = add("chart", "State chart assigned by an observer to the influence regions", cmd_chart);
  chart->add_option("--programme", rc.programme, "Programme JSON file")->required();
  chart->add_option("--observer", rc.observer, "Observer event as t,x,y,z")->required()->check(vector_of(4, "EVENT"));

  auto* verify_all = add("verify-all", "Run the invariant suite", cmd_verify_all);
  verify_all->add_flag("--quick", rc.quick, "Reduced sample sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (const char* env = std::getenv("UNSHARP_BELL_SEED")) {
    const std::string s(env);
    std::uint64_t seed = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      std::cerr << "UNSHARP_BELL_SEED must be a non-negative integer\n";
      return kExitUsage;
    }
    rc.seed = seed;
  }

  try {
    for (const auto& [sub, fn] : commands) {
      if (!sub->parsed()) continue;
      if (sub == verify_all && format->count() == 0) rc.format = "text";
      Output out(rc);
      return fn(rc, out);
    }
  } catch (const ubell::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
