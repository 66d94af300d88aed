// subcalc command-line interface
//
//   list                      show the builtin scenario catalog
//   run <scenario|all|file>   run scenarios, write reports/plots
//   subdiff <fn-json>         one-shot epsilon-subdifferential of a function
//   verify <formula> <scen>   evaluate one formula against a scenario's facts
//   report <dir>              aggregate previously written reports
//
// Exit codes: 0 all executed checks pass, 1 check failures,
//             2 unknown scenario/formula or unusable input.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subcalc/catalog.hpp"

namespace fs = std::filesystem;
using namespace subcalc;

namespace {

struct CliError {
  int code;
  std::string message;
};

std::string fmt_g(double v) {
  char b[40];
  std::snprintf(b, sizeof(b), "%g", v);
  return b;
}

std::string vec_str(const Vec& x) {
  if (x.dim() == 1) return fmt_g(x[0]);
  return "(" + fmt_g(x[0]) + ", " + fmt_g(x[1]) + ")";
}

std::string describe_set(const Polyhedron& P) {
  if (P.is_empty()) return "empty";
  if (P.dim() == 1) {
    bool lo_inf = false, hi_inf = false;
    for (const Vec& r : P.rays()) (r[0] < 0 ? lo_inf : hi_inf) = true;
    double lo = P.vertices().front()[0], hi = lo;
    for (const Vec& v : P.vertices()) {
      lo = std::min(lo, v[0]);
      hi = std::max(hi, v[0]);
    }
    return "[" + (lo_inf ? std::string("-inf") : fmt_g(lo)) + ", " +
           (hi_inf ? std::string("inf") : fmt_g(hi)) + "]";
  }
  char b[80];
  std::snprintf(b, sizeof(b), "2d set with %zu vertices, %zu rays",
                P.vertices().size(), P.rays().size());
  return b;
}

json load_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw CliError{2, "cannot open '" + path + "'"};
  try {
    return json::parse(f);
  } catch (const std::exception& e) {
    throw CliError{2, "cannot parse '" + path + "': " + e.what()};
  }
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f.good()) throw CliError{1, "cannot write '" + path + "'"};
  f << body;
}

Scenario resolve_scenario(const std::string& target) {
  std::vector<std::string> names = catalog_names();
  if (std::find(names.begin(), names.end(), target) != names.end())
    return scenario_from_json(builtin_scenario_json(target));
  if (fs::exists(target)) {
    try {
      return scenario_from_json(load_json_file(target));
    } catch (const std::invalid_argument& e) {
      throw CliError{2, std::string(e.what()) + " (in '" + target + "')"};
    }
  }
  throw CliError{2, "unknown scenario '" + target +
                        "' (not a builtin, and no such file); try 'list'"};
}

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv("SUBCALC_OUT");
  return env ? std::string(env) : std::string();
}

/* ------------------------------------------------------------------ */

int cmd_list() {
  for (const std::string& n : catalog_names()) {
    Scenario s = scenario_from_json(builtin_scenario_json(n));
    std::printf("%-22s %s\n", n.c_str(), s.description.c_str());
  }
  return 0;
}

int cmd_run(const std::string& target, const std::string& out_flag, RunOptions opt) {
  std::vector<Scenario> scenarios;
  if (target == "all")
    for (const std::string& n : catalog_names())
      scenarios.push_back(scenario_from_json(builtin_scenario_json(n)));
  else
    scenarios.push_back(resolve_scenario(target));

  const std::string out_dir = resolve_out_dir(out_flag);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    opt.out_dir = out_dir;
  }

  std::vector<std::string> csv = {"scenario,check,verdict,gap,seconds"};
  int failed_scenarios = 0;
  for (const Scenario& s : scenarios) {
    ScenarioReport rep = run_scenario(s, opt);
    int pass = 0, fail = 0, skip = 0;
    for (const CheckResult& c : rep.checks)
      (c.verdict == "pass" ? pass : c.verdict == "fail" ? fail : skip)++;
    std::printf("%-22s %s  (%d pass, %d fail, %d skipped)\n", s.name.c_str(),
                rep.all_passed() ? "ok  " : "FAIL", pass, fail, skip);
    for (const CheckResult& c : rep.checks)
      if (c.verdict == "fail")
        std::printf("  %-20s %s\n", c.name.c_str(), c.reason.c_str());
    for (const std::string& row : report_csv_rows(rep)) csv.push_back(row);
    if (!rep.all_passed()) ++failed_scenarios;
    if (!out_dir.empty())
      write_text(out_dir + "/" + s.name + ".report.json",
                 report_to_json(rep).dump(2) + "\n");
  }
  if (!out_dir.empty()) {
    std::string body;
    for (const std::string& row : csv) body += row + "\n";
    write_text(out_dir + "/report.csv", body);
    std::printf("reports written to %s\n", out_dir.c_str());
  }
  if (failed_scenarios > 0) {
    std::printf("%d of %zu scenario(s) FAILED\n", failed_scenarios, scenarios.size());
    return 1;
  }
  std::printf("all %zu scenario(s) passed\n", scenarios.size());
  return 0;
}

int cmd_subdiff(const std::string& fn_arg, const std::vector<double>& xs, double eps,
                int directions) {
  json j = (!fn_arg.empty() && fn_arg.front() == '{') ? json::parse(fn_arg)
                                                      : load_json_file(fn_arg);
  ConvexFunction f = [&] {
    try {
      return fn_from_json(j);
    } catch (const std::invalid_argument& e) {
      throw CliError{2, std::string("bad function description: ") + e.what()};
    }
  }();
  if (int(xs.size()) != f.dim())
    throw CliError{2, "--x has " + std::to_string(xs.size()) +
                          " coordinates but the function is " +
                          std::to_string(f.dim()) + "-dimensional"};
  Vec x = f.dim() == 1 ? Vec(xs[0]) : Vec(xs[0], xs[1]);
  EpsSubdiffResult r = eps_subdifferential(f, x, eps, directions);
  std::printf("%s\n", describe_set(r.set).c_str());
  std::printf("exact: %s\n", r.closed_form ? "yes" : "no (support-fan approximation)");
  std::printf("%s\n", to_json(r.set).dump(2).c_str());
  return 0;
}

int cmd_verify(const std::string& id, const std::string& target, RunOptions opt) {
  static const std::set<std::string> known = {
      "thm4_1",  "cor4_1", "cor4_1_eq3", "cor4_1_eq4", "cor4_2",
      "cor5_2",  "hup",    "qualfin_i",  "qualfin_ii"};
  if (!known.count(id)) {
    std::string all;
    for (const std::string& k : known) all += (all.empty() ? "" : ", ") + k;
    throw CliError{2, "unknown formula '" + id + "'; known: " + all};
  }
  Scenario s = resolve_scenario(target);

  std::optional<Integrand> F;
  if (s.kind == "integrand") F = rundetail::build_integrand(s);
  const Integrand* Fp = F ? &*F : nullptr;

  std::vector<Fact> matching;
  for (const Fact& f : s.facts)
    if (f.name == "formula" && f.data.value("formula_id", "") == id)
      matching.push_back(f);

  auto show = [&](const Vec& x, const json& fact) {
    FormulaResult r = rundetail::eval_formula(s, Fp, id, x, fact);
    std::string line = id + " at x=" + vec_str(x);
    if (fact.contains("eps")) line += ", eps=" + fmt_g(fact.at("eps").get<double>());
    if (r.refused) {
      line += ": refused (" + r.refusal_reason + ")";
    } else {
      line += ": " + describe_set(r.set.set) + ", status " +
              std::string(to_string(r.set.status)) +
              (formula_exact(r) ? ", exact" : "");
    }
    std::printf("%s\n", line.c_str());
  };

  if (matching.empty()) {
    std::printf("no declared facts for '%s' in '%s'; evaluating at query points\n",
                id.c_str(), s.name.c_str());
    for (const Vec& x : s.query_points) show(x, json::object());
    return 0;
  }

  for (const Fact& f : matching) show(vec_from_json(f.data.at("x")), f.data);

  Scenario filtered = s;
  filtered.facts = matching;
  filtered.checks = {"formula_vs_fact"};
  RunOptions quiet = opt;
  quiet.out_dir.clear();
  ScenarioReport rep = run_scenario(filtered, quiet);
  for (const CheckResult& c : rep.checks) {
    std::printf("verdict: %s", c.verdict.c_str());
    if (!c.reason.empty()) std::printf(" (%s)", c.reason.c_str());
    std::printf(", gap %.6g\n", c.gap);
  }
  return rep.all_passed() ? 0 : 1;
}

int cmd_report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw CliError{2, "no such directory '" + dir + "'"};

  // seconds live only in the run-time CSV; merge them back in when present
  std::map<std::string, std::string> seconds;
  if (fs::exists(dir + "/report.csv")) {
    std::ifstream f(dir + "/report.csv");
    std::string line;
    std::getline(f, line); // header
    while (std::getline(f, line)) {
      size_t last = line.rfind(',');
      if (last == std::string::npos) continue;
      std::string head = line.substr(0, last);      // scenario,check,verdict,gap
      size_t second = head.find(',', head.find(',') + 1);
      if (second == std::string::npos) continue;
      seconds[head.substr(0, second)] = line.substr(last + 1);
    }
  }

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string name = e.path().filename().string();
    if (name.size() > 12 && name.substr(name.size() - 12) == ".report.json")
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw CliError{2, "no *.report.json files in '" + dir + "'"};

  json summary;
  summary["schema_version"] = 1;
  summary["scenarios"] = json::array();
  std::vector<std::string> csv = {"scenario,check,verdict,gap,seconds"};
  bool all_ok = true;
  for (const std::string& path : files) {
    json rep = load_json_file(path);
    std::string name = rep.at("scenario").get<std::string>();
    int pass = 0, fail = 0, skip = 0;
    for (const auto& c : rep.at("checks")) {
      std::string verdict = c.at("verdict").get<std::string>();
      (verdict == "pass" ? pass : verdict == "fail" ? fail : skip)++;
      std::string key = name + "," + c.at("name").get<std::string>();
      auto it = seconds.find(key);
      char row[256];
      std::snprintf(row, sizeof(row), "%s,%s,%s,%.6g,%s", name.c_str(),
                    c.at("name").get<std::string>().c_str(), verdict.c_str(),
                    c.value("gap", 0.0),
                    it == seconds.end() ? "0.000" : it->second.c_str());
      csv.push_back(row);
    }
    bool ok = rep.at("all_passed").get<bool>();
    all_ok = all_ok && ok;
    summary["scenarios"].push_back(json{{"name", name},
                                        {"all_passed", ok},
                                        {"pass", pass},
                                        {"fail", fail},
                                        {"skipped", skip}});
    std::printf("%-22s %s  (%d pass, %d fail, %d skipped)\n", name.c_str(),
                ok ? "ok  " : "FAIL", pass, fail, skip);
  }
  summary["all_passed"] = all_ok;
  write_text(dir + "/summary.json", summary.dump(2) + "\n");
  std::string body;
  for (const std::string& row : csv) body += row + "\n";
  write_text(dir + "/summary.csv", body);
  std::printf("aggregated %zu report(s); %s\n", files.size(),
              all_ok ? "all passed" : "FAILURES present");
  return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"subcalc: epsilon-subdifferentials, normal cones, and Aumann "
               "integrals of convex integral functionals (dimensions 1-2)"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string run_target, out_flag;
  CLI::App* run = app.add_subcommand(
      "run", "run a builtin scenario, 'all', or a scenario JSON file");
  run->add_option("scenario", run_target, "builtin name, 'all', or path to a .json file")
      ->required();
  run->add_option("--out", out_flag,
                  "directory for report.json/report.csv/SVG artifacts "
                  "(default: $SUBCALC_OUT)");
  run->add_option("--tol", opt.tol, "Hausdorff tolerance for quadrature-backed checks");
  run->add_option("--directions", opt.directions, "support-fan direction count");
  run->add_option("--box-radius", opt.box_radius, "truncation box radius for set comparison");

  CLI::App* list = app.add_subcommand("list", "list builtin scenarios");

  std::string fn_arg;
  std::vector<double> xs;
  double eps = 0.0;
  int directions = 360;
  CLI::App* subdiff = app.add_subcommand(
      "subdiff", "epsilon-subdifferential of a function given as JSON");
  subdiff->add_option("fn", fn_arg, "path to a function JSON file, or inline JSON")
      ->required();
  subdiff->add_option("--x", xs, "evaluation point (1 or 2 coordinates)")
      ->required()
      ->expected(1, 2);
  subdiff->add_option("--eps", eps, "epsilon >= 0")->required();
  subdiff->add_option("--directions", directions, "support-fan direction count");

  std::string verify_id, verify_target;
  CLI::App* verify = app.add_subcommand(
      "verify", "evaluate one formula against a scenario's declared facts");
  verify->add_option("formula", verify_id, "formula id, e.g. cor4_2")->required();
  verify->add_option("scenario", verify_target, "builtin name or path to a .json file")
      ->required();
  verify->add_option("--tol", opt.tol, "Hausdorff tolerance");
  verify->add_option("--directions", opt.directions, "support-fan direction count");
  verify->add_option("--box-radius", opt.box_radius, "truncation box radius");

  std::string report_dir;
  CLI::App* report = app.add_subcommand(
      "report", "aggregate *.report.json files in a directory");
  report->add_option("dir", report_dir, "directory holding reports")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return cmd_list();
    if (run->parsed()) return cmd_run(run_target, out_flag, opt);
    if (subdiff->parsed()) return cmd_subdiff(fn_arg, xs, eps, directions);
    if (verify->parsed()) return cmd_verify(verify_id, verify_target, opt);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const CliError& e) {
    std::cerr << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
