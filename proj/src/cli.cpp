#include "rkevo/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rkevo/archive_io.hpp"
#include "rkevo/errors.hpp"
#include "rkevo/es_engine.hpp"
#include "rkevo/ode_verify.hpp"
#include "rkevo/order_conditions.hpp"
#include "rkevo/rooted_tree.hpp"
#include "rkevo/tableau.hpp"
#include "rkevo/variety_solver.hpp"

namespace rkevo::cli {

namespace {

using nlohmann::json;

// Invalid flag combinations detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { table, json };

struct Common {
  Format format = Format::table;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--format", c.format, "Output format")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"table", Format::table}, {"json", Format::json}}))
      ->option_text("table|json");
  sub->add_option("--config", c.config, "Flat key = value file; keys are flag names, flags on the command line win");
}

// Command-line tokens for config keys that the command line did not set.
// Unknown keys are rejected; values then pass through the normal option validators.
std::vector<std::string> config_tokens(CLI::App* sub, const std::string& path) {
  std::vector<std::string> tokens;
  if (path.empty()) return tokens;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  const std::vector<CLI::ConfigItem> items = CLI::ConfigTOML().from_config(in);
  for (const auto& item : items) {
    if (!item.parents.empty()) throw UsageError("config file: sections are not supported (" + item.fullname() + ")");
    if (item.name == "config" || item.name == "help") throw UsageError("config file: key '" + item.name + "' not allowed");
    const CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw UsageError("config file: unknown key '" + item.name + "'");
    if (item.inputs.size() != 1) throw UsageError("config file: key '" + item.name + "' needs exactly one value");
    if (opt->count() > 0) continue;
    tokens.push_back("--" + item.name + "=" + item.inputs.front());
  }
  return tokens;
}

std::string fmt(double v) { return format_double(v); }

// Column-aligned plain table.
class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void print(std::ostream& out) const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      if (width.size() < r.size()) width.resize(r.size(), 0);
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out << "  ";
        if (i + 1 == r.size()) {
          out << r[i];
        } else {
          out << std::left << std::setw(static_cast<int>(width[i])) << r[i];
        }
      }
      out << '\n';
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

json metrics_object(const std::vector<double>& values) {
  json j = json::object();
  for (std::size_t p = 0; p < values.size(); ++p) j[std::to_string(p + 1)] = values[p];
  return j;
}

// ---------------------------------------------------------------------------
// trees

struct TreesArgs {
  Common common;
  int max_order = 10;
  bool list = false;
};

int cmd_trees(const TreesArgs& a, std::ostream& out) {
  const auto levels = enumerate_trees(a.max_order);
  const auto counts = tree_counts(a.max_order);
  const auto cumulative = cumulative_tree_counts(a.max_order);
  if (a.common.format == Format::json) {
    json trees = json::array();
    for (const auto& level : levels) {
      for (const auto& e : level) {
        trees.push_back({{"encoding", e.tree.encoding()},
                         {"order", e.invariants.order},
                         {"gamma", e.invariants.gamma},
                         {"alpha", e.invariants.alpha},
                         {"sigma", e.invariants.sigma}});
      }
    }
    out << json{{"max_order", a.max_order}, {"counts", counts}, {"cumulative", cumulative}, {"trees", trees}}.dump(2)
        << '\n';
    return kExitOk;
  }
  if (a.list) {
    Table t({"encoding", "order", "gamma", "alpha", "sigma"});
    for (const auto& level : levels) {
      for (const auto& e : level) {
        t.add({e.tree.encoding(), std::to_string(e.invariants.order), std::to_string(e.invariants.gamma),
               std::to_string(e.invariants.alpha), std::to_string(e.invariants.sigma)});
      }
    }
    t.print(out);
    out << '\n';
  }
  Table t({"order", "cumulative", "trees"});
  for (std::size_t p = 0; p < counts.size(); ++p) {
    t.add({std::to_string(p + 1), std::to_string(cumulative[p]), std::to_string(counts[p])});
  }
  t.print(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// conditions

struct ConditionsArgs {
  Common common;
  int stages = 0;
  int order = 0;
  bool implicit = false;
  double amp = kDefaultAmplification;
  double eps_base = kDefaultBaseTolerance;
};

int cmd_conditions(const ConditionsArgs& a, std::ostream& out) {
  const ConditionSystem sys(a.stages, a.order, !a.implicit, Thresholds::defaults(a.order + 1, a.amp, a.eps_base));
  if (a.common.format == Format::json) {
    json trees = json::array();
    for (const auto& node : sys.trees()) {
      trees.push_back({{"encoding", node.tree.encoding()},
                       {"order", node.invariants.order},
                       {"gamma", node.invariants.gamma},
                       {"alpha", node.invariants.alpha},
                       {"weight", node.weight}});
    }
    out << json{{"stages", a.stages},
                {"order", a.order},
                {"explicit", !a.implicit},
                {"dimension", sys.dimension()},
                {"thresholds", metrics_object(sys.thresholds().values())},
                {"trees", trees}}
               .dump(2)
        << '\n';
    return kExitOk;
  }
  out << "stages " << a.stages << (a.implicit ? " implicit" : " explicit") << ", order " << a.order
      << ", parameters " << sys.dimension() << ", conditions " << sys.trees().size() << "\n\n";
  Table t({"order", "tree", "gamma", "alpha", "r_t", "condition"});
  for (const auto& node : sys.trees()) {
    t.add({std::to_string(node.invariants.order), node.tree.encoding(), std::to_string(node.invariants.gamma),
           std::to_string(node.invariants.alpha), fmt(node.weight),
           "sum w Phi = 1/" + std::to_string(node.invariants.gamma)});
  }
  t.print(out);
  out << '\n';
  Table c({"order", "c_p"});
  for (int p = 1; p <= sys.tree_order_limit(); ++p) c.add({std::to_string(p), fmt(sys.thresholds().at(p))});
  c.print(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  Common common;
  std::string tableau;
  int order = 0;
  std::optional<double> tol;
  double amp = kDefaultAmplification;
  double eps_base = kDefaultBaseTolerance;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const ButcherTableau t = load_tableau(a.tableau);
  const Thresholds thresholds =
      a.tol ? Thresholds::uniform(a.order + 1, *a.tol) : Thresholds::defaults(a.order + 1, a.amp, a.eps_base);
  const ConditionSystem sys(t.stages(), a.order, t.is_explicit(), thresholds);
  const auto e = sys.error_coefficients(t);
  const auto metrics = sys.order_metrics(e);
  const auto report = sys.feasibility(e, a.order);

  if (a.common.format == Format::json) {
    json trees = json::array();
    for (std::size_t i = 0; i < e.size(); ++i) {
      trees.push_back({{"encoding", sys.trees()[i].tree.encoding()},
                       {"order", sys.trees()[i].invariants.order},
                       {"e", e[i]}});
    }
    json orders = json::array();
    for (int p = 1; p <= sys.tree_order_limit(); ++p) {
      const double m = metrics[static_cast<std::size_t>(p - 1)];
      json row = {{"order", p}, {"metric", m}, {"threshold", thresholds.at(p)}};
      row["checked"] = p <= a.order;
      row["pass"] = m < thresholds.at(p);
      orders.push_back(row);
    }
    out << json{{"tableau", a.tableau},
                {"stages", t.stages()},
                {"explicit", t.is_explicit()},
                {"order", a.order},
                {"feasible", report.feasible},
                {"fitness", sys.fitness(e)},
                {"orders", orders},
                {"trees", trees}}
               .dump(2)
        << '\n';
  } else {
    out << a.tableau << ": " << t.stages() << " stages, " << (t.is_explicit() ? "explicit" : "implicit") << "\n\n";
    Table m({"order", "metric", "c_p", "status"});
    for (int p = 1; p <= sys.tree_order_limit(); ++p) {
      const double v = metrics[static_cast<std::size_t>(p - 1)];
      const std::string status = p > a.order ? "(not required)" : (v < thresholds.at(p) ? "pass" : "FAIL");
      m.add({std::to_string(p), fmt(v), fmt(thresholds.at(p)), status});
    }
    m.print(out);
    out << '\n';
    Table tr({"tree", "order", "e(t)"});
    for (std::size_t i = 0; i < e.size(); ++i) {
      tr.add({sys.trees()[i].tree.encoding(), std::to_string(sys.trees()[i].invariants.order), fmt(e[i])});
    }
    tr.print(out);
    out << "\nfitness F_" << a.order << " = " << fmt(sys.fitness(e)) << '\n';
    out << "verdict: " << (report.feasible ? "feasible" : "infeasible") << " to order " << a.order << '\n';
  }
  return report.feasible ? kExitOk : kExitInfeasible;
}

// ---------------------------------------------------------------------------
// evolve

struct EvolveArgs {
  Common common;
  int stages = 0;
  bool implicit = false;
  int start_order = 2;
  int max_order = 10;
  std::uint64_t seed = 0;
  std::size_t pop = 1000;
  std::optional<std::size_t> parents;
  std::size_t max_iters = 100000;
  double eps_base = kDefaultBaseTolerance;
  double amp = kDefaultAmplification;
  std::size_t restarts = 3;
  std::size_t stagnation = 500;
  std::size_t capacity = 10000;
  double step = 1.0;
  bool no_penalty = false;
  bool quiet = false;
  std::string archive;
  std::string pareto;
};

int cmd_evolve(const EvolveArgs& a, std::ostream& out, std::ostream& err) {
  EvolveConfig cfg;
  cfg.stages = a.stages;
  cfg.explicit_flag = !a.implicit;
  cfg.start_order = a.start_order;
  cfg.max_order = a.max_order;
  cfg.amplification = a.amp;
  cfg.base_tolerance = a.eps_base;
  cfg.penalty = !a.no_penalty;
  cfg.restarts = a.restarts;
  cfg.archive_capacity = a.capacity;
  cfg.seed = a.seed;
  cfg.es.population = a.pop;
  cfg.es.parents = a.parents.value_or(std::max<std::size_t>(1, a.pop / 2));
  cfg.es.max_iterations = a.max_iters;
  cfg.es.stagnation_generations = a.stagnation;
  cfg.es.initial_step = a.step;
  cfg.es.threads = threads_from_environment();
  if (cfg.es.parents > cfg.es.population) throw UsageError("--parents must not exceed --pop");
  if (a.max_order < a.start_order) throw UsageError("--max-order must be >= --start-order");
  if (!a.quiet) cfg.log = [&err](const std::string& line) { err << line << '\n'; };

  const EvolveResult result = evolve_runge_kutta(cfg);
  if (!a.archive.empty()) write_archive_jsonl(a.archive, result.archives);
  if (!a.pareto.empty() && result.q_max > 0) {
    std::ofstream csv(a.pareto);
    if (!csv) throw FormatError("cannot open " + a.pareto);
    write_pareto_csv(csv, result.pareto, a.stages, !a.implicit);
  }

  if (a.common.format == Format::json) {
    json archives = json::object();
    for (const auto& [order, archive] : result.archives) archives[std::to_string(order)] = archive.size();
    json cycles = json::array();
    for (const auto& c : result.cycles) {
      cycles.push_back({{"q", c.q}, {"success", c.success}, {"runs", c.runs}, {"evaluations", c.evaluations},
                        {"best_fitness", c.best_fitness}});
    }
    json errors = json::object();
    for (std::size_t i = 0; i < result.best_errors.size(); ++i) errors[result.best_error_trees[i]] = result.best_errors[i];
    json pareto = json::array();
    for (const auto& m : result.pareto.members) pareto.push_back({{"x", m.record.x}, {"fitness", m.record.fitness}, {"e", m.errors}});
    out << json{{"stages", a.stages},
                {"explicit", !a.implicit},
                {"seed", a.seed},
                {"q_max", result.q_max},
                {"archives", archives},
                {"cycles", cycles},
                {"best_x", result.best_x},
                {"best_fitness", result.best_fitness},
                {"best_errors", errors},
                {"pareto", pareto}}
               .dump(2)
        << '\n';
  } else {
    out << "q_max = " << result.q_max << '\n';
    Table arch({"order", "feasible points"});
    for (const auto& [order, archive] : result.archives) arch.add({std::to_string(order), std::to_string(archive.size())});
    arch.print(out);
    out << '\n';
    Table cyc({"cycle q", "result", "runs", "evaluations", "best F_q"});
    for (const auto& c : result.cycles) {
      cyc.add({std::to_string(c.q), c.success ? "found order " + std::to_string(c.q + 1) : "no new points",
               std::to_string(c.runs), std::to_string(c.evaluations), fmt(c.best_fitness)});
    }
    cyc.print(out);
    out << "\nbest point of the last cycle: F = " << fmt(result.best_fitness) << '\n';
    Table e({"tree", "e(t)"});
    for (std::size_t i = 0; i < result.best_errors.size(); ++i) e.add({result.best_error_trees[i], fmt(result.best_errors[i])});
    e.print(out);
    out << "\npareto front at order " << result.q_max << ": " << result.pareto.members.size() << " members\n";
  }
  return result.q_max > 0 ? kExitOk : kExitInfeasible;
}

// ---------------------------------------------------------------------------
// pareto

struct ParetoArgs {
  Common common;
  std::string archive;
  int order = 0;
  std::string out;
};

int cmd_pareto(const ParetoArgs& a, std::ostream& out) {
  const Archive archive = read_archive_jsonl(a.archive, a.order);
  const ParetoSet set = pareto_front(archive);
  if (!a.out.empty()) {
    std::ofstream csv(a.out);
    if (!csv) throw FormatError("cannot open " + a.out);
    write_pareto_csv(csv, set, archive.stages(), archive.is_explicit());
  }
  if (a.common.format == Format::json) {
    json members = json::array();
    for (const auto& m : set.members) members.push_back({{"x", m.record.x}, {"fitness", m.record.fitness}, {"e", m.errors}});
    out << json{{"order", a.order},
                {"archive_size", archive.size()},
                {"trees", set.tree_encodings},
                {"members", members}}
               .dump(2)
        << '\n';
  } else if (a.out.empty()) {
    write_pareto_csv(out, set, archive.stages(), archive.is_explicit());
  } else {
    out << set.members.size() << " of " << archive.size() << " archived points are non-dominated; wrote " << a.out
        << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// empirical-order

struct EmpiricalArgs {
  Common common;
  std::string tableau;
  std::string problem;
  double h0 = 0.1;
  int levels = 6;
  bool local = false;
  bool global = false;
};

int cmd_empirical(const EmpiricalArgs& a, std::ostream& out) {
  if (a.local && a.global) throw UsageError("--local and --global are exclusive");
  const ButcherTableau t = load_tableau(a.tableau);
  const TestProblem problem = make_problem(a.problem);
  const OrderEstimate est = a.local ? local_order(t, problem, a.h0, a.levels) : global_order(t, problem, a.h0, a.levels);
  if (a.common.format == Format::json) {
    json levels = json::array();
    for (std::size_t k = 0; k < est.step_sizes.size(); ++k) {
      levels.push_back({{"h", est.step_sizes[k]}, {"error", est.errors[k]}, {"used", static_cast<bool>(est.used[k])}});
    }
    out << json{{"tableau", a.tableau},
                {"problem", a.problem},
                {"kind", est.kind},
                {"slope", est.slope},
                {"intercept", est.intercept},
                {"residual", est.residual},
                {"levels", levels}}
               .dump(2)
        << '\n';
  } else {
    out << est.kind << " error of " << a.tableau << " on '" << a.problem << "'\n\n";
    Table tb({"h", "error", "used"});
    for (std::size_t k = 0; k < est.step_sizes.size(); ++k) {
      tb.add({fmt(est.step_sizes[k]), fmt(est.errors[k]), est.used[k] ? "yes" : "no (rounding floor)"});
    }
    tb.print(out);
    out << "\nslope = " << fmt(est.slope) << "  (fit residual " << fmt(est.residual) << ")\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Runge-Kutta order conditions, evolutionary design and verification"};
  app.name("rkevo");
  app.require_subcommand(1);

  TreesArgs trees;
  auto* s_trees = app.add_subcommand("trees", "Rooted trees and their invariants");
  add_common(s_trees, trees.common);
  s_trees->add_option("--max-order", trees.max_order, "Highest tree order")->check(CLI::Range(1, kMaxTreeOrder));
  s_trees->add_flag("--list", trees.list, "Also list every tree (table format)");

  ConditionsArgs cond;
  auto* s_cond = app.add_subcommand("conditions", "Print the order-condition system");
  add_common(s_cond, cond.common);
  s_cond->add_option("--stages", cond.stages, "Number of stages")->required()->check(CLI::PositiveNumber);
  s_cond->add_option("--order", cond.order, "Target order q (trees up to q+1 are listed)")
      ->required()
      ->check(CLI::Range(1, kMaxTreeOrder - 1));
  s_cond->add_flag("--implicit", cond.implicit, "Full coefficient matrix");
  s_cond->add_option("--amp", cond.amp, "Amplification factor")->check(CLI::PositiveNumber);
  s_cond->add_option("--eps-base", cond.eps_base, "Base tolerance")->check(CLI::PositiveNumber);

  VerifyArgs ver;
  auto* s_ver = app.add_subcommand("verify", "Check a tableau against the order conditions");
  add_common(s_ver, ver.common);
  s_ver->add_option("--tableau", ver.tableau, "Tableau JSON file")->required();
  s_ver->add_option("--order", ver.order, "Order to certify")->required()->check(CLI::Range(1, kMaxTreeOrder - 1));
  s_ver->add_option("--tol", ver.tol, "Uniform threshold for every order (replaces c_p)")->check(CLI::PositiveNumber);
  s_ver->add_option("--amp", ver.amp, "Amplification factor")->check(CLI::PositiveNumber);
  s_ver->add_option("--eps-base", ver.eps_base, "Base tolerance")->check(CLI::PositiveNumber);

  EvolveArgs evo;
  auto* s_evo = app.add_subcommand("evolve", "Search for Runge-Kutta methods of increasing order");
  add_common(s_evo, evo.common);
  s_evo->add_option("--stages", evo.stages, "Number of stages")->required()->check(CLI::Range(1, 12));
  s_evo->add_flag("--implicit", evo.implicit, "Search implicit methods");
  s_evo->add_option("--start-order", evo.start_order, "First cycle order q")->check(CLI::Range(1, kMaxTreeOrder - 2));
  s_evo->add_option("--max-order", evo.max_order, "Last cycle order q")->check(CLI::Range(1, kMaxTreeOrder - 2));
  s_evo->add_option("--seed", evo.seed, "Master seed");
  s_evo->add_option("--pop", evo.pop, "Population size lambda")->check(CLI::PositiveNumber);
  s_evo->add_option("--parents", evo.parents, "Parents mu (default pop/2)")->check(CLI::PositiveNumber);
  s_evo->add_option("--max-iters", evo.max_iters, "Generations per ES run");
  s_evo->add_option("--eps-base", evo.eps_base, "Base tolerance")->check(CLI::PositiveNumber);
  s_evo->add_option("--amp", evo.amp, "Amplification factor")->check(CLI::PositiveNumber);
  s_evo->add_option("--restarts", evo.restarts, "Extra ES runs per cycle");
  s_evo->add_option("--stagnation", evo.stagnation, "Generations without improvement before a run stops (0 = never)");
  s_evo->add_option("--capacity", evo.capacity, "Archive capacity per order")->check(CLI::PositiveNumber);
  s_evo->add_option("--step", evo.step, "Initial step size")->check(CLI::NonNegativeNumber);
  s_evo->add_flag("--no-penalty", evo.no_penalty, "Drop the penalty on lower-order metrics");
  s_evo->add_flag("--quiet", evo.quiet, "No progress lines on stderr");
  s_evo->add_option("--archive", evo.archive, "Write feasible points as JSON lines");
  s_evo->add_option("--pareto", evo.pareto, "Write the final Pareto front as CSV");

  ParetoArgs par;
  auto* s_par = app.add_subcommand("pareto", "Non-dominated archive points on |e(t)| of order q+1");
  add_common(s_par, par.common);
  s_par->add_option("--archive", par.archive, "Archive JSONL file")->required();
  s_par->add_option("--order", par.order, "Archive order q")->required()->check(CLI::Range(1, kMaxTreeOrder - 1));
  s_par->add_option("--out", par.out, "CSV output (default: standard output)");

  EmpiricalArgs emp;
  auto* s_emp = app.add_subcommand("empirical-order", "Estimate the convergence order by step halving");
  add_common(s_emp, emp.common);
  s_emp->add_option("--tableau", emp.tableau, "Tableau JSON file")->required();
  s_emp->add_option("--problem", emp.problem, "Test problem")->required()->check(CLI::IsMember(problem_names()));
  s_emp->add_option("--h0", emp.h0, "Largest step size")->check(CLI::PositiveNumber);
  s_emp->add_option("--levels", emp.levels, "Number of halvings")->check(CLI::Range(4, 30));
  s_emp->add_flag("--local", emp.local, "One-step error (slope ~ p+1)");
  s_emp->add_flag("--global", emp.global, "Error at the final time (slope ~ p, default)");

  std::map<CLI::App*, std::string*> configs{{s_trees, &trees.common.config}, {s_cond, &cond.common.config},
                                            {s_ver, &ver.common.config},     {s_evo, &evo.common.config},
                                            {s_par, &par.common.config},     {s_emp, &emp.common.config}};
  CLI::App* sub = nullptr;
  try {
    app.parse(argc, argv);
    sub = app.get_subcommands().front();
    std::vector<std::string> extra = config_tokens(sub, *configs.at(sub));
    if (!extra.empty()) {
      // Re-parse with the config values appended; CLI11 takes the arguments in reverse.
      std::vector<std::string> args(argv + 1, argv + argc);
      args.insert(args.end(), extra.begin(), extra.end());
      std::reverse(args.begin(), args.end());
      app.clear();
      app.parse(args);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (sub == s_trees) return cmd_trees(trees, out);
    if (sub == s_cond) return cmd_conditions(cond, out);
    if (sub == s_ver) return cmd_verify(ver, out);
    if (sub == s_evo) return cmd_evolve(evo, out, err);
    if (sub == s_par) return cmd_pareto(par, out);
    return cmd_empirical(emp, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace rkevo::cli
