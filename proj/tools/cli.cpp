#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "entryexit/entry_exit.hpp"
#include "entryexit/errors.hpp"
#include "entryexit/harness.hpp"
#include "entryexit/odeint.hpp"
#include "entryexit/polar.hpp"
#include "entryexit/spectral.hpp"
#include "entryexit/system.hpp"

namespace entryexit::cli {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string system;
  std::string config;
  double a = 4.0;
  double x0 = 0.0;
  double eps = 0.01;
  double delta = 0.1;
  double rtol = 1e-9;
  double atol = 1e-12;
  double x_stop = 0.0;
  std::string grid = "-2:-0.25:36";
  std::string eps_list = "0.05,0.02,0.01,0.005";
  std::string init = "1,1";
  std::string out;
  std::string figure;

  // Set after parsing from the chosen subcommand.
  bool a_given = false;
  bool delta_given = false;
  bool x_stop_given = false;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag, char sep = ',') {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      const double d = std::stod(item, &used);
      if (used != item.size() || !std::isfinite(d)) throw std::invalid_argument(item);
      v.push_back(d);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("{}: '{}' is not a number", flag, item));
    }
  }
  return v;
}

std::array<double, 2> parse_init(const std::string& text) {
  const auto v = parse_list(text, "--init");
  if (v.size() != 2) throw UsageError("--init expects two values z1,z2");
  return {v[0], v[1]};
}

struct Grid {
  double lo, hi;
  int n;
};

Grid parse_grid(const std::string& text) {
  const auto v = parse_list(text, "--grid", ':');
  if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2]) || !(v[0] < v[1])) {
    throw UsageError("--grid expects lo:hi:n with lo < hi and integer n >= 1");
  }
  return {v[0], v[1], static_cast<int>(v[2])};
}

FastSlowSystem load(const Options& o) {
  if (!o.config.empty()) {
    if (o.a_given) throw UsageError("--a applies to builtin systems only");
    return load_system_file(o.config);
  }
  std::map<std::string, double> params;
  if (o.a_given) params["a"] = o.a;
  return make_builtin(o.system, params);
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

std::string num(double v) { return fmt::format("{:.10g}", v); }

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string("absent"); }

/// Human report on `out`, CSV body for --out.
struct Outcome {
  std::string csv;
};

class Command {
 public:
  Command(std::string name, std::string csv_header) : name_(std::move(name)), header_(std::move(csv_header)) {}
  virtual ~Command() = default;
  const std::string& name() const { return name_; }
  const std::string& header() const { return header_; }
  virtual Outcome execute(const Options& o, std::ostream& out) = 0;

 private:
  std::string name_;
  std::string header_;
};

std::string describe_case(const PolarAnalysis& p) {
  if (!p.lambda_value) return "uncovered (determinant condition fails)";
  const bool unit = std::abs(*p.lambda_value - 1.0) <= 1e-8;
  if (unit && p.s0_invariant && p.z0_invariant) return "ambiguous (both branches invariant)";
  if (!unit || p.z0_invariant) return "trans";
  if (p.s0_invariant) return "invar";
  return "uncovered (neither branch invariant)";
}

class Analyze : public Command {
 public:
  Analyze() : Command("analyze", "quantity,value\n") {}
  Outcome execute(const Options& o, std::ostream& out) override {
    const FastSlowSystem sys = load(o);
    SpectralProfile prof = spectral_profile(sys);
    const PolarAnalysis pol = analyze_polar(sys, prof);
    std::vector<std::pair<std::string, std::string>> rows = {
        {"system", sys.name},
        {"x_star", num(prof.x_star)},
        {"xi_star", num(prof.xi_star)},
        {"x_plus", opt_num(prof.x_plus)},
        {"x_minus", opt_num(prof.x_minus)},
        {"multiplicity_at_star", std::to_string(prof.geometric_multiplicity_at_star)},
        {"theta_star", num(pol.theta_star)},
        {"alpha", num(pol.alpha)},
        {"beta", num(pol.beta)},
        {"gamma", num(pol.gamma)},
        {"coef_delta", num(pol.coef_delta)},
        {"lambda", opt_num(pol.lambda_value)},
        {"S0_invariant", yes_no(pol.s0_invariant)},
        {"Z0_invariant", yes_no(pol.z0_invariant)},
        {"case_before_x_star", describe_case(pol)},
    };
    for (const auto& c : pol.corollary_report) {
      rows.emplace_back("corollary: " + c.name, fmt::format("{} ({})", c.pass ? "pass" : "FAIL", num(c.value)));
    }
    if (pol.alternative) {
      const auto& alt = *pol.alternative;
      rows.emplace_back("alt_theta_star", num(alt.theta_star));
      rows.emplace_back("alt_alpha", num(alt.coeffs.alpha));
      rows.emplace_back("alt_beta", num(alt.coeffs.beta));
      rows.emplace_back("alt_gamma", num(alt.coeffs.gamma));
      rows.emplace_back("alt_coef_delta", num(alt.coeffs.coef_delta));
      rows.emplace_back("alt_lambda", opt_num(alt.lambda));
    }
    std::ostringstream csv;
    csv << header();
    for (const auto& [k, v] : rows) {
      out << fmt::format("{:<40} {}\n", k, v);
      csv << k << ',' << (v.find(',') != std::string::npos ? "\"" + v + "\"" : v) << '\n';
    }
    return {csv.str()};
  }
};

class Predict : public Command {
 public:
  Predict() : Command("predict", "x0,case,x_tilde,x1,lambda\n") {}
  Outcome execute(const Options& o, std::ostream& out) override {
    const FastSlowSystem sys = load(o);
    const ExitPrediction p = predict_exit(sys, o.x0);
    out << "case=" << to_string(p.exit_case) << '\n';
    out << "x0=" << format_real(p.x0) << '\n';
    if (p.x_tilde) out << "x_tilde=" << format_real(*p.x_tilde) << '\n';
    out << "x1=" << format_real(p.x1) << '\n';
    if (p.lambda_used) out << "lambda=" << num(*p.lambda_used) << '\n';
    out << "S0_invariant=" << yes_no(p.s0_invariant) << " Z0_invariant=" << yes_no(p.z0_invariant) << '\n';
    return {header() + fmt::format("{},{},{},{},{}\n", format_real(p.x0), to_string(p.exit_case),
                        p.x_tilde ? format_real(*p.x_tilde) : "", format_real(p.x1),
                        p.lambda_used ? format_real(*p.lambda_used) : "")};
  }
};

IntegratorOptions integrator(const Options& o) {
  if (!(o.rtol > 0.0) || !(o.atol > 0.0)) throw UsageError("--rtol and --atol must be positive");
  IntegratorOptions io;
  io.rtol = o.rtol;
  io.atol = o.atol;
  return io;
}

class Simulate : public Command {
 public:
  Simulate() : Command("simulate", "t,x,z1,z2,r,theta,log_r,event\n") {}
  Outcome execute(const Options& o, std::ostream& out) override {
    if (!(o.eps > 0.0)) throw UsageError("--eps must be positive");
    if (!(o.delta > 0.0)) throw UsageError("--delta must be positive");
    const auto init = parse_init(o.init);
    const IntegratorOptions io = integrator(o);
    const FastSlowSystem sys = load(o);
    std::optional<double> x_stop;
    if (o.x_stop_given) x_stop = o.x_stop;
    const ExitDetection d = detect_exit(sys, {o.x0, init[0], init[1]}, o.eps, o.delta, io, x_stop);
    out << "entry x=" << format_real(d.entry.x_event) << " t=" << format_real(d.entry.t_event) << '\n';
    out << "exit x=" << format_real(d.exit.x_event) << " t=" << format_real(d.exit.t_event)
        << " residual=" << num(d.exit.residual) << '\n';
    out << "steps accepted=" << d.trace.accepted << " rejected=" << d.trace.rejected << '\n';
    std::ostringstream csv;
    if (!o.out.empty()) d.trace.write_csv(csv);
    return {csv.str()};
  }
};

class Sweep : public Command {
 public:
  Sweep() : Command("sweep", "x0,case,x1_pred,x1_sim,abs_err,error\n") {}
  Outcome execute(const Options& o, std::ostream& out) override {
    if (!(o.eps > 0.0)) throw UsageError("--eps must be positive");
    const Grid g = parse_grid(o.grid);
    const auto init = parse_init(o.init);
    const IntegratorOptions io = integrator(o);
    std::optional<double> radius;
    if (o.delta_given) {
      if (!(o.delta > 0.0)) throw UsageError("--delta must be positive");
      radius = o.delta;
    }
    const FastSlowSystem sys = load(o);
    const SweepResult res = sweep(sys, open_grid(g.lo, g.hi, g.n), o.eps, init, radius, io);
    out << fmt::format("{:>12} {:>10} {:>12} {:>12} {:>10}  {}\n", "x0", "case", "x1_pred", "x1_sim", "abs_err",
                       "error");
    auto cell = [](const std::optional<double>& v) { return v ? num(*v) : std::string("-"); };
    for (const auto& r : res.rows) {
      out << fmt::format("{:>12} {:>10} {:>12} {:>12} {:>10}  {}\n", num(r.x0), r.exit_case.empty() ? "-" : r.exit_case,
                         cell(r.x1_predicted), cell(r.x1_simulated), cell(r.abs_error), r.error);
    }
    out << "max abs_err=" << num(res.max_abs_error()) << " cylinder_radius=" << num(res.meta.cylinder_radius) << '\n';
    std::ostringstream csv;
    res.write_csv(csv);
    return {csv.str()};
  }
};

class Check : public Command {
 public:
  Check() : Command("check", "item,pass,detail,witnesses\n") {}
  Outcome execute(const Options& o, std::ostream& out) override {
    const FastSlowSystem sys = load(o);
    const SpectralProfile p = check_assumptions(sys, o.x0);
    std::ostringstream csv;
    csv << header();
    int i = 1;
    for (const AssumptionItem& it : *p.assumption_report) {
      std::string w;
      for (std::size_t k = 0; k < it.witnesses.size(); ++k) w += (k ? " " : "") + format_real(it.witnesses[k]);
      out << fmt::format("item {}: {}  {}\n", i, it.pass ? "PASS" : "FAIL", it.detail);
      std::string detail = it.detail;
      std::string quoted = "\"";
      for (char c : detail) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      quoted += '"';
      csv << i << ',' << (it.pass ? "true" : "false") << ',' << quoted << ',' << w << '\n';
      ++i;
    }
    out << "all assumptions hold: " << yes_no(p.assumptions_hold()) << '\n';
    return {csv.str()};
  }
};

json options_json(const Options& o, const std::string& command) {
  json j;
  j["command"] = command;
  if (!o.system.empty()) j["system"] = o.system;
  if (!o.config.empty()) j["config"] = o.config;
  if (o.a_given) j["a"] = o.a;
  j["x0"] = o.x0;
  j["eps"] = o.eps;
  j["delta"] = o.delta_given ? json(o.delta) : json(nullptr);
  j["rtol"] = o.rtol;
  j["atol"] = o.atol;
  if (o.x_stop_given) j["x_stop"] = o.x_stop;
  j["grid"] = o.grid;
  j["eps_list"] = o.eps_list;
  j["init"] = o.init;
  if (!o.figure.empty()) j["figure"] = o.figure;
  return j;
}

void write_outputs(const Options& o, const std::string& command, const std::string& body,
                   const std::optional<std::string>& error) {
  if (o.out.empty()) return;
  write_file_atomically(o.out, body);
  json meta;
  meta["library_version"] = std::string(library_version());
  meta["options"] = options_json(o, command);
  meta["status"] = error ? "error" : "ok";
  meta["error"] = error ? json(*error) : json(nullptr);
  std::filesystem::path side = o.out;
  side += ".meta.json";
  write_file_atomically(side, meta.dump(2) + "\n");
}

void add_selector(CLI::App* sub, Options& o) {
  auto* system = sub->add_option("--system", o.system, "Builtin system")
                     ->check(CLI::IsMember({"one_way_coupled", "eps_coupled", "nonlinear"}));
  auto* config = sub->add_option("--config", o.config, "System description file (YAML)");
  system->excludes(config);
  sub->add_option("--a", o.a, "Parameter a of the nonlinear system")->capture_default_str();
}

void add_integration(CLI::App* sub, Options& o) {
  sub->add_option("--eps", o.eps, "Time-scale ratio")->capture_default_str();
  sub->add_option("--rtol", o.rtol, "Relative tolerance")->capture_default_str();
  sub->add_option("--atol", o.atol, "Absolute tolerance")->capture_default_str();
  sub->add_option("--init", o.init, "Initial fast values z1,z2")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entry-exit predictions and simulations for fast-slow systems with two fast variables", "entryexit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));
  Options o;

  Analyze analyze;
  Predict predict;
  Simulate simulate;
  Sweep sweeper;
  Check check;

  auto* s_analyze = app.add_subcommand("analyze", "Spectral and polar analysis of a system");
  add_selector(s_analyze, o);
  s_analyze->add_option("--out", o.out, "CSV output path");

  auto* s_predict = app.add_subcommand("predict", "Predicted exit point for an entry point");
  add_selector(s_predict, o);
  s_predict->add_option("--x0", o.x0, "Entry point")->required();
  s_predict->add_option("--out", o.out, "CSV output path");

  auto* s_simulate = app.add_subcommand("simulate", "Integrate and locate the cylinder entry and exit");
  add_selector(s_simulate, o);
  s_simulate->add_option("--x0", o.x0, "Initial slow value")->required();
  add_integration(s_simulate, o);
  s_simulate->add_option("--delta", o.delta, "Cylinder radius")->capture_default_str();
  s_simulate->add_option("--x-stop", o.x_stop, "Stop at this x (default: domain end)");
  s_simulate->add_option("--out", o.out, "Trace CSV output path");

  auto* s_sweep = app.add_subcommand("sweep", "Prediction versus simulation over a grid of entry points");
  add_selector(s_sweep, o);
  s_sweep->add_option("--grid", o.grid, "Open grid lo:hi:n")->capture_default_str();
  add_integration(s_sweep, o);
  s_sweep->add_option("--delta", o.delta, "Cylinder radius (default: |init|)");
  s_sweep->add_option("--out", o.out, "CSV output path");

  auto* s_figure = app.add_subcommand("figure", "Regenerate the data behind a comparison figure");
  s_figure->add_option("figure", o.figure, "fig7, fig8 or fig9")
      ->required()
      ->check(CLI::IsMember({"fig7", "fig8", "fig9"}));
  s_figure->add_option("--eps-list", o.eps_list, "eps values for fig8")->capture_default_str();
  s_figure->add_option("--out", o.out, "CSV output path (default: <figure>.csv)");

  auto* s_check = app.add_subcommand("check", "Assumption checks for an entry point");
  add_selector(s_check, o);
  s_check->add_option("--x0", o.x0, "Entry point")->required();
  s_check->add_option("--out", o.out, "CSV output path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  auto given = [sub](const std::string& flag) {
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  o.a_given = given("--a");
  o.delta_given = given("--delta");
  o.x_stop_given = given("--x-stop");

  if (sub == s_figure) {
    const std::string path = o.out.empty() ? o.figure + ".csv" : o.out;
    auto fail = [&](const std::string& msg, int code) {
      err << "error: " << msg << '\n';
      if (o.out.empty()) return code;
      try {
        const FigureId fig = figure_from_name(o.figure);
        write_outputs(o, "figure", fig == FigureId::fig8 ? "eps,x1_sim,error\n" : "x0,case,x1_pred,x1_sim,abs_err,error\n",
                      msg);
      } catch (const std::exception&) {
        // unknown figure: no header to write
      }
      return code;
    };
    try {
      FigureOptions fo;
      fo.eps_list = parse_list(o.eps_list, "--eps-list");
      if (fo.eps_list.empty()) throw UsageError("--eps-list is empty");
      for (double e : fo.eps_list) {
        if (!(e > 0.0)) throw UsageError("--eps-list values must be positive");
      }
      reproduce_figure(figure_from_name(o.figure), path, fo);
      out << "wrote " << path << " and " << path << ".meta.json\n";
      return 0;
    } catch (const UsageError& e) {
      return fail(e.what(), 2);
    } catch (const PreconditionError& e) {
      return fail(e.what(), 2);
    } catch (const std::exception& e) {
      return fail(e.what(), 1);
    }
  }

  Command* cmd = sub == s_analyze    ? static_cast<Command*>(&analyze)
                 : sub == s_predict  ? static_cast<Command*>(&predict)
                 : sub == s_simulate ? static_cast<Command*>(&simulate)
                 : sub == s_sweep    ? static_cast<Command*>(&sweeper)
                                     : static_cast<Command*>(&check);

  auto fail = [&](const std::string& msg, int code) {
    err << "error: " << msg << '\n';
    try {
      write_outputs(o, cmd->name(), cmd->header(), msg);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
    }
    return code;
  };

  if (o.system.empty() == o.config.empty()) {
    return fail("exactly one of --system or --config is required", 2);
  }
  try {
    const Outcome res = cmd->execute(o, out);
    write_outputs(o, cmd->name(), res.csv.empty() ? cmd->header() : res.csv, std::nullopt);
    return 0;
  } catch (const UsageError& e) {
    return fail(e.what(), 2);
  } catch (const PreconditionError& e) {
    return fail(e.what(), 2);
  } catch (const ConfigError& e) {
    return fail(e.what(), 2);
  } catch (const std::exception& e) {
    return fail(e.what(), 1);
  }
}

}  // namespace entryexit::cli
