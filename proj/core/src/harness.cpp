#include "entryexit/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "entryexit/entry_exit.hpp"
#include "entryexit/errors.hpp"

#ifndef ENTRYEXIT_VERSION
#define ENTRYEXIT_VERSION "0.0.0"
#endif

namespace entryexit {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::string_view library_version() noexcept { return ENTRYEXIT_VERSION; }

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

void write_file_atomically(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << body;
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

double SweepResult::max_abs_error() const {
  double m = 0.0;
  for (const auto& r : rows) {
    if (r.abs_error) m = std::max(m, *r.abs_error);
  }
  return m;
}

void SweepResult::write_csv(std::ostream& out) const {
  out << "x0,case,x1_pred,x1_sim,abs_err,error\n";
  for (const auto& r : rows) {
    out << format_real(r.x0) << ',' << r.exit_case << ',' << opt_real(r.x1_predicted) << ','
        << opt_real(r.x1_simulated) << ',' << opt_real(r.abs_error) << ',' << csv_field(r.error) << '\n';
  }
}

std::vector<double> open_grid(double lo, double hi, int n) {
  if (n < 1 || !(lo < hi)) throw PreconditionError("grid needs lo < hi and at least one point");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[k] = lo + (k + 1) * (hi - lo) / (n + 1);
  return g;
}

SweepResult sweep(const FastSlowSystem& sys, std::vector<double> x0_grid, double eps, std::array<double, 2> init_fast,
                  std::optional<double> cylinder_radius, const IntegratorOptions& opts) {
  std::sort(x0_grid.begin(), x0_grid.end());
  const double radius = cylinder_radius.value_or(std::hypot(init_fast[0], init_fast[1]));
  SweepResult res;
  res.meta = {sys.name, eps, radius, opts.rtol, opts.atol, init_fast[0], init_fast[1]};
  res.rows.resize(x0_grid.size());

  std::optional<SpectralProfile> profile;
  std::optional<PolarAnalysis> polar;
  std::string setup_error;
  try {
    profile = spectral_profile(sys);
    polar = analyze_polar(sys, *profile);
    profile->theta_star = polar->theta_star;
  } catch (const Error& e) {
    setup_error = e.what();
  }

  parallel_for(x0_grid.size(), [&](std::size_t i) {
    SweepRow& row = res.rows[i];
    row.x0 = x0_grid[i];
    std::vector<std::string> errs;
    if (profile) {
      try {
        const ExitPrediction p = predict_exit(sys, *profile, *polar, row.x0);
        row.x1_predicted = p.x1;
        row.exit_case = std::string(to_string(p.exit_case));
      } catch (const Error& e) {
        errs.push_back(std::string("prediction: ") + e.what());
      }
    } else {
      errs.push_back("prediction: " + setup_error);
    }
    try {
      const ExitDetection d = detect_exit(sys, {row.x0, init_fast[0], init_fast[1]}, eps, radius, opts);
      row.x1_simulated = d.exit.x_event;
    } catch (const Error& e) {
      errs.push_back(std::string("simulation: ") + e.what());
    }
    if (row.x1_predicted && row.x1_simulated) row.abs_error = std::abs(*row.x1_simulated - *row.x1_predicted);
    for (std::size_t k = 0; k < errs.size(); ++k) row.error += (k ? "; " : "") + errs[k];
  });
  return res;
}

std::vector<EpsFamilyRow> eps_family(const FastSlowSystem& sys, double x0, std::array<double, 2> init_fast,
                                     const std::vector<double>& eps_list, double cylinder_radius,
                                     const IntegratorOptions& opts) {
  for (double e : eps_list) {
    if (!(e > 0.0)) throw PreconditionError("eps values must be positive");
  }
  std::vector<EpsFamilyRow> rows(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t i) {
    rows[i].eps = eps_list[i];
    try {
      rows[i].x1_simulated = detect_exit(sys, {x0, init_fast[0], init_fast[1]}, eps_list[i], cylinder_radius, opts)
                                 .exit.x_event;
    } catch (const Error& e) {
      rows[i].error = e.what();
    }
  });
  return rows;
}

void write_eps_family_csv(std::ostream& out, const std::vector<EpsFamilyRow>& rows) {
  out << "eps,x1_sim,error\n";
  for (const auto& r : rows) {
    out << format_real(r.eps) << ',' << opt_real(r.x1_simulated) << ',' << csv_field(r.error) << '\n';
  }
}

FigureId figure_from_name(std::string_view name) {
  if (name == "fig7") return FigureId::fig7;
  if (name == "fig8") return FigureId::fig8;
  if (name == "fig9") return FigureId::fig9;
  throw PreconditionError("unknown figure '" + std::string(name) + "' (expected fig7, fig8 or fig9)");
}

std::string_view to_string(FigureId f) noexcept {
  switch (f) {
    case FigureId::fig7:
      return "fig7";
    case FigureId::fig8:
      return "fig8";
    case FigureId::fig9:
      return "fig9";
  }
  return "fig7";
}

void reproduce_figure(FigureId fig, const std::filesystem::path& out_path, const FigureOptions& options) {
  const int grid_points = options.grid_points;
  nlohmann::json meta;
  meta["figure"] = std::string(to_string(fig));
  meta["library_version"] = std::string(library_version());
  const IntegratorOptions opts;
  meta["rtol"] = opts.rtol;
  meta["atol"] = opts.atol;
  std::ostringstream body;
  if (fig == FigureId::fig8) {
    const FastSlowSystem sys = make_builtin(Builtin::eps_coupled);
    const std::vector<double>& eps_list = options.eps_list;
    const double radius = 0.1;
    const auto rows = eps_family(sys, -2.0, {1.0, 1.0}, eps_list, radius, opts);
    write_eps_family_csv(body, rows);
    meta["system"] = sys.name;
    meta["x0"] = -2.0;
    meta["init"] = {1.0, 1.0};
    meta["eps_list"] = eps_list;
    meta["cylinder_radius"] = radius;
  } else {
    const bool f7 = fig == FigureId::fig7;
    const FastSlowSystem sys = f7 ? make_builtin(Builtin::eps_coupled) : make_builtin(Builtin::nonlinear, {{"a", 4.0}});
    const std::array<double, 2> init = f7 ? std::array<double, 2>{1.0, 1.0} : std::array<double, 2>{0.5, 0.5};
    const SweepResult res = sweep(sys, open_grid(-2.0, -0.25, grid_points), 0.01, init, std::nullopt, opts);
    res.write_csv(body);
    meta["system"] = sys.name;
    if (!f7) meta["params"] = {{"a", 4.0}};
    meta["eps"] = res.meta.eps;
    meta["init"] = {init[0], init[1]};
    meta["grid"] = {{"lo", -2.0}, {"hi", -0.25}, {"n", grid_points}, {"endpoints", "excluded"}};
    meta["cylinder_radius"] = res.meta.cylinder_radius;
    meta["max_abs_error"] = res.max_abs_error();
  }
  write_file_atomically(out_path, body.str());
  std::filesystem::path side = out_path;
  side += ".meta.json";
  write_file_atomically(side, meta.dump(2) + "\n");
}

}  // namespace entryexit
