#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entryexit/odeint.hpp"
#include "entryexit/system.hpp"

namespace entryexit {

std::string_view library_version() noexcept;

struct SweepRow {
  double x0 = 0.0;
  std::optional<double> x1_predicted;
  std::string exit_case;  // trans / invar / classical, empty when prediction failed
  std::optional<double> x1_simulated;
  std::optional<double> abs_error;
  std::string error;  // per-row diagnostics
};

struct SweepMetadata {
  std::string system;
  double eps = 0.0;
  double cylinder_radius = 0.0;
  double rtol = 0.0;
  double atol = 0.0;
  double z10 = 0.0;
  double z20 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by x0
  SweepMetadata meta;

  double max_abs_error() const;
  void write_csv(std::ostream& out) const;
};

/// n points strictly inside (lo, hi), uniformly spaced.
std::vector<double> open_grid(double lo, double hi, int n);

/// Prediction versus simulation for every entry point. A missing
/// cylinder_radius means |init_fast|, so each initial point is itself the
/// cylinder entry. Rows run concurrently; output order is by x0.
SweepResult sweep(const FastSlowSystem& sys, std::vector<double> x0_grid, double eps, std::array<double, 2> init_fast,
                  std::optional<double> cylinder_radius = std::nullopt, const IntegratorOptions& opts = {});

struct EpsFamilyRow {
  double eps = 0.0;
  std::optional<double> x1_simulated;
  std::string error;
};

std::vector<EpsFamilyRow> eps_family(const FastSlowSystem& sys, double x0, std::array<double, 2> init_fast,
                                     const std::vector<double>& eps_list, double cylinder_radius = 0.1,
                                     const IntegratorOptions& opts = {});

void write_eps_family_csv(std::ostream& out, const std::vector<EpsFamilyRow>& rows);

enum class FigureId { fig7, fig8, fig9 };
FigureId figure_from_name(std::string_view name);
std::string_view to_string(FigureId f) noexcept;

struct FigureOptions {
  int grid_points = 36;                                     // fig7, fig9
  std::vector<double> eps_list = {0.05, 0.02, 0.01, 0.005};  // fig8
};

/// Canned configurations of the three comparison figures. Writes the CSV at
/// out_path and a JSON sidecar at out_path + ".meta.json".
void reproduce_figure(FigureId fig, const std::filesystem::path& out_path, const FigureOptions& options = {});

/// Formats with 17 significant digits ("." decimal separator).
std::string format_real(double v);

/// Writes `body` to a temporary sibling and renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, const std::string& body);

}  // namespace entryexit
