#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "entryexit/errors.hpp"
#include "entryexit/harness.hpp"

using namespace entryexit;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("entryexit_harness_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string csv(const SweepResult& r) {
  std::ostringstream os;
  r.write_csv(os);
  return os.str();
}

}  // namespace

TEST_CASE("open grid excludes the endpoints", "[harness]") {
  const auto g = open_grid(-2, -0.25, 36);
  REQUIRE(g.size() == 36);
  CHECK(g.front() > -2);
  CHECK(g.back() < -0.25);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK_THAT(g[i] - g[i - 1], WithinAbs(1.75 / 37, 1e-12));
  CHECK(open_grid(0, 1, 1) == std::vector<double>{0.5});
  CHECK_THROWS_AS(open_grid(1, 0, 3), PreconditionError);
  CHECK_THROWS_AS(open_grid(0, 1, 0), PreconditionError);
}

TEST_CASE("real formatting", "[harness]") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(-2) == "-2");
  CHECK(std::stod(format_real(std::sqrt(3.0))) == std::sqrt(3.0));
}

TEST_CASE("atomic file writes", "[harness]") {
  const auto dir = scratch_dir("atomic");
  const auto p = dir / "out.csv";
  write_file_atomically(p, "a,b\n1,2\n");
  CHECK(slurp(p) == "a,b\n1,2\n");
  write_file_atomically(p, "x\n");
  CHECK(slurp(p) == "x\n");
  CHECK_FALSE(fs::exists(dir / "out.csv.tmp"));
  CHECK_THROWS_AS(write_file_atomically(dir / "missing" / "out.csv", "x"), Error);
  fs::remove_all(dir);
}

TEST_CASE("sweep rows", "[harness]") {
  const auto sys = make_builtin("eps_coupled");
  const auto res = sweep(sys, {-0.5, -2.0, -1.5}, 0.01, {1, 1});
  REQUIRE(res.rows.size() == 3);
  CHECK(res.rows[0].x0 == -2.0);
  CHECK(res.rows[2].x0 == -0.5);
  CHECK_THAT(res.meta.cylinder_radius, WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK(res.meta.system == "eps_coupled");
  for (const auto& r : res.rows) {
    INFO("x0=" << r.x0 << " " << r.error);
    REQUIRE(r.x1_predicted);
    REQUIRE(r.x1_simulated);
    REQUIRE(r.abs_error);
    CHECK(*r.abs_error == std::abs(*r.x1_simulated - *r.x1_predicted));
    CHECK(*r.abs_error <= 0.05);
    CHECK(r.error.empty());
  }
  CHECK(res.rows[0].exit_case == "trans");
  CHECK(res.rows[2].exit_case == "classical");
  CHECK(res.max_abs_error() == std::max({*res.rows[0].abs_error, *res.rows[1].abs_error, *res.rows[2].abs_error}));
}

TEST_CASE("sweep keeps rows whose prediction fails", "[harness]") {
  const auto res = sweep(make_builtin("one_way_coupled"), {-2.0, 0.5}, 0.05, {1, 1}, 0.1);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].error.empty());
  CHECK_THAT(*res.rows[0].x1_predicted, WithinAbs(2.0, 1e-9));
  CHECK_FALSE(res.rows[1].x1_predicted);
  CHECK_FALSE(res.rows[1].abs_error);
  CHECK(res.rows[1].error.starts_with("prediction: "));
  const std::string body = csv(res);
  CHECK(body.starts_with("x0,case,x1_pred,x1_sim,abs_err,error\n"));
  CHECK((body.find("\"prediction: ") != std::string::npos || body.find(",prediction: ") != std::string::npos));
}

TEST_CASE("prediction for the invariant case is independent of eps", "[harness]") {
  for (double eps : {0.05, 0.02}) {
    const auto res = sweep(make_builtin("one_way_coupled"), {-2.0}, eps, {1, 1}, 0.1);
    CHECK(*res.rows[0].x1_predicted == Catch::Approx(2.0).margin(1e-10));
  }
}

TEST_CASE("eps family", "[harness]") {
  const auto rows = eps_family(make_builtin("eps_coupled"), -2, {1, 1}, {0.02, 0.01});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].eps == 0.02);
  CHECK(rows[1].eps == 0.01);
  REQUIRE(rows[1].x1_simulated);
  CHECK_THAT(*rows[1].x1_simulated, WithinAbs(1.718, 0.02));
  CHECK(std::abs(*rows[1].x1_simulated - std::sqrt(3.0)) <= std::abs(*rows[0].x1_simulated - std::sqrt(3.0)));
  std::ostringstream os;
  write_eps_family_csv(os, rows);
  CHECK(os.str().starts_with("eps,x1_sim,error\n0.02,"));
  CHECK_THROWS_AS(eps_family(make_builtin("eps_coupled"), -2, {1, 1}, {0.01, -0.01}), PreconditionError);
}

TEST_CASE("figure reproduction", "[harness]") {
  const auto dir = scratch_dir("figures");
  FigureOptions fo;
  fo.grid_points = 4;
  fo.eps_list = {0.02, 0.01};
  reproduce_figure(FigureId::fig8, dir / "fig8.csv", fo);
  const std::string body = slurp(dir / "fig8.csv");
  CHECK(body.starts_with("eps,x1_sim,error\n"));
  const auto meta = nlohmann::json::parse(slurp(dir / "fig8.csv.meta.json"));
  CHECK(meta["figure"] == "fig8");
  CHECK(meta["system"] == "eps_coupled");
  CHECK(meta["library_version"] == std::string(library_version()));

  reproduce_figure(FigureId::fig9, dir / "fig9.csv", fo);
  const auto meta9 = nlohmann::json::parse(slurp(dir / "fig9.csv.meta.json"));
  CHECK(meta9["params"]["a"] == 4.0);
  CHECK(meta9["grid"]["n"] == 4);
  CHECK(slurp(dir / "fig9.csv").starts_with("x0,case,x1_pred,x1_sim,abs_err,error\n"));

  CHECK(figure_from_name("fig7") == FigureId::fig7);
  CHECK_THROWS_AS(figure_from_name("fig10"), PreconditionError);
  fs::remove_all(dir);
}

TEST_CASE("sweeps are deterministic", "[harness][property]") {
  const auto sys = make_builtin("nonlinear");
  const auto grid = open_grid(-2, -0.25, 8);
  const std::string a = csv(sweep(sys, grid, 0.01, {0.5, 0.5}));
  const std::string b = csv(sweep(sys, grid, 0.01, {0.5, 0.5}));
  CHECK(a == b);
  const auto dir = scratch_dir("determinism");
  FigureOptions fo;
  fo.grid_points = 5;
  reproduce_figure(FigureId::fig7, dir / "a.csv", fo);
  reproduce_figure(FigureId::fig7, dir / "b.csv", fo);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  fs::remove_all(dir);
}

TEST_CASE("classical rows predict the mirror point", "[harness][property]") {
  const auto grid = open_grid(-2, -0.25, 36);
  for (const char* name : {"eps_coupled", "nonlinear"}) {
    const auto res = sweep(make_builtin(name), grid, 0.01, {1, 1});
    for (const auto& r : res.rows) {
      if (r.x0 < -1.0) continue;
      INFO(name << " x0=" << r.x0);
      REQUIRE(r.x1_predicted);
      CHECK_THAT(*r.x1_predicted, WithinAbs(-r.x0, 1e-10));
    }
  }
}
