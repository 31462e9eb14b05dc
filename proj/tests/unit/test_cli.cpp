#include "cli.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace svmrk;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("svmrk_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

const std::vector<std::string> kSmall{"-s", "input.resolution=100", "-s", "input.output_resolution=50"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("config resolution: defaults, file merge, overrides, unknown keys") {
  const cli::json d = cli::default_config();
  CHECK(d["svm"]["gamma"] == 16.0);
  CHECK(d["svm"]["C"] == 500.0);
  const fs::path file = scratch("cfg.json");
  std::ofstream(file) << R"({"svm": {"C": 50}, "output": "x"})";
  cli::json c = cli::resolve_config(file, {"rk.support=2.5", "method=rkpm"});
  CHECK(c["svm"]["C"] == 50);
  CHECK(c["svm"]["gamma"] == 16.0);
  CHECK(c["rk"]["support"] == 2.5);
  CHECK(c["method"] == "rkpm");
  CHECK_THROWS_AS(cli::resolve_config(std::nullopt, {"rk.suport=2"}), Error);
  std::ofstream(file) << R"({"svm": {"gama": 1}})";
  CHECK_THROWS_AS(cli::resolve_config(file, {}), Error);
  CHECK_THROWS_AS(cli::resolve_config(scratch("nope.json"), {}), Error);
  fs::remove(file);
  CHECK_THROWS_AS(cli::solve_options(cli::resolve_config(std::nullopt, {"integration.scheme=\"quad\""})), Error);
}

TEST_CASE("boundary conditions from the config") {
  cli::json c = cli::default_config();
  c["bvp"]["neumann"] = cli::json::parse(R"([{"sides": ["left"], "traction": [1.0, 0.0]}])");
  const BvpSpec b = cli::bvp(c, Domain{});
  REQUIRE(b.dirichlet.size() == 2);
  CHECK(b.dirichlet[1].value(Vec2::Zero()).isApprox(Vec2(-0.01, -0.01)));
  CHECK(b.neumann.at(0).traction(Vec2::Zero()).isApprox(Vec2(1.0, 0.0)));
  c["bvp"]["neumann"][0]["sides"] = cli::json::parse(R"(["top"])");
  CHECK_THROWS_AS(cli::bvp(c, Domain{}), Error);
}

TEST_CASE("segment writes model, scores and the resolved config deterministically") {
  const fs::path a = scratch("seg_a"), b = scratch("seg_b");
  REQUIRE(run(with({"segment", "-o", a.string()}, kSmall)).code == 0);
  REQUIRE(run(with({"segment", "-o", b.string()}, kSmall)).code == 0);
  CHECK(fs::exists(a / "model.svm"));
  CHECK(first_line(a / "scores.csv") == "i,j,x,y,score");
  CHECK(slurp(a / "scores.csv") == slurp(b / "scores.csv"));
  const cli::json echo = cli::json::parse(slurp(a / "config.json"));
  CHECK(echo["input"]["output_resolution"] == 50);
  CHECK(echo.contains("interface"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("discretize and solve reuse a model and write their outputs") {
  const fs::path seg = scratch("ds_seg"), dis = scratch("ds_dis"), sol = scratch("ds_sol");
  REQUIRE(run(with({"segment", "-o", seg.string()}, kSmall)).code == 0);
  const std::string model = (seg / "model.svm").string();
  const Result r = run(with({"discretize", "-o", dis.string(), "-m", model}, kSmall));
  REQUIRE(r.code == 0);
  CHECK(first_line(dis / "nodes.csv") == "x,y,role,score,support,nx,ny");
  CHECK(first_line(dis / "cells.vtk") == "# vtk DataFile Version 3.0");
  CHECK(r.out.find("interface MSE") != std::string::npos);
  const Result s = run(with({"solve", "-o", sol.string(), "-m", model, "-s", "materials.inclusion.eigenstrain=0.001"}, kSmall));
  REQUIRE(s.code == 0);
  CHECK(first_line(sol / "fields.csv") == "x,y,tag,ux,uy,exx,eyy,gxy,sxx,syy,sxy");
  CHECK(fs::exists(sol / "fields.vtk"));
  CHECK(fs::exists(sol / "solve.log"));
  for (const auto& p : {seg, dis, sol}) fs::remove_all(p);
}

TEST_CASE("error paths exit nonzero with a diagnostic") {
  const fs::path missing = fs::temp_directory_path() / "svmrk_cli_missing.pgm";
  Result r = run({"segment", "-o", scratch("err").string(), "-s", "input.source=file", "-s", "input.path=" + missing.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find(missing.string()) != std::string::npos);
  r = run({"discretize", "-m", "/nonexistent/model.svm", "-o", scratch("err").string(), "-s", "input.resolution=40",
           "-s", "input.output_resolution=40"});
  CHECK(r.code != 0);
  CHECK(r.err.find("/nonexistent/model.svm") != std::string::npos);
  CHECK(run({"validate", "rod-case9", "-o", scratch("err").string()}).code != 0);
  CHECK(run({"frobnicate"}).code != 0);
  fs::remove_all(scratch("err"));
}

TEST_CASE("validate and convergence") {
  const fs::path v = scratch("val"), c = scratch("conv");
  const Result r = run({"validate", "rod-case1", "-o", v.string()});
  CHECK(r.code == 0);
  CHECK(first_line(v / "checks.csv") == "check,value,lower,upper,pass");
  const Result s = run({"convergence", "rod-case2", "--method", "rkpm", "-o", c.string()});
  CHECK(s.code == 0);
  CHECK(first_line(c / "study.csv") == "problem,method,integration,kernel,level,nodes,dof,h,norm,error,rate,rate_ci95");
  fs::remove_all(v);
  fs::remove_all(c);
}
