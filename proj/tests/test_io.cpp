#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "asub/estimator.hpp"
#include "asub/io.hpp"
#include "support/problems.hpp"

using namespace asub;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("field-json round trip") {
  TempDir tmp("asub_io_field");
  auto s = FunctionSpace::trapezoid(5, 4, 0.25, 0.5, {1.0, -2.0});
  const Field f = Field::sample(s, [](double x, double y) { return std::exp(x) * std::cos(3 * y) / 7.0; });
  io::write_field_json(tmp.path / "f.json", f);
  const Field g = io::read_field_json(tmp.path / "f.json");
  CHECK(g.space()->same_as(*s));
  CHECK(g.values() == f.values());

  const auto j = io::read_json(tmp.path / "f.json");
  CHECK(j["nx"] == 5);
  CHECK(j["origin"][1] == -2.0);
  CHECK(j["values"].size() == 20);
}

TEST_CASE("field-json rejects malformed input") {
  io::json j = io::field_to_json(Field(FunctionSpace::unit_square(3, 3)));
  j["values"].erase(0);
  CHECK_THROWS_AS(io::field_from_json(j), FormatError);

  io::json k = io::field_to_json(Field(FunctionSpace::unit_square(3, 3)));
  k.erase("hx");
  CHECK_THROWS_AS(io::field_from_json(k), FormatError);

  io::json l = io::field_to_json(Field(FunctionSpace::unit_square(3, 3)));
  l["values"][2] = "x";
  CHECK_THROWS_AS(io::field_from_json(l), FormatError);

  const io::json ok = io::field_to_json(Field(FunctionSpace::unit_square(3, 3)));
  CHECK_THROWS_AS(io::field_from_json(ok, FunctionSpace::unit_square(5, 5)), FormatError);
  CHECK_THROWS_AS(io::read_json("/nonexistent/asub.json"), FormatError);
}

TEST_CASE("asm-json and samples sidecar round trip") {
  TempDir tmp("asub_io_est");
  const testing::QuadraticProblem p(17);
  const auto est = eigendecompose(collect_gradients(*p.f, p.measure, 40, 6));
  io::write_estimate_json(tmp.path / "e.json", est, 6, io::json{{"functional", "quadratic"}});
  const auto back = io::read_estimate_json(tmp.path / "e.json");
  CHECK(back.B == 40);
  CHECK(back.seed == 6);
  CHECK(back.rank_tol == est.rank_tol());
  CHECK(back.eigenvalues == Eigen::VectorXd(est.eigenvalues()));
  CHECK(back.spectrum == est.spectrum());
  CHECK(back.eigenfunctions.basis() == est.eigenfunctions().basis());
  CHECK(back.metadata["functional"] == "quadratic");

  io::write_samples_json(tmp.path / "s.json", est.samples());
  const auto s = io::read_samples_json(tmp.path / "s.json");
  CHECK(s.gradients == est.samples().gradients);
  CHECK(s.inputs == est.samples().inputs);
  CHECK(s.values == est.samples().values);

  // Writing twice yields identical bytes.
  io::write_estimate_json(tmp.path / "e2.json", est, 6, io::json{{"functional", "quadratic"}});
  CHECK(slurp(tmp.path / "e.json") == slurp(tmp.path / "e2.json"));
}

TEST_CASE("csv writer") {
  TempDir tmp("asub_io_csv");
  {
    io::CsvWriter csv(tmp.path / "a.csv", {"index", "eigenvalue"});
    csv.cell(1).cell(0.1).end_row();
    csv.cell(2).cell(1e-300).end_row();
  }
  CHECK(slurp(tmp.path / "a.csv") == "index,eigenvalue\n1,0.1\n2,1e-300\n");
  CHECK(io::format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(io::format_number(0.1 + 0.2)) == 0.1 + 0.2);
}
