#include "asub/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace asub::io {

namespace fs = std::filesystem;

namespace {

template <typename T>
T get_required(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad value for key '") + key + "': " + e.what());
  }
}

Eigen::VectorXd to_vector(const json& arr, const char* what) {
  if (!arr.is_array()) throw FormatError(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw FormatError(std::string(what) + " must contain numbers only");
    v[static_cast<Index>(i)] = arr[i].get<double>();
  }
  return v;
}

json to_array(const auto& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump() << '\n';
}

json space_header(const FunctionSpace& space) {
  return json{{"nx", space.nx()},
              {"ny", space.ny()},
              {"hx", space.hx()},
              {"hy", space.hy()},
              {"origin", {space.origin()[0], space.origin()[1]}}};
}

SpacePtr<double> space_from_header(const json& j) {
  const auto nx = get_required<Index>(j, "nx");
  const auto ny = get_required<Index>(j, "ny");
  const auto hx = get_required<double>(j, "hx");
  const auto hy = get_required<double>(j, "hy");
  const auto origin = get_required<std::vector<double>>(j, "origin");
  if (origin.size() != 2) throw FormatError("origin must have two entries");
  try {
    return FunctionSpace::trapezoid(nx, ny, hx, hy, {origin[0], origin[1]});
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid grid: ") + e.what());
  }
}

json field_to_json(const Field& f) {
  json j = space_header(*f.space());
  j["values"] = to_array(f.values());
  return j;
}

Field field_from_json(const json& j) {
  auto space = space_from_header(j);
  const Eigen::VectorXd v = to_vector(get_required<json>(j, "values"), "values");
  if (v.size() != space->size())
    throw FormatError("values has " + std::to_string(v.size()) + " entries, expected nx*ny = " +
                      std::to_string(space->size()));
  return Field(space, v);
}

Field field_from_json(const json& j, const SpacePtr<double>& space) {
  Field f = field_from_json(j);
  if (!f.space()->same_as(*space)) throw FormatError("field grid does not match the configured grid");
  return Field(space, f.values());
}

void write_field_json(const fs::path& path, const Field& f) { write_json(path, field_to_json(f)); }

Field read_field_json(const fs::path& path) { return field_from_json(read_json(path)); }

json estimate_to_json(const SubspaceEstimate& est, std::uint64_t seed, const json& metadata) {
  json j;
  j["space"] = space_header(*est.space());
  j["B"] = est.samples().size();
  j["seed"] = seed;
  j["rank_tol"] = est.rank_tol();
  j["eigenvalues"] = to_array(Eigen::VectorXd(est.eigenvalues()));
  j["spectrum"] = to_array(est.spectrum());
  json funcs = json::array();
  for (Index i = 0; i < est.rank(); ++i) funcs.push_back(to_array(est.eigenfunctions().basis().col(i)));
  j["eigenfunctions"] = std::move(funcs);
  if (!metadata.empty()) j["metadata"] = metadata;
  return j;
}

StoredEstimate estimate_from_json(const json& j) {
  auto space = space_from_header(get_required<json>(j, "space"));
  const Eigen::VectorXd values = to_vector(get_required<json>(j, "eigenvalues"), "eigenvalues");
  const json funcs = get_required<json>(j, "eigenfunctions");
  if (!funcs.is_array() || static_cast<Index>(funcs.size()) != values.size())
    throw FormatError("eigenfunctions must be an array with one entry per eigenvalue");
  Eigen::MatrixXd basis(space->size(), values.size());
  for (Index i = 0; i < values.size(); ++i) {
    const Eigen::VectorXd col = to_vector(funcs[static_cast<std::size_t>(i)], "eigenfunction");
    if (col.size() != space->size()) throw FormatError("eigenfunction length does not match the grid");
    basis.col(i) = col;
  }
  StoredEstimate out{space, values, Eigen::VectorXd(), Subspace(space, basis, true), 0, 0, 0, json()};
  if (j.contains("spectrum")) out.spectrum = to_vector(j["spectrum"], "spectrum");
  out.B = get_required<Index>(j, "B");
  out.seed = get_required<std::uint64_t>(j, "seed");
  out.rank_tol = get_required<double>(j, "rank_tol");
  if (j.contains("metadata")) out.metadata = j["metadata"];
  return out;
}

void write_estimate_json(const fs::path& path, const SubspaceEstimate& est, std::uint64_t seed, const json& metadata) {
  write_json(path, estimate_to_json(est, seed, metadata));
}

StoredEstimate read_estimate_json(const fs::path& path) { return estimate_from_json(read_json(path)); }

void write_samples_json(const fs::path& path, const GradientSampleSet& samples) {
  json j;
  j["space"] = space_header(*samples.space);
  j["seed"] = samples.seed;
  j["values"] = to_array(samples.values);
  json inputs = json::array(), grads = json::array();
  for (Index b = 0; b < samples.size(); ++b) {
    inputs.push_back(to_array(samples.inputs.col(b)));
    grads.push_back(to_array(samples.gradients.col(b)));
  }
  j["inputs"] = std::move(inputs);
  j["gradients"] = std::move(grads);
  write_json(path, j);
}

GradientSampleSet read_samples_json(const fs::path& path) {
  const json j = read_json(path);
  GradientSampleSet s;
  s.space = space_from_header(get_required<json>(j, "space"));
  s.seed = get_required<std::uint64_t>(j, "seed");
  s.values = to_vector(get_required<json>(j, "values"), "values");
  const json inputs = get_required<json>(j, "inputs");
  const json grads = get_required<json>(j, "gradients");
  const Index b = s.values.size();
  if (static_cast<Index>(inputs.size()) != b || static_cast<Index>(grads.size()) != b)
    throw FormatError("samples file has inconsistent lengths");
  s.inputs.resize(s.space->size(), b);
  s.gradients.resize(s.space->size(), b);
  for (Index k = 0; k < b; ++k) {
    const Eigen::VectorXd u = to_vector(inputs[std::size_t(k)], "inputs");
    const Eigen::VectorXd g = to_vector(grads[std::size_t(k)], "gradients");
    if (u.size() != s.space->size() || g.size() != s.space->size())
      throw FormatError("sample length does not match the grid");
    s.inputs.col(k) = u;
    s.gradients.col(k) = g;
  }
  return s;
}

// ---------------------------------------------------------------------------

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += header[i];
  }
  buffer_ += '\n';
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }

CsvWriter& CsvWriter::cell(long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (row_started_) buffer_ += ',';
  buffer_ += v;
  row_started_ = true;
  return *this;
}

void CsvWriter::end_row() {
  buffer_ += '\n';
  row_started_ = false;
}

void CsvWriter::close() {
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path_.string());
  out << buffer_;
  path_.clear();
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

}  // namespace asub::io
