#pragma once

// File formats:
//   field-json  {"nx","ny","hx","hy","origin":[x0,y0],"values":[...]}
//   asm-json    {"space":{field-json header},"eigenvalues","eigenfunctions","B","seed","rank_tol",...}
//   samples     sidecar {"space","seed","values","inputs","gradients"}
// Readers rebuild the space with trapezoid weights and reject length mismatches.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asub/active_subspace.hpp"
#include "asub/hilbert.hpp"

namespace asub::io {

using json = nlohmann::json;

json space_header(const FunctionSpace& space);
SpacePtr<double> space_from_header(const json& j);

json field_to_json(const Field& f);
Field field_from_json(const json& j);
/// Reads a field; when `space` is given the file must describe the same grid.
Field field_from_json(const json& j, const SpacePtr<double>& space);

void write_field_json(const std::filesystem::path& path, const Field& f);
Field read_field_json(const std::filesystem::path& path);

/// What an asm-json file carries.
struct StoredEstimate {
  SpacePtr<double> space;
  Eigen::VectorXd eigenvalues;  // retained
  Eigen::VectorXd spectrum;     // full Gram spectrum, when present
  Subspace eigenfunctions;
  Index B = 0;
  std::uint64_t seed = 0;
  double rank_tol = 0;
  json metadata;
};

json estimate_to_json(const SubspaceEstimate& est, std::uint64_t seed, const json& metadata = json::object());
StoredEstimate estimate_from_json(const json& j);
void write_estimate_json(const std::filesystem::path& path, const SubspaceEstimate& est, std::uint64_t seed,
                         const json& metadata = json::object());
StoredEstimate read_estimate_json(const std::filesystem::path& path);

void write_samples_json(const std::filesystem::path& path, const GradientSampleSet& samples);
GradientSampleSet read_samples_json(const std::filesystem::path& path);

json read_json(const std::filesystem::path& path);
/// Writes compact JSON followed by a newline.
void write_json(const std::filesystem::path& path, const json& j);

/// Minimal CSV writer with round-trip number formatting.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& cell(double v);
  CsvWriter& cell(long v);
  CsvWriter& cell(int v) { return cell(static_cast<long>(v)); }
  CsvWriter& cell(const std::string& v);
  void end_row();
  void close();
  ~CsvWriter();

 private:
  std::filesystem::path path_;
  std::string buffer_;
  bool row_started_ = false;
};

/// Shortest representation that round-trips a double.
std::string format_number(double v);

}  // namespace asub::io
