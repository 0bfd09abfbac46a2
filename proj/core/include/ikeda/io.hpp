#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ikeda/classical.hpp"
#include "ikeda/control.hpp"
#include "ikeda/fock.hpp"

namespace ikeda::io {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// 17 significant digits: exact binary64 round trip.
std::string format_double(double x);
double parse_double(std::string_view text);

// Flat "key = value" lines, '#' starts a comment. Order is preserved.
KeyValues parse_config(std::istream& in);
KeyValues read_config_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> comments;  // header block without the leading '#'
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // throws if absent
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

CsvTable trajectory_table(const Trajectory& t, std::vector<std::string> comments = {});
// Row 0 is alpha_0; row j carries the diagnostics of the step that produced
// alpha_j.
CsvTable trajectory_table(const QuantumTrajectory& t,
                          std::vector<std::string> comments = {});
CsvTable qgrid_table(const QGrid& g, std::vector<std::string> comments = {});
CsvTable scan_table(ScanParameter p, const std::vector<ScanRow>& rows,
                    std::vector<std::string> comments = {});

struct TrajectoryRow {
  std::int64_t j = 0;
  Complex a;
  double abs_a = 0.0;
  std::optional<double> success_prob;
  std::optional<BranchKind> branch;
  std::optional<double> fidelity;
  std::optional<double> leak;
};

std::vector<TrajectoryRow> load_trajectory(const CsvTable& table);

struct QPoint {
  Complex beta;
  double q = 0.0;
};

std::vector<QPoint> load_qgrid(const CsvTable& table);

std::string fnv1a64_hex(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  KeyValues params;
  std::optional<std::uint64_t> seed;
  std::string version;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, hash
  double duration_s = 0.0;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace ikeda::io
