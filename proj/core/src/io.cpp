#include "ikeda/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ikeda::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::optional<double> optional_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return parse_double(cell);
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view text) {
  const std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

KeyValues parse_config(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    }
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_config(in);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("CSV has no column '" + name + "'");
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& c : table.comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, table);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && !line.empty() && line[0] == '#') {
      std::string c = line.substr(1);
      if (!c.empty() && c[0] == ' ') c.erase(0, 1);
      t.comments.push_back(std::move(c));
      continue;
    }
    if (line.empty()) continue;
    if (!have_header) {
      t.columns = split(line, ',');
      have_header = true;
      continue;
    }
    auto row = split(line, ',');
    if (row.size() != t.columns.size()) {
      throw std::invalid_argument("CSV row width " + std::to_string(row.size()) +
                                  " does not match header width " +
                                  std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw std::invalid_argument("CSV has no header line");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_csv(in);
}

CsvTable trajectory_table(const Trajectory& t, std::vector<std::string> comments) {
  CsvTable table;
  table.comments = std::move(comments);
  table.columns = {"j", "re_a", "im_a", "abs_a"};
  table.rows.reserve(t.points.size());
  for (const auto& p : t.points) {
    table.rows.push_back({std::to_string(p.j), format_double(p.a.real()),
                          format_double(p.a.imag()), format_double(std::abs(p.a))});
  }
  return table;
}

CsvTable trajectory_table(const QuantumTrajectory& t, std::vector<std::string> comments) {
  CsvTable table;
  table.comments = std::move(comments);
  table.columns = {"j",  "re_a",   "im_a",     "abs_a",
                   "success_prob", "branch", "fidelity", "leak"};
  const Complex a0 = t.config.alpha0;
  table.rows.push_back({"0", format_double(a0.real()), format_double(a0.imag()),
                        format_double(std::abs(a0)), "", "", "", ""});
  for (const auto& s : t.steps) {
    const Complex a = s.outcome.alpha_next;
    table.rows.push_back({std::to_string(s.j + 1), format_double(a.real()),
                          format_double(a.imag()), format_double(std::abs(a)),
                          format_double(s.outcome.success_prob),
                          to_string(s.outcome.branch),
                          format_double(s.outcome.fidelity_to_cat),
                          format_double(s.outcome.leak)});
  }
  return table;
}

CsvTable qgrid_table(const QGrid& g, std::vector<std::string> comments) {
  CsvTable table;
  table.comments = std::move(comments);
  table.columns = {"re_beta", "im_beta", "q_value"};
  for (int i = 0; i < g.n_re; ++i) {
    for (int j = 0; j < g.n_im; ++j) {
      const Complex b = g.point(i, j);
      table.rows.push_back({format_double(b.real()), format_double(b.imag()),
                            format_double(g.values(i, j))});
    }
  }
  return table;
}

CsvTable scan_table(ScanParameter p, const std::vector<ScanRow>& rows,
                    std::vector<std::string> comments) {
  CsvTable table;
  table.comments = std::move(comments);
  table.columns = {to_string(p), "lambda_max", "non_finite", "fp_found",
                   "fp_re", "fp_im", "fp_abs", "fp_residual", "fp_stable"};
  for (const auto& r : rows) {
    table.rows.push_back({format_double(r.value), format_double(r.lambda),
                          r.non_finite ? "1" : "0", r.fp_found ? "1" : "0",
                          format_double(r.fp_point.real()),
                          format_double(r.fp_point.imag()),
                          format_double(std::abs(r.fp_point)),
                          format_double(r.fp_residual), r.fp_stable ? "1" : "0"});
  }
  return table;
}

std::vector<TrajectoryRow> load_trajectory(const CsvTable& table) {
  const int cj = table.column("j");
  const int cre = table.column("re_a");
  const int cim = table.column("im_a");
  const int cabs = table.column("abs_a");
  const bool quantum = table.columns.size() > 4;
  std::vector<TrajectoryRow> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    TrajectoryRow r;
    r.j = std::stoll(row[cj]);
    r.a = {parse_double(row[cre]), parse_double(row[cim])};
    r.abs_a = parse_double(row[cabs]);
    if (quantum) {
      r.success_prob = optional_number(row[table.column("success_prob")]);
      const std::string& b = row[table.column("branch")];
      if (!b.empty()) r.branch = parse_branch_kind(b);
      r.fidelity = optional_number(row[table.column("fidelity")]);
      r.leak = optional_number(row[table.column("leak")]);
    }
    out.push_back(r);
  }
  return out;
}

std::vector<QPoint> load_qgrid(const CsvTable& table) {
  const int cre = table.column("re_beta");
  const int cim = table.column("im_beta");
  const int cq = table.column("q_value");
  std::vector<QPoint> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    out.push_back({{parse_double(row[cre]), parse_double(row[cim])}, parse_double(row[cq])});
  }
  return out;
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return "fnv1a64:" + fnv1a64_hex(buf.str());
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# ikeda run manifest\n";
  out << "command = " << m.command << '\n';
  out << "version = " << m.version << '\n';
  if (m.seed) out << "seed = " << *m.seed << '\n';
  out << "duration_s = " << format_double(m.duration_s) << '\n';
  for (const auto& [k, v] : m.params) out << "param." << k << " = " << v << '\n';
  for (const auto& [p, h] : m.outputs) out << "output = " << p << ' ' << h << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  RunManifest m;
  for (const auto& [k, v] : read_config_file(path)) {
    if (k == "command") {
      m.command = v;
    } else if (k == "version") {
      m.version = v;
    } else if (k == "seed") {
      m.seed = std::stoull(v);
    } else if (k == "duration_s") {
      m.duration_s = parse_double(v);
    } else if (k.rfind("param.", 0) == 0) {
      m.params.emplace_back(k.substr(6), v);
    } else if (k == "output") {
      const auto sp = v.rfind(' ');
      if (sp == std::string::npos) throw std::invalid_argument("bad output line: " + v);
      m.outputs.emplace_back(v.substr(0, sp), v.substr(sp + 1));
    } else {
      throw std::invalid_argument("unknown manifest key '" + k + "'");
    }
  }
  if (m.command.empty()) throw std::invalid_argument("manifest has no command");
  return m;
}

}  // namespace ikeda::io
