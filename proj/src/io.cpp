#include "nvmem/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvmem/error.hpp"
#include "nvmem/units.hpp"

namespace nvmem {

std::optional<size_t> CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

void put_field(std::string& out, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out += f;
    return;
  }
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

void put_row(std::string& out, const std::vector<std::string>& row) {
  for (size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    put_field(out, row[i]);
  }
  out += "\r\n";
}

double to_number(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::schema_violation, where + ": expected a number, got '" + s + "'");
  }
}

}  // namespace

std::string to_csv(const CsvTable& t) {
  std::string out;
  put_row(out, t.header);
  for (const auto& r : t.rows) put_row(out, r);
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) fail(ErrorCode::schema_violation, "csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  CsvTable t;
  if (rows.empty()) fail(ErrorCode::schema_violation, "csv: no header row");
  t.header = std::move(rows.front());
  t.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != t.header.size()) {
      fail(ErrorCode::schema_violation, "csv: row " + std::to_string(i + 1) + " has " +
                                            std::to_string(t.rows[i].size()) + " fields, header has " +
                                            std::to_string(t.header.size()));
    }
  }
  return t;
}

CsvTable curve_table(const CoherenceCurve& curve) {
  CsvTable t;
  t.header = {"N", "coherence", "std_err", "digest", "seed"};
  const std::string seed = std::to_string(curve.seed);
  for (const auto& p : curve.points) {
    t.rows.push_back({std::to_string(p.n), format_double(p.coherence), format_double(p.std_err),
                      curve.digest, seed});
  }
  return t;
}

std::vector<DataPoint> table_data(const CsvTable& t, const std::string& x, const std::string& y,
                                  const std::string& sigma) {
  auto pick = [&](const std::string& name, size_t fallback) -> std::optional<size_t> {
    if (!name.empty()) {
      auto c = t.column(name);
      if (!c) fail(ErrorCode::schema_violation, "csv: no column '" + name + "'");
      return c;
    }
    if (fallback < t.header.size()) return fallback;
    return std::nullopt;
  };
  const auto cx = pick(x, 0), cy = pick(y, 1), cs = pick(sigma, 2);
  if (!cx || !cy) fail(ErrorCode::schema_violation, "csv: need at least two columns");
  std::vector<DataPoint> out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const std::string where = "csv row " + std::to_string(i + 1);
    DataPoint p;
    p.x = to_number(r[*cx], where + " column " + t.header[*cx]);
    p.y = to_number(r[*cy], where + " column " + t.header[*cy]);
    p.sigma = cs ? to_number(r[*cs], where + " column " + t.header[*cs]) : 0.0;
    out.push_back(p);
  }
  return out;
}

nlohmann::json to_json(const FitResult& f) {
  nlohmann::json j;
  j["model"] = f.model;
  for (const auto& p : f.params) {
    j["params"][p.name] = {{"value", p.value}, {"error", p.error}};
  }
  j["chi2"] = f.chi2;
  j["dof"] = f.dof;
  j["residual_norm"] = f.residual_norm;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["unbounded"] = f.unbounded;
  j["identifiable"] = f.identifiable;
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) fail(ErrorCode::io, "cannot create " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  out << content;
  if (!out) fail(ErrorCode::io, "write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nvmem
