#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nvmem/curve.hpp"
#include "nvmem/fitting.hpp"

namespace nvmem {

// RFC-4180 table: CRLF line ends, fields quoted only when needed.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or nullopt.
  std::optional<size_t> column(const std::string& name) const;
};

std::string to_csv(const CsvTable& t);
CsvTable parse_csv(const std::string& text);

// Columns N, coherence, std_err, digest, seed.
CsvTable curve_table(const CoherenceCurve& curve);

// Reads (x, y[, sigma]) columns; by default the first three.
std::vector<DataPoint> table_data(const CsvTable& t, const std::string& x = {},
                                  const std::string& y = {}, const std::string& sigma = {});

nlohmann::json to_json(const FitResult& f);

// Writes the file, creating parent directories.
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace nvmem
