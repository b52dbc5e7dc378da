#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace bfam::io {

// All floating point output goes through this: 17 significant digits so that
// values round-trip exactly and regression files are byte-stable.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Raw little-endian float64 column dump plus a JSON sidecar describing the
// layout (see README for the schema).
void write_binary_columns(const std::filesystem::path& path,
                          const std::vector<std::vector<double>>& columns);
std::vector<std::vector<double>> read_binary_columns(const std::filesystem::path& path,
                                                     std::size_t n_columns,
                                                     std::size_t n_rows);

// Minimal SVG line plot, one polyline per series.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::vector<double>& x,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series);

}  // namespace bfam::io
