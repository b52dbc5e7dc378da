#include "bfam/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bfam::io {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {
std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}
}  // namespace

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out = open_out(path, std::ios::out);
  for (size_t i = 0; i < table.header.size(); ++i)
    out << table.header[i] << (i + 1 < table.header.size() ? "," : "");
  out << "\n";
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path, std::ios::out);
  out << text;
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_binary_columns(const std::filesystem::path& path,
                          const std::vector<std::vector<double>>& columns) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  for (const auto& col : columns)
    out.write(reinterpret_cast<const char*>(col.data()),
              static_cast<std::streamsize>(col.size() * sizeof(double)));
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::vector<double>> read_binary_columns(const std::filesystem::path& path,
                                                     std::size_t n_columns,
                                                     std::size_t n_rows) {
  std::ifstream in(path, std::ios::in | std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> cols(n_columns, std::vector<double>(n_rows));
  for (auto& col : cols) {
    in.read(reinterpret_cast<char*>(col.data()),
            static_cast<std::streamsize>(n_rows * sizeof(double)));
    if (!in.good()) throw std::runtime_error("short read: " + path.string());
  }
  return cols;
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::vector<double>& x,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const int w = 800, h = 500, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (const auto& [name, ys] : series)
    for (double v : ys)
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto sy = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb); };

  static const char* colors[] = {"#1f6fb2", "#c44e52", "#55a868", "#8172b2", "#937860"};
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
       "\" height=\"" + std::to_string(h) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
       title + "</text>\n";
  s += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(h - mb) + "\" x2=\"" +
       std::to_string(w - mr) + "\" y2=\"" + std::to_string(h - mb) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt) + "\" x2=\"" +
       std::to_string(ml) + "\" y2=\"" + std::to_string(h - mb) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(h - mb + 30) +
       "\" font-size=\"12\">" + format_double(xmin) + "</text>\n";
  s += "<text x=\"" + std::to_string(w - mr - 60) + "\" y=\"" + std::to_string(h - mb + 30) +
       "\" font-size=\"12\">" + format_double(xmax) + "</text>\n";
  s += "<text x=\"4\" y=\"" + std::to_string(h - mb) + "\" font-size=\"12\">" +
       format_double(ymin) + "</text>\n";
  s += "<text x=\"4\" y=\"" + std::to_string(mt + 10) + "\" font-size=\"12\">" +
       format_double(ymax) + "</text>\n";
  int ci = 0;
  for (const auto& [name, ys] : series) {
    const char* color = colors[ci % 5];
    std::string pts;
    for (size_t i = 0; i < x.size() && i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      pts += format_double(sx(x[i])) + "," + format_double(sy(ys[i])) + " ";
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"" + pts + "\"/>\n";
    s += "<text x=\"" + std::to_string(w - mr - 150) + "\" y=\"" +
         std::to_string(mt + 16 * (ci + 1)) + "\" font-size=\"12\" fill=\"" + color + "\">" +
         name + "</text>\n";
    ++ci;
  }
  s += "</svg>\n";
  write_text(path, s);
}

}  // namespace bfam::io
