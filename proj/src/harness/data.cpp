#include "mmcmc/harness/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mmcmc/error.hpp"
#include "mmcmc/rng.hpp"

namespace mmcmc::harness {

double BinaryGrid::occupancy() const {
  if (cells.empty()) return 0.0;
  double s = 0.0;
  for (auto c : cells) s += c;
  return s / static_cast<double>(cells.size());
}

BinaryGrid parse_grid(std::string_view text) {
  BinaryGrid g;
  int row = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() && pos >= text.size()) break;
    for (char ch : line) {
      if (ch != '0' && ch != '1')
        throw ParseError("row " + std::to_string(row) + ": unexpected character '" + std::string(1, ch) + "'", row);
      g.cells.push_back(ch == '1' ? 1 : 0);
    }
    if (row == 1) {
      g.width = static_cast<int>(line.size());
      if (g.width == 0) throw ParseError("row 1: empty row", 1);
    } else if (static_cast<int>(line.size()) != g.width) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(g.width) + " columns, got " +
                           std::to_string(line.size()),
                       row);
    }
    g.height = row;
  }
  if (g.height == 0) throw ParseError("empty grid");
  return g;
}

BinaryGrid ingest_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grid file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

std::string format_grid(const BinaryGrid& grid) {
  std::string out;
  for (int i = 0; i < grid.height; ++i) {
    for (int j = 0; j < grid.width; ++j) out += grid.cells[static_cast<std::size_t>(i * grid.width + j)] ? '1' : '0';
    out += '\n';
  }
  return out;
}

BinaryGrid synth_ice(int height, int width, std::uint64_t seed, double smoothing) {
  if (height < 1 || width < 1) throw Error("synth_ice: empty image");
  RngStream rng(seed, 0x1ce);
  const auto n = static_cast<std::size_t>(height * width);
  std::vector<double> field(n), tmp(n, 0.0);
  for (auto& v : field) v = rng.normal();

  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * smoothing)));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k)
    w[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (smoothing * smoothing));

  // separable filter, renormalized at the borders
  auto blur = [&](const std::vector<double>& src, std::vector<double>& dst, bool along_rows) {
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) {
        double s = 0.0, ws = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int ii = along_rows ? i : i + k;
          const int jj = along_rows ? j + k : j;
          if (ii < 0 || ii >= height || jj < 0 || jj >= width) continue;
          const double wk = w[static_cast<std::size_t>(k + radius)];
          s += wk * src[static_cast<std::size_t>(ii * width + jj)];
          ws += wk;
        }
        dst[static_cast<std::size_t>(i * width + j)] = s / ws;
      }
  };
  blur(field, tmp, true);
  blur(tmp, field, false);

  BinaryGrid g{height, width, std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) g.cells[i] = field[i] > 0.0 ? 1 : 0;
  return g;
}

}  // namespace mmcmc::harness
