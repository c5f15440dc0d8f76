#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mmcmc::harness {

/// Row-major binary image.
struct BinaryGrid {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;

  int sites() const { return height * width; }
  double occupancy() const;
  bool operator==(const BinaryGrid&) const = default;
};

/// Rows of '0'/'1' characters separated by newlines. Ragged rows and other
/// characters raise ParseError with the row number.
BinaryGrid parse_grid(std::string_view text);
BinaryGrid ingest_grid(const std::string& path);
std::string format_grid(const BinaryGrid& grid);

/// Blob-structured image: white noise smoothed by a Gaussian filter of
/// width `smoothing` pixels and thresholded at zero.
BinaryGrid synth_ice(int height, int width, std::uint64_t seed, double smoothing = 2.5);

}  // namespace mmcmc::harness
