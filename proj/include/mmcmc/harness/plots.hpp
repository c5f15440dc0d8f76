#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mmcmc/harness/benchmark.hpp"

namespace mmcmc::harness {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axis {
  std::string label;
  bool log = false;
};

/// Static SVG line chart with markers. Series that are empty (or have no
/// positive values on a log axis) are left out and named in `warnings`.
std::string line_plot_svg(const std::string& title, const std::vector<Series>& series, const Axis& x,
                          const Axis& y, std::vector<std::string>* warnings = nullptr);

/// Overlaid normalized histograms on common bins.
std::string histogram_svg(const std::string& title, const std::string& x_label,
                          const std::vector<std::pair<std::string, std::vector<double>>>& groups, int bins,
                          std::vector<std::string>* warnings = nullptr);

struct PlotOutput {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// rmse_vs_dimension.svg (log x) and elapsed_time.svg (log-log), replicate
/// means per sampler and dimension.
PlotOutput emit_plots(const std::vector<BenchmarkRecord>& records, const std::filesystem::path& dir);

/// Plots whatever the directory holds: results.csv as above and
/// xi_samples.csv as xi_histogram.svg. Throws if neither exists.
PlotOutput plot_directory(const std::filesystem::path& dir);

}  // namespace mmcmc::harness
