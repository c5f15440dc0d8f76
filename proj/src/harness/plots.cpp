#include "mmcmc/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "mmcmc/error.hpp"

namespace mmcmc::harness {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
const char* const kColours[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

struct Scale {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double pixel_lo = 0.0, pixel_hi = 1.0;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

Scale make_scale(double lo, double hi, bool log, double p0, double p1) {
  if (log) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (hi <= lo) hi = lo * 10.0;
  } else {
    if (hi <= lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log, p0, p1};
}

std::vector<double> ticks(const Scale& s) {
  std::vector<double> t;
  if (s.log) {
    for (double decade = s.lo; decade <= s.hi * 1.0001; decade *= 10.0)
      for (double m : {1.0, 2.0, 5.0})
        if (m * decade >= s.lo * 0.9999 && m * decade <= s.hi * 1.0001) t.push_back(m * decade);
    return t;
  }
  const double raw = (s.hi - s.lo) / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double v = std::ceil(s.lo / step) * step; v <= s.hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

std::string frame(const std::string& title, const Scale& xs, const Scale& ys, const Axis& x, const Axis& y) {
  std::ostringstream os;
  os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
     << R"(" font-family="sans-serif" font-size="12">)" << '\n';
  os << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  os << R"(<text x=")" << (kLeft + (kWidth - kRight)) / 2 << R"(" y="22" text-anchor="middle" font-size="14">)"
     << escape(title) << "</text>\n";
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << R"(<rect x=")" << x0 << R"(" y=")" << y1 << R"(" width=")" << x1 - x0 << R"(" height=")" << y0 - y1
     << R"(" fill="none" stroke="black"/>)" << '\n';
  for (double t : ticks(xs)) {
    const double px = xs.map(t);
    os << R"(<line x1=")" << px << R"(" y1=")" << y0 << R"(" x2=")" << px << R"(" y2=")" << y0 + 5
       << R"(" stroke="black"/><text x=")" << px << R"(" y=")" << y0 + 18 << R"(" text-anchor="middle">)" << num(t)
       << "</text>\n";
  }
  for (double t : ticks(ys)) {
    const double py = ys.map(t);
    os << R"(<line x1=")" << x0 - 5 << R"(" y1=")" << py << R"(" x2=")" << x0 << R"(" y2=")" << py
       << R"(" stroke="black"/><text x=")" << x0 - 8 << R"(" y=")" << py + 4 << R"(" text-anchor="end">)" << num(t)
       << "</text>\n";
  }
  os << R"(<text x=")" << (x0 + x1) / 2 << R"(" y=")" << kHeight - 15 << R"(" text-anchor="middle">)"
     << escape(x.label + (x.log ? " (log scale)" : "")) << "</text>\n";
  os << R"(<text x="18" y=")" << (y0 + y1) / 2 << R"(" text-anchor="middle" transform="rotate(-90 18 )"
     << (y0 + y1) / 2 << ")\">" << escape(y.label + (y.log ? " (log scale)" : "")) << "</text>\n";
  return os.str();
}

std::string legend(const std::vector<std::string>& names) {
  std::ostringstream os;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(i);
    const double x = kWidth - kRight + 15;
    os << R"(<rect x=")" << x << R"(" y=")" << y - 9 << R"(" width="12" height="12" fill=")" << kColours[i % 6]
       << R"("/><text x=")" << x + 18 << R"(" y=")" << y + 1 << R"(">)" << escape(names[i]) << "</text>\n";
  }
  return os.str();
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::vector<Series>& series, const Axis& x,
                          const Axis& y, std::vector<std::string>* warnings) {
  std::vector<Series> kept;
  for (const auto& s : series) {
    Series k{s.name, {}, {}};
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((x.log && s.x[i] <= 0.0) || (y.log && s.y[i] <= 0.0)) continue;
      k.x.push_back(s.x[i]);
      k.y.push_back(s.y[i]);
    }
    if (k.x.empty()) {
      if (warnings) warnings->push_back("series '" + s.name + "' has no plottable points; omitted");
      continue;
    }
    kept.push_back(std::move(k));
  }
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : kept) {
    xlo = std::min(xlo, *std::min_element(s.x.begin(), s.x.end()));
    xhi = std::max(xhi, *std::max_element(s.x.begin(), s.x.end()));
    ylo = std::min(ylo, *std::min_element(s.y.begin(), s.y.end()));
    yhi = std::max(yhi, *std::max_element(s.y.begin(), s.y.end()));
  }
  if (kept.empty()) {
    xlo = ylo = 1.0;
    xhi = yhi = 10.0;
  }
  if (!y.log) ylo = std::min(ylo, 0.0);
  const Scale xs = make_scale(xlo, xhi, x.log, kLeft, kWidth - kRight);
  const Scale ys = make_scale(ylo, yhi, y.log, kHeight - kBottom, kTop);

  std::ostringstream os;
  os << frame(title, xs, ys, x, y);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& s = kept[i];
    std::vector<std::size_t> order(s.x.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    const char* colour = kColours[i % 6];
    os << R"(<polyline fill="none" stroke=")" << colour << R"(" stroke-width="2" points=")";
    for (std::size_t k : order) os << xs.map(s.x[k]) << ',' << ys.map(s.y[k]) << ' ';
    os << "\"/>\n";
    for (std::size_t k : order)
      os << R"(<circle cx=")" << xs.map(s.x[k]) << R"(" cy=")" << ys.map(s.y[k]) << R"(" r="4" fill=")" << colour
         << "\"/>\n";
    names.push_back(s.name);
  }
  os << legend(names) << "</svg>\n";
  return os.str();
}

std::string histogram_svg(const std::string& title, const std::string& x_label,
                          const std::vector<std::pair<std::string, std::vector<double>>>& groups, int bins,
                          std::vector<std::string>* warnings) {
  if (bins < 1) throw Error("histogram_svg: need at least one bin");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<const std::pair<std::string, std::vector<double>>*> kept;
  for (const auto& g : groups) {
    if (g.second.empty()) {
      if (warnings) warnings->push_back("histogram group '" + g.first + "' is empty; omitted");
      continue;
    }
    kept.push_back(&g);
    for (double v : g.second) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (kept.empty()) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi <= lo) hi = lo + 1.0;
  const double width = (hi - lo) / bins;
  std::vector<std::vector<double>> density;
  double top = 0.0;
  for (const auto* g : kept) {
    std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
    for (double v : g->second) h[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((v - lo) / width)))] += 1.0;
    for (double& c : h) {
      c /= static_cast<double>(g->second.size()) * width;
      top = std::max(top, c);
    }
    density.push_back(std::move(h));
  }
  if (top <= 0.0) top = 1.0;
  const Scale xs = make_scale(lo, hi, false, kLeft, kWidth - kRight);
  const Scale ys = make_scale(0.0, top, false, kHeight - kBottom, kTop);
  std::ostringstream os;
  os << frame(title, xs, ys, Axis{x_label, false}, Axis{"density", false});
  std::vector<std::string> names;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const char* colour = kColours[i % 6];
    for (int b = 0; b < bins; ++b) {
      const double v = density[i][static_cast<std::size_t>(b)];
      if (v <= 0.0) continue;
      const double x0 = xs.map(lo + b * width), x1 = xs.map(lo + (b + 1) * width);
      os << R"(<rect x=")" << x0 << R"(" y=")" << ys.map(v) << R"(" width=")" << x1 - x0 << R"(" height=")"
         << ys.map(0.0) - ys.map(v) << R"(" fill=")" << colour << R"(" fill-opacity="0.45" stroke=")" << colour
         << "\"/>\n";
    }
    names.push_back(kept[i]->first);
  }
  os << legend(names) << "</svg>\n";
  return os.str();
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

}  // namespace

PlotOutput emit_plots(const std::vector<BenchmarkRecord>& records, const std::filesystem::path& dir) {
  PlotOutput out;
  if (records.empty()) out.warnings.push_back("no benchmark records; plots are empty");
  std::map<std::string, std::map<int, std::pair<double, double>>> rmse, secs;  // sums
  std::map<std::string, std::map<int, int>> count;
  for (const auto& r : records) {
    rmse[r.sampler][r.dimension].first += r.rmse_over_sqrt_d;
    secs[r.sampler][r.dimension].first += r.seconds;
    ++count[r.sampler][r.dimension];
  }
  std::vector<Series> rs, ts;
  for (const auto& [sampler, by_d] : count) {
    Series a{sampler, {}, {}}, b{sampler, {}, {}};
    for (const auto& [d, n] : by_d) {
      a.x.push_back(d);
      a.y.push_back(rmse[sampler][d].first / n);
      b.x.push_back(d);
      b.y.push_back(secs[sampler][d].first / n);
    }
    rs.push_back(std::move(a));
    ts.push_back(std::move(b));
  }
  std::filesystem::create_directories(dir);
  const auto p1 = dir / "rmse_vs_dimension.svg";
  write_text(p1, line_plot_svg("RMSE / sqrt(d) against dimension", rs, Axis{"dimension d", true},
                               Axis{"RMSE / sqrt(d)", false}, &out.warnings));
  const auto p2 = dir / "elapsed_time.svg";
  write_text(p2, line_plot_svg("Elapsed wall-clock time", ts, Axis{"dimension d", true}, Axis{"seconds", true},
                               &out.warnings));
  out.files = {p1, p2};
  return out;
}

PlotOutput plot_directory(const std::filesystem::path& dir) {
  PlotOutput out;
  bool any = false;
  if (std::ifstream in(dir / "results.csv"); in) {
    out = emit_plots(read_results_csv(in), dir);
    any = true;
  }
  if (std::ifstream in(dir / "xi_samples.csv"); in) {
    std::map<std::string, std::vector<double>> groups;
    std::string line;
    std::getline(in, line);
    int row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ParseError("expected sampler,xi", row);
      try {
        groups[line.substr(0, comma)].push_back(std::stod(line.substr(comma + 1)));
      } catch (const std::exception&) {
        throw ParseError("malformed xi value", row);
      }
    }
    std::vector<std::pair<std::string, std::vector<double>>> g(groups.begin(), groups.end());
    const auto p = dir / "xi_histogram.svg";
    write_text(p, histogram_svg("Reaction coordinate visited", "xi = -log pi (unnormalized)", g, 60, &out.warnings));
    out.files.push_back(p);
    any = true;
  }
  if (!any) throw Error("nothing to plot in " + dir.string() + " (no results.csv or xi_samples.csv)");
  return out;
}

}  // namespace mmcmc::harness
