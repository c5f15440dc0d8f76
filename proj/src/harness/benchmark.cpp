#include "mmcmc/harness/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mmcmc/error.hpp"
#include "mmcmc/kernels.hpp"
#include "mmcmc/tempering.hpp"
#include "mmcmc/wang_landau.hpp"

namespace mmcmc::harness {

using Clock = std::chrono::steady_clock;

ExperimentConfig mixture_benchmark_config(SamplerKind sampler, int dimension, std::uint64_t seed) {
  ExperimentConfig c;
  c.name = std::string(to_string(sampler)) + "_d" + std::to_string(dimension);
  c.seed = seed;
  c.init = "zeros";
  c.target.family = TargetFamily::mixture;
  c.target.dimension = dimension;
  c.sampler.kind = sampler;
  switch (sampler) {
    case SamplerKind::rwm:
      c.n_iter = 500000;
      break;
    case SamplerKind::apt:
      c.n_iter = 150000;
      c.burn_in = 20000;
      c.sampler.levels = 5;
      c.sampler.local_steps = 40;
      c.sampler.adapt_sweeps = 20000;
      break;
    case SamplerKind::pawl:
      c.n_iter = 125000;
      c.sampler.chains = 4;
      c.sampler.initial_bins = 10;
      c.sampler.pilot_iterations = 50000;
      break;
    case SamplerKind::jams:
      c.n_iter = 100000;
      c.sampler.starts = "diagonal";
      c.sampler.start_count = 7;
      c.sampler.start_spread = 3.0;
      c.sampler.refine_iterations = 5000;
      break;
    case SamplerKind::ram:
      c.n_iter = 100000;
      break;
  }
  return c;
}

BenchmarkRecord run_mixture_cell(SamplerKind sampler, int dimension, int replicate, std::uint64_t seed) {
  ExperimentConfig c = mixture_benchmark_config(sampler, dimension, seed);
  c.threads = 1;
  const TargetBundle target = make_target(c.target);
  const std::uint64_t s = replicate_seed(seed + 1000u * static_cast<std::uint64_t>(dimension), replicate);
  const SamplerRun run = run_sampler(c, target, initial_state(c, target), s);
  BenchmarkRecord rec;
  rec.sampler = std::string(to_string(sampler));
  rec.dimension = dimension;
  rec.replicate = replicate;
  rec.seed = s;
  rec.rmse_over_sqrt_d = (estimated_mean(run) - *target.mean).norm() / std::sqrt(static_cast<double>(dimension));
  rec.seconds = run.seconds;
  rec.diagnostics = run.diagnostics;
  return rec;
}

std::vector<BenchmarkRecord> mixture_benchmark(const MixtureBenchmarkOptions& o) {
  struct Cell {
    SamplerKind sampler;
    int dimension;
    int replicate;
  };
  std::vector<Cell> cells;
  for (auto k : o.samplers)
    for (int d : o.dimensions)
      for (int r = 0; r < o.replicates; ++r) cells.push_back({k, d, r});
  std::vector<BenchmarkRecord> out(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    out[i] = run_mixture_cell(cells[i].sampler, cells[i].dimension, cells[i].replicate, o.seed);
  }, o.threads > 0 ? o.threads : worker_threads());
  return out;
}

void write_results_csv(const std::vector<BenchmarkRecord>& records, std::ostream& out) {
  out << "sampler,dimension,replicate,seed,rmse_over_sqrt_d,seconds\n";
  const auto old = out.precision(17);
  for (const auto& r : records)
    out << r.sampler << ',' << r.dimension << ',' << r.replicate << ',' << r.seed << ',' << r.rmse_over_sqrt_d
        << ',' << r.seconds << '\n';
  out.precision(old);
}

std::vector<BenchmarkRecord> read_results_csv(std::istream& in) {
  std::vector<BenchmarkRecord> out;
  std::string line;
  int row = 1;
  if (!std::getline(in, line) || line.rfind("sampler,dimension,replicate", 0) != 0)
    throw ParseError("results file has no header", 1);
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
    if (f.size() != 6) throw ParseError("expected 6 fields", row);
    try {
      BenchmarkRecord r;
      r.sampler = f[0];
      r.dimension = std::stoi(f[1]);
      r.replicate = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      r.rmse_over_sqrt_d = std::stod(f[4]);
      r.seconds = std::stod(f[5]);
      out.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError("malformed number", row);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

IsingBenchmarkResult ising_benchmark(const IsingBenchmarkOptions& o) {
  if (o.chains < 1) throw Error("ising benchmark: need at least one chain");
  if (!(o.burn_in_fraction >= 0.0 && o.burn_in_fraction < 1.0))
    throw Error("ising benchmark: burn-in fraction must lie in [0, 1)");
  const BinaryGrid image = o.image.empty() ? synth_ice(o.height, o.width, o.image_seed) : ingest_grid(o.image);
  const AutologisticTarget target(AutologisticParams::make(image.height, image.width, image.cells, o.alpha, o.beta));
  const Vector init = Vector::Zero(target.dimension());
  const unsigned threads = o.threads > 0 ? o.threads : worker_threads();
  const auto M = static_cast<std::size_t>(o.chains);
  IsingBenchmarkResult r;

  auto t0 = Clock::now();
  PawlConfig p;
  p.chains = o.chains;
  p.initial_bins = o.initial_bins;
  p.pilot_iterations = o.pilot_iterations;
  p.iterations = o.iterations;
  p.thin = 0;
  p.threads = threads;
  const PawlResult pr = pawl_run(target, init, p, o.seed);
  r.pawl_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  const auto burn = static_cast<std::size_t>(o.burn_in_fraction * static_cast<double>(o.iterations));
  r.pawl_xi.assign(pr.xi_all.begin() + static_cast<std::ptrdiff_t>(burn * M), pr.xi_all.end());
  r.epoch_transitions = pr.epoch_transitions;
  r.bins = pr.bias.bins();

  t0 = Clock::now();
  const std::size_t n = o.iterations + o.pilot_iterations / M;
  const auto rwm_burn = static_cast<std::size_t>(o.burn_in_fraction * static_cast<double>(n));
  std::vector<std::vector<double>> per_chain(M);
  const RngStream root(o.seed, 1);
  parallel_for(M, [&](std::size_t c) {
    RngStream rng = root.split(c);
    SiteFlipKernel kernel(1);
    ChainState s = ChainState::at(target, init);
    auto& xi = per_chain[c];
    xi.reserve(n - rwm_burn);
    for (std::size_t t = 0; t < n; ++t) {
      kernel.step(s, target, rng);
      if (t >= rwm_burn) xi.push_back(-s.log_density);
    }
  }, threads);
  r.rwm_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  for (const auto& v : per_chain) r.rwm_xi.insert(r.rwm_xi.end(), v.begin(), v.end());

  if (r.pawl_xi.empty() || r.rwm_xi.empty()) throw Error("ising benchmark: no post-burn-in states");
  const auto [plo, phi] = std::minmax_element(r.pawl_xi.begin(), r.pawl_xi.end());
  const auto [rlo, rhi] = std::minmax_element(r.rwm_xi.begin(), r.rwm_xi.end());
  r.pawl_min = *plo;
  r.pawl_max = *phi;
  r.rwm_min = *rlo;
  r.rwm_max = *rhi;
  return r;
}

void write_xi_csv(const IsingBenchmarkResult& r, std::ostream& out, std::size_t thin) {
  if (thin == 0) thin = 1;
  out << "sampler,xi\n";
  const auto old = out.precision(10);
  for (std::size_t i = 0; i < r.pawl_xi.size(); i += thin) out << "pawl," << r.pawl_xi[i] << '\n';
  for (std::size_t i = 0; i < r.rwm_xi.size(); i += thin) out << "rwm," << r.rwm_xi[i] << '\n';
  out.precision(old);
}

// ---------------------------------------------------------------------------

std::vector<Vector> grid_local_maxima(const TargetModel& target, double lo, double hi, int n) {
  if (target.dimension() != 2 || n < 3) throw Error("grid_local_maxima: two-dimensional targets, n >= 3");
  auto point = [&](int i, int j) {
    Vector x(2);
    x << lo + (hi - lo) * i / (n - 1), lo + (hi - lo) * j / (n - 1);
    return x;
  };
  std::vector<double> f(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f[static_cast<std::size_t>(i * n + j)] = target.log_density(point(i, j));
  std::vector<Vector> out;
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      const double v = f[static_cast<std::size_t>(i * n + j)];
      bool peak = std::isfinite(v);
      for (int a = -1; a <= 1 && peak; ++a)
        for (int b = -1; b <= 1 && peak; ++b)
          if ((a || b) && f[static_cast<std::size_t>((i + a) * n + j + b)] >= v) peak = false;
      if (peak) out.push_back(point(i, j));
    }
  return out;
}

SurBenchmarkResult sur_benchmark(const SurData& data, const SurBenchmarkOptions& o) {
  const auto t0 = Clock::now();
  SurProfileTarget target(data);
  const Eigen::Index d = target.dimension();
  SurBenchmarkResult r;

  std::vector<Vector> starts;
  const int g = o.grid_half_width;
  for (int i = -g; i <= g; ++i)
    for (int j = -g; j <= g; ++j) {
      if (d != 2) throw Error("sur benchmark: one coefficient per equation expected");
      Vector x(2);
      x << i, j;
      starts.push_back(x);
    }
  r.modes = find_modes(target, starts);
  r.stationary = find_stationary_points(target, starts);
  r.igls = zellner_igls(data);
  if (r.igls.converged)
    for (std::size_t i = 0; i < r.modes.size(); ++i)
      if ((r.modes.center(i) - r.igls.beta).norm() < 1e-4) r.igls_mode = static_cast<int>(i);

  PtOptions pt;
  pt.adapt_ladder = false;
  pt.adapt_sweeps = o.adapt_sweeps;
  pt.threads = 1;
  const std::vector<Vector> inits(static_cast<std::size_t>(o.levels), r.modes.center(0));
  const PtResult run = pt_run(target, TemperatureLadder::geometric(o.levels, o.beta_min), o.sweeps, inits, pt, o.seed);
  for (int p = 0; p + 1 < o.levels; ++p) r.swap_acceptance.push_back(run.ladder.acceptance(p));

  r.basin_frequency.assign(r.modes.size(), 0.0);
  std::size_t assigned = 0, missed = 0;
  AscentOptions ascent;
  ascent.gradient_tolerance = 1e-6;
  for (std::size_t n = o.adapt_sweeps + 1; n < run.cold.size(); n += std::max<std::size_t>(1, o.thin)) {
    int basin = -1;
    try {
      const AscentResult a = gradient_ascent(run.cold.state(n), target, ascent);
      double best = 1e-3;
      for (std::size_t i = 0; i < r.modes.size(); ++i) {
        const double dist = (a.mode - r.modes.center(i)).norm();
        if (dist < best) {
          best = dist;
          basin = static_cast<int>(i);
        }
      }
    } catch (const Error&) {
    }
    if (basin < 0) {
      ++missed;
      continue;
    }
    r.basin_frequency[static_cast<std::size_t>(basin)] += 1.0;
    ++assigned;
  }
  for (double& f : r.basin_frequency) f = assigned ? f / static_cast<double>(assigned) : 0.0;
  r.unassigned = assigned + missed ? static_cast<double>(missed) / static_cast<double>(assigned + missed) : 0.0;
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

}  // namespace mmcmc::harness
