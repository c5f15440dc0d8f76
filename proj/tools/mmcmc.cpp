// Command-line front end: run <config>, benchmark mixture|ising|sur, plot <dir>.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmcmc/error.hpp"
#include "mmcmc/harness/benchmark.hpp"
#include "mmcmc/harness/experiment.hpp"
#include "mmcmc/harness/plots.hpp"

namespace fs = std::filesystem;
using namespace mmcmc;
using namespace mmcmc::harness;

namespace {

void report(const PlotOutput& p) {
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : p.files) std::cout << "wrote " << f.string() << '\n';
}

std::vector<SamplerKind> parse_samplers(const std::vector<std::string>& names) {
  std::vector<SamplerKind> out;
  for (const auto& n : names) {
    bool found = false;
    for (auto k : {SamplerKind::rwm, SamplerKind::apt, SamplerKind::pawl, SamplerKind::jams, SamplerKind::ram})
      if (to_string(k) == n) {
        out.push_back(k);
        found = true;
      }
    if (!found) throw Error("unknown sampler '" + n + "'");
  }
  return out;
}

int cmd_mixture(const MixtureBenchmarkOptions& o, const fs::path& out) {
  fs::create_directories(out);
  const auto records = mixture_benchmark(o);
  {
    std::ofstream f(out / "results.csv");
    write_results_csv(records, f);
  }
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json e;
    e["sampler"] = r.sampler;
    e["dimension"] = r.dimension;
    e["replicate"] = r.replicate;
    e["seed"] = r.seed;
    e["rmse_over_sqrt_d"] = r.rmse_over_sqrt_d;
    e["seconds"] = r.seconds;
    for (const auto& [k, v] : r.diagnostics) e["diagnostics"][k] = v;
    j.push_back(e);
    std::cout << r.sampler << " d=" << r.dimension << " rep=" << r.replicate << " rmse/sqrt(d)=" << r.rmse_over_sqrt_d
              << " (" << r.seconds << " s)\n";
  }
  std::ofstream(out / "results.json") << j.dump(2) << '\n';
  report(emit_plots(records, out));
  return 0;
}

int cmd_ising(const IsingBenchmarkOptions& o, const fs::path& out) {
  fs::create_directories(out);
  const auto r = ising_benchmark(o);
  {
    std::ofstream f(out / "xi_samples.csv");
    write_xi_csv(r, f);
  }
  nlohmann::ordered_json j;
  j["pawl_xi_min"] = r.pawl_min;
  j["pawl_xi_max"] = r.pawl_max;
  j["rwm_xi_min"] = r.rwm_min;
  j["rwm_xi_max"] = r.rwm_max;
  j["range_ratio"] = r.pawl_range() / r.rwm_range();
  j["epoch_transitions"] = r.epoch_transitions;
  j["bins"] = r.bins;
  j["pawl_seconds"] = r.pawl_seconds;
  j["rwm_seconds"] = r.rwm_seconds;
  std::ofstream(out / "summary.json") << j.dump(2) << '\n';
  std::cout << "PAWL xi range [" << r.pawl_min << ", " << r.pawl_max << "], RWM [" << r.rwm_min << ", " << r.rwm_max
            << "], ratio " << r.pawl_range() / r.rwm_range() << ", epochs " << r.epoch_transitions << '\n';
  report(plot_directory(out));
  return 0;
}

int cmd_sur(const SurBenchmarkOptions& o, const fs::path& out) {
  fs::create_directories(out);
  const auto r = sur_benchmark(SurData::bimodal_example(), o);
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < r.modes.size(); ++i)
    j["modes"].push_back({r.modes.center(i)[0], r.modes.center(i)[1]});
  for (const auto& p : r.stationary)
    j["stationary_points"].push_back({{"x", {p.x[0], p.x[1]}}, {"kind", std::string(to_string(p.kind))}});
  j["igls_converged"] = r.igls.converged;
  j["igls_beta"] = {r.igls.beta[0], r.igls.beta[1]};
  j["igls_mode"] = r.igls_mode;
  j["basin_frequency"] = r.basin_frequency;
  j["unassigned"] = r.unassigned;
  j["swap_acceptance"] = r.swap_acceptance;
  j["seconds"] = r.seconds;
  std::ofstream(out / "summary.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal MCMC toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required();

  auto* bench = app.add_subcommand("benchmark", "desk-scale benchmarks");
  bench->require_subcommand(1);
  unsigned threads = 0;
  bench->add_option("--threads", threads, "worker threads (default: MMCMC_THREADS or all cores)");

  MixtureBenchmarkOptions mix;
  std::string mix_out = "results/mixture";
  std::vector<std::string> sampler_names{"rwm", "apt", "pawl", "jams"};
  bool extended = false;
  auto* bmix = bench->add_subcommand("mixture", "RMSE and run time against dimension");
  bmix->add_option("--out", mix_out, "output directory");
  bmix->add_option("--dims", mix.dimensions, "dimensions")->delimiter(',');
  bmix->add_flag("--extended", extended, "add d = 32 and 64");
  bmix->add_option("--samplers", sampler_names, "samplers")->delimiter(',');
  bmix->add_option("--replicates", mix.replicates, "replicates per cell");
  bmix->add_option("--seed", mix.seed, "base seed");

  IsingBenchmarkOptions ising;
  std::string ising_out = "results/ising";
  auto* bising = bench->add_subcommand("ising", "PAWL against RWM on an autologistic model");
  bising->add_option("--out", ising_out, "output directory");
  bising->add_option("--image", ising.image, "0/1 grid file (default: synthetic image)");
  bising->add_option("--height", ising.height, "synthetic image height");
  bising->add_option("--width", ising.width, "synthetic image width");
  bising->add_option("--image-seed", ising.image_seed, "synthetic image seed");
  bising->add_option("--iterations", ising.iterations, "PAWL iterations per chain");
  bising->add_option("--chains", ising.chains, "PAWL chains");
  bising->add_option("--seed", ising.seed, "seed");

  SurBenchmarkOptions sur;
  std::string sur_out = "results/sur";
  auto* bsur = bench->add_subcommand("sur", "modes and tempering on the SUR profile likelihood");
  bsur->add_option("--out", sur_out, "output directory");
  bsur->add_option("--sweeps", sur.sweeps, "tempering sweeps");
  bsur->add_option("--seed", sur.seed, "seed");

  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "write SVG plots for a results directory");
  plot->add_option("dir", plot_dir, "results directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::cout << run_experiment(config_path).string() << '\n';
    } else if (bmix->parsed()) {
      if (extended)
        for (int d : {32, 64})
          if (std::find(mix.dimensions.begin(), mix.dimensions.end(), d) == mix.dimensions.end())
            mix.dimensions.push_back(d);
      mix.samplers = parse_samplers(sampler_names);
      mix.threads = threads;
      return cmd_mixture(mix, mix_out);
    } else if (bising->parsed()) {
      ising.threads = threads;
      return cmd_ising(ising, ising_out);
    } else if (bsur->parsed()) {
      return cmd_sur(sur, sur_out);
    } else if (plot->parsed()) {
      report(plot_directory(plot_dir));
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << (run->parsed() ? config_path + ": " : std::string()) << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
