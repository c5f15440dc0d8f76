#include "mmcmc/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "mmcmc/diagnostics.hpp"
#include "mmcmc/error.hpp"
#include "mmcmc/kernels.hpp"
#include "mmcmc/mode_jump.hpp"
#include "mmcmc/targets.hpp"
#include "mmcmc/tempering.hpp"
#include "mmcmc/wang_landau.hpp"

namespace mmcmc::harness {

namespace fs = std::filesystem;

TargetBundle make_target(const TargetSpec& spec, const fs::path& base_dir) {
  TargetBundle b;
  switch (spec.family) {
    case TargetFamily::mixture: {
      if (spec.dimension < 1) throw Error("mixture dimension must be positive");
      auto t = std::make_unique<GaussianMixtureTarget>(GaussianMixtureParams::benchmark(spec.dimension));
      b.mean = t->mean();
      b.model = std::move(t);
      break;
    }
    case TargetFamily::autologistic: {
      BinaryGrid g;
      if (spec.image.empty()) {
        g = synth_ice(spec.height, spec.width, spec.image_seed);
      } else {
        fs::path p(spec.image);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        g = ingest_grid(p.string());
        if (g.height != spec.height || g.width != spec.width)
          throw Error("image " + p.string() + " is " + std::to_string(g.height) + "x" + std::to_string(g.width) +
                      ", config says " + std::to_string(spec.height) + "x" + std::to_string(spec.width));
      }
      b.model = std::make_unique<AutologisticTarget>(
          AutologisticParams::make(g.height, g.width, g.cells, spec.alpha, spec.beta));
      b.image = std::move(g);
      break;
    }
    case TargetFamily::tabular: {
      const auto n = static_cast<int>(spec.probabilities.size());
      std::vector<std::vector<int>> adj;
      if (spec.adjacency == "complete") {
        adj.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (i != j) adj[static_cast<std::size_t>(i)].push_back(j);
      }
      auto t = std::make_unique<TabularTarget>(spec.probabilities, std::move(adj));
      b.mean = Vector::Constant(1, t->mean_index());
      b.model = std::move(t);
      break;
    }
    case TargetFamily::sur:
      b.model = std::make_unique<SurProfileTarget>(SurData::bimodal_example());
      break;
  }
  return b;
}

Vector initial_state(const ExperimentConfig& config, const TargetBundle& target) {
  const auto d = target.model->dimension();
  const std::string& s = config.init;
  if (s == "zeros") return Vector::Zero(d);
  if (s == "ones") return Vector::Ones(d);
  if (s == "observed") {
    if (!target.image) throw Error("init = observed needs an autologistic target");
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = target.image->cells[static_cast<std::size_t>(i)];
    return x;
  }
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error("init: cannot read '" + item + "' as a number");
    }
  }
  if (static_cast<Eigen::Index>(v.size()) != d)
    throw Error("init has " + std::to_string(v.size()) + " values, target dimension is " + std::to_string(d));
  return Eigen::Map<const Vector>(v.data(), d);
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  RngStream rng = RngStream(seed, 0xbe7c).split(static_cast<std::uint64_t>(replicate));
  return rng.engine()();
}

namespace {

using Clock = std::chrono::steady_clock;

void fill_xi(SamplerRun& run, const TargetModel& target) {
  run.xi.reserve(run.trace.size());
  for (std::size_t n = 0; n < run.trace.size(); ++n) run.xi.push_back(-target.log_density(run.trace.state(n)));
  run.xi_first = run.first;
}

std::unique_ptr<TransitionKernel> local_kernel(const ExperimentConfig& c, const TargetModel& target) {
  const auto& s = c.sampler;
  switch (target.space()) {
    case StateSpace::continuous: {
      RwmSettings rwm;
      rwm.target_acceptance = s.target_acceptance;
      auto k = std::make_unique<AdaptiveRwmKernel>(target.dimension(), rwm);
      if (!s.adapt) k->adaptation().freeze();
      return k;
    }
    case StateSpace::binary_lattice: return std::make_unique<SiteFlipKernel>(s.flips_per_step);
    case StateSpace::tabular: {
      const auto& tab = dynamic_cast<const TabularTarget&>(target);
      return std::make_unique<TabularNeighbourKernel>(tab.adjacency());
    }
  }
  throw Error("unsupported state space");
}

std::string to_csv(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

std::vector<Vector> jams_starts(const ExperimentConfig& c, Eigen::Index d, std::uint64_t seed) {
  const auto& s = c.sampler;
  if (s.start_count < 1) throw Error("jams: start_count must be positive");
  std::vector<Vector> starts;
  if (s.starts == "diagonal") {
    for (int i = 0; i < s.start_count; ++i) {
      const double t = s.start_count == 1 ? 0.0 : -s.start_spread + 2.0 * s.start_spread * i / (s.start_count - 1);
      starts.push_back(Vector::Constant(d, t));
    }
  } else {
    RngStream rng(seed, 0x57a7);
    for (int i = 0; i < s.start_count; ++i) {
      Vector x(d);
      for (Eigen::Index j = 0; j < d; ++j) x[j] = s.start_spread * (2.0 * rng.uniform() - 1.0);
      starts.push_back(std::move(x));
    }
  }
  return starts;
}

}  // namespace

SamplerRun run_sampler(const ExperimentConfig& c, const TargetBundle& bundle, const Vector& init,
                       std::uint64_t seed) {
  const TargetModel& target = *bundle.model;
  const auto& s = c.sampler;
  const unsigned threads = c.threads > 0 ? c.threads : worker_threads();
  const bool continuous = target.space() == StateSpace::continuous;
  SamplerRun run;
  const auto t0 = Clock::now();

  switch (s.kind) {
    case SamplerKind::rwm: {
      auto kernel = local_kernel(c, target);
      RngStream rng(seed, 0);
      run.trace = run_chain(target, *kernel, init, c.n_iter, rng);
      run.first = c.burn_in;
      run.diagnostics.emplace_back("acceptance", run.trace.acceptance_rate());
      if (auto* k = dynamic_cast<AdaptiveRwmKernel*>(kernel.get()))
        run.diagnostics.emplace_back("proposal_scale", k->adaptation().scale());
      fill_xi(run, target);
      break;
    }
    case SamplerKind::ram: {
      if (target.space() == StateSpace::binary_lattice) throw Error("ram: continuous or tabular targets only");
      RamKernel kernel(RamConfig{s.scale, s.max_inner});
      RngStream rng(seed, 0);
      run.trace = run_chain(target, kernel, init, c.n_iter, rng);
      run.first = c.burn_in;
      run.diagnostics.emplace_back("acceptance", run.trace.acceptance_rate());
      run.diagnostics.emplace_back("budget_failures", static_cast<double>(kernel.budget_failures()));
      fill_xi(run, target);
      break;
    }
    case SamplerKind::apt: {
      if (!continuous) throw Error("apt: continuous targets only");
      if (s.levels < 2) throw Error("apt: need at least two levels");
      PtOptions o;
      o.schedule = s.schedule;
      o.adapt = s.adapt;
      o.adapt_ladder = s.adapt_ladder;
      o.adapt_sweeps = s.adapt_sweeps;
      o.local_steps = s.local_steps;
      o.rwm.target_acceptance = s.target_acceptance;
      o.threads = threads;
      const std::vector<Vector> inits(static_cast<std::size_t>(s.levels), init);
      auto r = pt_run(target, TemperatureLadder::geometric(s.levels, s.beta_min), c.n_iter, inits, o, seed);
      run.trace = std::move(r.cold);
      run.first = c.burn_in;
      run.diagnostics.emplace_back("cold_acceptance", r.level_acceptance.front());
      for (int p = 0; p + 1 < s.levels; ++p) {
        run.diagnostics.emplace_back("swap_acceptance_" + std::to_string(p + 1), r.ladder.acceptance(p));
        run.diagnostics.emplace_back("swap_alpha_" + std::to_string(p + 1), r.ladder.mean_alpha(p));
      }
      for (int l = 0; l < s.levels; ++l)
        run.diagnostics.emplace_back("beta_" + std::to_string(l + 1), r.ladder.beta(l));
      run.diagnostics.emplace_back("round_trip_rate", round_trip_rate(r.replicas, s.levels));
      run.files.emplace_back("replicas", to_csv([&](std::ostream& os) { write_replica_csv(r.replicas, os); }));
      run.files.emplace_back("ladder", to_csv([&](std::ostream& os) {
                               os << "record";
                               for (int l = 1; l <= s.levels; ++l) os << ",beta_" << l;
                               os << '\n';
                               os.precision(17);
                               for (std::size_t i = 0; i < r.ladder_history.size(); ++i) {
                                 os << i;
                                 for (double b : r.ladder_history[i]) os << ',' << b;
                                 os << '\n';
                               }
                             }));
      fill_xi(run, target);
      break;
    }
    case SamplerKind::pawl: {
      PawlConfig p;
      p.chains = s.chains;
      p.initial_bins = s.initial_bins;
      p.flat_c = s.flat_c;
      p.min_epoch_iterations = s.min_epoch_iterations;
      p.pilot_iterations = s.pilot_iterations;
      p.pilot_burn_in = s.pilot_burn_in;
      p.iterations = c.n_iter;
      p.burn_in = c.burn_in;
      p.split_bins = s.split_bins;
      p.extend_range = s.extend_range;
      p.max_bins = s.max_bins;
      p.flips_per_step = s.flips_per_step;
      p.rwm.target_acceptance = s.target_acceptance;
      p.threads = threads;
      auto r = pawl_run(target, init, p, seed);
      run.trace = std::move(r.samples);
      run.weights = std::move(r.weights);
      run.first = 0;
      run.xi = std::move(r.xi_all);
      run.xi_first = c.burn_in * static_cast<std::size_t>(s.chains);
      run.diagnostics.emplace_back("acceptance", r.acceptance);
      run.diagnostics.emplace_back("epoch_transitions", r.epoch_transitions);
      run.diagnostics.emplace_back("bins", r.bias.bins());
      run.diagnostics.emplace_back("z_min", r.bias.z_min());
      run.diagnostics.emplace_back("z_max", r.bias.z_max());
      run.diagnostics.emplace_back("eta", r.bias.eta());
      run.files.emplace_back("bias", to_csv([&](std::ostream& os) { write_bias_csv(r.bias_history, os); }));
      break;
    }
    case SamplerKind::jams: {
      if (!continuous) throw Error("jams: continuous targets only");
      JamsConfig j;
      j.modes.family = s.kernel;
      j.modes.dof = s.dof;
      j.refine_iterations = s.refine_iterations;
      j.iterations = c.n_iter;
      j.burn_in = c.burn_in;
      j.jump_probability = s.jump_probability;
      j.jump = s.jump;
      j.rwm.target_acceptance = s.target_acceptance;
      j.threads = threads;
      auto r = jams_run(target, jams_starts(c, target.dimension(), seed), j, seed);
      run.trace = std::move(r.trace);
      run.first = c.burn_in;
      run.diagnostics.emplace_back("modes", static_cast<double>(r.atlas.size()));
      run.diagnostics.emplace_back("jump_acceptance", r.jump_acceptance);
      run.diagnostics.emplace_back("jump_attempts", static_cast<double>(r.jump_attempts));
      for (std::size_t i = 0; i < r.local_acceptance.size(); ++i)
        run.diagnostics.emplace_back("local_acceptance_" + std::to_string(i + 1), r.local_acceptance[i]);
      run.files.emplace_back("atlas", serialize_atlas(r.atlas));
      fill_xi(run, target);
      break;
    }
  }
  run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (run.trace.failure()) run.diagnostics.emplace_back("failed", 1.0);
  return run;
}

Vector estimated_mean(const SamplerRun& run) {
  if (!run.weights.empty()) {
    Vector m = Vector::Zero(run.trace.dimension());
    for (std::size_t n = 0; n < run.trace.size(); ++n) m += run.weights[n] * run.trace.state(n);
    return m;
  }
  return ergodic_mean(run.trace, run.first);
}

std::string content_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw Error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

}  // namespace

fs::path run_experiment(const ExperimentConfig& config, const fs::path& base_dir) {
  const fs::path dir(config.output);
  fs::create_directories(dir);
  const TargetBundle target = make_target(config.target, base_dir);
  const Vector init = initial_state(config, target);
  const std::string text = serialize_config(config);

  nlohmann::ordered_json manifest;
  manifest["name"] = config.name;
  manifest["config_hash"] = content_hash(text);
  manifest["seed"] = config.seed;
  manifest["target"] = std::string(to_string(config.target.family));
  manifest["sampler"] = std::string(to_string(config.sampler.kind));
  manifest["dimension"] = target.model->dimension();
  manifest["replicates"] = nlohmann::ordered_json::array();

  const auto R = static_cast<std::size_t>(config.replicates);
  std::vector<SamplerRun> runs(R);
  const unsigned threads = config.threads > 0 ? config.threads : worker_threads();
  ExperimentConfig inner = config;
  if (R > 1) inner.threads = 1;
  parallel_for(R, [&](std::size_t r) {
    runs[r] = run_sampler(inner, target, init, replicate_seed(config.seed, static_cast<int>(r)));
  }, threads);

  for (std::size_t r = 0; r < R; ++r) {
    const SamplerRun& run = runs[r];
    const std::string suffix = "_r" + std::to_string(r);
    {
      std::ofstream out(dir / ("trace" + suffix + ".csv"), std::ios::binary);
      write_trace_csv(run.trace, out, run.weights.empty() ? nullptr : &run.weights);
    }
    NamedValues diag;
    diag.emplace_back("replicate", static_cast<double>(r));
    diag.emplace_back("seconds", run.seconds);
    diag.emplace_back("states", static_cast<double>(run.trace.size()));
    if (target.mean && run.trace.size() > run.first)
      diag.emplace_back("rmse_over_sqrt_d", (estimated_mean(run) - *target.mean).norm() /
                                                std::sqrt(static_cast<double>(target.mean->size())));
    if (run.xi.size() > run.xi_first) {
      const auto [lo, hi] = std::minmax_element(run.xi.begin() + static_cast<std::ptrdiff_t>(run.xi_first), run.xi.end());
      diag.emplace_back("xi_min", *lo);
      diag.emplace_back("xi_max", *hi);
    }
    diag.insert(diag.end(), run.diagnostics.begin(), run.diagnostics.end());
    write_file(dir / ("diagnostics" + suffix + ".json"), diagnostics_json(diag) + "\n");

    nlohmann::ordered_json entry;
    entry["replicate"] = r;
    entry["seed"] = replicate_seed(config.seed, static_cast<int>(r));
    entry["trace"] = "trace" + suffix + ".csv";
    entry["diagnostics"] = "diagnostics" + suffix + ".json";
    for (const auto& [stem, content] : run.files) {
      const std::string name = stem + suffix + (stem == "atlas" ? ".json" : ".csv");
      write_file(dir / name, content);
      entry[stem] = name;
    }
    if (run.trace.failure()) entry["failure"] = *run.trace.failure();
    manifest["replicates"].push_back(entry);
  }
  manifest["config"] = text;
  write_file(dir / "config.ini", text);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return dir;
}

fs::path run_experiment(const std::string& config_path) {
  const ExperimentConfig c = load_config(config_path);
  return run_experiment(c, fs::path(config_path).parent_path());
}

}  // namespace mmcmc::harness
