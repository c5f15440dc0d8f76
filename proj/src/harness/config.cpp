#include "mmcmc/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mmcmc/error.hpp"

namespace mmcmc::harness {

std::string_view to_string(TargetFamily f) {
  switch (f) {
    case TargetFamily::mixture: return "mixture";
    case TargetFamily::autologistic: return "autologistic";
    case TargetFamily::tabular: return "tabular";
    case TargetFamily::sur: return "sur";
  }
  return "?";
}

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::rwm: return "rwm";
    case SamplerKind::apt: return "apt";
    case SamplerKind::pawl: return "pawl";
    case SamplerKind::jams: return "jams";
    case SamplerKind::ram: return "ram";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view v, int line) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ParseError("expected a number, got '" + std::string(v) + "'", line);
  return out;
}

template <class Int>
Int parse_int(std::string_view v, int line) {
  Int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ParseError("expected a non-negative integer, got '" + std::string(v) + "'", line);
  return out;
}

bool parse_bool(std::string_view v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("expected true or false, got '" + std::string(v) + "'", line);
}

std::vector<double> parse_list(std::string_view v, int line) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_double(trim(v.substr(0, comma)), line));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

template <class Enum>
Enum parse_enum(std::string_view v, std::initializer_list<Enum> options, int line) {
  for (Enum e : options)
    if (to_string(e) == v) return e;
  throw ParseError("unrecognized value '" + std::string(v) + "'", line);
}

struct Field {
  std::string section;
  std::string key;
  std::function<bool(const ExperimentConfig&)> applies;
  std::function<void(ExperimentConfig&, std::string_view, int)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

auto always = [](const ExperimentConfig&) { return true; };
auto family_is(TargetFamily f) {
  return [f](const ExperimentConfig& c) { return c.target.family == f; };
}
auto sampler_is(std::initializer_list<SamplerKind> ks) {
  std::vector<SamplerKind> v(ks);
  return [v](const ExperimentConfig& c) {
    for (auto k : v)
      if (c.sampler.kind == k) return true;
    return false;
  };
}

#define MMCMC_DOUBLE(sec, name, pred, member)                                              \
  Field{sec, name, pred, [](ExperimentConfig& c, std::string_view v, int l) { c.member = parse_double(v, l); }, \
        [](const ExperimentConfig& c) { return format_double(c.member); }}
#define MMCMC_INT(sec, name, pred, member, type)                                           \
  Field{sec, name, pred,                                                                   \
        [](ExperimentConfig& c, std::string_view v, int l) { c.member = parse_int<type>(v, l); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }}
#define MMCMC_BOOL(sec, name, pred, member)                                                \
  Field{sec, name, pred, [](ExperimentConfig& c, std::string_view v, int l) { c.member = parse_bool(v, l); }, \
        [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }}
#define MMCMC_STRING(sec, name, pred, member)                                              \
  Field{sec, name, pred, [](ExperimentConfig& c, std::string_view v, int) { c.member = std::string(v); }, \
        [](const ExperimentConfig& c) { return c.member; }}

const std::vector<Field>& fields() {
  using TF = TargetFamily;
  using SK = SamplerKind;
  static const std::vector<Field> table = {
      MMCMC_STRING("experiment", "name", always, name),
      MMCMC_INT("experiment", "seed", always, seed, std::uint64_t),
      MMCMC_INT("experiment", "n_iter", always, n_iter, std::size_t),
      MMCMC_INT("experiment", "burn_in", always, burn_in, std::size_t),
      MMCMC_INT("experiment", "replicates", always, replicates, int),
      MMCMC_STRING("experiment", "output", always, output),
      MMCMC_STRING("experiment", "init", always, init),
      MMCMC_INT("experiment", "threads", always, threads, unsigned),

      Field{"target", "family", always,
            [](ExperimentConfig& c, std::string_view v, int l) {
              c.target.family = parse_enum(v, {TF::mixture, TF::autologistic, TF::tabular, TF::sur}, l);
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.target.family)); }},
      MMCMC_INT("target", "dimension", family_is(TF::mixture), target.dimension, int),
      MMCMC_INT("target", "height", family_is(TF::autologistic), target.height, int),
      MMCMC_INT("target", "width", family_is(TF::autologistic), target.width, int),
      MMCMC_DOUBLE("target", "alpha", family_is(TF::autologistic), target.alpha),
      MMCMC_DOUBLE("target", "beta", family_is(TF::autologistic), target.beta),
      MMCMC_STRING("target", "image", family_is(TF::autologistic), target.image),
      MMCMC_INT("target", "image_seed", family_is(TF::autologistic), target.image_seed, std::uint64_t),
      Field{"target", "probabilities", family_is(TF::tabular),
            [](ExperimentConfig& c, std::string_view v, int l) { c.target.probabilities = parse_list(v, l); },
            [](const ExperimentConfig& c) { return format_list(c.target.probabilities); }},
      Field{"target", "adjacency", family_is(TF::tabular),
            [](ExperimentConfig& c, std::string_view v, int l) {
              if (v != "line" && v != "complete") throw ParseError("adjacency must be line or complete", l);
              c.target.adjacency = std::string(v);
            },
            [](const ExperimentConfig& c) { return c.target.adjacency; }},
      Field{"target", "dataset", family_is(TF::sur),
            [](ExperimentConfig& c, std::string_view v, int l) {
              if (v != "bimodal_example") throw ParseError("unknown SUR dataset '" + std::string(v) + "'", l);
              c.target.dataset = std::string(v);
            },
            [](const ExperimentConfig& c) { return c.target.dataset; }},

      Field{"sampler", "kind", always,
            [](ExperimentConfig& c, std::string_view v, int l) {
              c.sampler.kind = parse_enum(v, {SK::rwm, SK::apt, SK::pawl, SK::jams, SK::ram}, l);
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.sampler.kind)); }},
      MMCMC_BOOL("sampler", "adapt", sampler_is({SK::rwm, SK::apt}), sampler.adapt),
      MMCMC_DOUBLE("sampler", "target_acceptance", sampler_is({SK::rwm, SK::apt, SK::pawl, SK::jams}),
                   sampler.target_acceptance),
      MMCMC_INT("sampler", "flips_per_step", sampler_is({SK::rwm, SK::apt, SK::pawl}), sampler.flips_per_step,
                int),
      MMCMC_INT("sampler", "levels", sampler_is({SK::apt}), sampler.levels, int),
      MMCMC_DOUBLE("sampler", "beta_min", sampler_is({SK::apt}), sampler.beta_min),
      Field{"sampler", "schedule", sampler_is({SK::apt}),
            [](ExperimentConfig& c, std::string_view v, int l) {
              try {
                c.sampler.schedule = parse_swap_schedule(v);
              } catch (const Error& e) {
                throw ParseError(e.what(), l);
              }
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.sampler.schedule)); }},
      MMCMC_BOOL("sampler", "adapt_ladder", sampler_is({SK::apt}), sampler.adapt_ladder),
      MMCMC_INT("sampler", "adapt_sweeps", sampler_is({SK::apt}), sampler.adapt_sweeps, std::size_t),
      MMCMC_INT("sampler", "local_steps", sampler_is({SK::apt}), sampler.local_steps, int),
      MMCMC_INT("sampler", "chains", sampler_is({SK::pawl}), sampler.chains, int),
      MMCMC_INT("sampler", "initial_bins", sampler_is({SK::pawl}), sampler.initial_bins, int),
      MMCMC_DOUBLE("sampler", "flat_c", sampler_is({SK::pawl}), sampler.flat_c),
      MMCMC_INT("sampler", "pilot_iterations", sampler_is({SK::pawl}), sampler.pilot_iterations, std::size_t),
      MMCMC_INT("sampler", "pilot_burn_in", sampler_is({SK::pawl}), sampler.pilot_burn_in, std::size_t),
      MMCMC_INT("sampler", "min_epoch_iterations", sampler_is({SK::pawl}), sampler.min_epoch_iterations,
                std::size_t),
      MMCMC_BOOL("sampler", "split_bins", sampler_is({SK::pawl}), sampler.split_bins),
      MMCMC_BOOL("sampler", "extend_range", sampler_is({SK::pawl}), sampler.extend_range),
      MMCMC_INT("sampler", "max_bins", sampler_is({SK::pawl}), sampler.max_bins, int),
      Field{"sampler", "starts", sampler_is({SK::jams}),
            [](ExperimentConfig& c, std::string_view v, int l) {
              if (v != "diagonal" && v != "uniform") throw ParseError("starts must be diagonal or uniform", l);
              c.sampler.starts = std::string(v);
            },
            [](const ExperimentConfig& c) { return c.sampler.starts; }},
      MMCMC_INT("sampler", "start_count", sampler_is({SK::jams}), sampler.start_count, int),
      MMCMC_DOUBLE("sampler", "start_spread", sampler_is({SK::jams}), sampler.start_spread),
      MMCMC_INT("sampler", "refine_iterations", sampler_is({SK::jams}), sampler.refine_iterations, std::size_t),
      MMCMC_DOUBLE("sampler", "jump_probability", sampler_is({SK::jams}), sampler.jump_probability),
      Field{"sampler", "jump", sampler_is({SK::jams}),
            [](ExperimentConfig& c, std::string_view v, int l) {
              if (v == "affine") c.sampler.jump = JumpMove::affine;
              else if (v == "independent") c.sampler.jump = JumpMove::independent;
              else throw ParseError("jump must be affine or independent", l);
            },
            [](const ExperimentConfig& c) {
              return std::string(c.sampler.jump == JumpMove::affine ? "affine" : "independent");
            }},
      Field{"sampler", "kernel", sampler_is({SK::jams}),
            [](ExperimentConfig& c, std::string_view v, int l) {
              try {
                c.sampler.kernel = parse_kernel_family(v);
              } catch (const Error& e) {
                throw ParseError(e.what(), l);
              }
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.sampler.kernel)); }},
      MMCMC_DOUBLE("sampler", "dof", sampler_is({SK::jams}), sampler.dof),
      MMCMC_DOUBLE("sampler", "scale", sampler_is({SK::ram}), sampler.scale),
      MMCMC_INT("sampler", "max_inner", sampler_is({SK::ram}), sampler.max_inner, int),
  };
  return table;
}

#undef MMCMC_DOUBLE
#undef MMCMC_INT
#undef MMCMC_BOOL
#undef MMCMC_STRING

struct Entry {
  std::string value;
  int line = 0;
};

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::pair<std::string, std::string>, Entry> entries;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "experiment" && section != "target" && section != "sampler")
        throw ParseError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    if (section.empty()) throw ParseError("key outside of a section", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", line_no);
    const auto [it, inserted] = entries.try_emplace({section, key}, Entry{value, line_no});
    if (!inserted) throw ParseError("duplicate key '" + key + "'", line_no);
  }

  ExperimentConfig c;
  // The family and kind decide which other keys are valid.
  for (const auto& f : fields()) {
    if (f.key != "family" && f.key != "kind") continue;
    if (const auto it = entries.find({f.section, f.key}); it != entries.end())
      f.set(c, it->second.value, it->second.line);
  }
  for (const auto& [k, e] : entries) {
    const Field* field = nullptr;
    for (const auto& f : fields())
      if (f.section == k.first && f.key == k.second) field = &f;
    if (!field) throw ParseError("unknown key '" + k.second + "' in [" + k.first + "]", e.line);
    if (!field->applies(c))
      throw ParseError("key '" + k.second + "' does not apply to this target or sampler", e.line);
    field->set(c, e.value, e.line);
  }

  const auto line_of = [&](const char* sec, const char* key) {
    const auto it = entries.find({sec, key});
    return it == entries.end() ? 0 : it->second.line;
  };
  if (!entries.count({"experiment", "seed"})) throw ParseError("missing required key 'seed' in [experiment]");
  if (!entries.count({"experiment", "n_iter"}))
    throw ParseError("missing required key 'n_iter' in [experiment]");
  if (c.n_iter == 0) throw ParseError("n_iter must be positive", line_of("experiment", "n_iter"));
  if (c.burn_in >= c.n_iter) throw ParseError("burn_in must be below n_iter", line_of("experiment", "burn_in"));
  if (c.replicates < 1) throw ParseError("replicates must be at least 1", line_of("experiment", "replicates"));
  if (c.target.family == TargetFamily::tabular && c.target.probabilities.empty())
    throw ParseError("tabular target needs probabilities");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (!f.applies(config)) continue;
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace mmcmc::harness
