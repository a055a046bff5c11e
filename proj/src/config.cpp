#include "spgym/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "spgym/errors.hpp"

namespace spgym {

namespace {

[[noreturn]] void bad_value(const std::string& field, std::string_view value, std::string_view expected) {
  throw ConfigError(field + ": expected " + std::string(expected) + ", got '" + std::string(value) + "'");
}

template <typename T>
T parse_integer(const std::string& field, std::string_view value, T min_value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || out < min_value) {
    bad_value(field, value, "an integer >= " + std::to_string(min_value));
  }
  return out;
}

double parse_real(const std::string& field, std::string_view value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(field, value, "a number");
  return out;
}

bool parse_bool(const std::string& field, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(field, value, "true or false");
}

std::string real_string(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

// Rethrows any library error from a converter as a ConfigError for `field`.
template <typename F>
auto with_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(field, 0) == 0) throw;
    throw ConfigError(field + ": " + what);
  } catch (const std::exception& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

std::string_view init_name(InitMethod init) { return init == InitMethod::kUniform ? "uniform" : "shuffle"; }

struct Field {
  const char* name;
  const char* alias;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const AugmentSpec* first_of(const RunConfig& c, AugmentKind kind) {
  for (auto& s : c.augment) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"env.dims", "dims",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.dims = with_field(f, [&] { return GridDims::parse(v); });
       },
       [](const RunConfig& c) { return c.dims.to_string(); }},
      {"env.max_episode_steps", "max_episode_steps",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.max_episode_steps = parse_integer(f, v, 1); },
       [](const RunConfig& c) { return std::to_string(c.max_episode_steps); }},
      {"env.init", "init",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         if (v == "uniform") {
           c.init = InitMethod::kUniform;
         } else if (v == "shuffle") {
           c.init = InitMethod::kShuffle;
         } else {
           bad_value(f, v, "uniform or shuffle");
         }
       },
       [](const RunConfig& c) { return std::string(init_name(c.init)); }},
      {"env.shuffle_moves", "shuffle_moves",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.shuffle_moves = parse_integer(f, v, 1); },
       [](const RunConfig& c) { return std::to_string(c.shuffle_moves); }},
      {"env.include_blank_in_reward", "include_blank_in_reward",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.include_blank_in_reward = parse_bool(f, v); },
       [](const RunConfig& c) { return std::string(c.include_blank_in_reward ? "true" : "false"); }},
      {"dataset.dir", "dataset_dir",
       [](RunConfig& c, const std::string&, const std::string& v) { c.dataset_dir = v; },
       [](const RunConfig& c) { return c.dataset_dir.string(); }},
      {"dataset.heldout_dir", "heldout_dir",
       [](RunConfig& c, const std::string&, const std::string& v) { c.heldout_dir = v; },
       [](const RunConfig& c) { return c.heldout_dir.string(); }},
      {"dataset.pool_size", "pool_size",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.pool_size = parse_integer(f, v, 1); },
       [](const RunConfig& c) { return std::to_string(c.pool_size); }},
      {"dataset.pool_seed", "pool_seed",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.pool_seed = parse_integer<std::uint64_t>(f, v, 0);
       },
       [](const RunConfig& c) { return std::to_string(c.pool_seed); }},
      {"observation.modality", "modality",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.modality = with_field(f, [&] { return parse_modality(v); });
       },
       [](const RunConfig& c) { return std::string(modality_name(c.modality)); }},
      {"observation.render_size", "render_size",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.render_size = parse_integer(f, v, 0); },
       [](const RunConfig& c) { return std::to_string(c.render_size); }},
      {"observation.blank_fill", "blank_fill",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.blank_fill = with_field(f, [&] { return parse_blank_fill(v); });
       },
       [](const RunConfig& c) { return std::string(blank_fill_name(c.blank_fill)); }},
      {"augment.list", "augment",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.augment = with_field(f, [&] { return parse_augment_list(v); });
       },
       [](const RunConfig& c) { return augment_list_string(c.augment); }},
      {"augment.crop_side", "crop_side",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         const int side = parse_integer(f, v, 0);
         for (auto& s : c.augment) s.crop_side = side;
       },
       [](const RunConfig& c) {
         const AugmentSpec* s = first_of(c, AugmentKind::kCrop);
         return std::to_string(s ? s->crop_side : 0);
       }},
      {"augment.shift_max_offset", "shift_max_offset",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         const int offset = parse_integer(f, v, 0);
         for (auto& s : c.augment) s.shift_max_offset = offset;
       },
       [](const RunConfig& c) {
         const AugmentSpec* s = first_of(c, AugmentKind::kShift);
         return std::to_string(s ? s->shift_max_offset : AugmentSpec{}.shift_max_offset);
       }},
      {"run.seed", "seed",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.seed = parse_integer<std::uint64_t>(f, v, 0); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"run.num_envs", "num_envs",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.num_envs = parse_integer(f, v, 1); },
       [](const RunConfig& c) { return std::to_string(c.num_envs); }},
      {"run.total_steps", "total_steps",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.total_step_cap = parse_integer<std::uint64_t>(f, v, 1);
       },
       [](const RunConfig& c) { return std::to_string(c.total_step_cap); }},
      {"run.workers", "workers",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.workers = parse_integer(f, v, 1); },
       [](const RunConfig& c) { return std::to_string(c.workers); }},
      {"run.success_threshold", "success_threshold",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.success_threshold = parse_real(f, v);
         if (!(c.success_threshold > 0.0 && c.success_threshold <= 1.0)) bad_value(f, v, "a number in (0, 1]");
       },
       [](const RunConfig& c) { return real_string(c.success_threshold); }},
      {"run.node_budget", "node_budget",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.node_budget = parse_integer<std::uint64_t>(f, v, 1);
       },
       [](const RunConfig& c) { return std::to_string(c.node_budget); }},
      {"early_termination.enabled", "early_termination",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.early_termination.enabled = parse_bool(f, v); },
       [](const RunConfig& c) { return std::string(c.early_termination.enabled ? "true" : "false"); }},
      {"early_termination.window", "early_termination_window",
       [](RunConfig& c, const std::string& f, const std::string& v) { c.early_termination.window = parse_integer(f, v, 1); },
       [](const RunConfig& c) { return std::to_string(c.early_termination.window); }},
      {"early_termination.success", "early_termination_success",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         c.early_termination.success = parse_real(f, v);
         if (!(c.early_termination.success > 0.0 && c.early_termination.success <= 1.0)) {
           bad_value(f, v, "a number in (0, 1]");
         }
       },
       [](const RunConfig& c) { return real_string(c.early_termination.success); }},
  };
  return table;
}

constexpr std::string_view kVersionField = "spgym.config_version";

}  // namespace

std::vector<std::string> config_field_names() {
  std::vector<std::string> names;
  for (const auto& f : fields()) names.emplace_back(f.name);
  return names;
}

std::string canonical_field(std::string_view key) {
  if (key == kVersionField || key == "config_version") return std::string(kVersionField);
  for (const auto& f : fields()) {
    if (key == f.name || key == f.alias) return f.name;
  }
  // Flag spellings use dashes.
  std::string underscored(key);
  std::replace(underscored.begin(), underscored.end(), '-', '_');
  if (underscored != key) return canonical_field(underscored);
  throw ConfigError(std::string(key) + ": unknown config field");
}

RunConfig apply_config_map(RunConfig base, const ConfigMap& values) {
  std::map<std::string, std::string> canonical;
  for (const auto& [key, value] : values) {
    const std::string name = canonical_field(key);
    if (!canonical.emplace(name, value).second) throw ConfigError(name + ": given more than once");
  }
  if (const auto it = canonical.find(std::string(kVersionField)); it != canonical.end()) {
    const int version = parse_integer(it->first, it->second, 0);
    if (version != kConfigVersion) {
      throw ConfigError(it->first + ": unsupported version " + it->second + " (expected " +
                        std::to_string(kConfigVersion) + ")");
    }
  }
  auto apply = [&](const Field& f) {
    if (const auto it = canonical.find(f.name); it != canonical.end()) f.set(base, f.name, it->second);
  };
  // The augment list goes first so that per-kind parameters land on it.
  constexpr std::string_view kList = "augment.list";
  for (const auto& f : fields()) {
    if (f.name == kList) apply(f);
  }
  for (const auto& f : fields()) {
    if (f.name != kList) apply(f);
  }
  return base;
}

ConfigMap to_config_map(const RunConfig& config) {
  ConfigMap out;
  out[std::string(kVersionField)] = std::to_string(kConfigVersion);
  for (const auto& f : fields()) out[f.name] = f.get(config);
  return out;
}

std::string config_ini(const RunConfig& config) {
  boost::property_tree::ptree tree;
  for (const auto& [key, value] : to_config_map(config)) tree.put(key, value);
  std::ostringstream out;
  boost::property_tree::write_ini(out, tree);
  return out.str();
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  ConfigMap out;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      out[section] = node.data();
      continue;
    }
    for (const auto& [key, leaf] : node) out[section + "." + key] = leaf.data();
  }
  const auto it = out.find(std::string(kVersionField));
  if (it == out.end()) throw ConfigError(std::string(kVersionField) + ": missing from " + path.string());
  if (it->second != std::to_string(kConfigVersion)) {
    throw ConfigError(std::string(kVersionField) + ": unsupported version '" + it->second + "' (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  return out;
}

void write_config_file(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << config_ini(config);
}

std::filesystem::path default_dataset_dir() {
  const char* value = std::getenv("SPGYM_DATASET_DIR");
  return value ? std::filesystem::path(value) : std::filesystem::path();
}

}  // namespace spgym
