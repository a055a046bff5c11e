#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spgym/harness.hpp"

namespace spgym {

inline constexpr int kConfigVersion = 1;

/// Flat "section.key" -> value mapping. Used for config files and for the
/// config dictionaries handed in by language bindings.
using ConfigMap = std::map<std::string, std::string>;

/// Canonical field names, e.g. "env.dims", "run.seed".
std::vector<std::string> config_field_names();

/// Maps a flat alias ("dims", "seed", "pool_size", ...) or a canonical name to
/// its canonical name. Throws ConfigError for unknown fields.
std::string canonical_field(std::string_view key);

/// Applies every entry of `values` on top of `base`. Throws ConfigError whose
/// message starts with the offending field name.
RunConfig apply_config_map(RunConfig base, const ConfigMap& values);

/// Every field in canonical form, plus "spgym.config_version".
ConfigMap to_config_map(const RunConfig& config);

/// INI text: one [section] per prefix, keys sorted.
std::string config_ini(const RunConfig& config);

/// Reads an INI file into a ConfigMap. Rejects unsupported config versions.
ConfigMap read_config_file(const std::filesystem::path& path);

void write_config_file(const std::filesystem::path& path, const RunConfig& config);

/// Value of SPGYM_DATASET_DIR, or empty.
std::filesystem::path default_dataset_dir();

}  // namespace spgym
