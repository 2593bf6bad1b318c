#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "sadd/data.hpp"
#include "sadd/model.hpp"
#include "sadd/trainer.hpp"

namespace sadd {

// Flat key = value configuration with [section] headers; '#' and ';' start
// comments. Keys are addressed as "section.key". Overrides use the same
// dotted form ("train.alpha=0.5"). No environment variables.
using ConfigMap = std::map<std::string, std::string>;

// Built-in defaults for the [data], [arch] and [train] sections.
ConfigMap default_config();

ConfigMap parse_config_text(const std::string& text, const std::string& where);
ConfigMap load_config_file(const std::filesystem::path& path);

// Applies "section.key=value"; the key must exist in default_config().
void apply_override(ConfigMap& cfg, const std::string& assignment);

// Rejects keys that are not in default_config(). Sections other than
// data/arch/train are ignored, so run.meta files load as configs.
void validate_known_keys(const ConfigMap& cfg);

std::string render_config(const ConfigMap& cfg);

// typed getters (throw ConfigError on missing key or bad syntax)
const std::string& cfg_str(const ConfigMap& cfg, const std::string& key);
double cfg_double(const ConfigMap& cfg, const std::string& key);
std::uint64_t cfg_u64(const ConfigMap& cfg, const std::string& key);

// struct bindings
ArchConfig arch_from_map(const ConfigMap& cfg);
GenConfig gen_from_map(const ConfigMap& cfg);        // window taken from [arch]
std::uint64_t gen_seed_from_map(const ConfigMap& cfg);
TrainConfig train_from_map(const ConfigMap& cfg);    // arch taken from [arch]

}  // namespace sadd
