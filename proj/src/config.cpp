#include "sadd/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sadd {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ConfigMap default_config() {
  ConfigMap m;
  m["data.n_train_videos"] = "200";
  m["data.n_test_videos"] = "50";
  m["data.windows_per_video"] = "3";
  m["data.fake_ratio"] = "0.5";
  m["data.fake_mix_audio"] = "0.4";
  m["data.fake_mix_visual"] = "0.4";
  m["data.fake_mix_both"] = "0.2";
  m["data.seed"] = "42";

  const ArchConfig arch = ArchConfig::shallow_default();
  m["arch.audio_sample_len"] = std::to_string(arch.audio_sample_len);
  m["arch.video_frames"] = std::to_string(arch.video_frames);
  m["arch.frame_channels"] = std::to_string(arch.frame_channels);
  m["arch.frame_height"] = std::to_string(arch.frame_height);
  m["arch.frame_width"] = std::to_string(arch.frame_width);
  m["arch.feature_dim"] = std::to_string(arch.feature_dim);
  m["arch.head_hidden_dim"] = std::to_string(arch.head_hidden_dim);
  m["arch.audio_blocks"] = conv1d_blocks_to_text(arch.audio_blocks);
  m["arch.visual_blocks"] = conv3d_blocks_to_text(arch.visual_blocks);

  m["train.epochs"] = "50";
  m["train.learning_rate"] = "0.001";
  m["train.batch_size"] = "8";
  m["train.weight_decay"] = "1e-05";
  m["train.alpha"] = "1";
  m["train.variant"] = "stats";
  m["train.seed"] = "42";
  return m;
}

ConfigMap parse_config_text(const std::string& text, const std::string& where) {
  ConfigMap m;
  std::istringstream is(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(where + ":" + std::to_string(lineno) + ": empty section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ":" + std::to_string(lineno) +
                        ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(where + ":" + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError(where + ":" + std::to_string(lineno) +
                        ": key '" + key + "' outside any [section]");
    m[section + "." + key] = value;
  }
  return m;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text, path.string());
}

void apply_override(ConfigMap& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must be section.key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (!default_config().count(key))
    throw ConfigError("unknown config key '" + key + "'");
  cfg[key] = value;
}

void validate_known_keys(const ConfigMap& cfg) {
  const ConfigMap known = default_config();
  for (const auto& [key, value] : cfg) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != "data" && section != "arch" && section != "train")
      continue;  // run.meta carries extra sections; ignore them
    if (!known.count(key))
      throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string render_config(const ConfigMap& cfg) {
  // group by section; std::map already sorts keys
  std::ostringstream os;
  std::string current;
  for (const auto& [key, value] : cfg) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) os << "\n";
      os << "[" << section << "]\n";
      current = section;
    }
    os << key.substr(dot + 1) << " = " << value << "\n";
  }
  return os.str();
}

const std::string& cfg_str(const ConfigMap& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double cfg_double(const ConfigMap& cfg, const std::string& key) {
  const std::string& s = cfg_str(cfg, key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: '" + s + "'");
  }
}

std::uint64_t cfg_u64(const ConfigMap& cfg, const std::string& key) {
  const std::string& s = cfg_str(cfg, key);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("config key '" + key + "' is not a non-negative integer: '" +
                      s + "'");
  return v;
}

ArchConfig arch_from_map(const ConfigMap& cfg) {
  ArchConfig a;
  a.audio_sample_len = cfg_u64(cfg, "arch.audio_sample_len");
  a.video_frames = cfg_u64(cfg, "arch.video_frames");
  a.frame_channels = cfg_u64(cfg, "arch.frame_channels");
  a.frame_height = cfg_u64(cfg, "arch.frame_height");
  a.frame_width = cfg_u64(cfg, "arch.frame_width");
  a.feature_dim = cfg_u64(cfg, "arch.feature_dim");
  a.head_hidden_dim = cfg_u64(cfg, "arch.head_hidden_dim");
  a.audio_blocks = conv1d_blocks_from_text(cfg_str(cfg, "arch.audio_blocks"));
  a.visual_blocks = conv3d_blocks_from_text(cfg_str(cfg, "arch.visual_blocks"));
  return a;
}

GenConfig gen_from_map(const ConfigMap& cfg) {
  GenConfig g;
  g.n_train_videos = cfg_u64(cfg, "data.n_train_videos");
  g.n_test_videos = cfg_u64(cfg, "data.n_test_videos");
  g.windows_per_video = cfg_u64(cfg, "data.windows_per_video");
  g.fake_ratio = cfg_double(cfg, "data.fake_ratio");
  g.fake_mix_audio = cfg_double(cfg, "data.fake_mix_audio");
  g.fake_mix_visual = cfg_double(cfg, "data.fake_mix_visual");
  g.fake_mix_both = cfg_double(cfg, "data.fake_mix_both");
  const ArchConfig a = arch_from_map(cfg);
  g.window.audio_window = a.audio_sample_len;
  g.window.frames_per_window = a.video_frames;
  g.window.frame_channels = a.frame_channels;
  g.window.frame_height = a.frame_height;
  g.window.frame_width = a.frame_width;
  return g;
}

std::uint64_t gen_seed_from_map(const ConfigMap& cfg) {
  return cfg_u64(cfg, "data.seed");
}

TrainConfig train_from_map(const ConfigMap& cfg) {
  TrainConfig t;
  t.epochs = cfg_u64(cfg, "train.epochs");
  t.learning_rate = cfg_double(cfg, "train.learning_rate");
  t.batch_size = cfg_u64(cfg, "train.batch_size");
  t.weight_decay = cfg_double(cfg, "train.weight_decay");
  t.alpha = cfg_double(cfg, "train.alpha");
  t.variant = variant_from_str(cfg_str(cfg, "train.variant"));
  t.seed = cfg_u64(cfg, "train.seed");
  t.arch = arch_from_map(cfg);
  return t;
}

}  // namespace sadd
