#include "sadd/model.hpp"

#include <charconv>
#include <sstream>

#include "sadd/errors.hpp"

namespace sadd {

ArchConfig ArchConfig::shallow_default() {
  ArchConfig c;
  c.audio_blocks = {
      {.channels = 16, .kernel = 9, .stride = 4, .pool = false},
      {.channels = 32, .kernel = 5, .stride = 2, .pool = true, .pool_window = 8, .pool_stride = 8},
  };
  c.visual_blocks = {
      {.channels = 8, .kernel = {3, 3, 3}, .stride = {1, 2, 2}, .pool = false},
      {.channels = 16, .kernel = {3, 3, 3}, .stride = {1, 2, 2}, .pool = false},
      {.channels = 32, .kernel = {3, 3, 3}, .stride = {1, 1, 1}, .pool = true,
       .pool_window = {2, 2, 2}, .pool_stride = {2, 2, 2}},
  };
  return c;
}

ArchConfig ArchConfig::paper_scale() {
  ArchConfig c = shallow_default();
  c.audio_sample_len = 48000;
  c.video_frames = 30;
  c.frame_height = 224;
  c.frame_width = 224;
  return c;
}

ArchConfig ArchConfig::deep_reference() {
  ArchConfig c;
  c.audio_sample_len = 48000;
  c.video_frames = 30;
  c.frame_height = 224;
  c.frame_width = 224;
  c.feature_dim = 256;
  c.head_hidden_dim = 128;
  c.audio_blocks = {
      {.channels = 32, .kernel = 9, .stride = 4, .pool = false},
      {.channels = 64, .kernel = 5, .stride = 2, .pool = false},
      {.channels = 64, .kernel = 3, .stride = 1, .pool = false},
      {.channels = 128, .kernel = 3, .stride = 1, .pool = true, .pool_window = 2, .pool_stride = 2},
  };
  c.visual_blocks = {
      {.channels = 16, .kernel = {3, 3, 3}, .stride = {1, 2, 2}, .pool = false},
      {.channels = 32, .kernel = {3, 3, 3}, .stride = {1, 2, 2}, .pool = false},
      {.channels = 64, .kernel = {3, 3, 3}, .stride = {1, 1, 1}, .pool = false},
      {.channels = 64, .kernel = {3, 3, 3}, .stride = {1, 1, 1}, .pool = false},
      {.channels = 128, .kernel = {3, 3, 3}, .stride = {1, 1, 1}, .pool = true,
       .pool_window = {2, 2, 2}, .pool_stride = {2, 2, 2}},
  };
  return c;
}

namespace {

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t s,
                     const char* what) {
  if (k < 1 || s < 1 || in < k)
    throw ShapeError(std::string(what) + ": extent " + std::to_string(in) +
                     " too small for kernel " + std::to_string(k));
  return (in - k) / s + 1;
}

}  // namespace

BranchShapes audio_shapes(const ArchConfig& cfg) {
  BranchShapes out;
  std::size_t t = cfg.audio_sample_len;
  std::size_t ch = 1;
  for (const auto& b : cfg.audio_blocks) {
    t = conv_out(t, b.kernel, b.stride, "audio block conv");
    ch = b.channels;
    if (b.pool) t = conv_out(t, b.pool_window, b.pool_stride, "audio block pool");
    out.block_out.push_back({t, ch});
  }
  out.flat = t * ch;
  return out;
}

BranchShapes visual_shapes(const ArchConfig& cfg) {
  BranchShapes out;
  std::size_t t = cfg.video_frames, h = cfg.frame_height, w = cfg.frame_width;
  std::size_t ch = cfg.frame_channels;
  for (const auto& b : cfg.visual_blocks) {
    t = conv_out(t, b.kernel[0], b.stride[0], "visual block conv (T)");
    h = conv_out(h, b.kernel[1], b.stride[1], "visual block conv (H)");
    w = conv_out(w, b.kernel[2], b.stride[2], "visual block conv (W)");
    ch = b.channels;
    if (b.pool) {
      t = conv_out(t, b.pool_window[0], b.pool_stride[0], "visual block pool (T)");
      h = conv_out(h, b.pool_window[1], b.pool_stride[1], "visual block pool (H)");
      w = conv_out(w, b.pool_window[2], b.pool_stride[2], "visual block pool (W)");
    }
    out.block_out.push_back({t, ch, h, w});
  }
  out.flat = t * ch * h * w;
  return out;
}

std::size_t param_count(const ArchConfig& cfg) {
  const BranchShapes ash = audio_shapes(cfg);
  const BranchShapes vsh = visual_shapes(cfg);
  std::size_t n = 0;
  std::size_t in_ch = 1;
  for (const auto& b : cfg.audio_blocks) {
    n += b.channels * in_ch * b.kernel + b.channels;
    in_ch = b.channels;
  }
  n += cfg.feature_dim * ash.flat + cfg.feature_dim;
  in_ch = cfg.frame_channels;
  for (const auto& b : cfg.visual_blocks) {
    n += b.channels * in_ch * b.kernel[0] * b.kernel[1] * b.kernel[2] + b.channels;
    in_ch = b.channels;
  }
  n += cfg.feature_dim * vsh.flat + cfg.feature_dim;
  // two heads
  if (cfg.head_hidden_dim > 0)
    n += 2 * (cfg.head_hidden_dim * cfg.feature_dim + cfg.head_hidden_dim +
              2 * cfg.head_hidden_dim + 2);
  else
    n += 2 * (2 * cfg.feature_dim + 2);
  return n;
}

std::vector<std::string> param_names(const ArchConfig& cfg) {
  std::vector<std::string> names;
  auto branch = [&](const std::string& prefix, std::size_t n_blocks) {
    for (std::size_t i = 0; i < n_blocks; ++i) {
      names.push_back(prefix + ".block" + std::to_string(i) + ".kernel");
      names.push_back(prefix + ".block" + std::to_string(i) + ".bias");
    }
    names.push_back(prefix + ".proj.weight");
    names.push_back(prefix + ".proj.bias");
    if (cfg.head_hidden_dim > 0) {
      names.push_back(prefix + ".head.w0");
      names.push_back(prefix + ".head.b0");
      names.push_back(prefix + ".head.w1");
      names.push_back(prefix + ".head.b1");
    } else {
      names.push_back(prefix + ".head.w0");
      names.push_back(prefix + ".head.b0");
    }
  };
  branch("audio", cfg.audio_blocks.size());
  branch("visual", cfg.visual_blocks.size());
  return names;
}

// ---------------------------------------------------------------------------
// Text form. Block grammar:
//   conv1d: channels:kernel:stride:pool[:pool_window:pool_stride]
//   conv3d: channels:KtxKhxKw:StxShxSw:pool[:PWtxPWhxPWw:PStxPShxPSw]
// Blocks are comma-separated.

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::size_t parse_size(const std::string& s, const char* what) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError(std::string("cannot parse ") + what + ": '" + s + "'");
  return v;
}

std::array<std::size_t, 3> parse_triple(const std::string& s, const char* what) {
  auto parts = split(s, 'x');
  if (parts.size() != 3)
    throw ConfigError(std::string("expected AxBxC for ") + what + ": '" + s + "'");
  return {parse_size(parts[0], what), parse_size(parts[1], what),
          parse_size(parts[2], what)};
}

std::string triple_str(const std::array<std::size_t, 3>& a) {
  return std::to_string(a[0]) + "x" + std::to_string(a[1]) + "x" +
         std::to_string(a[2]);
}

}  // namespace

std::string conv1d_blocks_to_text(const std::vector<Conv1dSpec>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (i) out += ",";
    out += std::to_string(b.channels) + ":" + std::to_string(b.kernel) + ":" +
           std::to_string(b.stride) + ":" + (b.pool ? "1" : "0");
    if (b.pool)
      out += ":" + std::to_string(b.pool_window) + ":" + std::to_string(b.pool_stride);
  }
  return out;
}

std::vector<Conv1dSpec> conv1d_blocks_from_text(const std::string& text) {
  std::vector<Conv1dSpec> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    auto f = split(item, ':');
    if (f.size() != 4 && f.size() != 6)
      throw ConfigError("bad conv1d block spec '" + item + "'");
    Conv1dSpec b;
    b.channels = parse_size(f[0], "conv1d channels");
    b.kernel = parse_size(f[1], "conv1d kernel");
    b.stride = parse_size(f[2], "conv1d stride");
    b.pool = parse_size(f[3], "conv1d pool flag") != 0;
    if (b.pool) {
      if (f.size() != 6)
        throw ConfigError("conv1d block '" + item + "' has pool=1 but no pool extents");
      b.pool_window = parse_size(f[4], "conv1d pool window");
      b.pool_stride = parse_size(f[5], "conv1d pool stride");
    }
    out.push_back(b);
  }
  if (out.empty()) throw ConfigError("empty conv1d block list");
  return out;
}

std::string conv3d_blocks_to_text(const std::vector<Conv3dSpec>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (i) out += ",";
    out += std::to_string(b.channels) + ":" + triple_str(b.kernel) + ":" +
           triple_str(b.stride) + ":" + (b.pool ? "1" : "0");
    if (b.pool) out += ":" + triple_str(b.pool_window) + ":" + triple_str(b.pool_stride);
  }
  return out;
}

std::vector<Conv3dSpec> conv3d_blocks_from_text(const std::string& text) {
  std::vector<Conv3dSpec> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    auto f = split(item, ':');
    if (f.size() != 4 && f.size() != 6)
      throw ConfigError("bad conv3d block spec '" + item + "'");
    Conv3dSpec b;
    b.channels = parse_size(f[0], "conv3d channels");
    b.kernel = parse_triple(f[1], "conv3d kernel");
    b.stride = parse_triple(f[2], "conv3d stride");
    b.pool = parse_size(f[3], "conv3d pool flag") != 0;
    if (b.pool) {
      if (f.size() != 6)
        throw ConfigError("conv3d block '" + item + "' has pool=1 but no pool extents");
      b.pool_window = parse_triple(f[4], "conv3d pool window");
      b.pool_stride = parse_triple(f[5], "conv3d pool stride");
    }
    out.push_back(b);
  }
  if (out.empty()) throw ConfigError("empty conv3d block list");
  return out;
}

std::string arch_to_text(const ArchConfig& cfg) {
  std::ostringstream os;
  os << "audio_sample_len=" << cfg.audio_sample_len << "\n"
     << "video_frames=" << cfg.video_frames << "\n"
     << "frame_channels=" << cfg.frame_channels << "\n"
     << "frame_height=" << cfg.frame_height << "\n"
     << "frame_width=" << cfg.frame_width << "\n"
     << "feature_dim=" << cfg.feature_dim << "\n"
     << "head_hidden_dim=" << cfg.head_hidden_dim << "\n"
     << "audio_blocks=" << conv1d_blocks_to_text(cfg.audio_blocks) << "\n"
     << "visual_blocks=" << conv3d_blocks_to_text(cfg.visual_blocks) << "\n";
  return os.str();
}

ArchConfig arch_from_text(const std::string& text) {
  ArchConfig cfg;
  cfg.audio_blocks.clear();
  cfg.visual_blocks.clear();
  std::istringstream is(text);
  std::string line;
  bool have_audio = false, have_visual = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("bad arch line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "audio_sample_len") cfg.audio_sample_len = parse_size(val, key.c_str());
    else if (key == "video_frames") cfg.video_frames = parse_size(val, key.c_str());
    else if (key == "frame_channels") cfg.frame_channels = parse_size(val, key.c_str());
    else if (key == "frame_height") cfg.frame_height = parse_size(val, key.c_str());
    else if (key == "frame_width") cfg.frame_width = parse_size(val, key.c_str());
    else if (key == "feature_dim") cfg.feature_dim = parse_size(val, key.c_str());
    else if (key == "head_hidden_dim") cfg.head_hidden_dim = parse_size(val, key.c_str());
    else if (key == "audio_blocks") { cfg.audio_blocks = conv1d_blocks_from_text(val); have_audio = true; }
    else if (key == "visual_blocks") { cfg.visual_blocks = conv3d_blocks_from_text(val); have_visual = true; }
    else throw ConfigError("unknown arch key '" + key + "'");
  }
  if (!have_audio || !have_visual)
    throw ConfigError("arch text missing audio_blocks or visual_blocks");
  return cfg;
}

}  // namespace sadd
