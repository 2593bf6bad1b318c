#include "sadd/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "sadd/det_trig.hpp"
#include "sadd/rng.hpp"
#include "sadd/tensor_io.hpp"

namespace sadd {

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Smooth positive envelope, one dominant cycle per window plus two faster
// minor components. Values stay in [0.06, 1.18].
struct EnvelopeParams {
  double base = 0.62;
  double amp[3] = {0, 0, 0};
  double cycles[3] = {1, 2, 3};  // per window
  double phase[3] = {0, 0, 0};
};

// u is time in window units.
double envelope_value(const EnvelopeParams& e, double u) {
  double v = e.base;
  for (int j = 0; j < 3; ++j)
    v += e.amp[j] * det_sin(kTwoPi * e.cycles[j] * u + e.phase[j]);
  return v;
}

struct CarrierParams {
  double amp[3];
  double cycles[3];  // per window
  double phase[3];
};

EnvelopeParams draw_envelope(Xoshiro256& rng) {
  EnvelopeParams e;
  e.base = 0.62;
  e.amp[0] = rng.uniform(0.28, 0.40);
  e.cycles[0] = 1.0;
  e.phase[0] = rng.uniform(0.0, kTwoPi);
  for (int j = 1; j < 3; ++j) {
    e.amp[j] = rng.uniform(0.02, 0.06);
    e.cycles[j] = double(2 + rng.below(2));  // 2 or 3
    e.phase[j] = rng.uniform(0.0, kTwoPi);
  }
  return e;
}

// Fresh envelope whose dominant component is forced out of phase with a
// reference phase, so the two series decorrelate.
EnvelopeParams draw_decorrelated_envelope(Xoshiro256& rng, double ref_phase) {
  EnvelopeParams e = draw_envelope(rng);
  e.phase[0] = ref_phase + kTwoPi * rng.uniform(0.3, 0.7);
  return e;
}

// Carrier bands are fast (>= 3 cycles per frame window) and mutually well
// separated, so per-frame-window RMS tracks the envelope instead of carrier
// beat patterns.
//
// Genuine audio always rides the same standard carrier set: a per-video
// carrier draw would be an identity key the contrastive loss memorizes in
// place of the envelope. Audio-broken fakes re-randomize the carrier
// frequencies and phases, which is the synthesis artifact the audio branch
// may legitimately pick up.
CarrierParams standard_carriers() {
  CarrierParams c;
  c.amp[0] = 0.45;
  c.amp[1] = 0.27;
  c.amp[2] = 0.18;
  c.cycles[0] = 28.0;
  c.cycles[1] = 48.0;
  c.cycles[2] = 84.0;
  c.phase[0] = 0.0;
  c.phase[1] = 2.1;
  c.phase[2] = 4.2;
  return c;
}

CarrierParams draw_carriers(Xoshiro256& rng) {
  static constexpr double kBands[3][2] = {{24, 32}, {40, 56}, {72, 96}};
  CarrierParams c = standard_carriers();
  for (int k = 0; k < 3; ++k) {
    c.cycles[k] = rng.uniform(kBands[k][0], kBands[k][1]);
    c.phase[k] = rng.uniform(0.0, kTwoPi);
  }
  return c;
}

struct BlobParams {
  double radius, x0, y0, vx, vy;
  double color[3];
};

// The blob trajectory and tint are fixed: the only video-specific visual
// content is the brightness envelope, which is the cross-modal signal. Any
// per-video appearance randomness would hand the contrastive loss a
// fingerprint to memorize instead.
BlobParams fixed_blob(std::size_t h, std::size_t w) {
  BlobParams b;
  b.radius = 6.0;
  b.x0 = double(w) * 0.35;
  b.y0 = double(h) * 0.45;
  b.vx = 0.7;
  b.vy = 0.45;
  b.color[0] = 1.0;
  b.color[1] = 0.75;
  b.color[2] = 0.55;
  return b;
}

// Triangle-wave reflection keeping p inside [lo, hi].
double reflect(double p, double lo, double hi) {
  if (hi <= lo) return lo;
  const double span = hi - lo;
  double q = std::fmod(p - lo, 2.0 * span);
  if (q < 0) q += 2.0 * span;
  return lo + (q <= span ? q : 2.0 * span - q);
}

struct VideoPlan {
  Label label;
  EnvelopeParams visual_env;
  EnvelopeParams audio_env;
  double audio_shift = 0;  // in window units, applied to the audio envelope
  CarrierParams carriers;
  BlobParams blob;
  std::string gen_params;
};

VideoPlan plan_video(const Label& label, const WindowConfig& win,
                     Xoshiro256& rng) {
  VideoPlan p;
  p.label = label;
  const EnvelopeParams base = draw_envelope(rng);
  p.carriers = standard_carriers();
  p.blob = fixed_blob(win.frame_height, win.frame_width);
  p.visual_env = base;
  p.audio_env = base;

  std::ostringstream notes;
  switch (label.provenance) {
    case FakeProvenance::None:
      notes << "aligned";
      break;
    case FakeProvenance::AudioOnly:
      p.audio_shift = rng.uniform(0.25, 0.4);
      p.carriers = draw_carriers(rng);
      notes << "shift=" << p.audio_shift;
      break;
    case FakeProvenance::VisualOnly:
      p.visual_env = draw_decorrelated_envelope(rng, base.phase[0]);
      notes << "visual_env=independent";
      break;
    case FakeProvenance::Both:
      p.audio_shift = rng.uniform(0.25, 0.4);
      p.carriers = draw_carriers(rng);
      // stay out of phase with the *shifted* audio envelope
      p.visual_env = draw_decorrelated_envelope(
          rng, base.phase[0] - kTwoPi * p.audio_shift);
      notes << "shift=" << p.audio_shift << ";visual_env=independent";
      break;
  }
  p.gen_params = notes.str();
  return p;
}

Tensor<float> synth_audio(const VideoPlan& p, const WindowConfig& win,
                          std::size_t n_windows) {
  const std::size_t total = n_windows * win.audio_window;
  std::vector<float> data(total);
  for (std::size_t i = 0; i < total; ++i) {
    const double u = (double(i) + 0.5) / double(win.audio_window);
    const double env = envelope_value(p.audio_env, u - p.audio_shift);
    double carrier = 0;
    for (int k = 0; k < 3; ++k)
      carrier += p.carriers.amp[k] *
                 det_sin(kTwoPi * p.carriers.cycles[k] * u + p.carriers.phase[k]);
    data[i] = float(env * carrier);
  }
  return Tensor<float>({total, 1}, std::move(data));
}

Tensor<float> synth_frames(const VideoPlan& p, const WindowConfig& win,
                           std::size_t n_windows) {
  const std::size_t frames = n_windows * win.frames_per_window;
  const std::size_t c = win.frame_channels, h = win.frame_height, w = win.frame_width;
  std::vector<float> data(frames * c * h * w);
  const double r2 = p.blob.radius * p.blob.radius;
  std::size_t at = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double u = (double(t) + 0.5) / double(win.frames_per_window);
    const double brightness = 0.8 * envelope_value(p.visual_env, u);
    const double cx = reflect(p.blob.x0 + p.blob.vx * double(t), p.blob.radius,
                              double(w - 1) - p.blob.radius);
    const double cy = reflect(p.blob.y0 + p.blob.vy * double(t), p.blob.radius,
                              double(h - 1) - p.blob.radius);
    for (std::size_t ci = 0; ci < c; ++ci) {
      const double gain = brightness * p.blob.color[ci % 3];
      for (std::size_t yi = 0; yi < h; ++yi) {
        const double dy = double(yi) - cy;
        for (std::size_t xi = 0; xi < w; ++xi, ++at) {
          const double dx = double(xi) - cx;
          const double s = (dx * dx + dy * dy) / r2;
          const double bump = s >= 1.0 ? 0.0 : (1.0 - s) * (1.0 - s);
          data[at] = float(gain * bump);
        }
      }
    }
  }
  return Tensor<float>({frames, c, h, w}, std::move(data));
}

std::size_t rounded(double x) { return std::size_t(std::floor(x + 0.5)); }

struct LabelCounts {
  std::size_t real, fake_audio, fake_visual, fake_both;
};

LabelCounts label_counts(const GenConfig& cfg, std::size_t n) {
  const std::size_t n_fake = rounded(double(n) * cfg.fake_ratio);
  std::size_t a = rounded(double(n_fake) * cfg.fake_mix_audio);
  std::size_t v = rounded(double(n_fake) * cfg.fake_mix_visual);
  if (a + v > n_fake) {
    const std::size_t excess = a + v - n_fake;
    v -= std::min(v, excess);
    if (a + v > n_fake) a = n_fake - v;
  }
  const std::size_t b = n_fake - a - v;
  return {n - n_fake, a, v, b};
}

Label label_for_index(const LabelCounts& c, std::size_t i) {
  if (i < c.real) return Label::real();
  i -= c.real;
  if (i < c.fake_audio) return Label::fake(FakeProvenance::AudioOnly);
  i -= c.fake_audio;
  if (i < c.fake_visual) return Label::fake(FakeProvenance::VisualOnly);
  return Label::fake(FakeProvenance::Both);
}

std::string video_name(const std::string& split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", split.c_str(), i);
  return buf;
}

std::vector<VideoRecord> generate_split(const GenConfig& cfg, std::uint64_t seed,
                                        const std::string& split,
                                        std::uint64_t split_tag, std::size_t n) {
  const LabelCounts counts = label_counts(cfg, n);
  std::vector<VideoRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Xoshiro256 params_rng = Xoshiro256::stream(seed, split_tag, i * 2);
    const Label label = label_for_index(counts, i);
    const VideoPlan plan = plan_video(label, cfg.window, params_rng);

    VideoRecord rec;
    rec.video_id = video_name(split, i);
    rec.label = label;
    rec.gen_params = plan.gen_params;
    rec.raw_audio = synth_audio(plan, cfg.window, cfg.windows_per_video);
    rec.raw_frames = synth_frames(plan, cfg.window, cfg.windows_per_video);
    rec.subsequences = extract_subsequences(rec.raw_audio, rec.raw_frames,
                                            cfg.window, label, rec.video_id);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

void GenConfig::validate() const {
  if (n_train_videos < 1 || n_test_videos < 1)
    throw ConfigError("dataset needs at least one video per split");
  if (windows_per_video < 1)
    throw ConfigError("windows_per_video must be >= 1");
  if (fake_ratio < 0.0 || fake_ratio > 1.0)
    throw ConfigError("fake_ratio must be in [0, 1]");
  if (fake_mix_audio < 0 || fake_mix_visual < 0 || fake_mix_both < 0 ||
      std::abs(fake_mix_audio + fake_mix_visual + fake_mix_both - 1.0) > 1e-6)
    throw ConfigError("fake provenance mix must be non-negative and sum to 1");
  if (window.audio_window < 1 || window.frames_per_window < 1 ||
      window.frame_channels < 1 || window.frame_height < 8 || window.frame_width < 8)
    throw ConfigError("window config too small (frames must be at least 8x8)");
}

std::pair<std::vector<VideoRecord>, std::vector<VideoRecord>>
generate_synthetic_dataset(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return {generate_split(cfg, seed, "train", 0, cfg.n_train_videos),
          generate_split(cfg, seed, "test", 1, cfg.n_test_videos)};
}

std::vector<AVSample> extract_subsequences(const Tensor<float>& raw_audio,
                                           const Tensor<float>& raw_frames,
                                           const WindowConfig& win,
                                           const Label& label,
                                           const std::string& video_id) {
  if (raw_audio.rank() != 2 || raw_audio.shape()[1] != 1)
    throw ShapeError("extract_subsequences: raw audio must be [T x 1], got " +
                     shape_str(raw_audio.shape()));
  if (raw_frames.rank() != 4 || raw_frames.shape()[1] != win.frame_channels ||
      raw_frames.shape()[2] != win.frame_height ||
      raw_frames.shape()[3] != win.frame_width)
    throw ShapeError("extract_subsequences: raw frames " +
                     shape_str(raw_frames.shape()) +
                     " do not match the window config");
  const std::size_t n_audio = raw_audio.shape()[0] / win.audio_window;
  const std::size_t n_frames = raw_frames.shape()[0] / win.frames_per_window;
  const std::size_t n = std::min(n_audio, n_frames);
  if (n == 0)
    throw DataError("extract_subsequences: stream shorter than one window (" +
                    std::to_string(raw_audio.shape()[0]) + " samples, " +
                    std::to_string(raw_frames.shape()[0]) + " frames)");

  const std::size_t frame_sz =
      win.frame_channels * win.frame_height * win.frame_width;
  std::vector<AVSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    AVSample s;
    s.label = label;
    s.video_id = video_id;
    s.subseq_index = i;
    {
      const float* src = raw_audio.data().data() + i * win.audio_window;
      s.audio = Tensor<float>({win.audio_window, 1},
                              std::vector<float>(src, src + win.audio_window));
    }
    {
      const float* src =
          raw_frames.data().data() + i * win.frames_per_window * frame_sz;
      s.frames = Tensor<float>(
          {win.frames_per_window, win.frame_channels, win.frame_height, win.frame_width},
          std::vector<float>(src, src + win.frames_per_window * frame_sz));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// On-disk dataset.

namespace {
constexpr int kManifestVersion = 1;
}

void save_dataset(const std::filesystem::path& dir, const std::string& split,
                  const std::vector<VideoRecord>& videos,
                  const WindowConfig& win) {
  namespace fs = std::filesystem;
  const fs::path split_dir = dir / split;
  fs::create_directories(split_dir);

  std::ostringstream manifest;
  manifest << "#sadd-dataset\tversion=" << kManifestVersion << "\tsplit=" << split
           << "\taudio_window=" << win.audio_window
           << "\tframes_per_window=" << win.frames_per_window
           << "\tframe_channels=" << win.frame_channels
           << "\tframe_height=" << win.frame_height
           << "\tframe_width=" << win.frame_width << "\n";
  for (const auto& v : videos) {
    const std::string audio_file = v.video_id + ".audio.sdt";
    const std::string frames_file = v.video_id + ".frames.sdt";
    write_tensor(split_dir / audio_file, v.raw_audio);
    write_tensor(split_dir / frames_file, v.raw_frames);
    manifest << v.video_id << "\t" << label_value_str(v.label.value) << "\t"
             << provenance_str(v.label.provenance) << "\t"
             << (v.gen_params.empty() ? "-" : v.gen_params) << "\t" << audio_file
             << "\t" << frames_file << "\n";
  }
  detail::write_file(split_dir / "manifest.tsv", manifest.str());
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::size_t header_field(const std::vector<std::string>& fields,
                         const std::string& key, const std::string& where) {
  for (const auto& f : fields) {
    if (f.rfind(key + "=", 0) == 0) {
      try {
        return std::stoull(f.substr(key.size() + 1));
      } catch (const std::exception&) {
        throw DataError("bad manifest header field '" + f + "' in " + where);
      }
    }
  }
  throw DataError("manifest header missing '" + key + "' in " + where);
}

}  // namespace

std::vector<VideoRecord> load_dataset(const std::filesystem::path& dir,
                                      const std::string& split) {
  namespace fs = std::filesystem;
  const fs::path split_dir = dir / split;
  const fs::path manifest_path = split_dir / "manifest.tsv";
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open manifest: " + manifest_path.string());

  std::string line;
  if (!std::getline(is, line) || line.rfind("#sadd-dataset", 0) != 0)
    throw DataError("not a dataset manifest: " + manifest_path.string());
  const auto header = split_tabs(line);
  const std::string where = manifest_path.string();
  if (header_field(header, "version", where) != kManifestVersion)
    throw DataError("unsupported manifest version in " + where);
  WindowConfig win;
  win.audio_window = header_field(header, "audio_window", where);
  win.frames_per_window = header_field(header, "frames_per_window", where);
  win.frame_channels = header_field(header, "frame_channels", where);
  win.frame_height = header_field(header, "frame_height", where);
  win.frame_width = header_field(header, "frame_width", where);

  std::vector<VideoRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 6)
      throw DataError("manifest line " + std::to_string(lineno) + " has " +
                      std::to_string(f.size()) + " fields, expected 6");
    VideoRecord rec;
    rec.video_id = f[0];
    const LabelValue lv = label_value_from_str(f[1]);
    const FakeProvenance prov = provenance_from_str(f[2]);
    if ((lv == LabelValue::Real) != (prov == FakeProvenance::None))
      throw DataError("label/provenance mismatch for video '" + rec.video_id + "'");
    rec.label = Label{lv, prov};
    rec.gen_params = f[3] == "-" ? "" : f[3];
    rec.raw_audio = read_tensor(split_dir / f[4]);
    rec.raw_frames = read_tensor(split_dir / f[5]);
    rec.subsequences = extract_subsequences(rec.raw_audio, rec.raw_frames, win,
                                            rec.label, rec.video_id);
    out.push_back(std::move(rec));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (out[i].video_id == out[j].video_id)
        throw DataError("duplicate video_id '" + out[i].video_id + "' in " + where);
  return out;
}

std::vector<AVSample> flatten_samples(const std::vector<VideoRecord>& videos) {
  std::vector<AVSample> out;
  for (const auto& v : videos)
    out.insert(out.end(), v.subsequences.begin(), v.subsequences.end());
  return out;
}

DatasetSummary summarize(const std::vector<VideoRecord>& videos) {
  DatasetSummary s;
  s.n_videos = videos.size();
  for (const auto& v : videos) {
    s.n_subsequences += v.subsequences.size();
    switch (v.label.provenance) {
      case FakeProvenance::None: ++s.n_real; break;
      case FakeProvenance::AudioOnly: ++s.n_fake_audio; break;
      case FakeProvenance::VisualOnly: ++s.n_fake_visual; break;
      case FakeProvenance::Both: ++s.n_fake_both; break;
    }
  }
  return s;
}

std::vector<double> frame_brightness_series(const Tensor<float>& raw_frames) {
  const std::size_t frames = raw_frames.shape()[0];
  const std::size_t per_frame = raw_frames.numel() / frames;
  std::vector<double> out(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    double acc = 0;
    const float* p = raw_frames.data().data() + t * per_frame;
    for (std::size_t i = 0; i < per_frame; ++i) acc += p[i];
    out[t] = acc / double(per_frame);
  }
  return out;
}

std::vector<double> audio_rms_series(const Tensor<float>& raw_audio,
                                     std::size_t samples_per_frame) {
  const std::size_t n = raw_audio.shape()[0] / samples_per_frame;
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0;
    const float* p = raw_audio.data().data() + t * samples_per_frame;
    for (std::size_t i = 0; i < samples_per_frame; ++i)
      acc += double(p[i]) * double(p[i]);
    out[t] = std::sqrt(acc / double(samples_per_frame));
  }
  return out;
}

double pearson_correlation(const std::vector<double>& a,
                           const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) throw DataError("pearson_correlation: need at least two points");
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace sadd
