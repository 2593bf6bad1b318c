#include "sadd/checkpoint.hpp"

#include "binio.hpp"

namespace sadd {

namespace {
constexpr char kMagic[5] = "SADD";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxElems = std::uint64_t(1) << 40;
}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams<float>& params) {
  const auto names = param_names(params.config);
  if (names.size() != params.tensors.size())
    throw DataError("save_checkpoint: tensor list does not match the config");
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  const std::string cfg = arch_to_text(params.config);
  w.u32(std::uint32_t(cfg.size()));
  w.raw(cfg);
  w.u32(std::uint32_t(params.tensors.size()));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const auto& t = params.tensors[i];
    w.u32(std::uint32_t(names[i].size()));
    w.raw(names[i]);
    w.u32(std::uint32_t(t.rank()));
    for (std::size_t e : t.shape()) w.u64(e);
    for (float v : t.data()) w.f32(v);
  }
  detail::write_file(path, w.data());
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), "checkpoint " + path.string());
  if (r.raw(4, "magic") != kMagic)
    throw FormatError(FormatFault::BadMagic,
                      "not a model checkpoint: " + path.string());
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError(FormatFault::BadVersion,
                      "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t cfg_len = r.u32();
  ArchConfig cfg;
  try {
    cfg = arch_from_text(r.raw(cfg_len, "config"));
  } catch (const ConfigError& e) {
    throw FormatError(FormatFault::Corrupt,
                      "bad config block in " + path.string() + ": " + e.what());
  }

  const auto names = param_names(cfg);
  const std::uint32_t count = r.u32();
  if (count != names.size())
    throw FormatError(FormatFault::Corrupt,
                      "checkpoint holds " + std::to_string(count) +
                          " tensors, config expects " + std::to_string(names.size()));

  ModelParams<float> out;
  out.config = cfg;
  out.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.raw(name_len, "tensor name");
    if (name != names[i])
      throw FormatError(FormatFault::Corrupt,
                        "tensor " + std::to_string(i) + " is named '" + name +
                            "', expected '" + names[i] + "'");
    const std::uint32_t rank = r.u32();
    if (rank > 8)
      throw FormatError(FormatFault::Corrupt, "tensor rank out of range");
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& e : shape) {
      const std::uint64_t ext = r.u64();
      if (ext == 0) throw FormatError(FormatFault::ZeroExtent, "zero extent");
      if (ext > kMaxElems || numel > kMaxElems / ext)
        throw FormatError(FormatFault::ExtentOverflow,
                          "extent product overflows in " + path.string());
      numel *= ext;
      e = std::size_t(ext);
    }
    if (r.remaining() < numel * 4)
      throw FormatError(FormatFault::Truncated,
                        "payload truncated in " + path.string());
    std::vector<float> data(numel);
    for (auto& v : data) v = r.f32();
    Tensor<float> t(std::move(shape), std::move(data));
    t.set_requires_grad(true);
    out.tensors.push_back(std::move(t));
  }
  r.expect_end();

  // cross-check the loaded shapes against a skeleton built from the config
  const auto skeleton = init_params<float>(cfg, 0);
  for (std::size_t i = 0; i < count; ++i)
    if (out.tensors[i].shape() != skeleton.tensors[i].shape())
      throw FormatError(FormatFault::Corrupt,
                        "tensor '" + names[i] + "' has shape " +
                            shape_str(out.tensors[i].shape()) + ", expected " +
                            shape_str(skeleton.tensors[i].shape()));
  return out;
}

}  // namespace sadd
