#include "sadd/tensor_io.hpp"

#include "binio.hpp"

namespace sadd {

namespace {
constexpr char kMagic[5] = "SDT1";
// Hard cap on claimed payloads: 2^40 elements (4 TiB of floats).
constexpr std::uint64_t kMaxElems = std::uint64_t(1) << 40;
}  // namespace

void write_tensor(const std::filesystem::path& path, const Tensor<float>& t) {
  for (std::size_t e : t.shape())
    if (e == 0)
      throw FormatError(FormatFault::ZeroExtent,
                        "write_tensor: zero extent in shape " + shape_str(t.shape()));
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(std::uint32_t(t.rank()));
  for (std::size_t e : t.shape()) w.u64(e);
  for (float v : t.data()) w.f32(v);
  detail::write_file(path, w.data());
}

Tensor<float> read_tensor(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), "tensor " + path.string());
  if (r.raw(4, "magic") != kMagic)
    throw FormatError(FormatFault::BadMagic,
                      "not an SDT1 tensor file: " + path.string());
  const std::uint32_t rank = r.u32();
  if (rank > 8)
    throw FormatError(FormatFault::Corrupt,
                      "tensor rank " + std::to_string(rank) + " out of range");
  Shape shape(rank);
  std::uint64_t numel = 1;
  for (auto& e : shape) {
    const std::uint64_t ext = r.u64();
    if (ext == 0)
      throw FormatError(FormatFault::ZeroExtent,
                        "zero extent in " + path.string());
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
  r.expect_end();
  return Tensor<float>(std::move(shape), std::move(data));
}

}  // namespace sadd
