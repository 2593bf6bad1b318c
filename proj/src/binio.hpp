#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "sadd/errors.hpp"

// Little-endian byte packing shared by the SDT1 tensor files and model
// checkpoints. Explicit shifts keep the on-disk layout host-independent.

namespace sadd::detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const std::string& s) { buf_ += s; }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string buf, std::string what)
      : buf_(std::move(buf)), what_(std::move(what)) {}

  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(std::uint8_t(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t(std::uint8_t(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string raw(std::size_t n, const char* field) {
    need(n, field);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0)
      throw FormatError(FormatFault::Corrupt,
                        what_ + ": " + std::to_string(remaining()) +
                            " trailing bytes after payload");
  }

 private:
  void need(std::size_t n, const char* field) const {
    if (buf_.size() - pos_ < n)
      throw FormatError(FormatFault::Truncated,
                        what_ + ": truncated while reading " + field);
  }
  std::string buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(bytes.data(), std::streamsize(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  if (is.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

}  // namespace sadd::detail
