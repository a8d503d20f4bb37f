#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "colgrade/errors.hpp"

// Little-endian byte packing shared by the binary containers (VVOL, QNET1,
// CLF1). Explicit per-byte packing keeps the files identical across
// platforms.
namespace colgrade::bytes {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

inline void put_f64(std::string& out, double f) {
  std::uint64_t bits;
  std::memcpy(&bits, &f, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const char* p, std::size_t n, std::string ctx)
      : p_(p), n_(n), ctx_(std::move(ctx)) {}
  Reader(const std::string& s, std::string ctx)
      : Reader(s.data(), s.size(), std::move(ctx)) {}

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint8_t>(p_[pos_]) |
                      (static_cast<std::uint16_t>(
                           static_cast<std::uint8_t>(p_[pos_ + 1]))
                       << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(p_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(p_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double f;
    std::memcpy(&f, &bits, 8);
    return f;
  }
  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, p_ + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return n_ - pos_; }
  std::size_t position() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > n_) throw FormatError(ctx_ + ": truncated payload");
  }
  const char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
  std::string ctx_;
};

inline std::string read_file(const std::string& path, const std::string& ctx) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(ctx + ": cannot open: " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& buf,
                       const std::string& ctx) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(ctx + ": cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError(ctx + ": write failed: " + path);
}

}  // namespace colgrade::bytes
