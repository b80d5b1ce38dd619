#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "edukg/common/error.h"

namespace edukg::kb::io {

inline constexpr char kMagic[8] = {'E', 'K', 'G', 'K', 'B', '0', '1', '\0'};
inline constexpr uint32_t kVersion = 1;

class Writer {
 public:
  void U8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void F64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    U64(bits);
  }
  void Str(std::string_view s) {
    U32(static_cast<uint32_t>(s.size()));
    buf_.append(s);
  }
  void Header() {
    buf_.append(kMagic, sizeof kMagic);
    U32(kVersion);
  }
  size_t size() const { return buf_.size(); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string name) : data_(data), name_(std::move(name)) {}

  uint8_t U8() { return static_cast<uint8_t>(Take(1)[0]); }
  uint32_t U32() {
    auto b = Take(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(b[i]);
    return v;
  }
  uint64_t U64() {
    auto b = Take(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(b[i]);
    return v;
  }
  double F64() {
    uint64_t bits = U64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string Str() {
    uint32_t n = U32();
    return std::string(Take(n));
  }
  void Header() {
    if (Take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
      throw DataError(name_ + ": bad magic bytes");
    }
    uint32_t version = U32();
    if (version != kVersion) throw DataError(name_ + ": unsupported version " + std::to_string(version));
  }
  size_t pos() const { return pos_; }
  void Seek(size_t pos) {
    if (pos > data_.size()) throw DataError(name_ + ": offset out of range");
    pos_ = pos;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view Take(size_t n) {
    if (data_.size() - pos_ < n) throw DataError(name_ + ": truncated file");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::string_view data_;
  std::string name_;
  size_t pos_ = 0;
};

}  // namespace edukg::kb::io
