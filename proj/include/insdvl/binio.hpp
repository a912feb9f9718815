#pragma once

#include <bit>
#include <cstdint>
#include <string>

#include "insdvl/errors.hpp"

namespace insdvl {

// Little-endian append/read helpers shared by the dataset and checkpoint
// formats. Readers are bounds-checked and throw CorruptManifest on overrun.

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& buf, float v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::string& buf, double v) {
  put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
 public:
  ByteReader(const std::string& data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float get_f32() { return std::bit_cast<float>(get_u32()); }
  double get_f64() { return std::bit_cast<double>(get_u64()); }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

  void expect_exhausted() const {
    if (pos_ != data_.size()) {
      throw CorruptManifest(what_ + ": trailing bytes beyond declared records");
    }
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw CorruptManifest(what_ + ": truncated");
    }
  }

  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

// Binary whole-file I/O. Throws IoError on failure.
void write_binary_file(const std::string& path, const std::string& content);
std::string read_binary_file(const std::string& path);

}  // namespace insdvl
