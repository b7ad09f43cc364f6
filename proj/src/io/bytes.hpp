#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "ddavs/error.hpp"

namespace ddavs::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s);
  }

  const std::string& buffer() const noexcept { return buf_; }
  /// Writes the buffer to `path` and returns the byte count.
  std::size_t save(const std::filesystem::path& path) const;

 private:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}
  static ByteReader from_file(const std::filesystem::path& path);

  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view v(data_.data() + pos_, n);
    pos_ += n;
    return v;
  }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    const std::uint64_t n = u64();
    return std::string(bytes(n));
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  const std::string& what() const noexcept { return what_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw DecodeError(DecodeError::Kind::Truncated,
                        what_ + ": truncated at byte " + std::to_string(pos_) + ", needed " +
                            std::to_string(n) + " more, have " + std::to_string(remaining()));
    }
  }

 private:
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace ddavs::io
