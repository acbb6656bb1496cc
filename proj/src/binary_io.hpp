#pragma once

// Little-endian binary readers/writers shared by the container, checkpoint
// and reservoir formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mczsl/errors.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {
namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

class BinaryWriter {
 public:
  void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
  void u32(std::uint32_t v) { put(byteswap_if_big(v)); }
  void u64(std::uint64_t v) { put(byteswap_if_big(v)); }
  void f32(float v) { put(byteswap_if_big(v)); }

  template <class R>
  void f32_array(std::span<const R> values) {
    for (R v : values) f32(static_cast<float>(v));
  }

  template <class I>
  void u32_array(std::span<const I> values) {
    for (I v : values) u32(static_cast<std::uint32_t>(v));
  }

  /// Writes the buffer to `path` in one shot; DataError(io) on failure.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(DataErrorKind::io, "cannot open '" + path.string() + "' for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw DataError(DataErrorKind::io, "write failed for '" + path.string() + "'");
  }

  const std::vector<char>& bytes() const { return buf_; }

 private:
  template <class T>
  void put(T v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  std::vector<char> buf_;
};

class BinaryReader {
 public:
  static BinaryReader open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(DataErrorKind::io, "cannot open '" + path.string() + "'");
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return BinaryReader(std::move(data), path.string());
  }

  BinaryReader(std::vector<char> data, std::string name)
      : data_(std::move(data)), name_(std::move(name)) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::string_view(data_.data() + pos_, m.size()) != m) {
      throw DataError(DataErrorKind::bad_magic, name_ + ": expected '" + std::string(m) + "'");
    }
    pos_ += m.size();
  }

  void expect_version(std::uint32_t expected) {
    const std::uint32_t v = u32();
    if (v != expected) {
      throw DataError(DataErrorKind::version_mismatch,
                      name_ + ": version " + std::to_string(v) + ", expected " +
                          std::to_string(expected));
    }
  }

  std::uint32_t u32() { return byteswap_if_big(get<std::uint32_t>()); }
  std::uint64_t u64() { return byteswap_if_big(get<std::uint64_t>()); }
  float f32() { return byteswap_if_big(get<float>()); }

  /// Throws `truncated` unless `count` elements of `width` bytes remain.
  void need_elements(std::uint64_t count, std::size_t width) {
    const std::uint64_t remaining = data_.size() - pos_;
    if (count > remaining / width) {
      throw DataError(DataErrorKind::truncated, name_ + ": payload shorter than header declares");
    }
  }

  template <class R>
  std::vector<R> f32_array(std::uint64_t count) {
    need_elements(count, sizeof(float));
    std::vector<R> out(count);
    for (auto& v : out) v = static_cast<R>(f32());
    return out;
  }

  std::vector<std::uint32_t> u32_array(std::uint64_t count) {
    need_elements(count, sizeof(std::uint32_t));
    std::vector<std::uint32_t> out(count);
    for (auto& v : out) v = u32();
    return out;
  }

  bool at_end() const { return pos_ == data_.size(); }
  const std::string& name() const { return name_; }

  void expect_end() {
    if (!at_end()) {
      throw DataError(DataErrorKind::invariant_violation, name_ + ": trailing bytes after payload");
    }
  }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw DataError(DataErrorKind::truncated, name_ + ": unexpected end of file");
    }
  }

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::vector<char> data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail
}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
