#pragma once

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "humot/error.hpp"

namespace humot::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

/// Append-only little-endian byte buffer.
class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void put_magic(std::string_view magic) { put_bytes(magic.data(), magic.size()); }
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  /// Appends the CRC-32 of everything written so far.
  void put_crc() { put(crc32(bytes_)); }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw FileError(FileErrorCode::kIo, path.string(), "cannot open for writing");
      os.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
      if (!os) throw FileError(FileErrorCode::kIo, path.string(), "write failed");
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError(FileErrorCode::kIo, path.string(), "cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return bytes;
}

/// Bounds-checked little-endian reader over a whole file.
class Reader {
 public:
  Reader(std::vector<std::uint8_t> bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  static Reader open(const std::filesystem::path& path) { return Reader(read_file(path), path.string()); }

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string(std::size_t max_len = 1u << 26) {
    const auto n = get<std::uint32_t>();
    if (n > max_len) fail(FileErrorCode::kMalformed, "string length out of range");
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }

  void expect_magic(std::string_view magic) {
    if (bytes_.size() < magic.size() || std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0)
      fail(FileErrorCode::kBadMagic, "expected magic '" + std::string(magic) + "'");
    pos_ += magic.size();
  }
  void expect_version(std::uint32_t supported) {
    const auto v = get<std::uint32_t>();
    if (v != supported)
      fail(FileErrorCode::kVersionMismatch,
           "format version " + std::to_string(v) + ", supported " + std::to_string(supported));
  }
  /// Checks the file length announced by the header.
  void expect_total_size(std::uint64_t n) {
    if (bytes_.size() < n) fail(FileErrorCode::kTruncated, "file has " + std::to_string(bytes_.size()) + " of " + std::to_string(n) + " bytes");
    if (bytes_.size() > n) fail(FileErrorCode::kMalformed, "file is longer than its header declares");
  }
  std::size_t size() const { return bytes_.size(); }

  /// Verifies the trailing CRC-32 over all preceding bytes. Call before
  /// parsing the body so corruption surfaces as a checksum failure.
  void verify_trailing_crc() {
    if (bytes_.size() < pos_ + 4) fail(FileErrorCode::kTruncated, "file too short");
    const std::size_t body = bytes_.size() - 4;
    std::uint32_t stored;
    std::memcpy(&stored, bytes_.data() + body, 4);
    if (stored != crc32(std::span<const std::uint8_t>(bytes_.data(), body)))
      fail(FileErrorCode::kChecksumMismatch, "CRC-32 mismatch");
    end_ = body;
  }
  void expect_end() {
    if (pos_ != end_) fail(FileErrorCode::kMalformed, "trailing bytes after payload");
  }

  std::size_t remaining() const { return end_ - pos_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(FileErrorCode code, const std::string& detail) const { throw FileError(code, path_, detail); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) fail(FileErrorCode::kTruncated, "unexpected end of data");
  }

  std::vector<std::uint8_t> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
  std::size_t end_ = bytes_.size();
};

}  // namespace humot::io
