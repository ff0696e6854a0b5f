#pragma once

#include "rta/common.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace rta {

// Little-endian binary writer/reader for the versioned artifact files.
// All formats share the pattern: 4-byte magic, u32 version, payload.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path);
  }

  void magic(const char m[4]) { out_.write(m, 4); }
  void u8(uint8_t v) { raw(&v, 1); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }

  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }

  void mat(const Mat& m) {
    u64(static_cast<uint64_t>(m.rows()));
    u64(static_cast<uint64_t>(m.cols()));
    raw(m.data(), sizeof(float) * static_cast<size_t>(m.size()));
  }

  template <typename T>
  void vec_pod(const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    u64(v.size());
    raw(v.data(), sizeof(T) * v.size());
  }

  void raw(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write failed: " + path_);
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("close failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open for reading: " + path);
  }

  void expect_magic(const char m[4], const char* what) {
    char buf[4];
    raw(buf, 4);
    if (std::memcmp(buf, m, 4) != 0)
      throw IoError(std::string("bad magic in ") + path_ + " (expected " + what + ")");
  }

  uint8_t u8() { uint8_t v; raw(&v, 1); return v; }
  uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
  uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
  int64_t i64() { int64_t v; raw(&v, 8); return v; }
  float f32() { float v; raw(&v, 4); return v; }
  double f64() { double v; raw(&v, 8); return v; }

  std::string str() {
    uint64_t n = u64();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }

  Mat mat() {
    uint64_t r = u64();
    uint64_t c = u64();
    Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    raw(m.data(), sizeof(float) * static_cast<size_t>(m.size()));
    return m;
  }

  template <typename T>
  std::vector<T> vec_pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    uint64_t n = u64();
    std::vector<T> v(n);
    raw(v.data(), sizeof(T) * n);
    return v;
  }

  void raw(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n)
      throw IoError("truncated file: " + path_);
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

// FNV-1a over a whole file; used to pair precomputed catalogs with the
// checkpoint they were derived from.
uint64_t file_fnv1a(const std::string& path);

// Atomic write: callers write to path + ".tmp" then commit via rename.
void commit_tmp_file(const std::string& path);

}  // namespace rta
