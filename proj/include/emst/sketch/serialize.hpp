#pragma once

// Framed binary blobs for sketch state: little-endian, versioned header
// (magic, version, kind, seed). Enough structure for merge-across-process
// tests; the layout is versioned but not externally standardized.

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace emst {

enum class SketchKind : uint32_t {
  KSparse = 1,
  L0Sampler = 2,
  L0Estimator = 3,
  PStable = 4,
  RecursiveSampler = 5,
};

constexpr uint32_t kBlobMagic = 0x454d5354;  // "EMST"
constexpr uint32_t kBlobVersion = 1;

class BlobWriter {
 public:
  void header(SketchKind kind, uint64_t seed) {
    u32(kBlobMagic);
    u32(kBlobVersion);
    u32(static_cast<uint32_t>(kind));
    u64(seed);
  }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void i64(int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void u128(unsigned __int128 v) {
    u64(static_cast<uint64_t>(v));
    u64(static_cast<uint64_t>(v >> 64));
  }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  void raw(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t> buf_;
};

class BlobReader {
 public:
  explicit BlobReader(const std::vector<uint8_t>& buf, size_t offset = 0)
      : buf_(buf), off_(offset) {}

  uint64_t header(SketchKind expect) {
    if (u32() != kBlobMagic) throw std::runtime_error("sketch blob: bad magic");
    if (u32() != kBlobVersion) throw std::runtime_error("sketch blob: unsupported version");
    if (u32() != static_cast<uint32_t>(expect)) throw std::runtime_error("sketch blob: wrong kind");
    return u64();
  }
  uint32_t u32() { return read<uint32_t>(); }
  uint64_t u64() { return read<uint64_t>(); }
  int64_t i64() { return read<int64_t>(); }
  double f64() { return read<double>(); }
  unsigned __int128 u128() {
    uint64_t lo = u64(), hi = u64();
    return (static_cast<unsigned __int128>(hi) << 64) | lo;
  }
  size_t offset() const { return off_; }

 private:
  template <class T>
  T read() {
    if (off_ + sizeof(T) > buf_.size()) throw std::runtime_error("sketch blob: truncated");
    T v;
    std::memcpy(&v, buf_.data() + off_, sizeof(T));
    off_ += sizeof(T);
    return v;
  }
  const std::vector<uint8_t>& buf_;
  size_t off_;
};

}  // namespace emst
