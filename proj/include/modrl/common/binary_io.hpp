#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "modrl/common/types.hpp"

namespace modrl {

// Little-endian byte serialization. Doubles are written as their raw
// IEEE-754 bit pattern so round trips are bit-exact.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void f64s(const std::vector<double>& v);
  void u64s(const std::vector<std::uint64_t>& v);
  void matrix(const Matrix& m);
  void bytes(const std::vector<std::uint8_t>& b);

  const std::vector<std::uint8_t>& data() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  ByteReader(std::vector<std::uint8_t>&&) = delete;

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  std::vector<double> f64s();
  std::vector<std::uint64_t> u64s();
  Matrix matrix();
  std::vector<std::uint8_t> bytes();

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

// Named sections, checksummed as a whole:
//   "MODRLCK1" | u32 section count | {str name, bytes payload}* | u32 crc32
using SectionMap = std::map<std::string, std::vector<std::uint8_t>>;

std::vector<std::uint8_t> encode_container(const SectionMap& sections);
// Throws IntegrityError on bad magic, truncation or checksum mismatch.
SectionMap decode_container(const std::vector<std::uint8_t>& bytes);

// Write to a sibling temp file, then rename over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace modrl
