#include "modrl/common/binary_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "modrl/common/errors.hpp"

namespace modrl {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'D', 'R', 'L', 'C', 'K', '1'};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(const std::string& s) {
  u64(s.size());
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ByteWriter::f64s(const std::vector<double>& v) {
  u64(v.size());
  for (double x : v) f64(x);
}

void ByteWriter::u64s(const std::vector<std::uint64_t>& v) {
  u64(v.size());
  for (auto x : v) u64(x);
}

void ByteWriter::matrix(const Matrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
}

void ByteWriter::bytes(const std::vector<std::uint8_t>& b) {
  u64(b.size());
  bytes_.insert(bytes_.end(), b.begin(), b.end());
}

void ByteReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw IntegrityError("unexpected end of serialized data");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const auto n = u64();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<double> ByteReader::f64s() {
  const auto n = u64();
  need(n * 8);
  std::vector<double> v(n);
  for (auto& x : v) x = f64();
  return v;
}

std::vector<std::uint64_t> ByteReader::u64s() {
  const auto n = u64();
  need(n * 8);
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = u64();
  return v;
}

Matrix ByteReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  need(rows * cols * 8);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
  return m;
}

std::vector<std::uint8_t> ByteReader::bytes() {
  const auto n = u64();
  need(n);
  std::vector<std::uint8_t> b(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                              bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return b;
}

std::vector<std::uint8_t> encode_container(const SectionMap& sections) {
  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, payload] : sections) {
    w.str(name);
    w.bytes(payload);
  }
  auto out = w.take();
  const auto crc = crc_of(out.data(), out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return out;
}

SectionMap decode_container(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 8) throw IntegrityError("checkpoint too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw IntegrityError("bad checkpoint magic");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (crc_of(bytes.data(), body) != stored) throw IntegrityError("checkpoint checksum mismatch");

  std::vector<std::uint8_t> payload(bytes.begin() + sizeof(kMagic), bytes.begin() + static_cast<std::ptrdiff_t>(body));
  ByteReader r(payload);
  SectionMap sections;
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str();
    sections.emplace(std::move(name), r.bytes());
  }
  if (!r.at_end()) throw IntegrityError("trailing bytes in checkpoint");
  return sections;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace modrl
