#include "insert/io_util.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "insert/errors.hpp"

namespace insert {

namespace {

void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, bytes);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  char buf[8] = {};
  is.read(buf, bytes);
  if (!is) throw DataError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  }
  return v;
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v, 4); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v, 8); }
void write_i64(std::ostream& os, std::int64_t v) { put_le(os, static_cast<std::uint64_t>(v), 8); }

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_le(os, bits, 8);
}

void write_bytes(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) { return static_cast<std::uint32_t>(get_le(is, 4)); }
std::uint64_t read_u64(std::istream& is) { return get_le(is, 8); }
std::int64_t read_i64(std::istream& is) { return static_cast<std::int64_t>(get_le(is, 8)); }

double read_f64(std::istream& is) {
  std::uint64_t bits = get_le(is, 8);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string read_bytes(std::istream& is) {
  std::uint64_t len = read_u64(is);
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw DataError("unexpected end of file");
  return s;
}

std::string fnv1a_hex(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string hash_file(const std::string& path) {
  std::string bytes = slurp_file(path);
  return fnv1a_hex(bytes.data(), bytes.size());
}

std::string slurp_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace insert
