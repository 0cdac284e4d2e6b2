#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace insert {

// Little-endian binary primitives shared by the dataset and checkpoint
// containers. All container integers are u32/u64/i64; floats are IEEE 754
// binary64.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_i64(std::ostream& os, std::int64_t v);
void write_f64(std::ostream& os, double v);
void write_bytes(std::ostream& os, const std::string& s);  // u64 length prefix

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
std::int64_t read_i64(std::istream& is);
double read_f64(std::istream& is);
std::string read_bytes(std::istream& is);

// FNV-1a 64-bit, hex encoded. Used to fingerprint artifacts on disk.
std::string fnv1a_hex(const void* data, std::size_t len);
std::string hash_file(const std::string& path);

std::string slurp_file(const std::string& path);

}  // namespace insert
