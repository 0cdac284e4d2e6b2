#include "insert/checkpoint.hpp"

#include <fstream>

#include "insert/errors.hpp"
#include "insert/io_util.hpp"

namespace insert {

namespace {
const char kMagic[9] = "INSRTCKP";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  write_bytes(os, ckpt.manifest_text);
  write_u64(os, ckpt.params.count());
  for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
    const auto& e = ckpt.params.entry(static_cast<int>(i));
    write_bytes(os, e.name);
    write_u64(os, e.value.ndim());
    for (std::size_t dim : e.value.shape()) write_u64(os, dim);
    write_u64(os, e.value.size() * 8);
    for (std::size_t j = 0; j < e.value.size(); ++j) write_f64(os, e.value[j]);
  }
  if (!os) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != kMagic) {
    throw DataError("not a checkpoint file: " + path);
  }
  std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.manifest_text = read_bytes(is);
  std::uint64_t count = read_u64(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_bytes(is);
    std::uint64_t ndim = read_u64(is);
    std::vector<std::size_t> shape;
    for (std::uint64_t d = 0; d < ndim; ++d) shape.push_back(read_u64(is));
    std::uint64_t bytes = read_u64(is);
    if (bytes != shape_product(shape) * 8) {
      throw DataError("corrupt checkpoint entry '" + name + "'");
    }
    Tensor t(shape);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = read_f64(is);
    ckpt.params.add(name, std::move(t));
  }
  return ckpt;
}

}  // namespace insert
