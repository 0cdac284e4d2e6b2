#pragma once

#include <string>

#include "insert/param_store.hpp"

namespace insert {

// Parameter container on disk (see docs/FORMATS.md):
//   magic "INSRTCKP" | u32 version | manifest JSON (u64 length prefix) |
//   u64 parameter count | per parameter: name, u64 ndim, u64 dims[],
//   u64 byte length, raw little-endian float64 data.
// The manifest carries the model/train config, vocabulary sizes, seed and
// optimizer state so a run can resume exactly. It is kept verbatim so that
// save(load(x)) is byte-identical.
struct Checkpoint {
  std::string manifest_text;
  ParameterStore params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace insert
