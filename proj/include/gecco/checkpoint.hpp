#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gecco/model.hpp"

namespace gecco {

// Binary checkpoint: magic "GECO", u16 format version, serialized
// ModelConfig, class names, then every model tensor (including batch-norm
// running stats) as little-endian 32-bit reals with row/col headers, and a
// trailing CRC32 over everything before it. Any corruption fails the load
// with DataError.
struct Checkpoint {
  ModelConfig config;
  GeccoModel model;
  std::vector<std::string> class_names;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// CRC-32 (IEEE), exposed for tests.
std::uint32_t crc32(const unsigned char* data, std::size_t len);

}  // namespace gecco
