#pragma once

#include <memory>
#include <string>

#include "mcsql/model.hpp"

namespace mcsql {

/// Single self-describing checkpoint file: magic + format version, a JSON
/// header with the model configuration, both vocabularies and the tensor
/// index (name/rows/cols/group), then raw little-endian float64 tensor data
/// in index order. Documented in the README.
void save_checkpoint(const std::string& path, const Model& model);

/// Rebuilds the model (config + vocab) and loads all tensor values.
/// Version or shape mismatch is fatal.
std::unique_ptr<Model> load_checkpoint(const std::string& path);

inline constexpr uint32_t kCheckpointVersion = 1;

}  // namespace mcsql
