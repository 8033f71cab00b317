#pragma once

#include <string>

#include "textile/model.hpp"

namespace textile {

// Single binary file: magic, format version, config fields, then named
// parameter blocks as little-endian 32-bit floats. save(load(f)) is
// byte-identical to f.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

} // namespace textile
