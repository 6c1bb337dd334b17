#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "infotime/numcore/tensor.hpp"

namespace infotime::numcore {

struct NamedParam {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

/// Versioned binary weight file. Layout, all integers 64-bit little-endian:
///   magic "ITCKPT01" | count | per parameter:
///   name_len | name bytes | rank | dims[rank] | f64 payload (little-endian).
/// Round-trips bit-exactly. Files are written to a temp path and renamed.
void save_checkpoint(const std::filesystem::path& path, const ParamList& params);

/// Read a checkpoint into fresh tensors.
ParamList read_checkpoint(const std::filesystem::path& path);

/// Load a checkpoint into existing parameters, matched by name. Every file
/// entry must match a parameter with the same name and shape, and vice
/// versa.
void load_checkpoint(const std::filesystem::path& path, ParamList& params);

} // namespace infotime::numcore
