#pragma once

#include <map>
#include <string>

#include "scod/tensor.hpp"

namespace scod {

// Flat binary weight container. Layout: magic "SCODW1", then per tensor
// (in map order): u64 LE name length, name bytes, u64 LE rank, rank u64 LE
// extents, numel f64 LE values.
void save_weights(const std::string& path, const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> load_weights(const std::string& path);

std::string weights_to_bytes(const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> weights_from_bytes(const std::string& bytes);

} // namespace scod
