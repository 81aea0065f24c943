#pragma once

#include <string>
#include <vector>

#include "afgrl/dense.hpp"
#include "afgrl/model.hpp"

namespace afgrl {

// Binary tensor container, version 1, little-endian:
//   magic   8 bytes  "AFGRLCKP"
//   version u32
//   count   u32
//   per tensor:
//     name_len u32, name bytes
//     ndim     u32, dims u64 each
//     data     f64 * prod(dims)
// Doubles round-trip bit-exactly.
struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

using TensorMap = std::vector<NamedTensor>;

void save_checkpoint(const std::string& path, const TensorMap& tensors);
TensorMap load_checkpoint(const std::string& path);

const NamedTensor* find_tensor(const TensorMap& tensors, const std::string& name);

// Snapshot of every network tensor in the fixed visit order.
TensorMap network_tensors(const DualNetwork& net);

// Restores parameters from a snapshot; throws DataError on missing tensors or
// shape mismatches.
void load_network_tensors(DualNetwork& net, const TensorMap& tensors);

DenseMatrix tensor_as_matrix(const NamedTensor& t);
NamedTensor matrix_as_tensor(const std::string& name, const DenseMatrix& m);

}  // namespace afgrl
