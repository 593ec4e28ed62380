#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nanosr/graph.hpp"

namespace nanosr {

// Flat little-endian weight container:
//   magic "NSRW" | version u32 | tensor count u32
//   per tensor: name_len u16, name bytes, rank u8, dims u32 x rank,
//               dtype u8 (0 = f32), payload
// Files round-trip bit-identically and parse the same on any host.
inline constexpr uint32_t kWeightFileVersion = 1;

struct NamedTensor {
    std::string name;
    int rank = 1;
    std::array<int, 4> dims{};
    std::vector<float> data;
};

void write_weight_file(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_weight_file(const std::string& path);

// Graph weights under their collect_params() names.
std::vector<NamedTensor> graph_tensors(ModelGraph& g);
void save_weights(ModelGraph& g, const std::string& path);
// Validates names and dims against the target graph before loading.
void load_weights(ModelGraph& g, const std::string& path);

// Exact byte size save_weights would produce.
long long weight_file_bytes(ModelGraph& g);

}  // namespace nanosr
