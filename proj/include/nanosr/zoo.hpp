#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nanosr/graph.hpp"

namespace nanosr::zoo {

struct BuildConfig {
    int scale = 4;        // mvideosr accepts 2 for the pre-training variant
    int ncut_width = 28;  // ncut body width
};

// The ten challenge architectures.
const std::vector<std::string>& arch_ids();

ModelGraph build_model(const std::string& arch_id, const BuildConfig& cfg = {});

enum class InitScheme { UniformFanIn, FixedForTest };

// Deterministic for a (scheme, seed) pair. UniformFanIn draws weights and
// biases from U(-b, b) with b = 1/sqrt(fan_in); PReLU slopes start at 0.25
// and branch scales at 1. FixedForTest fills every parameter from a counter
// sequence that is reproducible across implementations (see the formula in
// zoo.cpp).
void init_weights(ModelGraph& g, InitScheme scheme, uint64_t seed);

// Expands the last conv of a 2x model (c_out = 12) into the 4x layout
// (c_out = 48): each 2x subpixel filter lands on the 2x2 block of 4x
// subpixels covering it, so the 4x model output is exactly the
// nearest-neighbor 2x upscale of the 2x model output.
ConvParams repeat_weights_2x_to_4x(const ConvParams& w2);

// Transfers all shared weights of a 2x mvideosr graph into a 4x one,
// repeating the final conv.
void transfer_2x_to_4x(const ModelGraph& g2, ModelGraph& g4);

struct Description {
    long long param_count = 0;
    long long model_bytes = 0;
};
Description describe(const ModelGraph& g);

struct ArchCard {
    std::string arch_id;
    std::string summary;
    long long param_count = 0;        // closed-form recount, training form
    long long fused_param_count = 0;  // after branch fusion
    std::string notes;
};
ArchCard arch_card(const std::string& arch_id);

// Markdown rendering of all cards, for the docs file.
std::string render_arch_cards();

}  // namespace nanosr::zoo
