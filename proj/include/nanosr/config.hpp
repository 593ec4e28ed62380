#pragma once

#include <string>
#include <vector>

#include "nanosr/train.hpp"

namespace nanosr::cli {

// Key-value run configuration ("key = value" lines, '#' comments). Unknown
// keys are rejected. Stage overrides use "stage.N.field" keys with N
// starting at 1; when none are present the architecture's built-in recipe
// is used.
struct RunConfig {
    std::string arch;
    std::string dataset_root;
    uint64_t seed = 1;
    bool desk = false;
    double power = 0.0;
    bool runtime_gate = true;
    std::string out_weights;
    std::vector<train::Stage> stages;
};

RunConfig parse_config(const std::string& path);

}  // namespace nanosr::cli
