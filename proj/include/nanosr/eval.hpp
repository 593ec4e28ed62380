#pragma once

#include <string>
#include <vector>

#include "nanosr/graph.hpp"

namespace nanosr::eval {

// 10*log10(max_val^2 / MSE) over all elements; +inf when MSE == 0.
// Sequence scores are the mean of per-frame values.
double psnr(const Tensor& a, const Tensor& b, double max_val = 1.0);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// L=1, computed per channel over valid window positions and averaged.
double ssim(const Tensor& a, const Tensor& b);

// Multiply-accumulate count for one (1, 3, h, w) input. Only convolutions
// count: k^2 * c_in/groups * c_out * h_out * w_out (transposed convs use
// their input extent). Shuffle, concat, activations, resizes count zero.
long long count_macs(const ModelGraph& g, int h, int w);

// Median wall-clock milliseconds over `iters` timed forward passes after
// `warmup` discarded ones. Host numbers only; not comparable to NPU figures.
double measure_runtime_ms(const ModelGraph& g, int h, int w, int warmup, int iters);

// 1.66 * psnr + 50 * (1 - power); 0 when enforcement is on and the frame
// runtime exceeds 33 ms.
double challenge_score(double psnr_db, double power_w, double runtime_ms,
                       bool enforce_runtime = true);

struct MetricsRecord {
    std::string team;
    double psnr = 0.0;
    double ssim = 0.0;
    double runtime_ms = 0.0;
    double power_w = 0.0;
    long long param_count = 0;
    long long macs = 0;
    long long model_bytes = 0;
};

struct ScoreRecord {
    MetricsRecord metrics;
    double final_score = 0.0;
};

ScoreRecord make_score_record(const MetricsRecord& metrics, bool enforce_runtime = true);

// Rows sorted by final score descending, ties broken by team id.
std::vector<ScoreRecord> leaderboard(std::vector<ScoreRecord> records);

}  // namespace nanosr::eval
