#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nanosr/data.hpp"
#include "nanosr/graph.hpp"

namespace nanosr::train {

enum class LossKind { L1, MSE, Charbonnier };

struct LossResult {
    double value = 0.0;
    Tensor grad;  // d value / d pred
};

// L1 = mean|d|, MSE = mean d^2, Charbonnier = mean sqrt(d^2 + eps^2).
LossResult loss(const Tensor& pred, const Tensor& target, LossKind kind,
                float charbonnier_eps = 1e-3f);

// MSE(outputs) + lambda * MSE(features). When teacher and student feature
// channel counts differ an adapter (frozen 1x1) must be supplied; it maps
// teacher features onto the student's channel count.
struct DistillResult {
    double value = 0.0;
    Tensor grad_student_out;
    Tensor grad_student_feat;
};
DistillResult distill_loss(const Tensor& student_out, const Tensor& teacher_out,
                           const Tensor& student_feat, const Tensor& teacher_feat, double lambda,
                           const ConvParams* adapter = nullptr);

// Frozen random projection for channel-mismatched distillation taps.
ConvParams make_distill_adapter(int teacher_channels, int student_channels, uint64_t seed);

// ---------------------------------------------------------------------------
// Optimizer.

struct AdamConfig {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct AdamState {
    std::unordered_map<std::string, std::pair<std::vector<float>, std::vector<float>>> moments;
    long long t = 0;
};

// Standard bias-corrected update on the named parameters; grads are keyed by
// parameter name (missing entries are treated as zero gradients).
void adam_step(std::vector<ParamRef>& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, double lr, const AdamConfig& cfg = {});

// ---------------------------------------------------------------------------
// Stages and recipes.

struct LrSchedule {
    enum class Kind { Constant, Multistep, Cosine };
    Kind kind = Kind::Constant;
    double init = 1e-3;
    std::vector<long long> milestones;  // Multistep: strictly increasing
    double factor = 0.5;
    long long t_max = 0;  // Cosine: step of the final value
    double lr_min = 0.0;

    static LrSchedule constant(double init);
    static LrSchedule multistep(double init, std::vector<long long> milestones,
                                double factor = 0.5);
    static LrSchedule cosine(double init, long long t_max, double lr_min);
};

enum class WarmStart { None, From2xRepetition, FromCheckpoint };

struct Stage {
    std::string name;
    LossKind loss_kind = LossKind::L1;
    float charbonnier_eps = 1e-3f;
    LrSchedule lr;
    long long iterations = 0;
    int batch = 16;
    int patch = 64;  // HR patch size; LR is patch/4
    bool augment_flips = false;
    bool augment_rot = false;
    AdamConfig adam;
    WarmStart warm_start = WarmStart::None;
    std::string checkpoint;  // FromCheckpoint source
    int model_scale = 4;     // 2 trains the mvideosr 2x variant

    bool distill = false;
    std::string teacher_arch;
    std::string teacher_weights;  // optional weight file for the teacher
    double distill_lambda = 1.0;
};

double schedule_lr(const Stage& stage, long long step);

struct LogEntry {
    long long step = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct StageResult {
    std::vector<LogEntry> log;
};

// One training stage on an already initialized graph. Deterministic given
// the seed. Aborts with a diagnostic on a non-finite loss. Log lines go to
// `log_stream` (when set) as "step,lr,loss" at a fixed cadence.
StageResult run_stage(ModelGraph& g, const Stage& stage, const data::DatasetIndex& idx,
                      uint64_t seed, data::FrameCache* cache = nullptr,
                      std::ostream* log_stream = nullptr);

struct Recipe {
    std::string arch_id;
    std::vector<Stage> stages;
};

// Verbatim training schedule for the architecture. Epoch-based schedules are
// converted at 24000 train frames per epoch (the full-dataset convention).
Recipe builtin_recipe(const std::string& arch_id);

// Desk scaling: iterations/500 clamped to [50, 2000], milestones and cosine
// horizons scaled proportionally, batch capped at 16, HR patch capped at 64.
Recipe desk_scale(const Recipe& recipe);

// Runs the stages in order, handling warm starts (the 2x -> 4x repetition
// and checkpoint loads). Returns the trained graph.
ModelGraph run_recipe(const std::string& arch_id, const std::vector<Stage>& stages,
                      const data::DatasetIndex& idx, uint64_t seed,
                      std::ostream* log_stream = nullptr,
                      std::vector<StageResult>* stage_results = nullptr);

}  // namespace nanosr::train
