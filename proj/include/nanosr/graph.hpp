#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nanosr/autograd.hpp"
#include "nanosr/ops.hpp"

namespace nanosr {

// Fixed 3x3 edge kernels used by re-parametrization branches.
enum class EdgeKind { SobelX, SobelY, Laplacian };

// A multi-branch training-time block whose branch outputs are summed. Every
// branch maps c_in -> c_out at stride 1 with "same" 3x3 geometry and fuses to
// a single 3x3 convolution. Sequential branches apply their 1x1 expansion
// with padding 1, so the k*k stage sees an intermediate border that carries
// the expansion bias; this makes the fused conv exact everywhere, borders
// included.
struct Branch {
    enum class Kind { SingleConv, ExpandThenConv, ExpandThenEdge };
    Kind kind = Kind::SingleConv;
    ConvParams conv;              // SingleConv: the k*k conv (k in {1,3})
    ConvParams expand;            // 1x1 expansion stage (c_in -> c_out)
    std::vector<float> scale;     // per-channel scale of the fixed edge kernel
    EdgeKind edge = EdgeKind::SobelX;
};

struct BranchBlock {
    int c_in = 0, c_out = 0;
    std::vector<Branch> branches;
};

// 3x3 depthwise ConvParams for a fixed edge kernel over `channels` channels.
ConvParams edge_kernel(EdgeKind kind, int channels);

enum class OpKind {
    Conv,
    TConv,
    Activation,
    ChannelScale,   // internal to branch blocks; kept for completeness
    PixelShuffle,
    Bilinear,
    Concat,
    SliceChannels,
    ChannelRepeat,
    Add,
    Clip,
    BranchBlock,
};

struct LayerNode {
    std::string id;
    OpKind kind = OpKind::Conv;
    std::vector<std::string> inputs;

    ConvParams conv;                    // Conv / TConv
    ActKind act = ActKind::Relu;        // Activation
    float leaky_alpha = 0.0f;
    std::vector<float> prelu_slope;     // Activation with act == PRelu
    int factor = 1;                     // PixelShuffle r / Bilinear scale / ChannelRepeat times
    bool inverse = false;               // PixelShuffle
    int c_begin = 0, c_end = 0;         // SliceChannels
    float clip_lo = 0.0f, clip_hi = 1.0f;
    BranchBlock block;                  // BranchBlock
};

struct StateSlot {
    std::string name;
    int channels = 0;
};

// Ordered DAG of layer nodes. Node inputs name either earlier node ids or
// graph-level slots (frame inputs and recurrent state slots). Immutable
// after build except for weight updates during training, which require
// exclusive access.
struct ModelGraph {
    std::string arch_id;
    int scale = 4;
    std::vector<std::string> input_slots;                        // frame inputs, window order
    std::vector<StateSlot> state_slots;                          // empty for non-recurrent
    std::vector<LayerNode> nodes;
    std::string output;                                          // id of the SR output node
    std::vector<std::pair<std::string, std::string>> state_updates;  // slot -> node id
    std::string feature_tap;                                     // optional node id

    bool recurrent() const { return !state_slots.empty(); }
    const LayerNode* find(const std::string& id) const;
    LayerNode* find(const std::string& id);
};

// Throws if the graph is not a DAG over defined ids or an output is missing.
void validate_graph(const ModelGraph& g);

// ---------------------------------------------------------------------------
// Named parameters. Enumeration order is fixed (node order, then per-node
// weight/bias/slope/scale order) and shared by init, serialization and the
// optimizer.

enum class ParamKind { Weight, Bias, Slope, Scale };

struct ParamRef {
    std::string name;
    ParamKind kind = ParamKind::Weight;
    float* data = nullptr;
    size_t size = 0;
    int fan_in = 1;                 // input taps per output element
    std::array<int, 4> dims{};      // serialization dims
    int rank = 1;
};

std::vector<ParamRef> collect_params(ModelGraph& g);

// ---------------------------------------------------------------------------
// Execution.

struct ForwardResult {
    Tensor sr;
    std::vector<Tensor> state_out;   // aligned with g.state_slots
    Tensor tap;                      // value of g.feature_tap when set
};

// Inference pass over all graph slots. `frames` aligns with g.input_slots,
// `states` with g.state_slots.
ForwardResult run_graph(const ModelGraph& g, const std::vector<Tensor>& frames,
                        const std::vector<Tensor>& states);

// Single-frame forward for non-recurrent graphs; values expected in [0, 1].
Tensor forward_model(const ModelGraph& g, const Tensor& frame);

// One recurrent step. `window` holds the frames named by g.input_slots.
std::pair<Tensor, std::vector<Tensor>> forward_recurrent(const ModelGraph& g,
                                                         const std::vector<Tensor>& window,
                                                         const std::vector<Tensor>& states);

// Zero hidden states for an (n, h, w) input.
std::vector<Tensor> zero_states(const ModelGraph& g, int n, int h, int w);

// Temporal offset of a frame slot: frame_prev -> -1, frame -> 0, frame_next -> +1.
int slot_time_offset(const std::string& slot);

// Runs a whole sequence through a recurrent graph, duplicating edge frames
// to fill the window at the boundaries. Returns one SR frame per input frame.
std::vector<Tensor> process_sequence(const ModelGraph& g, const std::vector<Tensor>& frames);

// Taped forward for training. Parameters are registered as tape leaves under
// their collect_params() names.
struct TapedForward {
    int sr_id = -1;
    std::vector<int> state_out_ids;
    int tap_id = -1;
    std::map<std::string, int> param_leaves;
};

TapedForward run_graph_taped(Tape& tape, ModelGraph& g, const std::vector<Tensor>& frames,
                             const std::vector<Tensor>& states);

}  // namespace nanosr
