#pragma once

#include <cstdint>
#include <list>
#include <string>
#include <unordered_map>
#include <vector>

#include "nanosr/tensor.hpp"

namespace nanosr::data {

// PNG file -> (1, 3, h, w) tensor, values v/255 in [0, 1], channels R,G,B.
Tensor decode_image(const std::string& path);
// Inverse: clamps to [0, 1] and rounds to 8-bit.
void encode_image(const Tensor& img, const std::string& path);

// Separable cubic resampling, a = -0.5, half-pixel centers, clamped edges.
// Downscaling widens the kernel by the scale factor (antialiasing).
Tensor bicubic_resize(const Tensor& img, int out_h, int out_w);

// Bicubic downscale by 4; h and w must be divisible by 4.
Tensor make_lr(const Tensor& hr);

enum class Split { Train, Val, Test };

struct SequenceEntry {
    std::string id;
    int frames = 0;
    std::string hr_dir, lr_dir;
    Split split = Split::Train;
};

struct DatasetIndex {
    std::string root;
    std::vector<SequenceEntry> sequences;
    int frame_h = 0, frame_w = 0;  // HR frame size

    std::vector<const SequenceEntry*> split_of(Split s) const;
};

// Scans <root>/<split>/<seq>/<frame>.png with the sibling <split>_lr tree.
// Every HR frame must have an LR counterpart at exactly (h/4, w/4). With
// desk_mode false the REDS sequence counts 240/30/30 are enforced; desk mode
// accepts any layout.
DatasetIndex scan_dataset(const std::string& root, bool desk_mode);

std::string frame_name(int index);  // 8-digit zero-padded + ".png"
std::string frame_path(const SequenceEntry& seq, int frame, bool lr);

// Decoded-frame cache, FIFO-evicted. Single-threaded use.
class FrameCache {
public:
    explicit FrameCache(size_t capacity = 512) : capacity_(capacity) {}
    const Tensor& hr(const SequenceEntry& seq, int frame) { return get(seq, frame, false); }
    const Tensor& lr(const SequenceEntry& seq, int frame) { return get(seq, frame, true); }

private:
    const Tensor& get(const SequenceEntry& seq, int frame, bool lr);
    size_t capacity_;
    std::unordered_map<std::string, Tensor> map_;
    std::list<std::string> order_;
};

struct PatchPair {
    Tensor lr;  // (1, 3, p/4, p/4)
    Tensor hr;  // (1, 3, p, p)
    std::string sequence;
    int frame = 0, y = 0, x = 0;  // HR coordinates
};

// Deterministic for (idx, patch, count, seed); samples the train split. The
// LR patch is cut at (y/4, x/4) so the pair stays aligned.
std::vector<PatchPair> sample_patches(const DatasetIndex& idx, int patch, int count,
                                      uint64_t seed);
std::vector<PatchPair> sample_patches(const DatasetIndex& idx, FrameCache& cache, int patch,
                                      int count, uint64_t seed);

// Identical geometric transform on both halves; rot90 turns clockwise.
PatchPair augment(const PatchPair& pair, bool flip_h, bool flip_v, int rot90);

Tensor crop(const Tensor& t, int y, int x, int h, int w);
Tensor flip_horizontal(const Tensor& t);
Tensor flip_vertical(const Tensor& t);
Tensor rotate90(const Tensor& t, int quarter_turns);

// Synthetic desk-mode dataset: drifting low-frequency gradients plus mild
// band-limited texture, written in the on-disk layout above.
struct FixtureSpec {
    int sequences = 20;
    int frames = 6;
    int height = 96;
    int width = 128;
    uint64_t seed = 77;
};
void make_desk_fixtures(const std::string& root, const FixtureSpec& spec);

}  // namespace nanosr::data
