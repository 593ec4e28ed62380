#include "nanosr/train.hpp"

#include <cmath>
#include <ostream>

#include "nanosr/serialize.hpp"
#include "nanosr/zoo.hpp"

namespace nanosr::train {

LossResult loss(const Tensor& pred, const Tensor& target, LossKind kind, float charbonnier_eps) {
    if (!pred.same_dims(target))
        throw std::invalid_argument("loss: shape mismatch " + pred.dims_str() + " vs " +
                                    target.dims_str());
    LossResult res;
    res.grad = Tensor(pred.n, pred.c, pred.h, pred.w);
    const double inv_n = pred.size() ? 1.0 / static_cast<double>(pred.size()) : 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        const double d = static_cast<double>(pred.v[i]) - target.v[i];
        switch (kind) {
            case LossKind::L1:
                acc += std::abs(d);
                res.grad.v[i] = static_cast<float>((d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) * inv_n);
                break;
            case LossKind::MSE:
                acc += d * d;
                res.grad.v[i] = static_cast<float>(2.0 * d * inv_n);
                break;
            case LossKind::Charbonnier: {
                const double e = charbonnier_eps;
                const double s = std::sqrt(d * d + e * e);
                acc += s;
                res.grad.v[i] = static_cast<float>(d / s * inv_n);
                break;
            }
        }
    }
    res.value = acc * inv_n;
    return res;
}

namespace {

// MSE plus its gradient wrt the first argument.
std::pair<double, Tensor> mse_with_grad(const Tensor& a, const Tensor& b) {
    if (!a.same_dims(b))
        throw std::invalid_argument("distill_loss: shape mismatch " + a.dims_str() + " vs " +
                                    b.dims_str());
    Tensor grad(a.n, a.c, a.h, a.w);
    const double inv_n = a.size() ? 1.0 / static_cast<double>(a.size()) : 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = static_cast<double>(a.v[i]) - b.v[i];
        acc += d * d;
        grad.v[i] = static_cast<float>(2.0 * d * inv_n);
    }
    return {acc * inv_n, std::move(grad)};
}

}  // namespace

DistillResult distill_loss(const Tensor& student_out, const Tensor& teacher_out,
                           const Tensor& student_feat, const Tensor& teacher_feat, double lambda,
                           const ConvParams* adapter) {
    Tensor adapted = adapter ? conv2d(teacher_feat, *adapter) : teacher_feat;
    if (!adapted.same_dims(student_feat))
        throw std::invalid_argument("distill_loss: feature shape mismatch after adapter, " +
                                    student_feat.dims_str() + " vs " + adapted.dims_str());
    auto [out_mse, out_grad] = mse_with_grad(student_out, teacher_out);
    auto [feat_mse, feat_grad] = mse_with_grad(student_feat, adapted);
    DistillResult res;
    res.value = out_mse + lambda * feat_mse;
    res.grad_student_out = std::move(out_grad);
    res.grad_student_feat = std::move(feat_grad);
    for (auto& v : res.grad_student_feat.v) v = static_cast<float>(v * lambda);
    return res;
}

ConvParams make_distill_adapter(int teacher_channels, int student_channels, uint64_t seed) {
    ConvParams p;
    p.weights = Tensor(student_channels, teacher_channels, 1, 1);
    p.stride = 1;
    p.padding = 0;
    p.groups = 1;
    Rng rng(mix_seed(seed, 0x61646170));
    const float bound = 1.0f / std::sqrt(static_cast<float>(teacher_channels));
    for (auto& w : p.weights.v) w = rng.uniform_f(-bound, bound);
    return p;
}

// ---------------------------------------------------------------------------
// Adam.

void adam_step(std::vector<ParamRef>& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, double lr, const AdamConfig& cfg) {
    if (lr <= 0) throw std::invalid_argument("adam_step: lr must be positive");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (auto& p : params) {
        auto& [m, v] = state.moments[p.name];
        if (m.empty()) {
            m.assign(p.size, 0.0f);
            v.assign(p.size, 0.0f);
        }
        const Tensor* g = nullptr;
        auto it = grads.find(p.name);
        if (it != grads.end()) {
            if (it->second.size() != p.size)
                throw std::invalid_argument("adam_step: gradient size mismatch for " + p.name);
            g = &it->second;
        }
        for (size_t i = 0; i < p.size; ++i) {
            const double gi = g ? static_cast<double>(g->v[i]) : 0.0;
            const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            p.data[i] = static_cast<float>(p.data[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
        }
    }
}

// ---------------------------------------------------------------------------
// Schedules.

LrSchedule LrSchedule::constant(double init) {
    LrSchedule s;
    s.kind = Kind::Constant;
    s.init = init;
    return s;
}

LrSchedule LrSchedule::multistep(double init, std::vector<long long> milestones, double factor) {
    LrSchedule s;
    s.kind = Kind::Multistep;
    s.init = init;
    s.milestones = std::move(milestones);
    s.factor = factor;
    return s;
}

LrSchedule LrSchedule::cosine(double init, long long t_max, double lr_min) {
    LrSchedule s;
    s.kind = Kind::Cosine;
    s.init = init;
    s.t_max = t_max;
    s.lr_min = lr_min;
    return s;
}

double schedule_lr(const Stage& stage, long long step) {
    if (step < 0 || step >= stage.iterations)
        throw std::invalid_argument("schedule_lr: step " + std::to_string(step) +
                                    " outside [0, " + std::to_string(stage.iterations) + ")");
    const LrSchedule& s = stage.lr;
    switch (s.kind) {
        case LrSchedule::Kind::Constant:
            return s.init;
        case LrSchedule::Kind::Multistep: {
            int passed = 0;
            for (long long m : s.milestones)
                if (step >= m) ++passed;
            return s.init * std::pow(s.factor, passed);
        }
        case LrSchedule::Kind::Cosine: {
            if (step == 0) return s.init;
            if (step >= s.t_max) return s.lr_min;
            const double phase = 3.14159265358979323846 * static_cast<double>(step) /
                                 static_cast<double>(s.t_max);
            return s.lr_min + (s.init - s.lr_min) * (1.0 + std::cos(phase)) / 2.0;
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Stage runner.

namespace {

Tensor stack_batch(const std::vector<Tensor>& items) {
    const Tensor& first = items.at(0);
    Tensor out(static_cast<int>(items.size()) * first.n, first.c, first.h, first.w);
    size_t off = 0;
    for (const auto& t : items) {
        if (t.c != first.c || t.h != first.h || t.w != first.w)
            throw std::invalid_argument("stack_batch: item dims mismatch");
        std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
        off += t.v.size();
    }
    return out;
}

struct Batch {
    std::vector<Tensor> inputs;  // aligned with g.input_slots
    std::vector<Tensor> states;
    Tensor target;
};

Batch assemble_batch(const ModelGraph& g, const Stage& stage, const data::DatasetIndex& idx,
                     data::FrameCache& cache, uint64_t step_seed) {
    Batch batch;
    Rng aug_rng(mix_seed(step_seed, 0x617567));
    auto aug_of = [&](bool& fh, bool& fv, int& rot) {
        fh = stage.augment_flips && aug_rng.next_bool();
        fv = stage.augment_flips && aug_rng.next_bool();
        rot = stage.augment_rot ? aug_rng.next_int(4) : 0;
    };

    if (!g.recurrent()) {
        auto pairs = data::sample_patches(idx, cache, stage.patch, stage.batch, step_seed);
        std::vector<Tensor> lrs, hrs;
        for (auto& pair : pairs) {
            bool fh, fv;
            int rot;
            aug_of(fh, fv, rot);
            data::PatchPair p = data::augment(pair, fh, fv, rot);
            lrs.push_back(std::move(p.lr));
            hrs.push_back(std::move(p.hr));
        }
        batch.inputs.push_back(stack_batch(lrs));
        Tensor hr = stack_batch(hrs);
        batch.target = g.scale == 4
                           ? std::move(hr)
                           : data::bicubic_resize(hr, hr.h / 4 * g.scale, hr.w / 4 * g.scale);
        return batch;
    }

    // Recurrent: one window of patches per item, zero initial states, loss on
    // the current frame.
    const auto train = idx.split_of(data::Split::Train);
    if (train.empty()) throw std::invalid_argument("run_stage: no train sequences");
    Rng rng(mix_seed(step_seed, 0x77696e));
    const int lp = stage.patch / 4;
    const int lh = idx.frame_h / 4, lw = idx.frame_w / 4;
    if (stage.patch > idx.frame_h || stage.patch > idx.frame_w)
        throw std::invalid_argument("run_stage: patch larger than frame");
    std::vector<std::vector<Tensor>> per_slot(g.input_slots.size());
    std::vector<Tensor> hrs;
    for (int i = 0; i < stage.batch; ++i) {
        const auto& seq = *train[rng.next_int(static_cast<int>(train.size()))];
        const int t = rng.next_int(seq.frames);
        const int ly = rng.next_int(lh - lp + 1);
        const int lx = rng.next_int(lw - lp + 1);
        bool fh, fv;
        int rot;
        aug_of(fh, fv, rot);
        for (size_t s = 0; s < g.input_slots.size(); ++s) {
            const int f = std::clamp(t + slot_time_offset(g.input_slots[s]), 0, seq.frames - 1);
            Tensor patch = data::crop(cache.lr(seq, f), ly, lx, lp, lp);
            if (fh) patch = data::flip_horizontal(patch);
            if (fv) patch = data::flip_vertical(patch);
            if (rot) patch = data::rotate90(patch, rot);
            per_slot[s].push_back(std::move(patch));
        }
        Tensor hr = data::crop(cache.hr(seq, t), ly * 4, lx * 4, stage.patch, stage.patch);
        if (fh) hr = data::flip_horizontal(hr);
        if (fv) hr = data::flip_vertical(hr);
        if (rot) hr = data::rotate90(hr, rot);
        hrs.push_back(std::move(hr));
    }
    for (auto& slot : per_slot) batch.inputs.push_back(stack_batch(slot));
    batch.states = zero_states(g, stage.batch, lp, lp);
    batch.target = stack_batch(hrs);
    return batch;
}

struct Teacher {
    ModelGraph graph;
    std::optional<ConvParams> adapter;
    bool adapter_resolved = false;
};

}  // namespace

StageResult run_stage(ModelGraph& g, const Stage& stage, const data::DatasetIndex& idx,
                      uint64_t seed, data::FrameCache* cache_in, std::ostream* log_stream) {
    if (stage.iterations <= 0)
        throw std::invalid_argument("run_stage: iterations must be > 0");
    for (size_t i = 1; i < stage.lr.milestones.size(); ++i)
        if (stage.lr.milestones[i] <= stage.lr.milestones[i - 1])
            throw std::invalid_argument("run_stage: milestones must be strictly increasing");

    data::FrameCache local_cache;
    data::FrameCache& cache = cache_in ? *cache_in : local_cache;

    std::optional<Teacher> teacher;
    if (stage.distill) {
        if (stage.teacher_arch.empty())
            throw std::invalid_argument("run_stage: distillation stage without a teacher");
        Teacher t;
        t.graph = zoo::build_model(stage.teacher_arch);
        if (t.graph.recurrent())
            throw std::invalid_argument("run_stage: recurrent teachers are unsupported");
        if (!stage.teacher_weights.empty())
            load_weights(t.graph, stage.teacher_weights);
        else
            zoo::init_weights(t.graph, zoo::InitScheme::UniformFanIn, mix_seed(seed, 0x746368));
        if (t.graph.feature_tap.empty() || g.feature_tap.empty())
            throw std::invalid_argument("run_stage: distillation requires feature taps");
        teacher = std::move(t);
    }

    auto params = collect_params(g);
    AdamState adam;
    StageResult res;
    const long long cadence = std::max<long long>(1, stage.iterations / 20);

    for (long long step = 0; step < stage.iterations; ++step) {
        const double lr = schedule_lr(stage, step);
        const uint64_t step_seed = mix_seed(mix_seed(seed, 0x73746570), static_cast<uint64_t>(step));
        Batch batch = assemble_batch(g, stage, idx, cache, step_seed);

        Tape tape;
        TapedForward tf = run_graph_taped(tape, g, batch.inputs, batch.states);
        double loss_value = 0.0;
        std::vector<std::pair<int, Tensor>> seeds;
        if (!teacher) {
            LossResult lr_res =
                loss(tape.value(tf.sr_id), batch.target, stage.loss_kind, stage.charbonnier_eps);
            loss_value = lr_res.value;
            seeds.emplace_back(tf.sr_id, std::move(lr_res.grad));
        } else {
            ForwardResult t_fwd = run_graph(teacher->graph, {batch.inputs[0]}, {});
            const Tensor& s_feat = tape.value(tf.tap_id);
            if (!teacher->adapter_resolved) {
                if (t_fwd.tap.c != s_feat.c)
                    teacher->adapter = make_distill_adapter(t_fwd.tap.c, s_feat.c, seed);
                teacher->adapter_resolved = true;
            }
            DistillResult d =
                distill_loss(tape.value(tf.sr_id), t_fwd.sr, s_feat, t_fwd.tap,
                             stage.distill_lambda,
                             teacher->adapter ? &*teacher->adapter : nullptr);
            loss_value = d.value;
            seeds.emplace_back(tf.sr_id, std::move(d.grad_student_out));
            seeds.emplace_back(tf.tap_id, std::move(d.grad_student_feat));
        }
        if (!std::isfinite(loss_value))
            throw std::runtime_error("run_stage: non-finite loss at step " +
                                     std::to_string(step) + " of stage " + stage.name);
        tape.backward_multi(seeds);

        std::map<std::string, Tensor> grads;
        for (const auto& [name, leaf] : tf.param_leaves) grads[name] = tape.grad(leaf);
        adam_step(params, grads, adam, lr, stage.adam);

        if (step % cadence == 0 || step + 1 == stage.iterations) {
            res.log.push_back({step, lr, loss_value});
            if (log_stream) (*log_stream) << step << "," << lr << "," << loss_value << "\n";
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Recipes.

namespace {

constexpr long long kTrainFramesPerEpoch = 24000;  // 240 sequences x 100 frames

long long epochs_to_iters(long long epochs, int batch) {
    return epochs * (kTrainFramesPerEpoch / batch);
}

std::vector<long long> every(long long interval, long long limit) {
    std::vector<long long> out;
    for (long long m = interval; m < limit; m += interval) out.push_back(m);
    return out;
}

Stage base_stage(const std::string& name) {
    Stage s;
    s.name = name;
    return s;
}

}  // namespace

Recipe builtin_recipe(const std::string& arch_id) {
    Recipe r;
    r.arch_id = arch_id;
    if (arch_id == "mvideosr") {
        // Five-phase schedule; phase 2 has two learning-rate runs, encoded as
        // stages 2a/2b.
        Stage s1 = base_stage("1-2x");
        s1.model_scale = 2;
        s1.loss_kind = LossKind::L1;
        s1.batch = 64;
        s1.patch = 256;
        s1.iterations = 500000;
        s1.lr = LrSchedule::multistep(5e-4, {200000, 400000});
        Stage s2 = base_stage("2a");
        s2.warm_start = WarmStart::From2xRepetition;
        s2.loss_kind = LossKind::L1;
        s2.batch = 64;
        s2.patch = 256;
        s2.iterations = 500000;
        s2.lr = LrSchedule::multistep(5e-5, {100000, 300000, 450000});
        Stage s3 = base_stage("2b");
        s3.loss_kind = LossKind::L1;
        s3.batch = 64;
        s3.patch = 256;
        s3.iterations = 500000;
        s3.lr = LrSchedule::multistep(2e-4, {200000});
        Stage s4 = base_stage("3");
        s4.loss_kind = LossKind::MSE;
        s4.batch = 64;
        s4.patch = 256;
        s4.iterations = 1000000;
        s4.lr = LrSchedule::multistep(2e-4, {300000, 600000, 900000});
        Stage s5 = base_stage("4");
        s5.loss_kind = LossKind::MSE;
        s5.batch = 64;
        s5.patch = 512;
        s5.iterations = 500000;
        s5.lr = LrSchedule::multistep(2e-5, {100000, 200000, 300000, 400000});
        Stage s6 = base_stage("5");
        s6.loss_kind = LossKind::MSE;
        s6.batch = 64;
        s6.patch = 640;
        s6.iterations = 50000;
        s6.lr = LrSchedule::constant(2e-5);
        r.stages = {s1, s2, s3, s4, s5, s6};
    } else if (arch_id == "rcbsr") {
        Stage s1 = base_stage("1");
        s1.loss_kind = LossKind::Charbonnier;
        s1.batch = 64;
        s1.patch = 512;
        s1.iterations = epochs_to_iters(4000, 64);
        s1.lr = LrSchedule::multistep(5e-4, every(epochs_to_iters(1000, 64), s1.iterations));
        s1.augment_flips = s1.augment_rot = true;
        Stage s2 = base_stage("2");
        s2.loss_kind = LossKind::MSE;
        s2.batch = 64;
        s2.patch = 512;
        s2.iterations = epochs_to_iters(1000, 64);
        s2.lr = LrSchedule::constant(2e-4);
        s2.augment_flips = s2.augment_rot = true;
        r.stages = {s1, s2};
    } else if (arch_id == "fighter") {
        Stage s = base_stage("1");
        s.loss_kind = LossKind::L1;  // loss unstated; L1 is this zoo's default
        s.batch = 16;
        s.patch = 64;
        s.iterations = epochs_to_iters(1500, 16);
        s.lr = LrSchedule::multistep(1e-2, every(epochs_to_iters(240, 16), s.iterations));
        r.stages = {s};
    } else if (arch_id == "xjtu") {
        Stage s1 = base_stage("1");
        s1.loss_kind = LossKind::L1;
        s1.batch = 4;
        s1.patch = 64;
        s1.iterations = epochs_to_iters(200, 4);
        s1.lr = LrSchedule::constant(1.6e-2);
        Stage s2 = base_stage("2");
        s2.loss_kind = LossKind::L1;
        s2.batch = 64;
        s2.patch = 64;
        s2.iterations = epochs_to_iters(800, 64);
        s2.lr = LrSchedule::constant(0.12);  // encoded as printed, unusually large
        Stage s3 = base_stage("3");
        s3.loss_kind = LossKind::L1;
        s3.batch = 4;
        s3.patch = 64;
        s3.iterations = epochs_to_iters(1600, 4);
        s3.lr = LrSchedule::constant(0.12);
        r.stages = {s1, s2, s3};
    } else if (arch_id == "boe") {
        Stage s = base_stage("1");
        s.loss_kind = LossKind::MSE;
        s.batch = 4;
        s.patch = 80;  // stated 60x80; squared up to 80
        s.iterations = epochs_to_iters(100, 4);
        s.lr = LrSchedule::constant(1e-4);
        s.distill = true;
        s.teacher_arch = "genmedia";
        s.distill_lambda = 1.0;
        r.stages = {s};
    } else if (arch_id == "genmedia") {
        Stage s = base_stage("1");
        s.loss_kind = LossKind::L1;
        s.batch = 32;
        s.patch = 96;
        s.iterations = epochs_to_iters(1000, 32);
        s.lr = LrSchedule::multistep(1e-3, every(epochs_to_iters(200, 32), s.iterations));
        s.augment_flips = true;
        r.stages = {s};
    } else if (arch_id == "ncut") {
        Stage s = base_stage("1");
        s.loss_kind = LossKind::L1;
        s.batch = 16;
        s.patch = 64;
        s.iterations = 168000;
        s.lr = LrSchedule::cosine(1e-3, 167999, 1e-8);
        s.augment_flips = true;
        r.stages = {s};
    } else if (arch_id == "mortar") {
        Stage s = base_stage("1");
        s.loss_kind = LossKind::L1;
        s.batch = 16;
        s.patch = 64;
        s.iterations = epochs_to_iters(100, 16);
        s.lr = LrSchedule::multistep(5e-4, every(epochs_to_iters(30, 16), s.iterations));
        r.stages = {s};
    } else if (arch_id == "redcat") {
        Stage s = base_stage("1");
        s.loss_kind = LossKind::L1;
        s.batch = 8;
        s.patch = 64;
        s.iterations = 150000;
        s.lr = LrSchedule::multistep(3e-3, every(15000, 150000));
        s.augment_flips = true;
        r.stages = {s};
    } else if (arch_id == "team221b") {
        Stage s = base_stage("1");
        s.loss_kind = LossKind::Charbonnier;
        s.batch = 16;
        s.patch = 64;
        s.iterations = 150000;
        s.lr = LrSchedule::multistep(1e-3, {50000, 100000});
        r.stages = {s};
    } else {
        throw std::invalid_argument("unknown arch " + arch_id);
    }
    return r;
}

Recipe desk_scale(const Recipe& recipe) {
    Recipe out;
    out.arch_id = recipe.arch_id;
    for (Stage s : recipe.stages) {
        const long long orig = s.iterations;
        s.iterations = std::clamp<long long>(orig / 500, 50, 2000);
        const double ratio = static_cast<double>(s.iterations) / static_cast<double>(orig);
        long long prev = 0;
        std::vector<long long> scaled;
        for (long long m : s.lr.milestones) {
            long long sm = std::max<long long>(prev + 1, std::llround(m * ratio));
            if (sm < s.iterations) scaled.push_back(sm);
            prev = sm;
        }
        s.lr.milestones = std::move(scaled);
        if (s.lr.kind == LrSchedule::Kind::Cosine) s.lr.t_max = s.iterations - 1;
        s.batch = std::min(s.batch, 16);
        s.patch = std::min(s.patch, 64);
        out.stages.push_back(std::move(s));
    }
    return out;
}

ModelGraph run_recipe(const std::string& arch_id, const std::vector<Stage>& stages,
                      const data::DatasetIndex& idx, uint64_t seed, std::ostream* log_stream,
                      std::vector<StageResult>* stage_results) {
    if (stages.empty()) throw std::invalid_argument("run_recipe: no stages");
    ModelGraph g;
    bool built = false;
    data::FrameCache cache;
    for (size_t i = 0; i < stages.size(); ++i) {
        const Stage& stage = stages[i];
        if (!built) {
            if (stage.warm_start == WarmStart::From2xRepetition)
                throw std::invalid_argument("run_recipe: stage 1 cannot warm-start from the 2x "
                                            "repetition (nothing trained yet)");
            zoo::BuildConfig cfg;
            cfg.scale = stage.model_scale;
            g = zoo::build_model(arch_id, cfg);
            zoo::init_weights(g, zoo::InitScheme::UniformFanIn, seed);
            built = true;
        } else if (stage.model_scale != g.scale) {
            if (stage.warm_start != WarmStart::From2xRepetition)
                throw std::invalid_argument("run_recipe: model scale changed without a "
                                            "resolvable warm start");
            zoo::BuildConfig cfg;
            cfg.scale = stage.model_scale;
            ModelGraph g4 = zoo::build_model(arch_id, cfg);
            zoo::transfer_2x_to_4x(g, g4);
            g = std::move(g4);
        }
        if (stage.warm_start == WarmStart::FromCheckpoint) {
            if (stage.checkpoint.empty())
                throw std::invalid_argument("run_recipe: checkpoint warm start without a path");
            load_weights(g, stage.checkpoint);
        }
        if (log_stream) (*log_stream) << "# stage " << stage.name << "\n";
        StageResult sr =
            run_stage(g, stage, idx, mix_seed(seed, 1000 + i), nullptr, log_stream);
        if (stage_results) stage_results->push_back(std::move(sr));
    }
    return g;
}

}  // namespace nanosr::train
