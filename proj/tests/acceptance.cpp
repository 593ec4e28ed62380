// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "metric_oracles.hpp"
#include "nanosr/cli.hpp"
#include "nanosr/eval.hpp"
#include "nanosr/reparam.hpp"
#include "nanosr/serialize.hpp"
#include "nanosr/train.hpp"
#include "nanosr/zoo.hpp"
#include "table1.hpp"

using namespace nanosr;
namespace fs = std::filesystem;

namespace {

const std::string kTestDir = NANOSR_TEST_DIR;

struct Criterion {
    int number;
    std::string title;
    std::function<std::string()> run;  // returns "" on pass, else the failure detail
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return "<unreadable " + path + ">";
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "nanosr_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

// Shared seeded desk dataset (20 synthetic sequences, the default spec).
const data::DatasetIndex& desk_dataset() {
    static const data::DatasetIndex idx = [] {
        const fs::path root = work_dir() / "desk";
        data::FixtureSpec spec;  // 20 sequences x 6 frames, 96x128, seed 77
        data::make_desk_fixtures(root.string(), spec);
        return data::scan_dataset(root.string(), true);
    }();
    return idx;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::vector<const char*> argv = {"nanosr"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

// --- criterion 1: challenge score reproduction, all 11 published rows ------

std::string criterion_score_reproduction() {
    for (const auto& row : kLeaderboardRows) {
        const double s = eval::challenge_score(row.psnr, row.power_w, row.runtime_ms);
        if (std::abs(s - row.printed_final) > 0.05)
            return std::string(row.team) + ": computed " + std::to_string(s) + " vs printed " +
                   std::to_string(row.printed_final);
    }
    // the 33 ms gate rule
    if (eval::challenge_score(30.0, 0.1, 33.01) != 0.0) return "runtime gate did not zero";
    return "";
}

// --- criterion 2: fusion exactness ----------------------------------------

std::string criterion_fusion_exactness() {
    for (const char* id : {"rcbsr", "mortar"}) {
        ModelGraph g = zoo::build_model(id);
        zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
        ModelGraph f = reparam::fuse_model(g);
        Rng rng(2024);
        float worst = 0.0f;
        for (int trial = 0; trial < 100; ++trial) {
            Tensor x(1, 3, 32, 32);
            for (auto& v : x.v) v = rng.uniform_f(0.0f, 1.0f);
            Tensor a = forward_model(g, x);
            Tensor b = forward_model(f, x);
            for (size_t i = 0; i < a.v.size(); ++i)
                worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
        }
        if (worst > 1e-5f)
            return std::string(id) + ": max abs diff " + std::to_string(worst) + " > 1e-5";
    }
    return "";
}

// --- criterion 3: gradient correctness ------------------------------------

std::string criterion_gradients() {
    try {
        const double worst = gradcheck::check_all_ops(424242);
        if (worst > 1e-3) return "worst rel err " + std::to_string(worst);
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

// --- criterion 4: overfit smoke -------------------------------------------

std::string criterion_overfit() {
    const fs::path root = work_dir() / "overfit";
    data::FixtureSpec spec;
    spec.sequences = 1;
    spec.frames = 1;
    spec.height = 64;
    spec.width = 64;
    spec.seed = 33;
    data::make_desk_fixtures(root.string(), spec);
    const data::DatasetIndex idx = data::scan_dataset(root.string(), true);

    ModelGraph g = zoo::build_model("xjtu");
    zoo::init_weights(g, zoo::InitScheme::UniformFanIn, 11);
    train::Stage s;
    s.iterations = 2000;
    s.batch = 1;
    s.patch = 64;  // the whole (only) frame: one fixed patch every step
    s.loss_kind = train::LossKind::L1;
    s.lr = train::LrSchedule::constant(1e-3);
    train::run_stage(g, s, idx, 77);

    data::FrameCache cache;
    const auto& seq = *idx.split_of(data::Split::Train)[0];
    const double p = eval::psnr(forward_model(g, cache.lr(seq, 0)), cache.hr(seq, 0));
    if (p < 40.0) return "patch PSNR " + std::to_string(p) + " dB < 40 after 2000 steps";
    return "";
}

// --- criterion 5: learning beats bicubic on the desk dataset ---------------

std::string criterion_beats_bicubic() {
    const data::DatasetIndex& idx = desk_dataset();
    const cli::SplitEval bic = cli::evaluate_bicubic(idx, data::Split::Val);
    train::Recipe recipe = train::desk_scale(train::builtin_recipe("mvideosr"));
    ModelGraph g = train::run_recipe("mvideosr", recipe.stages, idx, 1);
    const cli::SplitEval ev = cli::evaluate_split(g, idx, data::Split::Val);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "trained %.3f dB vs bicubic %.3f dB (need +0.3)", ev.psnr,
                  bic.psnr);
    if (ev.psnr < bic.psnr + 0.3) return buf;
    std::printf("    %s\n", buf);
    return "";
}

// --- criterion 6: metric oracles ------------------------------------------

std::string criterion_metric_oracles() {
    Rng rng(606);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor a(1, 3, 13, 14), b(1, 3, 13, 14);
        for (auto& v : a.v) v = rng.uniform_f(0.0f, 1.0f);
        for (auto& v : b.v) v = rng.uniform_f(0.0f, 1.0f);
        if (std::abs(eval::psnr(a, b) - metric_oracles::psnr_oracle(a, b)) > 1e-6)
            return "psnr oracle mismatch at trial " + std::to_string(trial);
        if (std::abs(eval::ssim(a, b) - metric_oracles::ssim_oracle(a, b)) > 1e-6)
            return "ssim oracle mismatch at trial " + std::to_string(trial);
    }
    Tensor a(1, 3, 16, 16);
    for (auto& v : a.v) v = rng.uniform_f(0.0f, 1.0f);
    if (eval::ssim(a, a) != 1.0) return "ssim(a,a) != 1.0 exactly";
    const double p40 = eval::psnr(Tensor::full(1, 3, 8, 8, 0.01f), Tensor(1, 3, 8, 8));
    if (std::abs(p40 - 40.0) > 1e-6) return "1e-4-MSE case gave " + std::to_string(p40);
    return "";
}

// --- criterion 7: weight-repetition transfer -------------------------------

std::string criterion_weight_repetition() {
    zoo::BuildConfig cfg2;
    cfg2.scale = 2;
    ModelGraph g2 = zoo::build_model("mvideosr", cfg2);
    zoo::init_weights(g2, zoo::InitScheme::FixedForTest, 0);
    ModelGraph g4 = zoo::build_model("mvideosr");
    zoo::transfer_2x_to_4x(g2, g4);

    const Tensor frame = Tensor::full(1, 3, 8, 8, 0.41f);
    const Tensor out2 = forward_model(g2, frame);
    const Tensor out4 = forward_model(g4, frame);
    // each 2x subpixel must land duplicated on the covering 2x2 block of 4x
    // subpixels; equivalently out4 == nearest-neighbor 2x upscale of out2
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < out4.h; ++y)
            for (int x = 0; x < out4.w; ++x)
                if (out4.at(0, c, y, x) != out2.at(0, c, y / 2, x / 2))
                    return "mismatch at (" + std::to_string(c) + "," + std::to_string(y) + "," +
                           std::to_string(x) + ")";
    return "";
}

// --- criterion 8: shape conformance and card counts ------------------------

std::string criterion_shapes() {
    for (const auto& id : zoo::arch_ids()) {
        ModelGraph g = zoo::build_model(id);
        zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
        const zoo::ArchCard card = zoo::arch_card(id);
        const long long params = zoo::describe(g).param_count;
        if (params != card.param_count)
            return id + ": " + std::to_string(params) + " params vs card " +
                   std::to_string(card.param_count);
        Rng rng(8);
        std::vector<Tensor> frames;
        for (size_t i = 0; i < g.input_slots.size(); ++i) {
            Tensor f(1, 3, 180, 320);
            for (auto& v : f.v) v = rng.uniform_f(0.0f, 1.0f);
            frames.push_back(std::move(f));
        }
        const ForwardResult r = run_graph(g, frames, zero_states(g, 1, 180, 320));
        if (r.sr.n != 1 || r.sr.c != 3 || r.sr.h != 720 || r.sr.w != 1280)
            return id + ": output " + r.sr.dims_str() + " != 1x3x720x1280";
    }
    return "";
}

// --- criterion 9: bitwise-deterministic desk training ----------------------

std::string criterion_determinism() {
    const std::string root = (work_dir() / "desk").string();
    desk_dataset();  // ensure fixtures exist
    const std::string w1 = (work_dir() / "run1.nsrw").string();
    const std::string w2 = (work_dir() / "run2.nsrw").string();
    std::string out;
    if (run_cli({"train", "--arch", "ncut", "--data", root, "--desk", "--seed", "7", "--out", w1},
                &out) != 0)
        return "first training run failed: " + out;
    if (run_cli({"train", "--arch", "ncut", "--data", root, "--desk", "--seed", "7", "--out", w2},
                &out) != 0)
        return "second training run failed: " + out;
    if (slurp(w1) != slurp(w2)) return "weight files differ between identically-seeded runs";
    return "";
}

// --- criterion 10: benchmark sanity and golden report ----------------------

std::string criterion_benchmark() {
    ModelGraph g = zoo::build_model("rcbsr");
    zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
    ModelGraph f = reparam::fuse_model(g);
    const double unfused = eval::measure_runtime_ms(g, 180, 320, 3, 20);
    const double fused = eval::measure_runtime_ms(f, 180, 320, 3, 20);
    std::printf("    fused %.2f ms vs unfused %.2f ms (median of 20)\n", fused, unfused);
    if (fused > unfused)
        return "fused median " + std::to_string(fused) + " ms > unfused " +
               std::to_string(unfused) + " ms";

    const std::string txt = (work_dir() / "report.txt").string();
    const std::string csv = (work_dir() / "report.csv").string();
    std::string out;
    if (run_cli({"score", "--rows", kTestDir + "/fixtures/table1.csv", "--out", txt, "--csv",
                 csv},
                &out) != 0)
        return "score --rows failed: " + out;
    if (slurp(txt) != slurp(kTestDir + "/golden/table1_report.txt"))
        return "text report differs from the golden file";
    if (slurp(csv) != slurp(kTestDir + "/golden/table1_report.csv"))
        return "csv report differs from the golden file";
    return "";
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "score reproduction: all 11 leaderboard rows within +/-0.05",
         criterion_score_reproduction},
        {2, "fusion exactness: rcbsr/mortar fused vs unfused <= 1e-5 on 100 inputs",
         criterion_fusion_exactness},
        {3, "gradient correctness: central finite differences, rel err <= 1e-3",
         criterion_gradients},
        {4, "overfit smoke: xjtu reaches 40 dB on one patch within 2000 steps",
         criterion_overfit},
        {5, "learning beats bicubic by 0.3 dB on the desk validation split",
         criterion_beats_bicubic},
        {6, "metric oracles: psnr/ssim brute-force agreement <= 1e-6", criterion_metric_oracles},
        {7, "weight repetition: 4x output equals the duplicated 2x subpixel pattern",
         criterion_weight_repetition},
        {8, "shape conformance: ten models at 180x320 -> 720x1280, card-exact params",
         criterion_shapes},
        {9, "determinism: identically-seeded desk runs give identical weight files",
         criterion_determinism},
        {10, "benchmark sanity: fused <= unfused runtime, golden report bytewise",
         criterion_benchmark},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (detail.empty()) {
            std::printf("[PASS] criterion %2d: %s (%.1f s)\n", c.number, c.title.c_str(), secs);
        } else {
            std::printf("[FAIL] criterion %2d: %s (%.1f s)\n       %s\n", c.number,
                        c.title.c_str(), secs, detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures == 0)
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
