#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nanosr/eval.hpp"
#include "nanosr/reparam.hpp"
#include "nanosr/zoo.hpp"
#include "metric_oracles.hpp"
#include "table1.hpp"
#include "test_util.hpp"

using namespace nanosr;
using testutil::random_tensor;

TEST_CASE("psnr closed forms and oracle agreement") {
    Rng rng(1);
    Tensor a = random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
    CHECK(std::isinf(eval::psnr(a, a)));  // identical frames -> +inf sentinel

    Tensor zero(1, 3, 8, 8);
    Tensor small = Tensor::full(1, 3, 8, 8, 0.01f);
    CHECK(eval::psnr(small, zero) == doctest::Approx(40.0).epsilon(1e-6));  // MSE 1e-4

    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
        Tensor y = random_tensor<float>(1, 3, 8, 8, rng, 0.0f, 1.0f);
        CHECK(eval::psnr(x, y) == doctest::Approx(metric_oracles::psnr_oracle(x, y)).epsilon(1e-9));
        CHECK(eval::psnr(x, y) == eval::psnr(y, x));  // symmetry
    }
    CHECK_THROWS_AS(eval::psnr(a, Tensor(1, 3, 8, 9)), std::invalid_argument);
}

TEST_CASE("psnr decreases monotonically with noise amplitude") {
    Rng rng(2);
    Tensor base = random_tensor<float>(1, 3, 16, 16, rng, 0.2f, 0.8f);
    Tensor noise = random_tensor<float>(1, 3, 16, 16, rng, -1.0f, 1.0f);
    double prev = std::numeric_limits<double>::infinity();
    for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
        Tensor noisy = base;
        for (size_t i = 0; i < noisy.v.size(); ++i)
            noisy.v[i] += static_cast<float>(amp) * noise.v[i];
        const double p = eval::psnr(noisy, base);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("ssim exact identities and oracle agreement") {
    Rng rng(3);
    Tensor a = random_tensor<float>(1, 3, 14, 15, rng, 0.0f, 1.0f);
    CHECK(eval::ssim(a, a) == 1.0);  // exactly

    Tensor zeros(1, 1, 12, 12);
    Tensor ones = Tensor::full(1, 1, 12, 12, 1.0f);
    const double c1 = 1e-4;
    CHECK(eval::ssim(zeros, ones) == doctest::Approx(c1 / (1 + c1)).epsilon(1e-9));

    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_tensor<float>(1, 2, 13, 12, rng, 0.0f, 1.0f);
        Tensor y = random_tensor<float>(1, 2, 13, 12, rng, 0.0f, 1.0f);
        const double got = eval::ssim(x, y);
        CHECK(got == doctest::Approx(metric_oracles::ssim_oracle(x, y)).epsilon(1e-6));
        CHECK(got == eval::ssim(y, x));
    }
    CHECK_THROWS_AS(eval::ssim(Tensor(1, 1, 8, 8), Tensor(1, 1, 8, 8)), std::invalid_argument);
}

TEST_CASE("count_macs formulas") {
    // single 3x3 conv 3->6, pad 1: 162 * H * W
    ModelGraph g;
    g.arch_id = "probe";
    g.input_slots = {"frame"};
    LayerNode conv;
    conv.id = "c";
    conv.kind = OpKind::Conv;
    conv.inputs = {"frame"};
    conv.conv.weights = Tensor(6, 3, 3, 3);
    conv.conv.padding = 1;
    g.nodes.push_back(conv);
    g.output = "c";
    CHECK(eval::count_macs(g, 10, 20) == 162 * 10 * 20);

    // shuffle-only graph: zero
    ModelGraph s;
    s.input_slots = {"frame"};
    LayerNode sh;
    sh.id = "s";
    sh.kind = OpKind::PixelShuffle;
    sh.factor = 1;
    sh.inputs = {"frame"};
    s.nodes.push_back(sh);
    s.output = "s";
    CHECK(eval::count_macs(s, 64, 64) == 0);

    // mvideosr at 180x320 against the layer-by-layer hand sum
    ModelGraph m = zoo::build_model("mvideosr");
    const long long hw = 180LL * 320;
    const long long hand = (9 * 3 * 6 + 9 * 6 * 6 + 9 * 6 * 6 + 9 * 6 * 48) * hw;
    CHECK(eval::count_macs(m, 180, 320) == hand);
}

TEST_CASE("measure_runtime guards and stability") {
    ModelGraph g = zoo::build_model("ncut");
    zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
    CHECK_THROWS_AS(eval::measure_runtime_ms(g, 32, 32, 0, 0), std::invalid_argument);

    const double a = eval::measure_runtime_ms(g, 64, 64, 2, 9);
    const double b = eval::measure_runtime_ms(g, 64, 64, 2, 9);
    CHECK(a > 0.0);
    CHECK(std::abs(a - b) < 0.5 * std::max(a, b));  // smoke: medians within 50%
}

TEST_CASE("fused rcbsr is not slower than unfused") {
    ModelGraph g = zoo::build_model("rcbsr");
    zoo::init_weights(g, zoo::InitScheme::FixedForTest, 0);
    ModelGraph f = reparam::fuse_model(g);
    const double unfused = eval::measure_runtime_ms(g, 128, 128, 2, 9);
    const double fused = eval::measure_runtime_ms(f, 128, 128, 2, 9);
    CHECK(fused <= unfused);
}

TEST_CASE("challenge_score reproduces printed finals") {
    CHECK(eval::challenge_score(27.34, 0.09, 3.05) == doctest::Approx(90.8844));
    CHECK(std::round(eval::challenge_score(27.34, 0.09, 3.05) * 10) / 10 == 90.9);
    CHECK(eval::challenge_score(28.45, 3.73, 26.8) == doctest::Approx(-89.273));
    CHECK(std::round(eval::challenge_score(28.45, 3.73, 26.8) * 10) / 10 == -89.3);
    CHECK(eval::challenge_score(30.0, 0.1, 40.0) == 0.0);         // over the 33 ms bar
    CHECK(eval::challenge_score(30.0, 0.1, 40.0, false) != 0.0);  // gate disabled
    CHECK_THROWS_AS(eval::challenge_score(30.0, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("challenge_score is linear with the stated slopes") {
    const double base = eval::challenge_score(27.0, 0.5, 5.0);
    CHECK(eval::challenge_score(28.0, 0.5, 5.0) - base == doctest::Approx(1.66));
    CHECK(eval::challenge_score(27.0, 0.4, 5.0) - base == doctest::Approx(5.0));  // 50 * 0.1
}

TEST_CASE("leaderboard reproduces the published ordering") {
    std::vector<eval::ScoreRecord> records;
    // deliberately permuted insertion order
    for (int i : {7, 2, 10, 0, 5, 3, 8, 1, 9, 4, 6}) {
        const auto& row = kLeaderboardRows[i];
        eval::MetricsRecord m;
        m.team = row.team;
        m.psnr = row.psnr;
        m.ssim = row.ssim;
        m.runtime_ms = row.runtime_ms;
        m.power_w = row.power_w;
        m.model_bytes = static_cast<long long>(row.size_kb * 1024);
        records.push_back(eval::make_score_record(m));
    }
    auto sorted = eval::leaderboard(records);
    REQUIRE(sorted.size() == 11);
    for (int i = 0; i < 11; ++i) {
        CHECK(sorted[i].metrics.team == kLeaderboardRows[i].team);
        CHECK(std::abs(sorted[i].final_score - kLeaderboardRows[i].printed_final) <= 0.05);
    }
    CHECK(sorted[0].metrics.team == std::string("MVideoSR"));

    CHECK(eval::leaderboard({}).empty());

    auto again = eval::leaderboard(sorted);  // permutation-independent
    for (int i = 0; i < 11; ++i) CHECK(again[i].metrics.team == sorted[i].metrics.team);
}
