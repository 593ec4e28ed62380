#include "nanosr/cli.hpp"

#include <sys/utsname.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nanosr/config.hpp"
#include "nanosr/reparam.hpp"
#include "nanosr/serialize.hpp"
#include "nanosr/train.hpp"
#include "nanosr/zoo.hpp"

namespace nanosr::cli {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string pad_left(const std::string& s, size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string host_descriptor() {
    utsname u{};
    if (uname(&u) != 0) return "unknown host";
    return std::string(u.sysname) + " " + u.machine + ", " +
           std::to_string(max_threads()) + " threads";
}

}  // namespace

std::string render_table(const std::vector<eval::ScoreRecord>& rows) {
    std::ostringstream os;
    os << pad_right("Team", 18) << pad_left("Size, KB", 10) << pad_left("PSNR", 8)
       << pad_left("SSIM", 9) << pad_left("Runtime, ms", 13) << pad_left("Power, W@30FPS", 16)
       << pad_left("Final Score", 13) << "\n";
    for (const auto& r : rows) {
        os << pad_right(r.metrics.team, 18)
           << pad_left(fmt("%.1f", r.metrics.model_bytes / 1024.0), 10)
           << pad_left(fmt("%.2f", r.metrics.psnr), 8) << pad_left(fmt("%.4f", r.metrics.ssim), 9)
           << pad_left(fmt("%.2f", r.metrics.runtime_ms), 13)
           << pad_left(fmt("%.2f", r.metrics.power_w), 16)
           << pad_left(fmt("%.2f", r.final_score), 13) << "\n";
    }
    return os.str();
}

std::string render_csv(const std::vector<eval::ScoreRecord>& rows) {
    std::ostringstream os;
    os << "team,size_kb,psnr,ssim,runtime_ms,power_w,final_score\n";
    for (const auto& r : rows) {
        os << r.metrics.team << "," << fmt("%.1f", r.metrics.model_bytes / 1024.0) << ","
           << fmt("%.2f", r.metrics.psnr) << "," << fmt("%.4f", r.metrics.ssim) << ","
           << fmt("%.2f", r.metrics.runtime_ms) << "," << fmt("%.2f", r.metrics.power_w) << ","
           << fmt("%.2f", r.final_score) << "\n";
    }
    return os.str();
}

void write_report(const std::vector<eval::ScoreRecord>& rows, const std::string& txt_path,
                  const std::string& csv_path) {
    if (!txt_path.empty()) {
        std::ofstream f(txt_path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + txt_path);
        f << render_table(rows);
    }
    if (!csv_path.empty()) {
        std::ofstream f(csv_path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + csv_path);
        f << render_csv(rows);
    }
}

std::vector<eval::MetricsRecord> read_rows_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<eval::MetricsRecord> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line.rfind("team,", 0) == 0 || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6)
            throw std::runtime_error(path + ": expected 6 columns, got " +
                                     std::to_string(fields.size()) + " in: " + line);
        eval::MetricsRecord r;
        r.team = fields[0];
        r.model_bytes = static_cast<long long>(std::stod(fields[1]) * 1024.0);
        r.psnr = std::stod(fields[2]);
        r.ssim = std::stod(fields[3]);
        r.runtime_ms = std::stod(fields[4]);
        r.power_w = std::stod(fields[5]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Split evaluation.

namespace {

void accumulate_frame(const Tensor& sr, const Tensor& hr, SplitEval& acc) {
    acc.psnr += eval::psnr(sr, hr);
    acc.ssim += eval::ssim(sr, hr);
    acc.frames += 1;
}

}  // namespace

SplitEval evaluate_split(const ModelGraph& g, const data::DatasetIndex& idx, data::Split split) {
    SplitEval acc;
    data::FrameCache cache;
    for (const auto* seq : idx.split_of(split)) {
        if (!g.recurrent()) {
            for (int f = 0; f < seq->frames; ++f)
                accumulate_frame(forward_model(g, cache.lr(*seq, f)), cache.hr(*seq, f), acc);
        } else {
            std::vector<Tensor> frames;
            for (int f = 0; f < seq->frames; ++f) frames.push_back(cache.lr(*seq, f));
            std::vector<Tensor> srs = process_sequence(g, frames);
            for (int f = 0; f < seq->frames; ++f)
                accumulate_frame(srs[f], cache.hr(*seq, f), acc);
        }
    }
    if (acc.frames) {
        acc.psnr /= acc.frames;
        acc.ssim /= acc.frames;
    }
    return acc;
}

SplitEval evaluate_bicubic(const data::DatasetIndex& idx, data::Split split) {
    SplitEval acc;
    data::FrameCache cache;
    for (const auto* seq : idx.split_of(split))
        for (int f = 0; f < seq->frames; ++f) {
            const Tensor& lr = cache.lr(*seq, f);
            accumulate_frame(data::bicubic_resize(lr, lr.h * 4, lr.w * 4), cache.hr(*seq, f),
                             acc);
        }
    if (acc.frames) {
        acc.psnr /= acc.frames;
        acc.ssim /= acc.frames;
    }
    return acc;
}

std::string describe_graph(const ModelGraph& g) {
    std::ostringstream os;
    ModelGraph copy = g;
    auto node_params = [](const LayerNode& node) {
        ModelGraph tmp;
        tmp.nodes.push_back(node);
        long long total = 0;
        for (const auto& p : collect_params(tmp)) total += static_cast<long long>(p.size);
        return total;
    };
    os << pad_right("layer", 14) << pad_right("op", 14) << pad_right("spec", 34)
       << pad_left("params", 10) << "\n";
    for (const auto& node : g.nodes) {
        std::string op, spec;
        const ConvParams& c = node.conv;
        switch (node.kind) {
            case OpKind::Conv:
                op = "conv";
                spec = std::to_string(c.weights.c * c.groups) + "->" +
                       std::to_string(c.weights.n) + " k" + std::to_string(c.weights.h) + " p" +
                       std::to_string(c.padding) +
                       (c.groups > 1 ? " g" + std::to_string(c.groups) : "");
                break;
            case OpKind::TConv:
                op = "tconv";
                spec = std::to_string(c.weights.n) + "->" +
                       std::to_string(c.weights.c * c.groups) + " k" +
                       std::to_string(c.weights.h) + " s" + std::to_string(c.stride);
                break;
            case OpKind::Activation:
                op = node.act == ActKind::Relu        ? "relu"
                     : node.act == ActKind::LeakyRelu ? "leaky_relu"
                                                      : "prelu";
                break;
            case OpKind::ChannelScale:
                op = "channel_scale";
                break;
            case OpKind::PixelShuffle:
                op = node.inverse ? "unshuffle" : "pixel_shuffle";
                spec = "r" + std::to_string(node.factor);
                break;
            case OpKind::Bilinear:
                op = "bilinear";
                spec = "x" + std::to_string(node.factor);
                break;
            case OpKind::Concat:
                op = "concat";
                spec = std::to_string(node.inputs.size()) + " inputs";
                break;
            case OpKind::SliceChannels:
                op = "slice";
                spec = "[" + std::to_string(node.c_begin) + ", " + std::to_string(node.c_end) +
                       ")";
                break;
            case OpKind::ChannelRepeat:
                op = "repeat";
                spec = "x" + std::to_string(node.factor);
                break;
            case OpKind::Add:
                op = "add";
                break;
            case OpKind::Clip:
                op = "clip";
                spec = "[" + fmt("%g", node.clip_lo) + ", " + fmt("%g", node.clip_hi) + "]";
                break;
            case OpKind::BranchBlock:
                op = "branch_block";
                spec = std::to_string(node.block.branches.size()) + " branches " +
                       std::to_string(node.block.c_in) + "->" + std::to_string(node.block.c_out);
                break;
        }
        os << pad_right(node.id, 14) << pad_right(op, 14) << pad_right(spec, 34)
           << pad_left(std::to_string(node_params(node)), 10) << "\n";
    }
    zoo::Description d = zoo::describe(copy);
    os << "total params: " << d.param_count << "  (" << d.model_bytes << " bytes serialized)\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Subcommands.

namespace {

ModelGraph load_model(const std::string& arch, const std::string& weights, bool fused) {
    ModelGraph g = zoo::build_model(arch);
    if (!weights.empty())
        load_weights(g, weights);
    else
        zoo::init_weights(g, zoo::InitScheme::UniformFanIn, 1);
    if (fused) g = reparam::fuse_model(g);
    return g;
}

data::Split parse_split(const std::string& s) {
    if (s == "train") return data::Split::Train;
    if (s == "val") return data::Split::Val;
    if (s == "test") return data::Split::Test;
    throw std::runtime_error("unknown split " + s);
}

int run_describe(const std::string& arch, bool all, const std::string& docs_path,
                 std::ostream& out) {
    if (!docs_path.empty()) {
        std::ofstream f(docs_path, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + docs_path);
        f << zoo::render_arch_cards();
        out << "wrote " << docs_path << "\n";
        return 0;
    }
    std::vector<std::string> ids;
    if (all)
        ids = zoo::arch_ids();
    else if (!arch.empty())
        ids = {arch};
    else
        throw std::runtime_error("describe: give an architecture id or --all");
    for (const auto& id : ids) {
        ModelGraph g = zoo::build_model(id);
        zoo::ArchCard card = zoo::arch_card(id);
        zoo::Description d = zoo::describe(g);
        out << id << ": " << card.summary << "\n";
        out << "params " << d.param_count << " (card " << card.param_count << "), serialized "
            << d.model_bytes << " bytes\n";
        out << describe_graph(g) << "\n";
    }
    return 0;
}

int run_train(RunConfig cfg, const std::string& log_path, std::ostream& out) {
    if (cfg.arch.empty()) throw std::runtime_error("train: no architecture given");
    if (cfg.dataset_root.empty()) throw std::runtime_error("train: no dataset root given");
    data::DatasetIndex idx = data::scan_dataset(cfg.dataset_root, cfg.desk);
    train::Recipe recipe;
    if (!cfg.stages.empty()) {
        recipe.arch_id = cfg.arch;
        recipe.stages = cfg.stages;
        if (cfg.desk) recipe = train::desk_scale(recipe);
    } else {
        recipe = train::builtin_recipe(cfg.arch);
        if (cfg.desk) recipe = train::desk_scale(recipe);
    }
    std::ofstream log_file;
    std::ostream* log_stream = nullptr;
    if (!log_path.empty()) {
        log_file.open(log_path, std::ios::trunc);
        if (!log_file) throw std::runtime_error("cannot write " + log_path);
        log_stream = &log_file;
    }
    ModelGraph g = train::run_recipe(cfg.arch, recipe.stages, idx, cfg.seed, log_stream);
    const std::string out_path = cfg.out_weights.empty() ? cfg.arch + ".nsrw" : cfg.out_weights;
    save_weights(g, out_path);
    out << "trained " << cfg.arch << " (" << recipe.stages.size() << " stages, seed "
        << cfg.seed << "), weights written to " << out_path << "\n";
    return 0;
}

int run_eval(const std::string& arch, const std::string& weights, const std::string& root,
             const std::string& split, bool desk, bool fused, std::ostream& out) {
    ModelGraph g = load_model(arch, weights, fused);
    data::DatasetIndex idx = data::scan_dataset(root, desk);
    SplitEval r = evaluate_split(g, idx, parse_split(split));
    out << arch << (fused ? " (fused)" : "") << " on " << split << ": psnr "
        << fmt("%.4f", r.psnr) << " dB, ssim " << fmt("%.6f", r.ssim) << ", frames " << r.frames
        << "\n";
    out << "metrics computed on RGB in [0,1], full frames, mean over frames\n";
    return 0;
}

int run_fuse(const std::string& arch, const std::string& weights_in,
             const std::string& weights_out, std::ostream& out) {
    ModelGraph g = zoo::build_model(arch);
    if (!weights_in.empty()) load_weights(g, weights_in);
    ModelGraph fused = reparam::fuse_model(g);
    save_weights(fused, weights_out);
    out << arch << ": " << zoo::describe(g).param_count << " params -> "
        << zoo::describe(fused).param_count << " fused, written to " << weights_out << "\n";
    return 0;
}

int run_bench(const std::string& arch, const std::string& weights, bool fused, int h, int w,
              int warmup, int iters, std::ostream& out) {
    ModelGraph g = load_model(arch, weights, fused);
    const double ms = eval::measure_runtime_ms(g, h, w, warmup, iters);
    const long long macs = eval::count_macs(g, h, w);
    zoo::Description d = zoo::describe(g);
    out << arch << (fused ? " (fused)" : "") << " at " << h << "x" << w << ": median "
        << fmt("%.3f", ms) << " ms over " << iters << " runs [" << host_descriptor() << "]\n";
    out << "params " << d.param_count << ", macs " << macs << ", energy_proxy "
        << fmt("%.1f", macs * ms) << " (macs*ms, host-local; no relation to on-device watts)\n";
    return 0;
}

int run_score(double psnr_v, double power, double runtime, bool gate, std::ostream& out) {
    out << fmt("%.2f", eval::challenge_score(psnr_v, power, runtime, gate)) << "\n";
    return 0;
}

int run_score_rows(const std::string& rows_path, bool gate, const std::string& txt,
                   const std::string& csv, std::ostream& out) {
    std::vector<eval::ScoreRecord> records;
    for (const auto& m : read_rows_csv(rows_path)) records.push_back(eval::make_score_record(m, gate));
    records = eval::leaderboard(records);
    out << render_table(records);
    if (!txt.empty() || !csv.empty()) write_report(records, txt, csv);
    return 0;
}

int run_fixtures(const std::string& root, uint64_t seed, int seqs, int frames, int height,
                 int width, std::ostream& out) {
    data::FixtureSpec spec;
    spec.seed = seed;
    spec.sequences = seqs;
    spec.frames = frames;
    spec.height = height;
    spec.width = width;
    data::make_desk_fixtures(root, spec);
    out << "wrote " << seqs << " sequences x " << frames << " frames (" << height << "x" << width
        << ", seed " << seed << ") under " << root << "\n";
    return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"nanosr: compact video super-resolution zoo, trainer and benchmark"};
    app.require_subcommand(1);

    // describe
    auto* describe = app.add_subcommand("describe", "print an architecture card and layer table");
    std::string d_arch, d_docs;
    bool d_all = false;
    describe->add_option("arch", d_arch, "architecture id");
    describe->add_flag("--all", d_all, "describe every architecture");
    describe->add_option("--docs", d_docs, "write all cards to a markdown file");

    // train
    auto* tr = app.add_subcommand("train", "train an architecture with its recipe");
    std::string t_arch, t_data, t_out, t_config, t_log;
    uint64_t t_seed = 1;
    bool t_desk = false;
    tr->add_option("--arch", t_arch, "architecture id");
    tr->add_option("--data", t_data, "dataset root");
    tr->add_option("--config", t_config, "run configuration file");
    tr->add_option("--seed", t_seed, "training seed");
    tr->add_flag("--desk", t_desk, "desk-scale the recipe and accept small datasets");
    tr->add_option("--out", t_out, "output weight file");
    tr->add_option("--log", t_log, "training log file (step,lr,loss lines)");

    // eval
    auto* ev = app.add_subcommand("eval", "PSNR/SSIM of a model over a dataset split");
    std::string e_arch, e_weights, e_data, e_split = "val";
    bool e_desk = false, e_fused = false;
    ev->add_option("--arch", e_arch)->required();
    ev->add_option("--weights", e_weights, "weight file (default: fresh init)");
    ev->add_option("--data", e_data)->required();
    ev->add_option("--split", e_split, "train|val|test");
    ev->add_flag("--desk", e_desk);
    ev->add_flag("--fused", e_fused, "fuse branch blocks before evaluating");

    // fuse
    auto* fu = app.add_subcommand("fuse", "fuse training-time branches into single convs");
    std::string f_arch, f_in, f_out;
    fu->add_option("--arch", f_arch)->required();
    fu->add_option("--weights", f_in, "input weight file (default: fresh init)");
    fu->add_option("--out", f_out)->required();

    // bench
    auto* be = app.add_subcommand("bench", "median forward runtime on this host");
    std::string b_arch, b_weights;
    bool b_fused = false;
    int b_h = 180, b_w = 320, b_warmup = 3, b_iters = 20;
    be->add_option("--arch", b_arch)->required();
    be->add_option("--weights", b_weights);
    be->add_flag("--fused", b_fused);
    be->add_option("--height", b_h);
    be->add_option("--width", b_w);
    be->add_option("--warmup", b_warmup);
    be->add_option("--iters", b_iters);

    // score
    auto* sc = app.add_subcommand("score", "challenge score from metrics or a rows file");
    double s_psnr = 0, s_power = 0, s_runtime = 0;
    bool s_no_gate = false;
    std::string s_rows, s_out, s_csv;
    sc->add_option("--psnr", s_psnr);
    sc->add_option("--power", s_power);
    sc->add_option("--runtime", s_runtime);
    sc->add_flag("--no-runtime-gate", s_no_gate);
    sc->add_option("--rows", s_rows, "CSV of team,size_kb,psnr,ssim,runtime_ms,power_w");
    sc->add_option("--out", s_out, "write the text table here");
    sc->add_option("--csv", s_csv, "write the delimited report here");

    // make-fixtures
    auto* mf = app.add_subcommand("make-fixtures", "generate the synthetic desk dataset");
    std::string m_out;
    uint64_t m_seed = 77;
    int m_seqs = 20, m_frames = 6, m_height = 96, m_width = 128;
    mf->add_option("--out", m_out)->required();
    mf->add_option("--seed", m_seed);
    mf->add_option("--seqs", m_seqs);
    mf->add_option("--frames", m_frames);
    mf->add_option("--height", m_height);
    mf->add_option("--width", m_width);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (describe->parsed()) return run_describe(d_arch, d_all, d_docs, out);
        if (tr->parsed()) {
            RunConfig cfg;
            if (!t_config.empty()) cfg = parse_config(t_config);
            if (!t_arch.empty()) cfg.arch = t_arch;
            if (!t_data.empty()) cfg.dataset_root = t_data;
            if (tr->count("--seed")) cfg.seed = t_seed;
            if (t_desk) cfg.desk = true;
            if (!t_out.empty()) cfg.out_weights = t_out;
            return run_train(std::move(cfg), t_log, out);
        }
        if (ev->parsed()) return run_eval(e_arch, e_weights, e_data, e_split, e_desk, e_fused, out);
        if (fu->parsed()) return run_fuse(f_arch, f_in, f_out, out);
        if (be->parsed())
            return run_bench(b_arch, b_weights, b_fused, b_h, b_w, b_warmup, b_iters, out);
        if (sc->parsed()) {
            if (!s_rows.empty()) return run_score_rows(s_rows, !s_no_gate, s_out, s_csv, out);
            if (!sc->count("--psnr") || !sc->count("--power") || !sc->count("--runtime"))
                throw std::runtime_error("score: give --psnr/--power/--runtime or --rows");
            return run_score(s_psnr, s_power, s_runtime, !s_no_gate, out);
        }
        if (mf->parsed())
            return run_fixtures(m_out, m_seed, m_seqs, m_frames, m_height, m_width, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: no subcommand\n";
    return 2;
}

}  // namespace nanosr::cli
