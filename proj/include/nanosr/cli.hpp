#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nanosr/data.hpp"
#include "nanosr/eval.hpp"
#include "nanosr/graph.hpp"

namespace nanosr::cli {

// Entry point behind the binary; returns the process exit code
// (0 ok, 1 runtime error, 2 usage).
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Leaderboard rendering: aligned text table and a delimited file with the
// same column set. Byte-deterministic for fixed input.
std::string render_table(const std::vector<eval::ScoreRecord>& rows);
std::string render_csv(const std::vector<eval::ScoreRecord>& rows);
void write_report(const std::vector<eval::ScoreRecord>& rows, const std::string& txt_path,
                  const std::string& csv_path);

// Rows as "team,size_kb,psnr,ssim,runtime_ms,power_w" with an optional header.
std::vector<eval::MetricsRecord> read_rows_csv(const std::string& path);

struct SplitEval {
    double psnr = 0.0;
    double ssim = 0.0;
    int frames = 0;
};

// Mean per-frame PSNR/SSIM of a model over one dataset split (recurrent
// graphs run sequence-wise with zero initial states).
SplitEval evaluate_split(const ModelGraph& g, const data::DatasetIndex& idx, data::Split split);

// Bicubic x4 upscaling baseline over the same frames.
SplitEval evaluate_bicubic(const data::DatasetIndex& idx, data::Split split);

// Per-layer listing used by the describe subcommand.
std::string describe_graph(const ModelGraph& g);

}  // namespace nanosr::cli
