#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stockcnn/data.hpp"
#include "stockcnn/trainer.hpp"

namespace stockcnn::cli {

struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path out_dir = "out";
    std::filesystem::path checkpoint;  // evaluate; defaults to <out-dir>/model.ckpt
    std::size_t horizon = kDefaultHorizon;
    std::size_t window_len = kDefaultWindowLen;
    double split = 0.7;
    double dropout = 0.5;
    TrainConfig train;

    // gradcheck
    std::size_t gc_seeds = 10;
    std::size_t gc_channels = 2;
    std::size_t gc_window = 8;
    std::vector<std::size_t> gc_filters{2, 2, 2};
    std::vector<std::size_t> gc_dense{4, 4};
    double gc_step = 1e-5;
    double gc_tolerance = 1e-4;
    bool gc_corrupt = false;

    // synth
    std::filesystem::path synth_output;
    std::size_t synth_rows = 20000;
};

// Result of the prepare stage, also written to <out-dir>/summary.json.
struct PrepareSummary {
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;
    std::size_t rows_labeled = 0;
    std::size_t train_samples = 0;
    std::size_t test_samples = 0;
    double positive_fraction = 0.0;  // over all windows
    double train_positive_fraction = 0.0;
    double test_positive_fraction = 0.0;
};

struct PreparedData {
    SampleSet train;
    SampleSet test;
    NormStats stats;
    PrepareSummary summary;
};

// CSV -> labeled, split, normalized and windowed samples (no files written).
PreparedData prepare_dataset(const std::filesystem::path& csv, std::size_t horizon, std::size_t window_len,
                             double split);

int cmd_prepare(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& out);
int cmd_synth(const RunConfig& cfg, std::ostream& out);

// Parses arguments (argv[0] is the program name) and dispatches. Failures print
// one line "error: <code>: <message>" to `err` and return non-zero.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stockcnn::cli
