#include "stockcnn/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <random>

#include "stockcnn/checkpoint.hpp"
#include "stockcnn/synthetic.hpp"

namespace stockcnn::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kTrainSamples = "train.samples";
constexpr const char* kTestSamples = "test.samples";

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("io.unwritable", "cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io.unwritable", "cannot open " + path.string() + " for writing");
    return out;
}

void write_summary(const fs::path& path, const PrepareSummary& s, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["rows_read"] = s.rows_read;
    j["rows_dropped"] = s.rows_dropped;
    j["rows_labeled"] = s.rows_labeled;
    j["horizon"] = cfg.horizon;
    j["window_len"] = cfg.window_len;
    j["split"] = cfg.split;
    j["train_samples"] = s.train_samples;
    j["test_samples"] = s.test_samples;
    j["positive_fraction"] = s.positive_fraction;
    j["train_positive_fraction"] = s.train_positive_fraction;
    j["test_positive_fraction"] = s.test_positive_fraction;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void print_summary(std::ostream& out, const PrepareSummary& s) {
    out << "rows read:     " << s.rows_read << '\n'
        << "rows dropped:  " << s.rows_dropped << '\n'
        << "rows labeled:  " << s.rows_labeled << '\n'
        << "train samples: " << s.train_samples << '\n'
        << "test samples:  " << s.test_samples << '\n'
        << "class balance: " << s.positive_fraction << " of windows labeled 1 (train "
        << s.train_positive_fraction << ", test " << s.test_positive_fraction << ")\n";
}

struct LoadedData {
    SampleSet train;
    SampleSet test;
};

// --input may be a raw CSV (prepared on the fly into --out-dir) or a prepared directory.
LoadedData load_or_prepare(const RunConfig& cfg, std::ostream& out) {
    if (cfg.input.empty()) throw Error("cli.missing_input", "--input is required");
    if (fs::is_directory(cfg.input)) {
        return {load_samples(cfg.input / kTrainSamples), load_samples(cfg.input / kTestSamples)};
    }
    cmd_prepare(cfg, out);
    return {load_samples(cfg.out_dir / kTrainSamples), load_samples(cfg.out_dir / kTestSamples)};
}

ModelConfig gradcheck_config(const RunConfig& cfg) {
    if (cfg.gc_filters.empty()) throw Error("config.invalid", "--gc-filters needs at least one value");
    ModelConfig mc;
    mc.input_channels = cfg.gc_channels;
    mc.window_len = cfg.gc_window;
    mc.pool_size = 2;
    for (std::size_t i = 0; i < cfg.gc_filters.size(); ++i) {
        const bool first = i == 0;
        mc.conv.push_back({cfg.gc_filters[i], 3, first ? Activation::relu() : Activation::leaky_relu(),
                           !first});
    }
    for (auto units : cfg.gc_dense) mc.dense.push_back({units, Activation::leaky_relu(), 0.0});
    mc.validate();
    return mc;
}

}  // namespace

PreparedData prepare_dataset(const fs::path& csv, std::size_t horizon, std::size_t window_len, double split) {
    RawFrame raw = load_ohlc_csv(csv);
    LabeledFrame labeled = select_features(label_high15(raw, horizon));
    auto [train_rows, test_rows] = split_train_test(labeled, split);
    NormStats stats = fit_minmax(train_rows);

    PreparedData data;
    data.train = make_windows(apply_minmax(train_rows, stats), window_len);
    data.test = make_windows(apply_minmax(test_rows, stats), window_len);
    data.stats = stats;

    auto& s = data.summary;
    s.rows_read = raw.rows.size() + raw.dropped;
    s.rows_dropped = raw.dropped;
    s.rows_labeled = labeled.size();
    s.train_samples = data.train.size();
    s.test_samples = data.test.size();
    s.train_positive_fraction = data.train.positive_fraction();
    s.test_positive_fraction = data.test.positive_fraction();
    const double ones = s.train_positive_fraction * static_cast<double>(s.train_samples) +
                        s.test_positive_fraction * static_cast<double>(s.test_samples);
    s.positive_fraction = ones / static_cast<double>(s.train_samples + s.test_samples);
    return data;
}

int cmd_prepare(const RunConfig& cfg, std::ostream& out) {
    if (cfg.input.empty()) throw Error("cli.missing_input", "--input is required");
    PreparedData data = prepare_dataset(cfg.input, cfg.horizon, cfg.window_len, cfg.split);
    ensure_dir(cfg.out_dir);
    save_samples(cfg.out_dir / kTrainSamples, data.train);
    save_samples(cfg.out_dir / kTestSamples, data.test);
    save_norm_stats(cfg.out_dir / "norm_stats.csv", data.stats);
    write_summary(cfg.out_dir / "summary.json", data.summary, cfg);
    print_summary(out, data.summary);
    return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    LoadedData data = load_or_prepare(cfg, out);
    ensure_dir(cfg.out_dir);

    ModelConfig mc = ModelConfig::standard(data.train.window_len, cfg.dropout);
    mc.input_channels = data.train.channels;
    Model initial = init_model(mc, cfg.train.seed);

    out << "epoch train_loss train_acc val_loss val_acc test_loss test_acc\n";
    auto progress = [&](const EpochRecord& r) {
        char line[200];
        std::snprintf(line, sizeof line, "%5zu %10.5f %9.4f %8.5f %7.4f %9.5f %8.4f  (%.1fs)\n", r.epoch,
                      r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.test_loss.value_or(0.0),
                      r.test_acc.value_or(0.0), r.wall_time_s);
        out << line << std::flush;
    };
    TrainResult result = train(initial, data.train, cfg.train, &data.test, progress);

    {
        auto hist = open_out(cfg.out_dir / "history.csv");
        write_history_csv(hist, result.history);
    }
    save_checkpoint(cfg.out_dir / "model.ckpt", result.model, &result.optimizer);

    std::vector<MetricsRow> rows{
        {"train", evaluate(result.model, data.train, cfg.train.threshold).confusion},
        {"test", evaluate(result.model, data.test, cfg.train.threshold).confusion},
    };
    {
        auto metrics = open_out(cfg.out_dir / "metrics.csv");
        write_metrics_csv(metrics, rows);
    }
    out << "best epoch " << result.history.best_epoch << " of " << result.history.epochs.size()
        << (result.history.stopped_early ? " (early stop)" : "") << '\n';
    print_metrics_table(out, rows);
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
    const fs::path ckpt_path = cfg.checkpoint.empty() ? cfg.out_dir / "model.ckpt" : cfg.checkpoint;
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (cfg.input.empty()) throw Error("cli.missing_input", "--input is required");

    std::vector<std::pair<std::string, SampleSet>> sets;
    if (fs::is_directory(cfg.input)) {
        sets.emplace_back("train", load_samples(cfg.input / kTrainSamples));
        sets.emplace_back("test", load_samples(cfg.input / kTestSamples));
    } else {
        sets.emplace_back(cfg.input.stem().string(), load_samples(cfg.input));
    }

    std::vector<MetricsRow> rows;
    for (const auto& [name, set] : sets) {
        rows.push_back({name, evaluate(ckpt.model, set, cfg.train.threshold).confusion});
    }
    ensure_dir(cfg.out_dir);
    {
        auto metrics = open_out(cfg.out_dir / "evaluation.csv");
        write_metrics_csv(metrics, rows);
    }
    write_metrics_csv(out, rows);
    return 0;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
    const ModelConfig mc = gradcheck_config(cfg);
    GradCheckOptions opts;
    opts.epsilon = cfg.gc_step;
    opts.corrupt_backward = cfg.gc_corrupt;

    double worst = 0.0;
    for (std::size_t k = 0; k < std::max<std::size_t>(cfg.gc_seeds, 1); ++k) {
        const std::uint64_t seed = cfg.train.seed + k;
        Model model = init_probe_model(mc, seed);
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        FeatureMap sample(mc.input_channels, mc.window_len);
        for (double& v : sample.values()) v = unit(rng);
        const int label = static_cast<int>(seed % 2);
        GradCheckResult r = grad_check(model, sample, label, opts);
        worst = std::max(worst, r.max_relative_error);
        char line[200];
        std::snprintf(line, sizeof line, "seed %llu: %zu parameters, max relative error %.3e at %s[%zu]\n",
                      static_cast<unsigned long long>(seed), r.checked, r.max_relative_error,
                      r.worst_parameter.c_str(), r.worst_index);
        out << line;
    }
    const bool pass = worst <= cfg.gc_tolerance;
    char line[120];
    std::snprintf(line, sizeof line, "max relative error %.3e (tolerance %.0e): %s\n", worst, cfg.gc_tolerance,
                  pass ? "PASS" : "FAIL");
    out << line;
    if (!pass) {
        std::snprintf(line, sizeof line, "max relative error %.3e exceeds %.0e", worst, cfg.gc_tolerance);
        throw Error("gradcheck.failed", line);
    }
    return 0;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    SyntheticSpec spec;
    spec.rows = cfg.synth_rows;
    spec.seed = cfg.train.seed;
    const fs::path path = cfg.synth_output.empty() ? cfg.out_dir / "synthetic.csv" : cfg.synth_output;
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    auto file = open_out(path);
    write_ohlc_csv(file, generate_ohlc(spec));
    out << "wrote " << spec.rows << " rows to " << path.string() << '\n';
    return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"1-D CNN stock movement classifier", "stockcnn"};
    app.set_config("--config", "", "Flat key = value file mirroring the long flags");
    app.allow_config_extras(false);
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--input", cfg.input, "OHLC CSV, prepared directory or sample file");
    app.add_option("--out-dir", cfg.out_dir, "Output directory")->capture_default_str();
    app.add_option("--checkpoint", cfg.checkpoint, "Checkpoint to evaluate (default <out-dir>/model.ckpt)");
    app.add_option("--horizon", cfg.horizon, "Look-ahead steps for labels")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--window-len", cfg.window_len, "Rows per sample window")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--split", cfg.split, "Chronological train fraction")->capture_default_str();
    app.add_option("--batch-size", cfg.train.batch_size, "Samples per batch")->capture_default_str();
    app.add_option("--max-epochs", cfg.train.max_epochs, "Epoch cap")->capture_default_str();
    app.add_option("--patience", cfg.train.patience, "Early-stopping patience")->capture_default_str();
    app.add_flag("--no-early-stopping{false}", cfg.train.early_stopping, "Run all epochs");
    app.add_option("--dropout", cfg.dropout, "Dropout rate after the first dense layer")->capture_default_str();
    app.add_option("--lr", cfg.train.optimizer.learning_rate, "Adam learning rate")->capture_default_str();
    app.add_option("--beta1", cfg.train.optimizer.beta1, "First-moment decay")->capture_default_str();
    app.add_option("--beta2", cfg.train.optimizer.beta2, "Second-moment decay")->capture_default_str();
    app.add_option("--epsilon", cfg.train.optimizer.epsilon, "Adam epsilon")->capture_default_str();
    app.add_flag("--bias-correction", cfg.train.optimizer.bias_correction, "Use bias-corrected Adam moments");
    app.add_option("--validation-fraction", cfg.train.validation_fraction, "Tail of train used for validation")
        ->capture_default_str();
    app.add_option("--seed", cfg.train.seed, "Random seed")->capture_default_str();
    app.add_option("--threshold", cfg.train.threshold, "Decision threshold")->capture_default_str();
    app.add_option("--threads", cfg.train.threads, "Worker threads (0 = all cores)")->capture_default_str();

    app.add_option("--seeds", cfg.gc_seeds, "gradcheck: number of consecutive seeds")->capture_default_str();
    app.add_option("--gc-channels", cfg.gc_channels, "gradcheck: input channels")->capture_default_str();
    app.add_option("--gc-window", cfg.gc_window, "gradcheck: window length")->capture_default_str();
    app.add_option("--gc-filters", cfg.gc_filters, "gradcheck: conv filter counts")->delimiter(',');
    app.add_option("--gc-dense", cfg.gc_dense, "gradcheck: dense widths")->delimiter(',');
    app.add_option("--fd-step", cfg.gc_step, "gradcheck: central-difference step")->capture_default_str();
    app.add_option("--tolerance", cfg.gc_tolerance, "gradcheck: max relative error")->capture_default_str();
    app.add_flag("--corrupt-backward", cfg.gc_corrupt)->group("");

    app.add_option("--rows", cfg.synth_rows, "synth: rows to generate")->capture_default_str();
    app.add_option("--output", cfg.synth_output, "synth: CSV path (default <out-dir>/synthetic.csv)");

    auto* prepare = app.add_subcommand("prepare", "Clean, label, split, normalize and window a CSV");
    auto* train_cmd = app.add_subcommand("train", "Train and write checkpoint, history and metrics");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on prepared samples");
    auto* gradcheck = app.add_subcommand("gradcheck", "Compare backprop with central differences");
    auto* synth = app.add_subcommand("synth", "Write a synthetic OHLC CSV with a planted signal");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: cli.usage: " << msg << '\n';
        return 2;
    }

    try {
        if (*prepare) return cmd_prepare(cfg, out);
        if (*train_cmd) return cmd_train(cfg, out);
        if (*evaluate_cmd) return cmd_evaluate(cfg, out);
        if (*gradcheck) return cmd_gradcheck(cfg, out);
        if (*synth) return cmd_synth(cfg, out);
    } catch (const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: " << e.code() << ": " << msg << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace stockcnn::cli
