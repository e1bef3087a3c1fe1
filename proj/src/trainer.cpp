#include "stockcnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "fp_env.hpp"
#include "io_util.hpp"

namespace stockcnn {

namespace {

// Each batch is reduced over a fixed number of contiguous chunks, summed in
// chunk order, so gradients are bit-identical for any thread count.
constexpr std::size_t kReductionChunks = 8;

struct ChunkWorkspace {
    GradientSet grads;
    ForwardCache cache;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    bool finite = true;
};

std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t epoch, std::size_t position) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(position),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(position) >> 32)};
    return std::mt19937_64(seq);
}

void check_shape(const Model& model, const SampleSet& data, const char* what) {
    const auto& cfg = model.config();
    if (data.channels != cfg.input_channels || data.window_len != cfg.window_len) {
        throw Error("data.shape_mismatch", std::string(what) + " samples are " + std::to_string(data.channels) +
                                               "x" + std::to_string(data.window_len) + " but the model expects " +
                                               std::to_string(cfg.input_channels) + "x" +
                                               std::to_string(cfg.window_len) + " (window_len mismatch)");
    }
}

std::vector<std::span<double>> param_spans(Model& model) {
    std::vector<std::span<double>> spans;
    for (auto& p : model.parameters()) spans.push_back(p.values);
    return spans;
}

template <typename Fn>
void run_parallel(std::size_t jobs, std::size_t threads, Fn&& fn) {
    if (threads <= 1 || jobs <= 1) {
        for (std::size_t j = 0; j < jobs; ++j) fn(j);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t n = std::min(threads, jobs);
    for (std::size_t w = 0; w < n; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t j = w; j < jobs; j += n) fn(j);
        });
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (max_epochs == 0) throw Error("config.invalid", "max_epochs must be at least 1");
    if (patience == 0) throw Error("config.invalid", "patience must be at least 1");
    if (batch_size == 0) throw Error("config.invalid", "batch_size must be at least 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw Error("config.invalid", "validation fraction must lie in (0, 1)");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("config.invalid", "threshold must lie in [0, 1]");
    optimizer.validate();
}

std::vector<double> TrainHistory::val_losses() const {
    std::vector<double> out;
    out.reserve(epochs.size());
    for (const auto& e : epochs) out.push_back(e.val_loss);
    return out;
}

StopDecision early_stop_check(std::span<const double> val_losses, std::size_t patience) {
    if (patience == 0 || val_losses.size() <= patience) return StopDecision::Continue;
    const auto split = val_losses.end() - static_cast<std::ptrdiff_t>(patience);
    const double best_before = *std::min_element(val_losses.begin(), split);
    const bool improved = std::any_of(split, val_losses.end(), [&](double v) { return v < best_before; });
    return improved ? StopDecision::Continue : StopDecision::Stop;
}

Evaluation evaluate(const Model& model, const SampleSet& data, double threshold) {
    if (data.empty()) throw Error("data.empty", "cannot evaluate on zero samples");
    check_shape(model, data, "evaluation");
    detail::FlushDenormals flush;
    Evaluation ev;
    ev.predictions.resize(data.size());
    ForwardCache cache;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ev.predictions[i] = forward(data.windows[i], model, Mode::Infer, nullptr, cache);
    }
    ev.loss = bce_loss(ev.predictions, data.labels);
    ev.confusion = confusion(ev.predictions, data.labels, threshold);
    ev.accuracy = accuracy(ev.confusion);
    ev.precision = precision(ev.confusion);
    ev.recall = recall(ev.confusion);
    ev.f1 = f1(ev.confusion);
    return ev;
}

TrainResult train(const Model& initial, const SampleSet& train_set, const TrainConfig& config,
                  const SampleSet* test_set, const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw Error("data.empty", "training set is empty");
    check_shape(initial, train_set, "training");
    if (test_set != nullptr) check_shape(initial, *test_set, "test");

    const std::size_t n = train_set.size();
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.validation_fraction));
    if (n_val == 0 || n_val >= n) {
        throw Error("train.empty_partition", "validation split of " + std::to_string(n) +
                                                 " samples leaves a partition empty");
    }
    const std::size_t n_fit = n - n_val;
    const SampleSet validation = train_set.slice(n_fit, n);

    TrainResult result{initial, {}, {}};
    Model& model = result.model;
    AdamState state = AdamState::zeros_like(param_spans(model));
    Model best_model = model;
    AdamState best_state = state;
    double best_val = std::numeric_limits<double>::infinity();

    std::size_t threads = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, kReductionChunks);
    std::vector<ChunkWorkspace> chunks(kReductionChunks);
    for (auto& c : chunks) c.grads = GradientSet::zeros_like(model);
    GradientSet batch_grads = GradientSet::zeros_like(model);

    std::vector<std::size_t> order(n_fit);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(config.seed);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;

        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n_fit; start += config.batch_size, ++batch_index) {
            const std::size_t bn = std::min(config.batch_size, n_fit - start);
            const std::size_t per_chunk = (bn + kReductionChunks - 1) / kReductionChunks;

            run_parallel(kReductionChunks, threads, [&](std::size_t c) {
                detail::FlushDenormals flush;
                auto& ws = chunks[c];
                ws.grads.set_zero();
                ws.loss_sum = 0.0;
                ws.correct = 0;
                ws.finite = true;
                const std::size_t lo = std::min(bn, c * per_chunk);
                const std::size_t hi = std::min(bn, lo + per_chunk);
                for (std::size_t k = lo; k < hi; ++k) {
                    const std::size_t pos = start + k;
                    const std::size_t idx = order[pos];
                    auto rng = sample_rng(config.seed, epoch, pos);
                    const int label = train_set.labels[idx];
                    const double p = forward(train_set.windows[idx], model, Mode::Train, &rng, ws.cache);
                    const double loss = bce_loss(p, label);
                    if (!std::isfinite(p) || !std::isfinite(loss)) ws.finite = false;
                    ws.loss_sum += loss;
                    ws.correct += classify(p, config.threshold) == label ? 1 : 0;
                    backward_from_output(ws.cache, p - static_cast<double>(label), model, ws.grads);
                }
            });

            detail::FlushDenormals flush;
            batch_grads.set_zero();
            double batch_loss = 0.0;
            bool finite = true;
            for (auto& ws : chunks) {
                batch_grads.add(ws.grads);
                batch_loss += ws.loss_sum;
                correct += ws.correct;
                finite = finite && ws.finite;
            }
            batch_grads.scale(1.0 / static_cast<double>(bn));
            if (!finite || !std::isfinite(batch_loss) || !batch_grads.all_finite()) {
                throw Error("train.nan_loss", "non-finite loss or gradient at epoch " + std::to_string(epoch) +
                                                  ", batch " + std::to_string(batch_index + 1));
            }
            loss_sum += batch_loss;
            auto params = param_spans(model);
            auto grads = batch_grads.views();
            adam_step(params, grads, state, config.optimizer);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n_fit);
        rec.train_acc = static_cast<double>(correct) / static_cast<double>(n_fit);
        const auto val = evaluate(model, validation, config.threshold);
        rec.val_loss = val.loss;
        rec.val_acc = val.accuracy.value;
        if (test_set != nullptr && !test_set->empty()) {
            const auto test = evaluate(model, *test_set, config.threshold);
            rec.test_loss = test.loss;
            rec.test_acc = test.accuracy.value;
        }
        if (!std::isfinite(rec.val_loss)) {
            throw Error("train.nan_loss", "non-finite validation loss at epoch " + std::to_string(epoch));
        }
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.val_loss < best_val) {
            best_val = rec.val_loss;
            best_model = model;
            best_state = state;
            result.history.best_epoch = epoch;
        }
        if (config.early_stopping &&
            early_stop_check(result.history.val_losses(), config.patience) == StopDecision::Stop) {
            result.history.stopped_early = true;
            break;
        }
    }

    result.model = std::move(best_model);
    result.optimizer = std::move(best_state);
    return result;
}

Model init_probe_model(const ModelConfig& config, std::uint64_t seed, double bias_scale) {
    Model model = init_model(config, seed);
    std::mt19937_64 rng(seed + 0x5851f42d4c957f2dULL);
    std::uniform_real_distribution<double> dist(-bias_scale, bias_scale);
    for (auto& l : model.conv) {
        for (double& b : l.bias) b = dist(rng);
    }
    for (auto& l : model.dense) {
        for (double& b : l.bias) b = dist(rng);
    }
    for (double& b : model.output.bias) b = dist(rng);
    return model;
}

GradCheckResult grad_check(const Model& model, const FeatureMap& sample, int label, const GradCheckOptions& options) {
    if (!(options.epsilon > 0.0)) throw Error("gradcheck.bad_epsilon", "epsilon must be positive");
    Model probe = model;
    ForwardCache cache;
    forward(sample, probe, Mode::Infer, nullptr, cache);
    GradientSet analytic = model_backward(cache, label, probe);
    if (options.corrupt_backward) analytic.scale(1.01);

    auto params = probe.parameters();
    std::vector<std::pair<std::size_t, std::size_t>> addresses;
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].values.size(); ++i) addresses.emplace_back(b, i);
    }
    if (options.max_parameters != 0 && addresses.size() > options.max_parameters) {
        std::vector<std::pair<std::size_t, std::size_t>> subset;
        std::mt19937_64 rng(options.seed);
        std::sample(addresses.begin(), addresses.end(), std::back_inserter(subset), options.max_parameters, rng);
        addresses = std::move(subset);
    }

    auto loss_at = [&] { return bce_loss(forward(sample, probe, Mode::Infer, nullptr, cache), label); };

    GradCheckResult result;
    for (auto [b, i] : addresses) {
        double& w = params[b].values[i];
        const double saved = w;
        w = saved + options.epsilon;
        const double plus = loss_at();
        w = saved - options.epsilon;
        const double minus = loss_at();
        w = saved;
        const double numeric = (plus - minus) / (2.0 * options.epsilon);
        const double a = analytic.blocks[b][i];
        if (!std::isfinite(numeric) || !std::isfinite(a)) {
            throw Error("gradcheck.non_finite", "non-finite gradient at " + params[b].name + "[" +
                                                    std::to_string(i) + "]");
        }
        const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
        const double rel = std::abs(a - numeric) / denom;
        ++result.checked;
        if (rel > result.max_relative_error || result.worst_parameter.empty()) {
            result.max_relative_error = rel;
            result.worst_parameter = params[b].name;
            result.worst_index = i;
            result.analytic = a;
            result.numeric = numeric;
        }
    }
    return result;
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
    out << "epoch,train_loss,train_acc,val_loss,val_acc,test_loss,test_acc\n";
    auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); };
    for (const auto& e : history.epochs) {
        out << e.epoch << ',' << detail::format_double(e.train_loss) << ',' << detail::format_double(e.train_acc)
            << ',' << detail::format_double(e.val_loss) << ',' << detail::format_double(e.val_acc) << ','
            << opt(e.test_loss) << ',' << opt(e.test_acc) << '\n';
    }
}

}  // namespace stockcnn
