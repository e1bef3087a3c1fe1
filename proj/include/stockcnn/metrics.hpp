#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace stockcnn {

inline constexpr double kProbabilityClamp = 1e-7;

// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> preds, std::span<const std::uint8_t> labels);
double bce_loss(double pred, int label);
// d/d(pred) of the per-sample loss, evaluated at the clamped prediction.
double bce_grad(double pred, int label);

// Ties go to the positive class.
int classify(double pred, double threshold = 0.5);

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const double> preds, std::span<const std::uint8_t> labels,
                          double threshold = 0.5);

// A zero denominator yields value 0 with `degenerate` set.
struct Metric {
    double value = 0.0;
    bool degenerate = false;
};

Metric accuracy(const ConfusionMatrix& cm);
Metric precision(const ConfusionMatrix& cm);
Metric recall(const ConfusionMatrix& cm);
Metric f1(const ConfusionMatrix& cm);

struct MetricsRow {
    std::string dataset;
    ConfusionMatrix cm;
};

// CSV: dataset,tp,fp,tn,fn,accuracy,precision,recall,f1
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void print_metrics_table(std::ostream& out, std::span<const MetricsRow> rows);

}  // namespace stockcnn
