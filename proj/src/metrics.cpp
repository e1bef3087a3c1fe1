#include "stockcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "io_util.hpp"
#include "stockcnn/error.hpp"

namespace stockcnn {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw Error("metrics.length_mismatch", "predictions and labels differ in length");
}

Metric ratio(std::size_t num, std::size_t den) {
    if (den == 0) return {0.0, true};
    return {static_cast<double>(num) / static_cast<double>(den), false};
}

}  // namespace

double bce_loss(double pred, int label) {
    const double p = clamp_prob(pred);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double bce_loss(std::span<const double> preds, std::span<const std::uint8_t> labels) {
    check_lengths(preds.size(), labels.size());
    if (preds.empty()) throw Error("metrics.empty", "loss of zero samples is undefined");
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += bce_loss(preds[i], labels[i]);
    return sum / static_cast<double>(preds.size());
}

double bce_grad(double pred, int label) {
    const double p = clamp_prob(pred);
    return (p - static_cast<double>(label)) / (p * (1.0 - p));
}

int classify(double pred, double threshold) { return pred >= threshold ? 1 : 0; }

ConfusionMatrix confusion(std::span<const double> preds, std::span<const std::uint8_t> labels, double threshold) {
    check_lengths(preds.size(), labels.size());
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool predicted = classify(preds[i], threshold) == 1;
        const bool actual = labels[i] == 1;
        if (predicted && actual) ++cm.tp;
        else if (predicted) ++cm.fp;
        else if (actual) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

Metric accuracy(const ConfusionMatrix& cm) { return ratio(cm.tp + cm.tn, cm.total()); }
Metric precision(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fp); }
Metric recall(const ConfusionMatrix& cm) { return ratio(cm.tp, cm.tp + cm.fn); }

Metric f1(const ConfusionMatrix& cm) {
    const double p = precision(cm).value;
    const double r = recall(cm).value;
    if (p + r == 0.0) return {0.0, true};
    return {2.0 * p * r / (p + r), false};
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
    out << "dataset,tp,fp,tn,fn,accuracy,precision,recall,f1\n";
    for (const auto& row : rows) {
        out << row.dataset << ',' << row.cm.tp << ',' << row.cm.fp << ',' << row.cm.tn << ',' << row.cm.fn << ','
            << detail::format_double(accuracy(row.cm).value) << ','
            << detail::format_double(precision(row.cm).value) << ','
            << detail::format_double(recall(row.cm).value) << ','
            << detail::format_double(f1(row.cm).value) << '\n';
    }
}

void print_metrics_table(std::ostream& out, std::span<const MetricsRow> rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %8s %8s %8s %8s %9s %9s %9s %9s\n", "dataset", "TP", "FP", "TN", "FN",
                  "accuracy", "precision", "recall", "f1");
    out << line;
    for (const auto& row : rows) {
        std::snprintf(line, sizeof line, "%-10s %8zu %8zu %8zu %8zu %9.4f %9.4f %9.4f %9.4f\n", row.dataset.c_str(),
                      row.cm.tp, row.cm.fp, row.cm.tn, row.cm.fn, accuracy(row.cm).value,
                      precision(row.cm).value, recall(row.cm).value, f1(row.cm).value);
        out << line;
    }
}

}  // namespace stockcnn
