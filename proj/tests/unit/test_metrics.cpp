#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "stockcnn/metrics.hpp"

using namespace stockcnn;

TEST_CASE("bce: reference values and clamp") {
    CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bce_loss(1.0 - 1e-7, 1) == doctest::Approx(1e-7).epsilon(1e-6));
    CHECK(bce_loss(1.0, 1) == bce_loss(1.0 - 1e-7, 1));
    CHECK(bce_loss(0.0, 1) == doctest::Approx(-std::log(1e-7)));
    CHECK(std::isfinite(bce_loss(0.0, 1)));
    CHECK(std::isfinite(bce_loss(1.0, 0)));

    std::vector<double> preds{0.9, 0.2};
    std::vector<std::uint8_t> labels{1, 0};
    CHECK(bce_loss(preds, labels) == doctest::Approx((-std::log(0.9) - std::log(0.8)) / 2).epsilon(1e-15));
    CHECK(bce_loss(preds, labels) == doctest::Approx(0.1643).epsilon(1e-3));
}

TEST_CASE("bce: guards") {
    std::vector<double> preds{0.5};
    std::vector<std::uint8_t> two{1, 0}, none;
    CHECK_THROWS_AS(bce_loss(preds, two), Error);
    CHECK_THROWS_AS(bce_loss(std::vector<double>{}, none), Error);
}

TEST_CASE("bce: non-negative and monotone on a grid") {
    double prev1 = INFINITY, prev0 = -1;
    for (int i = 1; i < 1000; ++i) {
        double p = i / 1000.0;
        double l1 = bce_loss(p, 1), l0 = bce_loss(p, 0);
        CHECK(l1 >= 0.0);
        CHECK(l0 >= 0.0);
        CHECK(l1 < prev1);
        CHECK(l0 > prev0);
        prev1 = l1;
        prev0 = l0;
    }
}

TEST_CASE("bce gradient: hand values and finite differences") {
    CHECK(bce_grad(0.5, 1) == -2.0);
    CHECK(bce_grad(0.5, 0) == 2.0);
    // Through the sigmoid, dL/dz = dL/dp * p(1-p) = p - y, zero at a perfect prediction.
    for (double p : {0.2, 0.5, 0.9}) {
        CHECK(bce_grad(p, 1) * p * (1 - p) == doctest::Approx(p - 1));
    }
    const double h = 1e-6;
    for (double p : {0.05, 0.3, 0.5, 0.71, 0.98}) {
        for (int y : {0, 1}) {
            double fd = (bce_loss(p + h, y) - bce_loss(p - h, y)) / (2 * h);
            CHECK(std::abs(bce_grad(p, y) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("classify: threshold rule") {
    CHECK(classify(0.7) == 1);
    CHECK(classify(0.3) == 0);
    CHECK(classify(0.5) == 1);
    CHECK(classify(0.8, 0.9) == 0);
    CHECK(classify(0.9, 0.9) == 1);
}

TEST_CASE("confusion: enumeration example and partition") {
    std::vector<double> preds{0.9, 0.9, 0.1, 0.1};
    std::vector<std::uint8_t> labels{1, 0, 0, 1};
    auto cm = confusion(preds, labels);
    CHECK(cm == ConfusionMatrix{1, 1, 1, 1});
    CHECK(cm.total() == 4);

    std::vector<std::uint8_t> right{1, 1, 0, 0};
    auto perfect = confusion(preds, right);
    CHECK(perfect.fp == 0);
    CHECK(perfect.fn == 0);
    CHECK_THROWS_AS(confusion(preds, std::vector<std::uint8_t>{1}), Error);
}

TEST_CASE("metrics: hand evaluation") {
    ConfusionMatrix cm{3, 1, 2, 0};
    CHECK(precision(cm).value == 0.75);
    CHECK(recall(cm).value == 1.0);
    CHECK(accuracy(cm).value == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(f1(cm).value == doctest::Approx(2 * 0.75 / 1.75).epsilon(1e-15));
    CHECK(f1(cm).value == doctest::Approx(0.8571).epsilon(1e-4));

    ConfusionMatrix perfect{4, 0, 5, 0};
    for (auto fn : {accuracy, precision, recall, f1}) {
        CHECK(fn(perfect).value == 1.0);
        CHECK_FALSE(fn(perfect).degenerate);
    }
}

TEST_CASE("metrics: degenerate denominators") {
    ConfusionMatrix no_positive_calls{0, 0, 5, 3};
    CHECK(precision(no_positive_calls).value == 0.0);
    CHECK(precision(no_positive_calls).degenerate);
    CHECK(f1(no_positive_calls).degenerate);
    CHECK_FALSE(recall(no_positive_calls).degenerate);

    ConfusionMatrix no_positives{0, 2, 3, 0};
    CHECK(recall(no_positives).degenerate);
    CHECK(recall(no_positives).value == 0.0);

    ConfusionMatrix empty{};
    CHECK(accuracy(empty).degenerate);
    CHECK(accuracy(empty).value == 0.0);
}

TEST_CASE("metrics: brute-force recount, harmonic mean and permutation invariance") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + rng() % 1000;
        double threshold = (trial % 3 == 0) ? 0.5 : u(rng);
        std::vector<double> preds(n);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Quantized predictions put some values exactly on the threshold.
            preds[i] = std::round(u(rng) * 20) / 20;
            labels[i] = rng() % 2;
        }
        auto cm = confusion(preds, labels, threshold);
        auto want = oracle::recount(preds, labels, threshold);
        CHECK(cm.tp == static_cast<std::size_t>(want.tp));
        CHECK(cm.fp == static_cast<std::size_t>(want.fp));
        CHECK(cm.tn == static_cast<std::size_t>(want.tn));
        CHECK(cm.fn == static_cast<std::size_t>(want.fn));
        CHECK(accuracy(cm).value == want.accuracy);
        CHECK(precision(cm).value == want.precision);
        CHECK(recall(cm).value == want.recall);
        CHECK(f1(cm).value == want.f1);

        auto p = precision(cm), r = recall(cm), f = f1(cm);
        if (!p.degenerate && !r.degenerate && !f.degenerate) {
            CHECK(f.value >= std::min(p.value, r.value) - 1e-15);
            CHECK(f.value <= std::max(p.value, r.value) + 1e-15);
        }

        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> sp(n);
        std::vector<std::uint8_t> sl(n);
        for (std::size_t i = 0; i < n; ++i) {
            sp[i] = preds[order[i]];
            sl[i] = labels[order[i]];
        }
        CHECK(confusion(sp, sl, threshold) == cm);
    }
}

TEST_CASE("metrics csv: header and recomputable values") {
    std::vector<MetricsRow> rows{{"train", {3, 1, 2, 0}}, {"test", {0, 0, 4, 4}}};
    std::ostringstream out;
    write_metrics_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "dataset,tp,fp,tn,fn,accuracy,precision,recall,f1");
    std::getline(in, line);
    CHECK(line.rfind("train,3,1,2,0,", 0) == 0);
    CHECK(line.find(",0.75,1,") != std::string::npos);
    std::getline(in, line);
    CHECK(line == "test,0,0,4,4,0.5,0,0,0");

    std::ostringstream table;
    print_metrics_table(table, rows);
    CHECK(table.str().find("precision") != std::string::npos);
}
