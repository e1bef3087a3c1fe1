#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stockcnn/error.hpp"
#include "stockcnn/optim.hpp"

using namespace stockcnn;

namespace {

using StepFn = void (*)(ParamSpans, GradSpans, AdamState&, const HyperParams&);

// Runs one step on a list of flat parameter arrays.
void step(StepFn fn, std::vector<std::vector<double>>& w, const std::vector<std::vector<double>>& g,
          AdamState& state, const HyperParams& hp) {
    std::vector<std::span<double>> ws(w.begin(), w.end());
    std::vector<std::span<const double>> gs(g.begin(), g.end());
    fn(ws, gs, state, hp);
}

double scalar_step(StepFn fn, double& w, double g, AdamState& state, const HyperParams& hp) {
    std::vector<std::vector<double>> ws{{w}};
    step(fn, ws, {{g}}, state, hp);
    w = ws[0][0];
    return w;
}

AdamState fresh(std::size_t n = 1) {
    std::vector<std::size_t> sizes{n};
    return AdamState::zeros(sizes);
}

}  // namespace

TEST_CASE("momentum: hand evaluation and degenerate decay") {
    HyperParams hp;
    hp.learning_rate = 0.1;
    AdamState st = fresh();
    double w = 0;
    scalar_step(momentum_step, w, 1.0, st, hp);
    CHECK(st.m[0][0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(w == doctest::Approx(-0.01).epsilon(1e-14));
    CHECK(st.step == 1);

    hp.beta1 = 0.0;
    AdamState plain = fresh();
    double v = 2.0;
    scalar_step(momentum_step, v, 3.0, plain, hp);
    CHECK(v == 2.0 - 0.1 * 3.0);
}

TEST_CASE("momentum: zero gradient from rest is a fixed point") {
    HyperParams hp;
    AdamState st = fresh();
    double w = 1.25;
    for (int i = 0; i < 100; ++i) scalar_step(momentum_step, w, 0.0, st, hp);
    CHECK(w == 1.25);
}

TEST_CASE("rmsprop: hand evaluation, zero gradient and sign") {
    HyperParams hp;
    AdamState st = fresh();
    double w = 0;
    scalar_step(rmsprop_step, w, 2.0, st, hp);
    CHECK(st.s[0][0] == doctest::Approx(0.004).epsilon(1e-13));
    CHECK(w == doctest::Approx(-0.001 / (std::sqrt(0.004) + 1e-8) * 2.0).epsilon(1e-13));

    const double w_before = w, s_before = st.s[0][0];
    scalar_step(rmsprop_step, w, 0.0, st, hp);
    CHECK(w == w_before);
    CHECK(st.s[0][0] == doctest::Approx(0.999 * s_before).epsilon(1e-15));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5, 5);
    AdamState walk = fresh();
    double x = 0;
    for (int i = 0; i < 1000; ++i) {
        double g = u(rng);
        double before = x;
        scalar_step(rmsprop_step, x, g, walk, hp);
        if (g > 0) CHECK(x < before);
        if (g < 0) CHECK(x > before);
        CHECK(walk.s[0][0] >= 0.0);
    }
}

TEST_CASE("adam: scalar hand step") {
    HyperParams hp;
    hp.learning_rate = 0.1;
    AdamState st = fresh();
    double w = 0;
    scalar_step(adam_step, w, 1.0, st, hp);
    CHECK(std::abs(st.m[0][0] - 0.1) <= 1e-15);
    CHECK(std::abs(st.s[0][0] - 0.001) <= 1e-15);
    CHECK(std::abs(w - (-0.1 * 0.1 / (std::sqrt(0.001) + 1e-8))) <= 1e-12);
    CHECK(w == doctest::Approx(-0.31623).epsilon(1e-5));
}

TEST_CASE("adam: zero gradient with fresh state leaves weights unchanged") {
    HyperParams hp;
    AdamState st = fresh(3);
    std::vector<std::vector<double>> w{{1, -2, 3}};
    step(adam_step, w, {{0, 0, 0}}, st, hp);
    CHECK(w[0] == std::vector<double>{1, -2, 3});
    CHECK(st.step == 1);
}

TEST_CASE("adam: identical gradient histories give identical trajectories") {
    HyperParams hp;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    AdamState paired = AdamState::zeros(std::vector<std::size_t>{4});
    AdamState single = fresh();
    std::vector<std::vector<double>> w{{0.5, 0.5, 0.5, -7}};
    double alone = 0.5;
    for (int i = 0; i < 200; ++i) {
        double g = n(rng);
        step(adam_step, w, {{g, g, g, n(rng)}}, paired, hp);
        scalar_step(adam_step, alone, g, single, hp);
        CHECK(w[0][0] == w[0][1]);
        CHECK(w[0][1] == w[0][2]);
        CHECK(w[0][0] == alone);
    }
}

TEST_CASE("adam: zero decays reduce to a normalized gradient step") {
    HyperParams hp;
    hp.beta1 = 0.0;
    hp.beta2 = 0.0;
    hp.learning_rate = 0.05;
    for (double g : {3.0, -0.25, 1e-3}) {
        AdamState st = fresh();
        double w = 1.0;
        scalar_step(adam_step, w, g, st, hp);
        CHECK(w == doctest::Approx(1.0 - 0.05 * g / (std::abs(g) + 1e-8)).epsilon(1e-14));
    }
}

TEST_CASE("adam: state keeps its shape and s stays non-negative") {
    HyperParams hp;
    std::vector<std::size_t> sizes{3, 1, 5};
    AdamState st = AdamState::zeros(sizes);
    std::vector<std::vector<double>> w{{0, 0, 0}, {0}, {0, 0, 0, 0, 0}};
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 10);
    for (int i = 0; i < 50; ++i) {
        auto g = w;
        for (auto& b : g) {
            for (double& v : b) v = n(rng);
        }
        step(adam_step, w, g, st, hp);
        for (std::size_t b = 0; b < sizes.size(); ++b) {
            CHECK(st.m[b].size() == sizes[b]);
            CHECK(st.s[b].size() == sizes[b]);
            for (double s : st.s[b]) CHECK(s >= 0.0);
        }
    }
    CHECK(st.step == 50);
}

TEST_CASE("adam: converges on a quadratic") {
    HyperParams hp;
    hp.learning_rate = 0.01;  // the default 0.001 moves at most ~0.1 per 100 steps
    AdamState st = fresh();
    double w = 0;
    int steps = 0;
    while (std::abs(w - 3.0) >= 0.01 && steps < 2000) {
        scalar_step(adam_step, w, 2.0 * (w - 3.0), st, hp);
        ++steps;
    }
    CHECK(std::abs(w - 3.0) < 0.01);
    CHECK(steps < 2000);
}

TEST_CASE("adam: bias correction flag") {
    HyperParams hp;
    hp.learning_rate = 0.1;
    hp.bias_correction = true;
    AdamState st = fresh();
    double w = 0;
    scalar_step(adam_step, w, 1.0, st, hp);
    // Corrected moments after one step are exactly g and g^2.
    CHECK(w == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("optim: shape mismatches and hyper-parameter validation") {
    HyperParams hp;
    AdamState st = fresh(2);
    std::vector<std::vector<double>> w{{0, 0, 0}};
    CHECK_THROWS_AS(step(adam_step, w, {{1, 1, 1}}, st, hp), Error);
    std::vector<std::vector<double>> w2{{0, 0}};
    CHECK_THROWS_AS(step(momentum_step, w2, {{1, 1}, {1}}, st, hp), Error);

    HyperParams bad;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.epsilon = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.learning_rate = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_NOTHROW(HyperParams{}.validate());
}
