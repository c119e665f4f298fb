// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include "support/oracles.hpp"
#include "support/training_cases.hpp"

#include <doctest.h>
#include <wbpref/datakit.hpp>
#include <wbpref/error.hpp>
#include <wbpref/training.hpp>

#include <cmath>
#include <numbers>

using namespace wbpref;
namespace t = wbpref::testing;

TEST_CASE("angular loss clamp floor") {
    const double floor = std::acos(1.0 - 1e-7) * 180.0 / std::numbers::pi;
    CHECK(floor == doctest::Approx(0.0256).epsilon(5e-3));
    CHECK(angular_loss(Vec3{1, 2, 3}, Vec3{1, 2, 3}) == doctest::Approx(floor).epsilon(1e-6));
    CHECK(angular_loss(Vec3{1, 0, 0}, Vec3{0, 1, 0}) == doctest::Approx(90.0));
    CHECK(angular_loss(ColorVec::xyz(1, 1, 0), ColorVec::xyz(1, 0, 0)) == doctest::Approx(45.0));
    CHECK_THROWS_AS(angular_loss(Vec3{0, 0, 0}, Vec3{1, 0, 0}), DomainError);
}

TEST_CASE("finite-difference gradient check") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto c = t::gradient_case(seed);
        const double err = t::max_gradient_relative_error(c.model, c.batch);
        INFO("seed " << seed);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradient is a mean over the batch") {
    const auto c = t::gradient_case(42);
    std::vector<TrainSample> twice = c.batch;
    twice.insert(twice.end(), c.batch.begin(), c.batch.end());
    const auto a = backward(c.model, c.batch), b = backward(c.model, twice);
    CHECK(a.mean_loss == doctest::Approx(b.mean_loss).epsilon(1e-12));
    for (std::size_t i = 0; i < a.grad.size(); ++i) CHECK(std::abs(a.grad[i] - b.grad[i]) < 1e-10);
    CHECK(a.mean_loss == doctest::Approx(batch_loss(c.model, c.batch)).epsilon(1e-14));
}

TEST_CASE("no stationary point at ninety degrees") {
    auto c = t::gradient_case(7);
    std::vector<TrainSample> same(4, c.batch.front());
    BatchNormStats st;
    for (std::size_t j = 0; j < PreferenceMlp::kH1; ++j) st.var[j] = 0.0;
    const Vec3 pred = mlp_forward_unnormalized(c.model, same.front().features, &st);
    Vec3 other{pred[1], -pred[0], 0.0};
    if (std::abs(other[0]) + std::abs(other[1]) < 1e-9) other = {1.0, 0.0, 0.0};
    for (auto& s : same) s.target = other;
    CHECK(angular_loss(pred, other) == doctest::Approx(90.0).epsilon(1e-9));
    const auto g = backward(c.model, same);
    double norm = 0;
    for (double v : g.grad) norm += v * v;
    CHECK(std::sqrt(norm) > 1e-6);
    CHECK_THROWS(backward(c.model, std::span<const TrainSample>(same.data(), 1)));
}

TEST_CASE("adam first step") {
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    PreferenceMlp::Params p{}, g{};
    Rng rng(3);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = rng.uniform(-1, 1);
        g[i] = rng.uniform(0.1, 2.0) * (i % 2 ? 1 : -1);
    }
    const auto before = p;
    AdamState st;
    adam_step(st, p, g, 1e-3, cfg);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs((p[i] - before[i]) + 1e-3 * (g[i] > 0 ? 1 : -1)) < 1e-6);
    CHECK(st.timestep == 1);

    PreferenceMlp::Params q = before, zero{};
    AdamState s2;
    adam_step(s2, q, zero, 1e-3, cfg);
    CHECK(q == before);

    // Coupled decay: the step is the bias-corrected Adam step on g = wd * theta.
    cfg.weight_decay = 1e-3;
    PreferenceMlp::Params r = before;
    AdamState s3;
    adam_step(s3, r, zero, 1e-2, cfg);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double gi = cfg.weight_decay * before[i];
        const double want = before[i] - 1e-2 * gi / (std::abs(gi) + cfg.adam_epsilon);
        CHECK(r[i] == doctest::Approx(want).epsilon(1e-12));
        CHECK((r[i] - before[i]) * before[i] < 0.0);
    }
}

TEST_CASE("cosine schedule") {
    CHECK(cosine_lr(0, 100, 1e-2, 1e-6) == doctest::Approx(1e-2));
    CHECK(cosine_lr(100, 100, 1e-2, 1e-6) == doctest::Approx(1e-6));
    CHECK(cosine_lr(50, 100, 1e-2, 1e-6) == doctest::Approx((1e-2 + 1e-6) / 2));
    CHECK(cosine_lr(25, 100, 1.0, 0.0) == doctest::Approx(0.5 * (1 + std::cos(std::numbers::pi / 4))));
    CHECK_THROWS(cosine_lr(101, 100, 1, 0));
}

TEST_CASE("initialization") {
    const auto a = initialize_model(5), b = initialize_model(5), c = initialize_model(6);
    CHECK(a.params() == b.params());
    CHECK(a.params() != c.params());
    using O = PreferenceMlp::Offsets;
    for (std::size_t i = O::w1; i < O::b1; ++i) CHECK(std::abs(a.params()[i]) <= std::sqrt(1.0 / 10.0));
    for (std::size_t i = O::w2; i < O::b2; ++i) CHECK(std::abs(a.params()[i]) <= std::sqrt(1.0 / 16.0));
    for (std::size_t i = O::b1; i < O::gamma; ++i) CHECK(a.params()[i] == 0.0);
    for (std::size_t i = O::gamma; i < O::beta; ++i) CHECK(a.params()[i] == 1.0);
    CHECK(a.running_var()[0] == 1.0);
    CHECK(a.running_mean()[0] == 0.0);
}

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(validate(c));
    c.epochs = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.batch_size = 1;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.lr_min = 1.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    CHECK(describe(TrainConfig{}).find("epochs 2000") != std::string::npos);
}

TEST_CASE("training loop") {
    auto [sensor, profile] = make_virtual_sensor(31, "T");
    GenerationOptions gen;
    gen.front_ends = {{"synthetic", 0.0}};
    gen.seed = 4;
    const auto records = generate_synthetic_dataset(profile, 300, 3000, 9000, 0.002, gen);
    const std::span<const DatasetRecord> tr(records.data(), 240), va(records.data() + 240, 60);

    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.seed = 3;
    const auto one = train(tr, va, "synthetic", cfg, profile);
    CHECK(one.model.params() != initialize_model(3).params());

    cfg.epochs = 20;
    const auto a = train(tr, va, "synthetic", cfg, profile);
    const auto b = train(tr, va, "synthetic", cfg, profile);
    CHECK(a.report.epoch_loss == b.report.epoch_loss);
    CHECK(a.model.params() == b.model.params());
    CHECK(a.report.log(false) == b.report.log(false));
    CHECK(a.report.epoch_loss.size() == 20);

    cfg.batch_size = 500;
    CHECK_THROWS_AS(train(tr, va, "synthetic", cfg, profile), ConfigError);
    cfg.batch_size = 64;
    try {
        train(tr, va, "missing-front-end", cfg, profile);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(records.front().id) != std::string::npos);
    }
}

TEST_CASE("prepare_pairs uses one CST per record") {
    auto [sensor, profile] = make_virtual_sensor(32, "P");
    GenerationOptions gen;
    gen.seed = 5;
    const auto recs = generate_synthetic_dataset(profile, 20, 3000, 9000, 0.0, gen);
    const auto pairs = prepare_pairs(recs, "synthetic", profile, TrainingSpace::Xyz, CstMode::ForwardThenInvert);
    const auto raw = prepare_pairs(recs, "synthetic", profile, TrainingSpace::Raw, CstMode::ForwardThenInvert);
    REQUIRE(pairs.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& n = recs[i].neutral_estimates.at("synthetic");
        const Mat3 cst = resolve_cst(profile, n).cst_raw_to_xyz;
        CHECK(angle_degrees(pairs[i].first, cst * n.values()) < 1e-9);
        CHECK(angle_degrees(pairs[i].second, cst * recs[i].gt_preferred_raw.values()) < 1e-9);
        CHECK(angle_degrees(raw[i].second, recs[i].gt_preferred_raw.values()) < 1e-12);
    }
    const auto samples = prepare_samples(recs, "synthetic", profile, TrainingSpace::Xyz, CstMode::ForwardThenInvert);
    CHECK(samples[3].features == polynomial_expand(pairs[3].first));
}

TEST_CASE("identity preference is learned") {
    auto [sensor, profile] = make_virtual_sensor(33, "I");
    GenerationOptions gen;
    gen.policy.lambda = 0.0;
    gen.seed = 6;
    const auto recs = generate_synthetic_dataset(profile, 2200, 2500, 10000, 0.003, gen);
    const std::span<const DatasetRecord> tr(recs.data(), 2000), va(recs.data() + 2000, 200);
    TrainConfig cfg;
    cfg.seed = 1;
    const auto r = train(tr, va, "synthetic", cfg, profile);
    REQUIRE_FALSE(r.report.validation.empty());
    const double final_val = r.report.validation.back().mean_error;
    MESSAGE("identity fit final validation error " << final_val);
    CHECK(final_val < 0.3);
}
