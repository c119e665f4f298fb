// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include "bench.hpp"

#include <wbpref/error.hpp>
#include <wbpref/text_io.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace wbpref::bench {

std::string describe(const BenchConfig& c) {
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) { s += k + " " + v + "\n"; };
    kv("seed", std::to_string(c.seed));
    std::string names;
    for (const auto& n : c.sensors) names += (names.empty() ? "" : ",") + n;
    kv("sensors", names);
    kv("train_sensor", c.sensors.front());
    kv("split", std::to_string(c.n_train) + "/" + std::to_string(c.n_val) + "/" + std::to_string(c.n_test));
    kv("cct_range", text::format_real(c.cct_low) + ".." + text::format_real(c.cct_high));
    kv("chroma_noise", text::format_real(c.chroma_noise));
    kv("policy", "lambda=" + text::format_real(c.policy.lambda) + " delta_mired=" +
                     text::format_real(c.policy.delta_mired) + " tint_gain=" + text::format_real(c.policy.tint_gain));
    for (const auto& fe : c.front_ends) kv("front_end", fe.name + " noise_deg=" + text::format_real(fe.noise_deg));
    kv("epochs", std::to_string(c.epochs));
    return s;
}

namespace {

struct TrainJob {
    std::string front_end;
    TrainingSpace space;
    TrainResult result;
};

void run_parallel(std::vector<TrainJob>& jobs, unsigned threads, const std::vector<DatasetRecord>& train_set,
                  const std::vector<DatasetRecord>& val_set, const CameraProfile& profile, const BenchConfig& cfg) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                TrainConfig tc;
                tc.epochs = cfg.epochs;
                tc.seed = cfg.seed;
                tc.training_space = jobs[i].space;
                jobs[i].result = train(train_set, val_set, jobs[i].front_end, tc, profile);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
    if (cfg.sensors.size() < 2) throw ConfigError("bench needs at least two sensors");
    if (cfg.front_ends.empty()) throw ConfigError("bench needs at least one front end");
    BenchResult res;
    res.config = cfg;

    const std::size_t n = cfg.n_train + cfg.n_val + cfg.n_test;
    const auto scenes = sample_illuminants(n, cfg.cct_low, cfg.cct_high, cfg.chroma_noise, cfg.seed);
    GenerationOptions gen;
    gen.policy = cfg.policy;
    gen.front_ends = cfg.front_ends;
    gen.seed = cfg.seed + 1;
    const auto dn = static_cast<double>(n);
    const SplitRatios ratios{static_cast<double>(cfg.n_train) / dn, static_cast<double>(cfg.n_val) / dn,
                             static_cast<double>(cfg.n_test) / dn};

    std::map<std::string, std::array<std::vector<DatasetRecord>, 3>> splits;
    for (std::size_t i = 0; i < cfg.sensors.size(); ++i) {
        const std::string& name = cfg.sensors[i];
        auto [sensor, profile] = make_virtual_sensor(cfg.seed * 1000 + i, name);
        auto records = generate_records(profile, scenes, gen);
        for (auto& r : records) r.id += "@" + name;
        auto [tr, va, te] = split(records, ratios, cfg.seed + 2);
        splits[name] = {std::move(tr), std::move(va), std::move(te)};
        res.profiles.emplace(name, profile);
    }

    const std::string& train_name = cfg.sensors.front();
    const CameraProfile& train_profile = res.profiles.at(train_name);
    const auto& train_set = splits[train_name][0];
    const auto& val_set = splits[train_name][1];

    std::vector<TrainJob> jobs;
    for (const auto& fe : cfg.front_ends)
        for (TrainingSpace sp : {TrainingSpace::Xyz, TrainingSpace::Raw}) jobs.push_back({fe.name, sp, {}});
    run_parallel(jobs, cfg.threads, train_set, val_set, train_profile, cfg);

    std::map<std::string, std::vector<std::pair<std::string, MappingModel>>> models;
    for (const auto& fe : cfg.front_ends) {
        const auto pairs =
            prepare_pairs(train_set, fe.name, train_profile, TrainingSpace::Xyz, CstMode::ForwardThenInvert);
        auto& list = models[fe.name];
        list.push_back({kThreeByThree, MappingModel{fit_3x3(pairs), TrainingSpace::Xyz, fe.name}});
        list.push_back({kPolynomial, MappingModel{fit_polynomial(pairs), TrainingSpace::Xyz, fe.name}});
    }
    for (const auto& j : jobs)
        models[j.front_end].push_back(
            {j.space == TrainingSpace::Xyz ? kMlpXyz : kMlpRaw, MappingModel{j.result.model, j.space, j.front_end}});

    for (const auto& name : cfg.sensors) {
        const auto& test = splits[name][2];
        ReportTable table;
        table.title = "sensor " + name + (name == train_name ? " (training sensor)" : " (unseen)") + ", test split";
        table.metadata = {{"seed", std::to_string(cfg.seed)},
                          {"records", std::to_string(test.size())},
                          {"trained_on", train_name},
                          {"cst_mode", to_string(CstMode::ForwardThenInvert)},
                          {"three-by-three", "plain least squares"}};
        for (const auto& fe : cfg.front_ends) {
            const ErrorStats none = evaluate(std::nullopt, test, fe.name, res.profiles);
            res.stats[name][{fe.name, kNone}] = none;
            table.rows.push_back({fe.name, kNone, none});
            for (const auto& [label, model] : models[fe.name]) {
                const ErrorStats st = evaluate(model, test, fe.name, res.profiles);
                res.stats[name][{fe.name, label}] = st;
                table.rows.push_back({fe.name, label, st});
            }
        }
        table.normalize();
        res.tables.push_back(std::move(table));
    }

    std::vector<DatasetRecord> all_test;
    for (const auto& name : cfg.sensors)
        all_test.insert(all_test.end(), splits[name][2].begin(), splits[name][2].end());
    res.consistency = xyz_consistency_check(all_test, train_name, res.profiles);

    std::string rep = "# wbpref synthetic cross-camera benchmark\n" + describe(cfg) + "\n";
    rep += render_report(res.tables);
    rep += "\n== cross-sensor consistency of preferred illuminants (reference " + train_name + ") ==\n";
    for (const auto& c : res.consistency)
        rep += "sensor " + c.camera + "  n " + std::to_string(c.n) + "  raw " + text::format_fixed(c.raw_mean_error, 2) +
               "  xyz " + text::format_fixed(c.xyz_mean_error, 4) + "\n";
    rep += "\n== training summaries (sensor " + train_name + ") ==\n";
    for (const auto& j : jobs) {
        const auto& r = j.result.report;
        rep += j.front_end + " " + to_string(j.space) + "  final_train_loss " +
               text::format_fixed(r.epoch_loss.back(), 4) + "  best_val_error " +
               text::format_fixed(r.best_val_error, 4) + " (epoch " + std::to_string(r.best_epoch) + ")\n";
    }
    res.report = rep;
    res.csv = render_csv(res.tables);
    return res;
}

}  // namespace wbpref::bench
