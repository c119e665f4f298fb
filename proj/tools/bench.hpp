// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

// Synthetic cross-camera benchmark: train on one virtual sensor, evaluate
// all mappings on every sensor.

#pragma once

#include <wbpref/datakit.hpp>
#include <wbpref/evalkit.hpp>
#include <wbpref/training.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace wbpref::bench {

struct BenchConfig {
    std::uint64_t seed = 7;
    std::vector<std::string> sensors{"A", "B", "C"};  ///< the first is the training sensor
    std::size_t n_train = 2000;
    std::size_t n_val = 200;
    std::size_t n_test = 500;
    double cct_low = 4500.0;
    double cct_high = 12000.0;
    double chroma_noise = 0.002;
    PreferencePolicy policy{0.5, 40.0, 1.3};
    std::vector<FrontEndNoise> front_ends{{"noisy2", 2.0}, {"synthetic", 0.0}};
    int epochs = 2000;
    unsigned threads = 4;
};

std::string describe(const BenchConfig& cfg);

using RowKey = std::pair<std::string, std::string>;  ///< (front end, mapping)

struct BenchResult {
    BenchConfig config;
    std::map<std::string, std::map<RowKey, ErrorStats>> stats;  ///< per sensor
    std::vector<ConsistencyResult> consistency;
    std::map<std::string, CameraProfile> profiles;
    std::vector<ReportTable> tables;
    std::string report;  ///< deterministic text report
    std::string csv;
};

/// Mapping labels used in the report rows.
inline constexpr const char* kNone = "none";
inline constexpr const char* kThreeByThree = "three-by-three";
inline constexpr const char* kPolynomial = "polynomial";
inline constexpr const char* kMlpXyz = "mlp";
inline constexpr const char* kMlpRaw = "mlp-raw";

BenchResult run_bench(const BenchConfig& cfg);

}  // namespace wbpref::bench
