// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <wbpref/datakit.hpp>
#include <wbpref/mapping.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wbpref {

struct TrainConfig {
    int epochs = 2000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 1e-9;
    double lr_max = 1e-2;
    double lr_min = 1e-6;
    int batch_size = 64;
    double bn_momentum = 0.1;
    std::uint64_t seed = 0;
    TrainingSpace training_space = TrainingSpace::Xyz;
    CstMode cst_mode = CstMode::ForwardThenInvert;
    double adam_epsilon = 1e-8;
    double dot_clamp = 1e-7;
    int validation_interval = 50;
};

/// Throws ConfigError on a violated invariant.
void validate(const TrainConfig& cfg);
/// One `key value` line per field.
std::string describe(const TrainConfig& cfg);

struct AdamState {
    PreferenceMlp::Params m{};
    PreferenceMlp::Params v{};
    long long timestep = 0;
};

/// Angle in degrees with the cosine clamped to [-1 + dot_clamp, 1 - dot_clamp].
double angular_loss(const Vec3& pred, const Vec3& gt, double dot_clamp = 1e-7);
double angular_loss(const ColorVec& pred, const ColorVec& gt, double dot_clamp = 1e-7);

/// Kernel features and a unit target in the training space.
struct TrainSample {
    KernelFeatures features{};
    Vec3 target{};
};

struct BatchGradient {
    double mean_loss = 0.0;
    PreferenceMlp::Params grad{};
    BatchNormStats stats;  ///< batch mean and biased variance of layer-1 pre-activations
};

/// Train-mode mean loss over the batch, using its own batch-norm statistics.
double batch_loss(const PreferenceMlp& model, std::span<const TrainSample> batch, double dot_clamp = 1e-7);

/// Exact gradient of batch_loss with respect to all 539 parameters.
/// Requires at least two samples; throws NumericError naming the layer on a
/// non-finite gradient.
BatchGradient backward(const PreferenceMlp& model, std::span<const TrainSample> batch, double dot_clamp = 1e-7);

/// Bias-corrected Adam with coupled L2 weight decay.
void adam_step(AdamState& state, PreferenceMlp::Params& params, const PreferenceMlp::Params& grads, double lr,
               const TrainConfig& cfg);

double cosine_lr(int t, int total, double lr_max, double lr_min);

/// Uniform weights on +-sqrt(1 / fan_in), zero biases, gamma 1, beta 0.
PreferenceMlp initialize_model(std::uint64_t seed);

/// (neutral, preferred) per record for `front_end`. In XYZ both go through
/// the CST resolved from the neutral estimate; raw space uses the normalized
/// raw vectors. Errors name the record id.
std::vector<IlluminantPair> prepare_pairs(std::span<const DatasetRecord> records, const std::string& front_end,
                                          const CameraProfile& profile, TrainingSpace space, CstMode mode);

/// prepare_pairs with the neutral side kernel-expanded.
std::vector<TrainSample> prepare_samples(std::span<const DatasetRecord> records, const std::string& front_end,
                                         const CameraProfile& profile, TrainingSpace space, CstMode mode);

struct ValidationPoint {
    int epoch = 0;  ///< 1-based epoch after which validation ran
    double mean_error = 0.0;
};

struct TrainReport {
    TrainConfig config;
    std::string front_end;
    std::size_t train_size = 0;
    std::size_t val_size = 0;
    std::vector<double> epoch_loss;
    std::vector<ValidationPoint> validation;
    PreferenceMlp final_model;
    PreferenceMlp best_model;
    int best_epoch = 0;
    double best_val_error = 0.0;
    double wall_seconds = 0.0;

    /// Text log: config echo, per-epoch losses, validation checkpoints, summary.
    std::string log(bool include_timing = true) const;
};

struct TrainResult {
    PreferenceMlp model;
    TrainReport report;
};

/// Full training loop. Throws ConfigError if the training set is smaller than
/// the batch size.
TrainResult train(std::span<const DatasetRecord> train_set, std::span<const DatasetRecord> val_set,
                  const std::string& front_end, const TrainConfig& cfg, const CameraProfile& profile);

/// Mean inference-mode angular error on prepared samples.
double mean_angular_error(const PreferenceMlp& model, std::span<const TrainSample> samples);

}  // namespace wbpref
