// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/training.hpp>

#include <wbpref/error.hpp>
#include <wbpref/random.hpp>
#include <wbpref/text_io.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace wbpref {

namespace {

using M = PreferenceMlp;
using O = PreferenceMlp::Offsets;

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

inline double elu(double x) noexcept { return x > 0.0 ? x : M::kEluAlpha * std::expm1(x); }
inline double elu_grad(double x) noexcept { return x > 0.0 ? 1.0 : M::kEluAlpha * std::exp(x); }

// Per-sample activations kept for the backward pass.
struct Cache {
    std::array<double, M::kH1> z1, xhat, y, a1;
    std::array<double, M::kH2> z2, a2;
    std::array<double, M::kH3> z3, a3;
    std::array<double, M::kOut> o;
};

template <std::size_t In, std::size_t Out>
void affine(const M::Params& p, std::size_t w, std::size_t b, const std::array<double, In>& x,
            std::array<double, Out>& out) noexcept {
    for (std::size_t i = 0; i < Out; ++i) {
        double s = p[b + i];
        for (std::size_t j = 0; j < In; ++j) s += p[w + i * In + j] * x[j];
        out[i] = s;
    }
}

// Train-mode forward over the batch; fills caches and batch statistics.
void forward_batch(const PreferenceMlp& model, std::span<const TrainSample> batch, std::vector<Cache>& caches,
                   BatchNormStats& stats) {
    const auto& p = model.params();
    const std::size_t n = batch.size();
    caches.resize(n);
    stats = {};
    for (std::size_t s = 0; s < n; ++s) {
        affine(p, O::w1, O::b1, batch[s].features, caches[s].z1);
        for (std::size_t i = 0; i < M::kH1; ++i) stats.mean[i] += caches[s].z1[i];
    }
    for (double& m : stats.mean) m /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t i = 0; i < M::kH1; ++i) {
            const double d = caches[s].z1[i] - stats.mean[i];
            stats.var[i] += d * d;
        }
    for (double& v : stats.var) v /= static_cast<double>(n);
    for (auto& c : caches) {
        for (std::size_t i = 0; i < M::kH1; ++i) {
            c.xhat[i] = (c.z1[i] - stats.mean[i]) / std::sqrt(stats.var[i] + M::kBnEpsilon);
            c.y[i] = p[O::gamma + i] * c.xhat[i] + p[O::beta + i];
            c.a1[i] = elu(c.y[i]);
        }
        affine(p, O::w2, O::b2, c.a1, c.z2);
        for (std::size_t i = 0; i < M::kH2; ++i) c.a2[i] = elu(c.z2[i]);
        affine(p, O::w3, O::b3, c.a2, c.z3);
        for (std::size_t i = 0; i < M::kH3; ++i) c.a3[i] = elu(c.z3[i]);
        affine(p, O::w4, O::b4, c.a3, c.o);
    }
}

void check_grad(const M::Params& g, std::size_t begin, std::size_t end, const char* layer) {
    for (std::size_t i = begin; i < end; ++i)
        if (!std::isfinite(g[i])) throw NumericError(std::string("non-finite gradient in ") + layer);
}

}  // namespace

void validate(const TrainConfig& c) {
    if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(c.lr_min > 0.0 && c.lr_min <= c.lr_max)) throw ConfigError("learning rates must satisfy 0 < lr_min <= lr_max");
    if (c.batch_size < 2) throw ConfigError("batch size must be >= 2");
    if (!(c.bn_momentum > 0.0 && c.bn_momentum <= 1.0)) throw ConfigError("batch-norm momentum must lie in (0, 1]");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0))
        throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(c.weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
    if (!(c.adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
    if (!(c.dot_clamp > 0.0 && c.dot_clamp < 1.0)) throw ConfigError("dot clamp must lie in (0, 1)");
    if (c.validation_interval < 1) throw ConfigError("validation interval must be >= 1");
}

std::string describe(const TrainConfig& c) {
    std::string s;
    auto kv = [&](const char* k, const std::string& v) { s += std::string(k) + " " + v + "\n"; };
    kv("epochs", std::to_string(c.epochs));
    kv("beta1", text::format_real(c.beta1));
    kv("beta2", text::format_real(c.beta2));
    kv("weight_decay", text::format_real(c.weight_decay));
    kv("lr_max", text::format_real(c.lr_max));
    kv("lr_min", text::format_real(c.lr_min));
    kv("batch_size", std::to_string(c.batch_size));
    kv("bn_momentum", text::format_real(c.bn_momentum));
    kv("seed", std::to_string(c.seed));
    kv("training_space", to_string(c.training_space));
    kv("cst_mode", to_string(c.cst_mode));
    kv("adam_epsilon", text::format_real(c.adam_epsilon));
    kv("dot_clamp", text::format_real(c.dot_clamp));
    kv("validation_interval", std::to_string(c.validation_interval));
    return s;
}

double angular_loss(const Vec3& pred, const Vec3& gt, double dot_clamp) {
    const double np = l2_norm(pred), ng = l2_norm(gt);
    if (!(np > 0.0) || !(ng > 0.0)) throw DomainError("angular loss of a zero vector");
    const double d = std::clamp(dot(pred, gt) / (np * ng), -1.0 + dot_clamp, 1.0 - dot_clamp);
    return std::acos(d) * kRadToDeg;
}

double angular_loss(const ColorVec& pred, const ColorVec& gt, double dot_clamp) {
    return angular_loss(pred.values(), gt.values(), dot_clamp);
}

double batch_loss(const PreferenceMlp& model, std::span<const TrainSample> batch, double dot_clamp) {
    if (batch.size() < 2) throw UsageError("batch-norm needs at least two samples");
    std::vector<Cache> caches;
    BatchNormStats stats;
    forward_batch(model, batch, caches, stats);
    double sum = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Vec3 o{caches[s].o[0], caches[s].o[1], caches[s].o[2]};
        sum += angular_loss(o, batch[s].target, dot_clamp);
    }
    return sum / static_cast<double>(batch.size());
}

BatchGradient backward(const PreferenceMlp& model, std::span<const TrainSample> batch, double dot_clamp) {
    const std::size_t n = batch.size();
    if (n < 2) throw UsageError("batch-norm needs at least two samples");
    const auto& p = model.params();
    std::vector<Cache> caches;
    BatchGradient out;
    forward_batch(model, batch, caches, out.stats);
    auto& g = out.grad;
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<std::array<double, M::kH1>> dxhat(n);
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const Cache& c = caches[s];
        const double on = std::sqrt(c.o[0] * c.o[0] + c.o[1] * c.o[1] + c.o[2] * c.o[2]);
        if (!(on > 0.0)) throw NumericError("network output has zero norm (output layer)");
        const Vec3 ph{c.o[0] / on, c.o[1] / on, c.o[2] / on};
        const Vec3& t = batch[s].target;
        const double tn = l2_norm(t);
        const Vec3 th{t[0] / tn, t[1] / tn, t[2] / tn};
        const double d = dot(ph, th);
        const double lo = -1.0 + dot_clamp, hi = 1.0 - dot_clamp;
        loss_sum += std::acos(std::clamp(d, lo, hi)) * kRadToDeg;
        // d loss / d cos; zero where the clamp is active.
        const double dl_dd = (d > lo && d < hi) ? -kRadToDeg / std::sqrt(1.0 - d * d) * inv_n : 0.0;

        // Through the L2 head: d p_hat / d o = (I - p p^T) / |o|.
        std::array<double, M::kOut> d_o{};
        const double proj = dot(ph, th);
        for (std::size_t i = 0; i < 3; ++i) d_o[i] = dl_dd * (th[i] - ph[i] * proj) / on;

        for (std::size_t i = 0; i < M::kOut; ++i) {
            g[O::b4 + i] += d_o[i];
            for (std::size_t j = 0; j < M::kH3; ++j) g[O::w4 + i * M::kH3 + j] += d_o[i] * c.a3[j];
        }
        std::array<double, M::kH3> d_z3{};
        for (std::size_t j = 0; j < M::kH3; ++j) {
            double s3 = 0.0;
            for (std::size_t i = 0; i < M::kOut; ++i) s3 += p[O::w4 + i * M::kH3 + j] * d_o[i];
            d_z3[j] = s3 * elu_grad(c.z3[j]);
        }
        for (std::size_t i = 0; i < M::kH3; ++i) {
            g[O::b3 + i] += d_z3[i];
            for (std::size_t j = 0; j < M::kH2; ++j) g[O::w3 + i * M::kH2 + j] += d_z3[i] * c.a2[j];
        }
        std::array<double, M::kH2> d_z2{};
        for (std::size_t j = 0; j < M::kH2; ++j) {
            double s2 = 0.0;
            for (std::size_t i = 0; i < M::kH3; ++i) s2 += p[O::w3 + i * M::kH2 + j] * d_z3[i];
            d_z2[j] = s2 * elu_grad(c.z2[j]);
        }
        for (std::size_t i = 0; i < M::kH2; ++i) {
            g[O::b2 + i] += d_z2[i];
            for (std::size_t j = 0; j < M::kH1; ++j) g[O::w2 + i * M::kH1 + j] += d_z2[i] * c.a1[j];
        }
        for (std::size_t j = 0; j < M::kH1; ++j) {
            double s1 = 0.0;
            for (std::size_t i = 0; i < M::kH2; ++i) s1 += p[O::w2 + i * M::kH1 + j] * d_z2[i];
            const double dy = s1 * elu_grad(c.y[j]);
            g[O::gamma + j] += dy * c.xhat[j];
            g[O::beta + j] += dy;
            dxhat[s][j] = dy * p[O::gamma + j];
        }
    }
    out.mean_loss = loss_sum * inv_n;

    // Batch-norm backward through the batch statistics.
    const double nd = static_cast<double>(n);
    for (std::size_t j = 0; j < M::kH1; ++j) {
        double sum_dx = 0.0, sum_dx_xhat = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            sum_dx += dxhat[s][j];
            sum_dx_xhat += dxhat[s][j] * caches[s].xhat[j];
        }
        const double inv_std = 1.0 / std::sqrt(out.stats.var[j] + M::kBnEpsilon);
        for (std::size_t s = 0; s < n; ++s) {
            const double dz = inv_std / nd * (nd * dxhat[s][j] - sum_dx - caches[s].xhat[j] * sum_dx_xhat);
            g[O::b1 + j] += dz;
            for (std::size_t k = 0; k < M::kIn; ++k) g[O::w1 + j * M::kIn + k] += dz * batch[s].features[k];
        }
    }

    check_grad(g, O::w1, O::gamma, "layer 1");
    check_grad(g, O::gamma, O::w2, "batch-norm 1");
    check_grad(g, O::w2, O::w3, "layer 2");
    check_grad(g, O::w3, O::w4, "layer 3");
    check_grad(g, O::w4, O::end, "layer 4");
    return out;
}

void adam_step(AdamState& st, PreferenceMlp::Params& params, const PreferenceMlp::Params& grads, double lr,
               const TrainConfig& cfg) {
    ++st.timestep;
    const double t = static_cast<double>(st.timestep);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double gi = grads[i] + cfg.weight_decay * params[i];
        st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * gi;
        st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * gi * gi;
        const double mh = st.m[i] / bc1;
        const double vh = st.v[i] / bc2;
        params[i] -= lr * mh / (std::sqrt(vh) + cfg.adam_epsilon);
    }
}

double cosine_lr(int t, int total, double lr_max, double lr_min) {
    if (total < 1 || t < 0 || t > total) throw UsageError("cosine_lr needs 0 <= t <= T, T >= 1");
    return lr_min + 0.5 * (lr_max - lr_min) *
                        (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(total)));
}

PreferenceMlp initialize_model(std::uint64_t seed) {
    PreferenceMlp model;
    Rng rng(seed);
    auto& p = model.params();
    auto fill = [&](std::size_t off, std::size_t rows, std::size_t fan_in) {
        const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < rows * fan_in; ++i) p[off + i] = rng.uniform(-a, a);
    };
    fill(O::w1, M::kH1, M::kIn);
    fill(O::w2, M::kH2, M::kH1);
    fill(O::w3, M::kH3, M::kH2);
    fill(O::w4, M::kOut, M::kH3);
    return model;
}

std::vector<IlluminantPair> prepare_pairs(std::span<const DatasetRecord> records, const std::string& front_end,
                                          const CameraProfile& profile, TrainingSpace space, CstMode mode) {
    std::vector<IlluminantPair> out;
    out.reserve(records.size());
    ResolveOptions opts;
    opts.mode = mode;
    for (const auto& r : records) {
        try {
            if (r.camera != profile.sensor_name())
                throw ParseError("camera '" + r.camera + "' does not match profile '" + profile.sensor_name() + "'");
            const auto it = r.neutral_estimates.find(front_end);
            if (it == r.neutral_estimates.end()) throw ParseError("no estimate for front end '" + front_end + "'");
            if (space == TrainingSpace::Xyz) {
                const Mat3 cst = resolve_cst(profile, it->second, opts).cst_raw_to_xyz;
                out.emplace_back(raw_to_xyz(it->second, cst).values(), raw_to_xyz(r.gt_preferred_raw, cst).values());
            } else {
                out.emplace_back(normalize_l2(it->second).values(), normalize_l2(r.gt_preferred_raw).values());
            }
        } catch (const Error& e) {
            rethrow_with_context(e, "record '" + r.id + "'");
        }
    }
    return out;
}

std::vector<TrainSample> prepare_samples(std::span<const DatasetRecord> records, const std::string& front_end,
                                         const CameraProfile& profile, TrainingSpace space, CstMode mode) {
    std::vector<TrainSample> out;
    out.reserve(records.size());
    for (const auto& [in, gt] : prepare_pairs(records, front_end, profile, space, mode))
        out.push_back({polynomial_expand(in), gt});
    return out;
}

double mean_angular_error(const PreferenceMlp& model, std::span<const TrainSample> samples) {
    if (samples.empty()) throw DomainError("mean error of an empty sample set");
    double sum = 0.0;
    for (const auto& s : samples) sum += angle_degrees(mlp_forward_unnormalized(model, s.features), s.target);
    return sum / static_cast<double>(samples.size());
}

TrainResult train(std::span<const DatasetRecord> train_set, std::span<const DatasetRecord> val_set,
                  const std::string& front_end, const TrainConfig& cfg, const CameraProfile& profile) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto samples = prepare_samples(train_set, front_end, profile, cfg.training_space, cfg.cst_mode);
    const auto val = prepare_samples(val_set, front_end, profile, cfg.training_space, cfg.cst_mode);
    if (samples.size() < static_cast<std::size_t>(cfg.batch_size))
        throw ConfigError("training set has " + std::to_string(samples.size()) + " records, fewer than the batch size " +
                          std::to_string(cfg.batch_size));

    PreferenceMlp model = initialize_model(cfg.seed);
    AdamState adam;
    Rng shuffle_rng(cfg.seed ^ 0x5DEECE66DULL);
    TrainReport rep;
    rep.config = cfg;
    rep.front_end = front_end;
    rep.train_size = samples.size();
    rep.val_size = val.size();
    rep.best_val_error = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<TrainSample> batch;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    const double m = cfg.bn_momentum;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max, cfg.lr_min);
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t end = std::min(order.size(), start + bs);
            if (end - start < 2) break;
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
            const BatchGradient bg = backward(model, batch);
            adam_step(adam, model.params(), bg.grad, lr, cfg);
            const double nb = static_cast<double>(batch.size());
            for (std::size_t j = 0; j < M::kH1; ++j) {
                model.running_mean()[j] = (1.0 - m) * model.running_mean()[j] + m * bg.stats.mean[j];
                model.running_var()[j] = (1.0 - m) * model.running_var()[j] + m * bg.stats.var[j] * nb / (nb - 1.0);
            }
            loss_sum += bg.mean_loss * nb;
            seen += batch.size();
        }
        rep.epoch_loss.push_back(loss_sum / static_cast<double>(seen));
        const int done = epoch + 1;
        if (!val.empty() && (done % cfg.validation_interval == 0 || done == cfg.epochs)) {
            const double e = mean_angular_error(model, val);
            rep.validation.push_back({done, e});
            if (e < rep.best_val_error) {
                rep.best_val_error = e;
                rep.best_epoch = done;
                rep.best_model = model;
            }
        }
    }
    rep.final_model = model;
    if (val.empty()) {
        rep.best_model = model;
        rep.best_epoch = cfg.epochs;
        rep.best_val_error = std::numeric_limits<double>::quiet_NaN();
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {model, std::move(rep)};
}

std::string TrainReport::log(bool include_timing) const {
    std::string s = "# wbpref training log\n";
    s += "front_end " + front_end + "\n";
    s += "train_size " + std::to_string(train_size) + "\n";
    s += "val_size " + std::to_string(val_size) + "\n";
    s += "parameters " + std::to_string(count_parameters(final_model).total) + "\n";
    s += describe(config);
    for (std::size_t i = 0; i < epoch_loss.size(); ++i)
        s += "epoch " + std::to_string(i + 1) + " loss " + text::format_real(epoch_loss[i]) + "\n";
    for (const auto& v : validation)
        s += "validation " + std::to_string(v.epoch) + " mean_error " + text::format_real(v.mean_error) + "\n";
    s += "summary final_train_loss " + (epoch_loss.empty() ? std::string("n/a") : text::format_real(epoch_loss.back())) +
         "\n";
    s += "summary final_val_error " +
         (validation.empty() ? std::string("n/a") : text::format_real(validation.back().mean_error)) + "\n";
    s += "summary best_epoch " + std::to_string(best_epoch) + "\n";
    s += "summary best_val_error " +
         (std::isfinite(best_val_error) ? text::format_real(best_val_error) : std::string("n/a")) + "\n";
    if (include_timing) s += "summary wall_seconds " + text::format_fixed(wall_seconds, 3) + "\n";
    return s;
}

}  // namespace wbpref
