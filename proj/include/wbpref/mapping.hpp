// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <wbpref/camera_profile.hpp>
#include <wbpref/colorimetry.hpp>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <optional>
#include <variant>
#include <vector>

namespace wbpref {

/// Degree-3 polynomial kernel of a unit vector, ordered
/// x, y, z, xy, xz, yz, x^2, y^2, z^2, xyz.
using KernelFeatures = std::array<double, 10>;

/// Expands the L2-normalized input, so the features depend on direction only.
/// Throws DomainError on a zero vector.
KernelFeatures polynomial_expand(const Vec3& l);
KernelFeatures polynomial_expand(const ColorVec& l);

struct ParameterCounts {
    std::size_t layer1 = 0;
    std::size_t bn1 = 0;
    std::size_t layer2 = 0;
    std::size_t layer3 = 0;
    std::size_t layer4 = 0;
    std::size_t total = 0;
};

/// The preference network: linear(10->16) -> batch-norm -> ELU ->
/// linear(16->8) -> ELU -> linear(8->16) -> ELU -> linear(16->3) -> L2 norm.
///
/// Tunable parameters live in one flat array (the order of `Offsets`); the
/// batch-norm running statistics are kept separately and are not counted.
class PreferenceMlp {
public:
    static constexpr std::size_t kIn = 10, kH1 = 16, kH2 = 8, kH3 = 16, kOut = 3;

    struct Offsets {
        static constexpr std::size_t w1 = 0;
        static constexpr std::size_t b1 = w1 + kH1 * kIn;
        static constexpr std::size_t gamma = b1 + kH1;
        static constexpr std::size_t beta = gamma + kH1;
        static constexpr std::size_t w2 = beta + kH1;
        static constexpr std::size_t b2 = w2 + kH2 * kH1;
        static constexpr std::size_t w3 = b2 + kH2;
        static constexpr std::size_t b3 = w3 + kH3 * kH2;
        static constexpr std::size_t w4 = b3 + kH3;
        static constexpr std::size_t b4 = w4 + kOut * kH3;
        static constexpr std::size_t end = b4 + kOut;
    };
    static constexpr std::size_t kParamCount = Offsets::end;
    static_assert(kParamCount == 539);

    static constexpr double kBnEpsilon = 1e-5;
    static constexpr double kEluAlpha = 1.0;

    using Params = std::array<double, kParamCount>;
    using Stats = std::array<double, kH1>;

    /// All weights and biases zero, gamma = 1, beta = 0, running stats (0, 1).
    PreferenceMlp();

    /// Throws UsageError on any size mismatch, NumericError on non-finite
    /// values or a non-positive running variance.
    PreferenceMlp(std::span<const double> params, std::span<const double> running_mean,
                  std::span<const double> running_var);

    const Params& params() const noexcept { return params_; }
    Params& params() noexcept { return params_; }
    const Stats& running_mean() const noexcept { return running_mean_; }
    Stats& running_mean() noexcept { return running_mean_; }
    const Stats& running_var() const noexcept { return running_var_; }
    Stats& running_var() noexcept { return running_var_; }

    /// Weight entry (row = output unit, col = input unit) of linear layer 1..4.
    double weight(int layer, std::size_t row, std::size_t col) const;

private:
    Params params_{};
    Stats running_mean_{};
    Stats running_var_{};
};

ParameterCounts count_parameters(const PreferenceMlp& model);

/// Batch statistics of the first layer's pre-activations (biased variance).
struct BatchNormStats {
    PreferenceMlp::Stats mean{};
    PreferenceMlp::Stats var{};
};

/// Network output before the final normalization. Uses the running
/// statistics, or `batch` when given. Throws NumericError naming the layer on
/// a non-finite intermediate.
Vec3 mlp_forward_unnormalized(const PreferenceMlp& model, const KernelFeatures& f,
                              const BatchNormStats* batch = nullptr);

/// Inference-mode forward pass; negative components are clamped, then the
/// output is L2-normalized and tagged CIE XYZ. A zero pre-normalization
/// output raises NumericError.
ColorVec mlp_forward(const PreferenceMlp& model, const KernelFeatures& f);
/// Same pass using the supplied batch statistics (training-mode normalization).
ColorVec mlp_forward(const PreferenceMlp& model, const KernelFeatures& f, const BatchNormStats& batch);

enum class LinearKind { ThreeByThree, Polynomial };

/// Least-squares baseline: 3x3 on the vector, or 3x10 on its kernel.
struct LinearMapModel {
    LinearKind kind = LinearKind::ThreeByThree;
    std::vector<double> matrix;  ///< row-major, 3 x (3 or 10)

    std::size_t cols() const noexcept { return kind == LinearKind::ThreeByThree ? 3 : 10; }
};

/// Validates shape and finiteness.
void validate(const LinearMapModel& m);

using IlluminantPair = std::pair<Vec3, Vec3>;  ///< (neutral, preferred); normalized before fitting

LinearMapModel fit_3x3(std::span<const IlluminantPair> pairs);
LinearMapModel fit_polynomial(std::span<const IlluminantPair> pairs);

/// Matrix times vector (or kernel), before clamping and normalization.
Vec3 apply_linear_unnormalized(const LinearMapModel& model, const Vec3& l);
/// Clamped at 0 and L2-normalized; expects CIE XYZ input.
ColorVec apply_linear(const LinearMapModel& model, const ColorVec& l_xyz);

enum class TrainingSpace { Xyz, Raw };
std::string to_string(TrainingSpace s);

/// A mapping `g` plus the context needed to apply it.
struct MappingModel {
    std::variant<PreferenceMlp, LinearMapModel> g;
    TrainingSpace space = TrainingSpace::Xyz;
    std::string front_end = "unknown";
    CstMode cst_mode = CstMode::ForwardThenInvert;

    std::string kind_name() const;  ///< "mlp", "three-by-three" or "polynomial"
};

struct MappedIlluminant {
    /// Empty when the mapped direction has no positive component in raw.
    std::optional<ColorVec> raw;
    /// Unit raw-space direction before clamping to the non-negative octant.
    Vec3 direction{};
    CstResolution resolution;  ///< meaningful only for XYZ-space mappings
    bool clamped = false;      ///< a negative component was clipped on the way back to raw
};

/// The full inference path: resolve the illuminant's CST, go to XYZ, apply
/// the network, and return to raw with the same CST.
MappedIlluminant map_illuminant(const PreferenceMlp& model, const CameraProfile& profile, const ColorVec& l_raw,
                                const ResolveOptions& opts = {});

/// Dispatches on model kind and training space. Raw-space models act on the
/// normalized raw vector directly and skip the XYZ hop.
MappedIlluminant apply_mapping(const MappingModel& model, const CameraProfile& profile, const ColorVec& l_raw);

/// Versioned text document; every real is written with 17 significant digits.
std::string serialize_model(const MappingModel& model);
MappingModel parse_model(std::string_view doc);
void save_model(const MappingModel& model, const std::filesystem::path& path);
MappingModel load_model(const std::filesystem::path& path);

}  // namespace wbpref
