// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <wbpref/camera_profile.hpp>
#include <wbpref/colorimetry.hpp>
#include <wbpref/random.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace wbpref {

/// One scene: neutral estimates per front end and the preferred target.
struct DatasetRecord {
    std::string id;
    std::string camera;
    std::map<std::string, ColorVec> neutral_estimates;
    ColorVec gt_preferred_raw;
    std::optional<ColorVec> gt_neutral_raw;
    std::optional<std::string> image_path;
};

/// Records plus the profiles their cameras resolve to.
struct Dataset {
    std::map<std::string, CameraProfile> profiles;
    std::map<std::string, std::string> profile_paths;  ///< as written in the header
    std::vector<DatasetRecord> records;

    const CameraProfile& profile(const std::string& camera) const;
};

/// Planckian locus in CIE 1960 uv (Krystek's rational approximation, 1000 K to 15000 K).
ChromaticityUv planckian_uv(double kelvin);
/// CIE daylight locus in xy, 4000 K to 25000 K.
ChromaticityXy daylight_xy(double kelvin);
/// Daylight at and above 4000 K, Planckian below.
ChromaticityUv illuminant_locus_uv(double kelvin);

struct VirtualSensor {
    std::string name;
    Mat3 forward_matrix_low;   ///< XYZ->raw at 2856 K
    Mat3 forward_matrix_high;  ///< XYZ->raw at 6504 K
    std::uint64_t seed = 0;
};

struct SensorOptions {
    double perturbation_scale = 1.0;  ///< 0 gives identity matrices
    double max_condition = 50.0;
    int max_attempts = 100;
};

inline constexpr double kVirtualCalibLowK = 2856.0;
inline constexpr double kVirtualCalibHighK = 6504.0;

/// Rejection-sampled virtual sensor and its profile (FM1 = low, FM2 = high).
/// Throws GenerationError naming the seed after `max_attempts` rejections.
std::pair<VirtualSensor, CameraProfile> make_virtual_sensor(std::uint64_t seed, const std::string& name,
                                                            const SensorOptions& opts = {});

/// Frobenius-norm condition number ||M|| * ||M^-1||.
double condition_number(const Mat3& m);

/// XYZ illuminants (Y = 1), uniform in mired over [cct_low, cct_high], on the
/// locus plus Gaussian uv noise. Throws ConfigError on invalid bounds.
std::vector<ColorVec> sample_illuminants(std::size_t n, double cct_low, double cct_high, double chroma_noise,
                                         std::uint64_t seed);

struct PreferencePolicy {
    double lambda = 0.5;
    double delta_mired = 40.0;
    double tint_gain = 1.3;
};
void validate(const PreferencePolicy& p);

struct PreferenceResult {
    ColorVec xyz;
    bool clamped = false;  ///< the shifted mired left the valid range
};

/// Planted preference: shift along the Planckian locus by delta_mired, scale
/// the off-locus offset by tint_gain, blend with strength lambda.
PreferenceResult synth_preference(const ColorVec& l_xyz, const PreferencePolicy& policy);

struct FrontEndNoise {
    std::string name = "synthetic";
    double noise_deg = 0.0;
};

struct GenerationOptions {
    PreferencePolicy policy;
    std::vector<FrontEndNoise> front_ends{FrontEndNoise{}};
    std::uint64_t seed = 0;
    std::string id_prefix = "s";
};

/// Rotates `v` by a random tangent-plane Gaussian whose angle has mean `mean_deg`.
Vec3 jitter_direction(const Vec3& v, double mean_deg, Rng& rng);

/// One record per scene; ids are `<prefix><index>` so scenes pair across cameras.
/// Neutral and preferred vectors both go through the forward matrix
/// resolved at the scene's CCT.
std::vector<DatasetRecord> generate_records(const CameraProfile& profile, std::span<const ColorVec> scenes_xyz,
                                            const GenerationOptions& opts);

/// Samples `n` scenes over [cct_low, cct_high] and generates their records.
std::vector<DatasetRecord> generate_synthetic_dataset(const CameraProfile& profile, std::size_t n, double cct_low,
                                                      double cct_high, double chroma_noise,
                                                      const GenerationOptions& opts);

std::string serialize_profile(const CameraProfile& p);
CameraProfile parse_profile(std::string_view doc);
void save_profile(const CameraProfile& p, const std::filesystem::path& path);
CameraProfile load_profile(const std::filesystem::path& path);

/// Profile paths are resolved relative to the dataset file's directory.
Dataset read_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view doc, const std::filesystem::path& base_dir);
std::string format_dataset(const Dataset& ds);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// Seeded shuffle then contiguous split.
std::tuple<std::vector<DatasetRecord>, std::vector<DatasetRecord>, std::vector<DatasetRecord>> split(
    std::span<const DatasetRecord> records, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace wbpref
