// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <wbpref/colorimetry.hpp>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace wbpref {

/// Black-level corrected linear raw thumbnail, interleaved RGB in [0, 1].
struct RawImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  ///< size 3 * width * height, row-major from the top row
    std::string sensor = "camera";

    double at(int x, int y, int c) const noexcept {
        return pixels[3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) +
                      static_cast<std::size_t>(c)];
    }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
};

/// Checks dimensions and value range; throws ParseError on violation.
void validate(const RawImage& img);

/// Binary PPM (P6, maxval 255 or 65535) or PFM (PF). Format is sniffed from
/// the magic bytes, not the extension.
RawImage load_raw_image(const std::filesystem::path& path);
RawImage decode_raw_image(std::span<const std::uint8_t> bytes);

/// PFM with negative scale (little-endian floats), rows stored bottom-up.
std::vector<std::uint8_t> encode_pfm(const RawImage& img);
/// Binary PPM; values are rounded to the nearest code.
std::vector<std::uint8_t> encode_ppm(const RawImage& img, int maxval);
void save_raw_image(const RawImage& img, const std::filesystem::path& path);

struct GrayWorld {};
struct Minkowski {
    double p = 6.0;  ///< >= 1, or infinity for max-RGB
};
struct GrayEdge {
    int order = 1;  ///< 1 or 2
    double p = 6.0;
    double sigma = 1.0;  ///< 0 disables smoothing
};

using EstimatorMethod = std::variant<GrayWorld, Minkowski, GrayEdge>;

struct EstimatorConfig {
    EstimatorMethod method = GrayWorld{};
    double saturation_threshold = 0.98;
    double dark_threshold = 0.0;
    /// When false every pixel is used irrespective of the thresholds.
    bool masking = true;

    static EstimatorConfig unmasked(EstimatorMethod method = GrayWorld{}) {
        EstimatorConfig c;
        c.method = method;
        c.masking = false;
        return c;
    }
};

void validate(const EstimatorConfig& cfg);
std::string describe(const EstimatorConfig& cfg);

/// Per-channel mean over pixels that pass the mask.
ColorVec gray_world(const RawImage& img, const EstimatorConfig& cfg);

/// Per-channel power mean (sum c^p / N)^(1/p); p = infinity gives per-channel max.
ColorVec minkowski_estimate(const RawImage& img, double p, const EstimatorConfig& cfg);

/// Gray-edge: optional Gaussian smoothing (kernel cut at 3 sigma,
/// renormalized, mirrored borders), central-difference derivative magnitude
/// of order n, optional per-pixel weights, Minkowski-p pooling.
///
/// For n = 2 the magnitude is the Frobenius norm of the Hessian,
/// sqrt(fxx^2 + fyy^2 + 2 fxy^2). The mask excludes a pixel's own derivative
/// sample when that pixel fails the thresholds.
ColorVec gray_edge(const RawImage& img, int n, double p, double sigma,
                   std::optional<std::span<const double>> weight_map, const EstimatorConfig& cfg);

/// Dispatches on cfg.method.
ColorVec estimate(const RawImage& img, const EstimatorConfig& cfg);

/// Mirror index into [0, n) without repeating the edge sample (..., 2, 1, 0, 1, 2, ...).
int reflect_index(int i, int n) noexcept;

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

using Predictions = std::map<std::string, Vec3>;

/// `<record-id> <r> <g> <b>` lines, `#` comments and blank lines ignored.
Predictions load_external_predictions(const std::filesystem::path& path);
Predictions parse_predictions(std::string_view doc);
std::string format_predictions(const Predictions& preds, std::string_view header_comment = {});
void save_predictions(const Predictions& preds, const std::filesystem::path& path,
                      std::string_view header_comment = {});

}  // namespace wbpref
