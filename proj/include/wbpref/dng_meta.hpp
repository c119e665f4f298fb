// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

// Minimal TIFF/DNG metadata reader for the color calibration tags. Never
// touches strip or tile data.

#pragma once

#include <wbpref/camera_profile.hpp>
#include <wbpref/error.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace wbpref::dng {

inline constexpr std::uint16_t kTagModel = 0x0110;
inline constexpr std::uint16_t kTagSubIfds = 0x014A;
inline constexpr std::uint16_t kTagExifIfd = 0x8769;
inline constexpr std::uint16_t kTagColorMatrix1 = 0xC621;
inline constexpr std::uint16_t kTagColorMatrix2 = 0xC622;
inline constexpr std::uint16_t kTagAsShotNeutral = 0xC628;
inline constexpr std::uint16_t kTagCalibrationIlluminant1 = 0xC65A;
inline constexpr std::uint16_t kTagCalibrationIlluminant2 = 0xC65B;

inline constexpr int kMaxIfdDepth = 8;
inline constexpr int kMaxIfdCount = 64;

struct DngColorMetadata {
    Mat3 color_matrix_1;  ///< XYZ -> raw
    Mat3 color_matrix_2;
    std::optional<int> calibration_illuminant_1;
    std::optional<int> calibration_illuminant_2;
    std::optional<Vec3> as_shot_neutral;  ///< exactly as stored, all > 0
    std::optional<std::string> camera_model;

    friend bool operator==(const DngColorMetadata&, const DngColorMetadata&) = default;
};

enum class DngErrorKind { NotTiff, Structure, MalformedTag, MissingTag };

class DngError : public ParseError {
public:
    DngError(DngErrorKind kind, const std::string& what, std::optional<std::size_t> offset = std::nullopt,
             std::optional<std::uint16_t> tag = std::nullopt)
        : ParseError(what, std::nullopt, offset), kind_(kind), tag_(tag) {}

    DngErrorKind kind() const noexcept { return kind_; }
    std::optional<std::uint16_t> tag() const noexcept { return tag_; }

private:
    DngErrorKind kind_;
    std::optional<std::uint16_t> tag_;
};

class UnsupportedIlluminantError : public Error {
public:
    explicit UnsupportedIlluminantError(int code)
        : Error(ErrorCategory::Data, "unsupported calibration illuminant code " + std::to_string(code)),
          code_(code) {}
    int code() const noexcept { return code_; }

private:
    int code_;
};

/// Walks IFD0 and its chain, every SubIFD, and the Exif IFD. The first
/// occurrence of a tag in that walk wins.
DngColorMetadata parse_dng_metadata(std::span<const std::uint8_t> bytes);

/// EXIF LightSource code -> CCT of the standard illuminant.
Cct calibration_illuminant_cct(int code);

CameraProfile profile_from_dng(const DngColorMetadata& meta, const std::string& sensor_name);

/// Human-readable dump used by `inspect-dng`.
std::string describe(const DngColorMetadata& meta);

}  // namespace wbpref::dng
