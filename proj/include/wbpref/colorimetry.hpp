// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <array>
#include <span>
#include <string>

namespace wbpref {

using Vec3 = std::array<double, 3>;

enum class SpaceKind { CameraRaw, CieXyz };

/// Color space tag carried by every illuminant vector. Raw spaces are
/// identified by sensor name; two raw spaces are equal iff the names are.
class ColorSpace {
public:
    static ColorSpace xyz() { return ColorSpace(SpaceKind::CieXyz, {}); }
    static ColorSpace raw(std::string sensor) { return ColorSpace(SpaceKind::CameraRaw, std::move(sensor)); }

    SpaceKind kind() const noexcept { return kind_; }
    const std::string& sensor() const noexcept { return sensor_; }
    bool is_xyz() const noexcept { return kind_ == SpaceKind::CieXyz; }
    bool is_raw() const noexcept { return kind_ == SpaceKind::CameraRaw; }
    std::string describe() const;

    friend bool operator==(const ColorSpace&, const ColorSpace&) = default;

private:
    ColorSpace(SpaceKind kind, std::string sensor) : kind_(kind), sensor_(std::move(sensor)) {}

    SpaceKind kind_;
    std::string sensor_;
};

/// Linear-light illuminant color. Negative components are clamped to zero at
/// construction; a non-finite component or a zero norm after clamping throws
/// DomainError.
class ColorVec {
public:
    ColorVec(double c0, double c1, double c2, ColorSpace space);
    ColorVec(const Vec3& v, ColorSpace space) : ColorVec(v[0], v[1], v[2], std::move(space)) {}

    static ColorVec xyz(double x, double y, double z) { return ColorVec(x, y, z, ColorSpace::xyz()); }
    static ColorVec raw(const std::string& sensor, double r, double g, double b) {
        return ColorVec(r, g, b, ColorSpace::raw(sensor));
    }

    const Vec3& values() const noexcept { return v_; }
    double operator[](std::size_t i) const noexcept { return v_[i]; }
    const ColorSpace& space() const noexcept { return space_; }
    double norm() const noexcept;
    /// True if any component was negative before clamping.
    bool was_clamped() const noexcept { return clamped_; }

    ColorVec with_space(ColorSpace space) const;

    friend ColorVec normalize_l2(const ColorVec& v);

private:
    Vec3 v_;
    ColorSpace space_;
    bool clamped_ = false;
};

/// CIE 1960 UCS chromaticity.
struct ChromaticityUv {
    double u = 0.0;
    double v = 0.0;
};

/// CIE 1931 xy chromaticity.
struct ChromaticityXy {
    double x = 0.0;
    double y = 0.0;
};

/// Correlated color temperature. Valid on mired in [0.01, 600], roughly
/// 1667 K up to 1e8 K.
class Cct {
public:
    static constexpr double kMinMired = 0.01;
    static constexpr double kMaxMired = 600.0;

    static Cct from_kelvin(double kelvin);
    static Cct from_mired(double mired);

    double kelvin() const noexcept { return kelvin_; }
    double mired() const noexcept { return mired_; }

private:
    Cct(double kelvin, double mired) : kelvin_(kelvin), mired_(mired) {}
    double kelvin_;
    double mired_;
};

/// One isotemperature line of Robertson's table: locus point (u, v) at the
/// given reciprocal temperature, and the slope of the isotemperature line.
struct RobertsonRow {
    double mired;
    double u;
    double v;
    double slope;
};

std::span<const RobertsonRow, 31> robertson_table();

double dot(const Vec3& a, const Vec3& b) noexcept;
double l2_norm(const Vec3& a) noexcept;

/// Unit-norm copy; keeps the space tag and the clamp flag.
ColorVec normalize_l2(const ColorVec& v);

/// Angle between two vectors of the same space, in degrees, in [0, 180].
/// Evaluated without an artificial clamp, so parallel inputs give exactly 0.
double angular_error_degrees(const ColorVec& a, const ColorVec& b);

/// Unclamped angle between plain triples, in degrees. Throws DomainError on a
/// zero-norm argument.
double angle_degrees(const Vec3& a, const Vec3& b);

ChromaticityUv xyz_to_uv(const ColorVec& xyz);
ChromaticityUv xy_to_uv(ChromaticityXy xy);
ChromaticityXy uv_to_xy(ChromaticityUv uv);
/// XYZ with Y = 1 for the given chromaticity.
ColorVec xy_to_xyz(ChromaticityXy xy);
ColorVec uv_to_xyz(ChromaticityUv uv);

Cct robertson_cct(const ColorVec& xyz);
Cct robertson_cct(ChromaticityUv uv);

}  // namespace wbpref
