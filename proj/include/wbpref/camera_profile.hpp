// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <wbpref/colorimetry.hpp>

#include <array>
#include <optional>
#include <string>

namespace wbpref {

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{};

    static Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
    static Mat3 diagonal(double a, double b, double c) { return Mat3{{a, 0, 0, 0, b, 0, 0, 0, c}}; }

    double operator()(int r, int c) const noexcept { return m[static_cast<std::size_t>(3 * r + c)]; }
    double& operator()(int r, int c) noexcept { return m[static_cast<std::size_t>(3 * r + c)]; }

    friend bool operator==(const Mat3&, const Mat3&) = default;
};

Mat3 operator*(const Mat3& a, const Mat3& b) noexcept;
Vec3 operator*(const Mat3& a, const Vec3& v) noexcept;
Mat3 blend(const Mat3& a, const Mat3& b, double alpha) noexcept;  ///< alpha*a + (1-alpha)*b
double determinant(const Mat3& a) noexcept;
/// Throws NumericError when |det| <= 1e-12; `what` names the matrix in the message.
Mat3 inverse(const Mat3& a, const std::string& what = "matrix");
bool is_finite(const Mat3& a) noexcept;

/// Camera calibration: two XYZ->raw matrices (DNG ColorMatrix convention)
/// and the CCTs of the illuminants they were calibrated under.
class CameraProfile {
public:
    /// Validates finiteness, invertibility, and that the two calibration CCTs
    /// differ by more than 1 mired. Throws ConfigError / NumericError.
    CameraProfile(std::string sensor_name, Mat3 forward_matrix_1, Mat3 forward_matrix_2, Cct calib_cct_1,
                  Cct calib_cct_2);

    const std::string& sensor_name() const noexcept { return sensor_name_; }
    const Mat3& forward_matrix_1() const noexcept { return fm1_; }
    const Mat3& forward_matrix_2() const noexcept { return fm2_; }
    const Cct& calib_cct_1() const noexcept { return cct1_; }
    const Cct& calib_cct_2() const noexcept { return cct2_; }
    ColorSpace raw_space() const { return ColorSpace::raw(sensor_name_); }

private:
    std::string sensor_name_;
    Mat3 fm1_;
    Mat3 fm2_;
    Cct cct1_;
    Cct cct2_;
};

/// How the CCT-dependent raw->XYZ transform is built from the two
/// calibration matrices.
enum class CstMode {
    ForwardThenInvert,  ///< invert(alpha*FM1 + (1-alpha)*FM2)
    InvertThenBlend,    ///< alpha*FM1^-1 + (1-alpha)*FM2^-1
};

std::string to_string(CstMode mode);
std::optional<CstMode> parse_cst_mode(std::string_view s);

struct CstResolution {
    double alpha = 0.5;
    Cct cct = Cct::from_kelvin(5000.0);
    Mat3 cst_raw_to_xyz = Mat3::identity();
    int iterations = 0;
    bool converged = false;
};

struct ResolveOptions {
    CstMode mode = CstMode::ForwardThenInvert;
    double start_alpha = 0.5;
    double tolerance_mired = 0.01;
    int max_iterations = 20;
};

/// Inverse-CCT interpolation weight toward calibration point `c_la`, clamped
/// to [0, 1]. Throws ConfigError when the calibration CCTs coincide.
double interpolation_weight(const Cct& c, const Cct& c_la, const Cct& c_lb);

/// Raw->XYZ transform at the given weight.
Mat3 interpolate_cst(const CameraProfile& profile, double alpha, CstMode mode = CstMode::ForwardThenInvert);

/// Self-consistent alpha for an illuminant observed in `profile`'s raw space.
///
/// Fixed-point iteration: build the transform at the current alpha, take the
/// Robertson CCT of the transformed vector, recompute alpha from it. Stops
/// once successive CCTs agree to `tolerance_mired` or after `max_iterations`
/// (then `converged` is false). If the two calibration matrices are
/// identical the transform does not depend on alpha and the first iterate is
/// already final. The returned transform is rebuilt at the final alpha.
CstResolution resolve_cst(const CameraProfile& profile, const ColorVec& l_raw, const ResolveOptions& opts = {});

/// cst * l_raw, clamped at 0, L2-normalized, tagged CIE XYZ.
ColorVec raw_to_xyz(const ColorVec& l_raw, const Mat3& cst);

/// cst^-1 * l_xyz, clamped at 0, L2-normalized, tagged with `raw_space`.
ColorVec xyz_to_raw(const ColorVec& l_xyz, const Mat3& cst, const ColorSpace& raw_space);

}  // namespace wbpref
