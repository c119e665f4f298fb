// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/camera_profile.hpp>

#include <wbpref/error.hpp>

#include <algorithm>
#include <cmath>

namespace wbpref {

Mat3 operator*(const Mat3& a, const Mat3& b) noexcept {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
    return out;
}

Vec3 operator*(const Mat3& a, const Vec3& v) noexcept {
    return {a(0, 0) * v[0] + a(0, 1) * v[1] + a(0, 2) * v[2], a(1, 0) * v[0] + a(1, 1) * v[1] + a(1, 2) * v[2],
            a(2, 0) * v[0] + a(2, 1) * v[1] + a(2, 2) * v[2]};
}

Mat3 blend(const Mat3& a, const Mat3& b, double alpha) noexcept {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = alpha * a.m[i] + (1.0 - alpha) * b.m[i];
    return out;
}

double determinant(const Mat3& a) noexcept {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

Mat3 inverse(const Mat3& a, const std::string& what) {
    const double det = determinant(a);
    if (!std::isfinite(det) || std::abs(det) <= 1e-12)
        throw NumericError(what + " is singular (determinant " + std::to_string(det) + ")");
    Mat3 inv;
    inv(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / det;
    inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / det;
    inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / det;
    inv(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / det;
    inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / det;
    inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / det;
    inv(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / det;
    inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / det;
    inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / det;
    return inv;
}

bool is_finite(const Mat3& a) noexcept {
    return std::all_of(a.m.begin(), a.m.end(), [](double x) { return std::isfinite(x); });
}

CameraProfile::CameraProfile(std::string sensor_name, Mat3 forward_matrix_1, Mat3 forward_matrix_2,
                             Cct calib_cct_1, Cct calib_cct_2)
    : sensor_name_(std::move(sensor_name)),
      fm1_(forward_matrix_1),
      fm2_(forward_matrix_2),
      cct1_(calib_cct_1),
      cct2_(calib_cct_2) {
    if (sensor_name_.empty()) throw ConfigError("camera profile needs a sensor name");
    if (!is_finite(fm1_) || !is_finite(fm2_))
        throw NumericError("profile '" + sensor_name_ + "' has a non-finite matrix entry");
    (void)inverse(fm1_, "forward matrix 1 of profile '" + sensor_name_ + "'");
    (void)inverse(fm2_, "forward matrix 2 of profile '" + sensor_name_ + "'");
    if (std::abs(cct1_.mired() - cct2_.mired()) <= 1.0)
        throw ConfigError("profile '" + sensor_name_ + "': calibration CCTs must differ by more than 1 mired");
}

std::string to_string(CstMode mode) {
    return mode == CstMode::ForwardThenInvert ? "forward-then-invert" : "invert-then-blend";
}

std::optional<CstMode> parse_cst_mode(std::string_view s) {
    if (s == "forward-then-invert") return CstMode::ForwardThenInvert;
    if (s == "invert-then-blend") return CstMode::InvertThenBlend;
    return std::nullopt;
}

double interpolation_weight(const Cct& c, const Cct& c_la, const Cct& c_lb) {
    const double span = c_la.mired() - c_lb.mired();
    if (span == 0.0) throw ConfigError("interpolation weight: calibration CCTs are equal");
    const double alpha = (c.mired() - c_lb.mired()) / span;
    return std::clamp(alpha, 0.0, 1.0);
}

Mat3 interpolate_cst(const CameraProfile& profile, double alpha, CstMode mode) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("interpolation weight must lie in [0, 1]");
    const std::string name = "interpolated CST of profile '" + profile.sensor_name() + "'";
    if (mode == CstMode::ForwardThenInvert)
        return inverse(blend(profile.forward_matrix_1(), profile.forward_matrix_2(), alpha), name);
    const Mat3 inv1 = inverse(profile.forward_matrix_1(), name);
    const Mat3 inv2 = inverse(profile.forward_matrix_2(), name);
    const Mat3 out = blend(inv1, inv2, alpha);
    (void)inverse(out, name);
    return out;
}

CstResolution resolve_cst(const CameraProfile& profile, const ColorVec& l_raw, const ResolveOptions& opts) {
    if (!(l_raw.space() == profile.raw_space()))
        throw UsageError("resolve_cst: illuminant in " + l_raw.space().describe() + " but profile is " +
                         profile.raw_space().describe());
    if (opts.max_iterations < 1) throw ConfigError("resolve_cst needs at least one iteration");

    const bool alpha_free = profile.forward_matrix_1() == profile.forward_matrix_2();
    double alpha = std::clamp(opts.start_alpha, 0.0, 1.0);
    double prev_mired = 0.0;

    CstResolution res;
    for (int k = 1; k <= opts.max_iterations; ++k) {
        const Mat3 m = interpolate_cst(profile, alpha, opts.mode);
        const Cct c = robertson_cct(raw_to_xyz(l_raw, m));
        const double next = interpolation_weight(c, profile.calib_cct_1(), profile.calib_cct_2());

        res.iterations = k;
        res.cct = c;
        res.alpha = next;
        const bool settled = alpha_free || (k > 1 && std::abs(c.mired() - prev_mired) < opts.tolerance_mired);
        if (settled) {
            res.converged = true;
            res.cst_raw_to_xyz = alpha_free ? m : interpolate_cst(profile, next, opts.mode);
            return res;
        }
        prev_mired = c.mired();
        alpha = next;
    }
    res.converged = false;
    res.cst_raw_to_xyz = interpolate_cst(profile, res.alpha, opts.mode);
    return res;
}

ColorVec raw_to_xyz(const ColorVec& l_raw, const Mat3& cst) {
    if (!l_raw.space().is_raw()) throw UsageError("raw_to_xyz expects a camera raw vector");
    return normalize_l2(ColorVec(cst * l_raw.values(), ColorSpace::xyz()));
}

ColorVec xyz_to_raw(const ColorVec& l_xyz, const Mat3& cst, const ColorSpace& raw_space) {
    if (!l_xyz.space().is_xyz()) throw UsageError("xyz_to_raw expects a CIE XYZ vector");
    if (!raw_space.is_raw()) throw UsageError("xyz_to_raw target must be a raw space");
    const Mat3 inv = inverse(cst, "CST");
    return normalize_l2(ColorVec(inv * l_xyz.values(), raw_space));
}

}  // namespace wbpref
