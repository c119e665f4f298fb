// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/colorimetry.hpp>

#include <wbpref/error.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wbpref {

namespace {

// Isotemperature lines in CIE 1960 UCS, from A. R. Robertson, "Computation of
// correlated color temperature and distribution temperature", JOSA 58 (1968),
// as reproduced in Wyszecki & Stiles, Color Science, 2nd ed., table 1(3.11).
// Columns: mired, u, v, slope of the isotemperature line.
constexpr std::array<RobertsonRow, 31> kRobertson = {{
    {0.0, 0.18006, 0.26352, -0.24341},
    {10.0, 0.18066, 0.26589, -0.25479},
    {20.0, 0.18133, 0.26846, -0.26876},
    {30.0, 0.18208, 0.27119, -0.28539},
    {40.0, 0.18293, 0.27407, -0.30470},
    {50.0, 0.18388, 0.27709, -0.32675},
    {60.0, 0.18494, 0.28021, -0.35156},
    {70.0, 0.18611, 0.28342, -0.37915},
    {80.0, 0.18740, 0.28668, -0.40955},
    {90.0, 0.18880, 0.28997, -0.44278},
    {100.0, 0.19032, 0.29326, -0.47888},
    {125.0, 0.19462, 0.30141, -0.58204},
    {150.0, 0.19962, 0.30921, -0.70471},
    {175.0, 0.20525, 0.31647, -0.84901},
    {200.0, 0.21142, 0.32312, -1.0182},
    {225.0, 0.21807, 0.32909, -1.2168},
    {250.0, 0.22511, 0.33439, -1.4512},
    {275.0, 0.23247, 0.33904, -1.7298},
    {300.0, 0.24010, 0.34308, -2.0637},
    {325.0, 0.24792, 0.34655, -2.4681},
    {350.0, 0.25591, 0.34951, -2.9641},
    {375.0, 0.26400, 0.35200, -3.5814},
    {400.0, 0.27218, 0.35407, -4.3633},
    {425.0, 0.28039, 0.35577, -5.3762},
    {450.0, 0.28863, 0.35714, -6.7262},
    {475.0, 0.29685, 0.35823, -8.5955},
    {500.0, 0.30505, 0.35907, -11.324},
    {525.0, 0.31320, 0.35968, -15.628},
    {550.0, 0.32129, 0.36011, -23.325},
    {575.0, 0.32931, 0.36038, -40.770},
    {600.0, 0.33724, 0.36051, -116.45},
}};

// Samples farther than this from the locus (in uv) are not given a CCT.
constexpr double kMaxLocusDistance = 0.05;

Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

std::string ColorSpace::describe() const {
    return kind_ == SpaceKind::CieXyz ? std::string("xyz") : "raw(" + sensor_ + ")";
}

ColorVec::ColorVec(double c0, double c1, double c2, ColorSpace space)
    : v_{c0, c1, c2}, space_(std::move(space)) {
    for (double& c : v_) {
        if (!std::isfinite(c)) throw DomainError("color vector has a non-finite component");
        if (c < 0.0) {
            c = 0.0;
            clamped_ = true;
        }
    }
    if (!(l2_norm(v_) > 0.0)) throw DomainError("color vector has zero norm");
}

double ColorVec::norm() const noexcept { return l2_norm(v_); }

ColorVec ColorVec::with_space(ColorSpace space) const {
    ColorVec out = *this;
    out.space_ = std::move(space);
    return out;
}

Cct Cct::from_kelvin(double kelvin) {
    if (!std::isfinite(kelvin) || kelvin <= 0.0)
        throw OutOfGamutError("CCT must be a positive finite temperature");
    return from_mired(1e6 / kelvin);
}

Cct Cct::from_mired(double mired) {
    if (!std::isfinite(mired) || mired < kMinMired || mired > kMaxMired)
        throw OutOfGamutError("CCT of " + std::to_string(mired) +
                              " mired is outside the supported range [0.01, 600]");
    return Cct(1e6 / mired, mired);
}

std::span<const RobertsonRow, 31> robertson_table() { return kRobertson; }

double dot(const Vec3& a, const Vec3& b) noexcept { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double l2_norm(const Vec3& a) noexcept { return std::hypot(a[0], a[1], a[2]); }

ColorVec normalize_l2(const ColorVec& v) {
    const double n = v.norm();
    ColorVec out(v[0] / n, v[1] / n, v[2] / n, v.space());
    out.clamped_ = v.clamped_;
    return out;
}

double angle_degrees(const Vec3& a, const Vec3& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("angular error of a zero-norm vector");
    const Vec3 ua{a[0] / na, a[1] / na, a[2] / na};
    const Vec3 ub{b[0] / nb, b[1] / nb, b[2] / nb};
    // atan2 form keeps full precision near 0 and 180 degrees.
    const double s = l2_norm(cross(ua, ub));
    const double c = dot(ua, ub);
    return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

double angular_error_degrees(const ColorVec& a, const ColorVec& b) {
    if (!(a.space() == b.space()))
        throw UsageError("angular error between different spaces: " + a.space().describe() +
                         " vs " + b.space().describe());
    return angle_degrees(a.values(), b.values());
}

ChromaticityUv xyz_to_uv(const ColorVec& xyz) {
    if (!xyz.space().is_xyz()) throw UsageError("xyz_to_uv expects a CIE XYZ vector");
    const double den = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
    if (!(den > 0.0)) throw DomainError("degenerate XYZ for uv chromaticity");
    return {4.0 * xyz[0] / den, 6.0 * xyz[1] / den};
}

ChromaticityUv xy_to_uv(ChromaticityXy xy) {
    const double den = -2.0 * xy.x + 12.0 * xy.y + 3.0;
    if (!(den > 0.0)) throw DomainError("degenerate xy chromaticity");
    return {4.0 * xy.x / den, 6.0 * xy.y / den};
}

ChromaticityXy uv_to_xy(ChromaticityUv uv) {
    const double den = 2.0 * uv.u - 8.0 * uv.v + 4.0;
    if (!(den > 0.0)) throw DomainError("degenerate uv chromaticity");
    return {3.0 * uv.u / den, 2.0 * uv.v / den};
}

ColorVec xy_to_xyz(ChromaticityXy xy) {
    if (!(xy.y > 0.0)) throw DomainError("xy chromaticity with y <= 0");
    return ColorVec::xyz(xy.x / xy.y, 1.0, (1.0 - xy.x - xy.y) / xy.y);
}

ColorVec uv_to_xyz(ChromaticityUv uv) { return xy_to_xyz(uv_to_xy(uv)); }

Cct robertson_cct(const ColorVec& xyz) { return robertson_cct(xyz_to_uv(xyz)); }

Cct robertson_cct(ChromaticityUv uv) {
    if (!std::isfinite(uv.u) || !std::isfinite(uv.v))
        throw OutOfGamutError("non-finite chromaticity");
    const auto& t = kRobertson;
    // Signed offset of the sample from each isotemperature line; the sign
    // flips between the two lines that bracket it.
    double prev = 0.0;
    std::size_t hit = t.size();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = (uv.v - t[i].v) - t[i].slope * (uv.u - t[i].u);
        if (i > 0 && ((d < 0.0 && prev >= 0.0) || (d >= 0.0 && prev < 0.0))) {
            hit = i;
            break;
        }
        prev = d;
    }
    if (hit == t.size())
        throw OutOfGamutError("chromaticity (" + std::to_string(uv.u) + ", " + std::to_string(uv.v) +
                              ") lies outside the Robertson table range");

    const RobertsonRow& lo = t[hit - 1];
    const RobertsonRow& hi = t[hit];
    const double dlo = ((uv.v - lo.v) - lo.slope * (uv.u - lo.u)) / std::sqrt(1.0 + lo.slope * lo.slope);
    const double dhi = ((uv.v - hi.v) - hi.slope * (uv.u - hi.u)) / std::sqrt(1.0 + hi.slope * hi.slope);
    const double f = (dlo == dhi) ? 0.0 : dlo / (dlo - dhi);

    const double lu = lo.u + f * (hi.u - lo.u);
    const double lv = lo.v + f * (hi.v - lo.v);
    if (std::hypot(uv.u - lu, uv.v - lv) > kMaxLocusDistance)
        throw OutOfGamutError("chromaticity is farther than 0.05 uv from the Planckian locus");

    const double mired = lo.mired + f * (hi.mired - lo.mired);
    return Cct::from_mired(mired);
}

}  // namespace wbpref
