// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include "support/oracles.hpp"

#include <doctest.h>
#include <wbpref/camera_profile.hpp>
#include <wbpref/error.hpp>

#include <cmath>

using namespace wbpref;
namespace t = wbpref::testing;

namespace {

CameraProfile make_profile(const Mat3& a, const Mat3& b, const std::string& name = "cam") {
    return CameraProfile(name, a, b, Cct::from_kelvin(2856), Cct::from_kelvin(6504));
}

double weight_oracle(double c, double ca, double cb) {
    const long double w = (1.0L / c - 1.0L / cb) / (1.0L / ca - 1.0L / cb);
    return static_cast<double>(std::clamp(w, 0.0L, 1.0L));
}

void check_close(const Mat3& a, const t::M3& b, double tol) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(a(i, j) - static_cast<double>(b[i][j])) < tol);
}

}  // namespace

TEST_CASE("interpolation weight") {
    const auto a = Cct::from_kelvin(2856), b = Cct::from_kelvin(6504);
    CHECK(interpolation_weight(a, a, b) == doctest::Approx(1.0));
    CHECK(interpolation_weight(b, a, b) == doctest::Approx(0.0));
    const double w = interpolation_weight(Cct::from_kelvin(5003), a, b);
    CHECK(std::abs(w - 0.2349) <= 0.0005);
    CHECK(w == doctest::Approx(weight_oracle(5003, 2856, 6504)).epsilon(1e-12));
    CHECK(interpolation_weight(Cct::from_kelvin(2000), a, b) == 1.0);
    CHECK(interpolation_weight(Cct::from_kelvin(12000), a, b) == 0.0);
    CHECK(interpolation_weight(Cct::from_kelvin(5003), b, a) == doctest::Approx(1.0 - w));
    CHECK_THROWS_AS(interpolation_weight(a, a, a), ConfigError);
}

TEST_CASE("profile validation") {
    CHECK_THROWS_AS(CameraProfile("c", Mat3::identity(), Mat3::identity(), Cct::from_kelvin(5000), Cct::from_kelvin(5000)),
                    ConfigError);
    Mat3 sing{{1, 2, 3, 2, 4, 6, 0, 0, 1}};
    CHECK_THROWS_AS(make_profile(sing, Mat3::identity()), NumericError);
    Mat3 bad = Mat3::identity();
    bad(1, 1) = INFINITY;
    CHECK_THROWS(make_profile(bad, Mat3::identity()));
}

TEST_CASE("matrix helpers match the cofactor oracle") {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        const Mat3 m = t::random_matrix(rng);
        check_close(inverse(m), t::cofactor_inverse(t::to_m3(m)), 1e-10);
    }
    CHECK_THROWS_AS(inverse(Mat3{{1, 1, 1, 1, 1, 1, 0, 0, 1}}, "probe"), NumericError);
}

TEST_CASE("interpolate_cst") {
    Rng rng(5);
    const Mat3 m = t::random_matrix(rng);
    const auto same = make_profile(m, m);
    for (auto mode : {CstMode::ForwardThenInvert, CstMode::InvertThenBlend})
        for (double a : {0.0, 0.3, 1.0}) check_close(interpolate_cst(same, a, mode), t::cofactor_inverse(t::to_m3(m)), 1e-10);

    const Mat3 fm1 = t::random_matrix(rng), fm2 = t::random_matrix(rng);
    const auto p = make_profile(fm1, fm2);
    for (auto mode : {CstMode::ForwardThenInvert, CstMode::InvertThenBlend})
        check_close(interpolate_cst(p, 1.0, mode), t::cofactor_inverse(t::to_m3(fm1)), 1e-10);

    t::M3 blend_fwd{}, blend_inv{};
    const auto i1 = t::cofactor_inverse(t::to_m3(fm1)), i2 = t::cofactor_inverse(t::to_m3(fm2));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            blend_fwd[i][j] = 0.5L * fm1(i, j) + 0.5L * fm2(i, j);
            blend_inv[i][j] = 0.5L * i1[i][j] + 0.5L * i2[i][j];
        }
    const Mat3 a = interpolate_cst(p, 0.5, CstMode::ForwardThenInvert);
    const Mat3 b = interpolate_cst(p, 0.5, CstMode::InvertThenBlend);
    check_close(a, t::cofactor_inverse(blend_fwd), 1e-10);
    check_close(b, blend_inv, 1e-10);
    double diff = 0;
    for (std::size_t i = 0; i < 9; ++i) diff = std::max(diff, std::abs(a.m[i] - b.m[i]));
    CHECK(diff > 1e-6);
}

TEST_CASE("cst mode names") {
    CHECK(parse_cst_mode(to_string(CstMode::InvertThenBlend)) == CstMode::InvertThenBlend);
    CHECK(parse_cst_mode(to_string(CstMode::ForwardThenInvert)) == CstMode::ForwardThenInvert);
    CHECK_FALSE(parse_cst_mode("sideways").has_value());
}

TEST_CASE("resolve_cst with identical matrices") {
    Rng rng(9);
    const Mat3 m = t::random_matrix(rng, 0.1);
    const auto p = make_profile(m, m);
    const Vec3 raw = m * Vec3{0.95, 1.0, 1.09};
    const auto r = resolve_cst(p, ColorVec(raw, p.raw_space()));
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    check_close(r.cst_raw_to_xyz, t::cofactor_inverse(t::to_m3(m)), 1e-10);
}

TEST_CASE("resolve_cst recovers a hand-built fixed point") {
    Rng rng(21);
    for (int k = 0; k < 5; ++k) {
        const Mat3 fm1 = t::random_matrix(rng, 0.15);
        Mat3 fm2 = fm1;
        for (auto& x : fm2.m) x += rng.uniform(-0.05, 0.05);
        const auto p = make_profile(fm1, fm2);
        for (double kelvin : {3300.0, 4200.0, 5500.0}) {
            const auto xyz = t::planck_xyz(kelvin);
            const double a_star = weight_oracle(robertson_cct(ColorVec::xyz(xyz[0], xyz[1], xyz[2])).kelvin(), 2856, 6504);
            const Mat3 fm = blend(fm1, fm2, a_star);
            const auto r = resolve_cst(p, ColorVec(fm * Vec3{xyz[0], xyz[1], xyz[2]}, p.raw_space()));
            CHECK(r.converged);
            CHECK(std::abs(r.alpha - a_star) < 0.01);
        }
    }
}

TEST_CASE("resolve_cst clamps beyond the calibration range") {
    Rng rng(4);
    const Mat3 fm1 = t::random_matrix(rng, 0.1), fm2 = t::random_matrix(rng, 0.1);
    const auto p = make_profile(fm1, fm2);
    const auto hot = t::planck_xyz(12000);
    const auto r = resolve_cst(p, ColorVec(fm2 * Vec3{hot[0], hot[1], hot[2]}, p.raw_space()));
    CHECK(r.converged);
    CHECK(r.alpha == 0.0);
    const auto cold = t::planck_xyz(2000);
    const auto s = resolve_cst(p, ColorVec(fm1 * Vec3{cold[0], cold[1], cold[2]}, p.raw_space()));
    CHECK(s.converged);
    CHECK(s.alpha == 1.0);
}

TEST_CASE("resolve_cst is idempotent and checks the space") {
    Rng rng(8);
    const Mat3 fm1 = t::random_matrix(rng, 0.1);
    const auto p = make_profile(fm1, t::random_matrix(rng, 0.1));
    const auto w = t::planck_xyz(4500);
    const ColorVec l(fm1 * Vec3{w[0], w[1], w[2]}, p.raw_space());
    const auto a = resolve_cst(p, l);
    const auto b = resolve_cst(p, l);
    CHECK(a.cst_raw_to_xyz == b.cst_raw_to_xyz);
    CHECK(a.alpha == b.alpha);
    ResolveOptions warm;
    warm.start_alpha = a.alpha;
    CHECK(resolve_cst(p, l, warm).alpha == doctest::Approx(a.alpha).epsilon(1e-4));
    CHECK_THROWS_AS(resolve_cst(p, ColorVec::raw("other", 1, 1, 1)), UsageError);
}

TEST_CASE("raw_to_xyz and xyz_to_raw") {
    const auto a = raw_to_xyz(ColorVec::raw("cam", 1, 2, 3), Mat3::identity());
    CHECK(a.space().is_xyz());
    CHECK(a[2] == doctest::Approx(3.0 / std::sqrt(14.0)));
    const auto b = raw_to_xyz(ColorVec::raw("cam", 1, 1, 1), Mat3::diagonal(2, 1, 1));
    CHECK(b[0] == doctest::Approx(2.0 / std::sqrt(6.0)));
    const auto c = xyz_to_raw(ColorVec::xyz(3, 4, 0), Mat3::identity(), ColorSpace::raw("cam"));
    CHECK(c.space() == ColorSpace::raw("cam"));
    CHECK(c[1] == doctest::Approx(0.8));
    CHECK_THROWS_AS(raw_to_xyz(ColorVec::raw("cam", 1, 0, 0), Mat3::diagonal(-1, 1, 1)), DomainError);
    CHECK_THROWS_AS(xyz_to_raw(ColorVec::xyz(1, 1, 1), Mat3{{1, 1, 1, 1, 1, 1, 1, 1, 1}}, ColorSpace::raw("c")),
                    NumericError);

    Rng rng(12);
    for (int k = 0; k < 100; ++k) {
        const Mat3 m = t::random_matrix(rng, 0.2);
        const Vec3 l{rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)};
        const auto x = raw_to_xyz(ColorVec(l, ColorSpace::raw("cam")), m);
        const auto o = t::mul(t::to_m3(m), {l[0], l[1], l[2]});
        const long double n = std::sqrt(o[0] * o[0] + o[1] * o[1] + o[2] * o[2]);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(x[static_cast<std::size_t>(i)] - static_cast<double>(o[i] / n)) < 1e-12);
        const auto back = xyz_to_raw(x, m, ColorSpace::raw("cam"));
        CHECK(angle_degrees(back.values(), l) < 1e-6);
    }
}
