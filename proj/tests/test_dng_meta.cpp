// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include "support/dng_fixtures.hpp"

#include <doctest.h>
#include <wbpref/dng_meta.hpp>
#include <wbpref/random.hpp>

#include <cmath>

using namespace wbpref;
using namespace wbpref::dng;
namespace t = wbpref::testing;

namespace {

DngColorMetadata parse(const std::vector<std::uint8_t>& b) { return parse_dng_metadata(b); }

DngErrorKind kind_of(const std::vector<std::uint8_t>& b) {
    try {
        parse(b);
    } catch (const DngError& e) {
        return e.kind();
    }
    FAIL("expected a DngError");
    return DngErrorKind::NotTiff;
}

void put_u32le(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST_CASE("fixture values decode") {
    const auto m = parse(t::make_dng_fixture());
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(m.color_matrix_1.m[i] == doctest::Approx(t::kFixtureCm1[i]).epsilon(1e-12));
        CHECK(m.color_matrix_2.m[i] == doctest::Approx(t::kFixtureCm2[i]).epsilon(1e-12));
    }
    CHECK(m.calibration_illuminant_1 == 17);
    CHECK(m.calibration_illuminant_2 == 21);
    REQUIRE(m.as_shot_neutral.has_value());
    CHECK((*m.as_shot_neutral)[0] == doctest::Approx(0.473));
    CHECK(m.camera_model == std::string(t::kFixtureModel));
}

TEST_CASE("identity fixture") {
    t::FixtureOptions o;
    o.identity = true;
    const auto m = parse(t::make_dng_fixture(o));
    CHECK(m.color_matrix_1 == Mat3::identity());
    CHECK(m.color_matrix_2 == Mat3::identity());
}

TEST_CASE("byte order, layout and integer width do not change the metadata") {
    const auto ref = parse(t::make_dng_fixture());
    for (bool be : {false, true})
        for (auto layout : {t::FixtureLayout::Flat, t::FixtureLayout::Nested})
            for (bool wide : {false, true}) {
                t::FixtureOptions o;
                o.big_endian = be;
                o.layout = layout;
                o.long_illuminants = wide;
                CHECK(parse(t::make_dng_fixture(o)) == ref);
            }
}

TEST_CASE("structural errors") {
    CHECK(kind_of({'P', '6', ' ', '1', ' ', '1', ' ', '2'}) == DngErrorKind::NotTiff);
    CHECK(kind_of({'I', 'I', 43, 0, 8, 0, 0, 0}) == DngErrorKind::NotTiff);
    CHECK(kind_of({'I', 'I'}) == DngErrorKind::NotTiff);

    auto b = t::make_dng_fixture();
    put_u32le(b, 4, 0x00FFFFFF);
    CHECK(kind_of(b) == DngErrorKind::Structure);

    t::TiffWriter w(false);
    t::TiffIfd loop;
    loop.entries = {t::rational_entry(kTagColorMatrix1, t::kFixtureCm1)};
    loop.next = 0;
    w.add_ifd(loop);
    CHECK(kind_of(w.bytes()) == DngErrorKind::Structure);

    t::TiffWriter sub(true);
    t::TiffIfd a;
    a.entries = {t::ref_entry(kTagSubIfds, {1})};
    t::TiffIfd c;
    c.entries = {t::ref_entry(kTagSubIfds, {0}, t::kTIfd)};
    sub.add_ifd(a);
    sub.add_ifd(c);
    CHECK(kind_of(sub.bytes()) == DngErrorKind::Structure);
}

TEST_CASE("missing and malformed tags") {
    t::FixtureOptions o;
    o.omit_cm2 = true;
    try {
        parse(t::make_dng_fixture(o));
        FAIL("expected MissingTag");
    } catch (const DngError& e) {
        CHECK(e.kind() == DngErrorKind::MissingTag);
        CHECK(e.tag() == kTagColorMatrix2);
        CHECK(std::string(e.what()).find("0xC622") != std::string::npos);
    }

    t::TiffWriter w(false);
    t::TiffIfd ifd;
    auto short_cm = t::rational_entry(kTagColorMatrix1, {1, 0, 0, 0, 1, 0, 0, 0});
    ifd.entries = {short_cm, t::rational_entry(kTagColorMatrix2, t::kFixtureCm2)};
    w.add_ifd(ifd);
    CHECK(kind_of(w.bytes()) == DngErrorKind::MalformedTag);

    t::TiffWriter z(false);
    t::TiffIfd zi;
    auto zero_den = t::rational_entry(kTagColorMatrix1, t::kFixtureCm1);
    zero_den.rats[4].second = 0;
    zi.entries = {zero_den, t::rational_entry(kTagColorMatrix2, t::kFixtureCm2)};
    z.add_ifd(zi);
    CHECK(kind_of(z.bytes()) == DngErrorKind::MalformedTag);
}

TEST_CASE("calibration illuminant codes") {
    CHECK(calibration_illuminant_cct(17).kelvin() == doctest::Approx(2856));
    CHECK(calibration_illuminant_cct(21).kelvin() == doctest::Approx(6504));
    CHECK(calibration_illuminant_cct(23).kelvin() == doctest::Approx(5003));
    try {
        calibration_illuminant_cct(99);
        FAIL("expected UnsupportedIlluminantError");
    } catch (const UnsupportedIlluminantError& e) {
        CHECK(e.code() == 99);
    }
}

TEST_CASE("profile from metadata") {
    t::FixtureOptions o;
    o.identity = true;
    const auto m = parse(t::make_dng_fixture(o));
    const auto p = profile_from_dng(m, "cam");
    CHECK(p.calib_cct_1().kelvin() == doctest::Approx(2856));
    CHECK(p.calib_cct_2().kelvin() == doctest::Approx(6504));

    const auto real = parse(t::make_dng_fixture());
    auto swapped = real;
    std::swap(swapped.color_matrix_1, swapped.color_matrix_2);
    std::swap(swapped.calibration_illuminant_1, swapped.calibration_illuminant_2);
    const auto p1 = profile_from_dng(real, "cam");
    const auto p2 = profile_from_dng(swapped, "cam");
    const auto c = Cct::from_kelvin(4300);
    CHECK(interpolation_weight(c, p1.calib_cct_1(), p1.calib_cct_2()) ==
          doctest::Approx(1.0 - interpolation_weight(c, p2.calib_cct_1(), p2.calib_cct_2())));
    const Mat3 a = interpolate_cst(p1, interpolation_weight(c, p1.calib_cct_1(), p1.calib_cct_2()));
    const Mat3 b = interpolate_cst(p2, interpolation_weight(c, p2.calib_cct_1(), p2.calib_cct_2()));
    for (std::size_t i = 0; i < 9; ++i) CHECK(a.m[i] == doctest::Approx(b.m[i]).epsilon(1e-12));

    auto singular = m;
    singular.color_matrix_2 = Mat3{{1, 2, 3, 2, 4, 6, 1, 1, 1}};
    CHECK_THROWS_AS(profile_from_dng(singular, "cam"), NumericError);
    auto no_ill = m;
    no_ill.calibration_illuminant_2.reset();
    CHECK_THROWS_AS(profile_from_dng(no_ill, "cam"), DngError);
}

TEST_CASE("describe lists the matrices and codes") {
    t::FixtureOptions o;
    o.identity = true;
    const std::string d = describe(parse(t::make_dng_fixture(o)));
    CHECK(d.find("1.000000 0.000000 0.000000") != std::string::npos);
    CHECK(d.find("17") != std::string::npos);
    CHECK(d.find("21") != std::string::npos);
}

TEST_CASE("truncation and bit-flip fuzz") {
    std::vector<std::vector<std::uint8_t>> seeds;
    for (bool be : {false, true})
        for (auto layout : {t::FixtureLayout::Flat, t::FixtureLayout::Nested}) {
            t::FixtureOptions o;
            o.big_endian = be;
            o.layout = layout;
            seeds.push_back(t::make_dng_fixture(o));
        }
    Rng rng(2024);
    int parsed = 0, rejected = 0, other = 0;
    for (int it = 0; it < 10000; ++it) {
        const auto& src = seeds[static_cast<std::size_t>(it) % seeds.size()];
        std::vector<std::uint8_t> b = src;
        if (rng.below(2) == 0) {
            b.resize(static_cast<std::size_t>(rng.below(src.size())));
        } else {
            const auto flips = 1 + rng.below(8);
            for (std::uint64_t k = 0; k < flips; ++k) b[rng.below(b.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
        }
        b.shrink_to_fit();
        try {
            parse(b);
            ++parsed;
        } catch (const Error&) {
            ++rejected;
        } catch (...) {
            ++other;
        }
    }
    CHECK(other == 0);
    CHECK(parsed + rejected == 10000);
    CHECK(rejected > 0);
}
