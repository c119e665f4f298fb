// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/datakit.hpp>

#include <wbpref/error.hpp>
#include <wbpref/text_io.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace wbpref {

const CameraProfile& Dataset::profile(const std::string& camera) const {
    const auto it = profiles.find(camera);
    if (it == profiles.end()) throw ParseError("unknown camera '" + camera + "'");
    return it->second;
}

// Krystek, "An algorithm to calculate correlated colour temperature",
// Color Research & Application 10 (1985); accurate to ~1e-5 in uv over
// 1000 K to 15000 K.
ChromaticityUv planckian_uv(double t) {
    if (!(t >= 1000.0 && t <= 15000.0)) throw ConfigError("Planckian approximation valid on 1000..15000 K");
    const double u = (0.860117757 + 1.54118254e-4 * t + 1.28641212e-7 * t * t) /
                     (1.0 + 8.42420235e-4 * t + 7.08145163e-7 * t * t);
    const double v = (0.317398726 + 4.22806245e-5 * t + 4.20481691e-8 * t * t) /
                     (1.0 - 2.89741816e-5 * t + 1.61456053e-7 * t * t);
    return {u, v};
}

// CIE 015:2004, daylight chromaticity as a function of correlated colour temperature.
ChromaticityXy daylight_xy(double t) {
    if (!(t >= 4000.0 && t <= 25000.0)) throw ConfigError("daylight locus valid on 4000..25000 K");
    const double t2 = t * t, t3 = t2 * t;
    const double x = t <= 7000.0 ? -4.6070e9 / t3 + 2.9678e6 / t2 + 0.09911e3 / t + 0.244063
                                 : -2.0064e9 / t3 + 1.9018e6 / t2 + 0.24748e3 / t + 0.237040;
    return {x, -3.0 * x * x + 2.87 * x - 0.275};
}

ChromaticityUv illuminant_locus_uv(double kelvin) {
    return kelvin >= 4000.0 ? xy_to_uv(daylight_xy(kelvin)) : planckian_uv(kelvin);
}

double condition_number(const Mat3& m) {
    auto frob = [](const Mat3& a) {
        double s = 0.0;
        for (double v : a.m) s += v * v;
        return std::sqrt(s);
    };
    return frob(m) * frob(inverse(m));
}

namespace {

// Chromaticities the sensors must map to strictly positive raw values.
// Offsets whose XYZ is not strictly positive lie outside the physical gamut
// and are skipped.
std::vector<Vec3> positivity_probe() {
    std::vector<Vec3> out;
    for (int i = 0; i <= 24; ++i) {
        const double mired = 1e6 / 12000.0 + (1e6 / 2000.0 - 1e6 / 12000.0) * i / 24.0;
        const auto uv = illuminant_locus_uv(1e6 / mired);
        for (double du : {-0.02, 0.0, 0.02})
            for (double dv : {-0.02, 0.0, 0.02}) {
                const Vec3 xyz = uv_to_xyz({uv.u + du, uv.v + dv}).values();
                if (xyz[0] > 1e-3 && xyz[1] > 1e-3 && xyz[2] > 1e-3) out.push_back(xyz);
            }
    }
    return out;
}

bool sensor_acceptable(const Mat3& low, const Mat3& high, double max_condition, const std::vector<Vec3>& probe) {
    if (std::abs(determinant(low)) <= 1e-6 || std::abs(determinant(high)) <= 1e-6) return false;
    if (condition_number(low) >= max_condition || condition_number(high) >= max_condition) return false;
    const Cct lo = Cct::from_kelvin(kVirtualCalibLowK), hi = Cct::from_kelvin(kVirtualCalibHighK);
    for (const auto& xyz : probe) {
        const Cct c = robertson_cct(ColorVec(xyz, ColorSpace::xyz()));
        const Vec3 raw = blend(low, high, interpolation_weight(c, lo, hi)) * xyz;
        if (!(raw[0] > 1e-3 && raw[1] > 1e-3 && raw[2] > 1e-3)) return false;
    }
    return true;
}

}  // namespace

std::pair<VirtualSensor, CameraProfile> make_virtual_sensor(std::uint64_t seed, const std::string& name,
                                                            const SensorOptions& opts) {
    if (!(opts.perturbation_scale >= 0.0)) throw ConfigError("perturbation scale must be >= 0");
    static const std::vector<Vec3> probe = positivity_probe();
    Rng rng(seed);
    const double s = opts.perturbation_scale;
    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        Mat3 base = Mat3::identity();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (r != c) base(r, c) = rng.uniform(-0.35, 0.35) * s;
        for (int r = 0; r < 3; ++r) {
            double off = 0.0;
            for (int c = 0; c < 3; ++c)
                if (r != c) off += std::abs(base(r, c));
            base(r, r) = 1.0 + off;
        }
        Mat3 twist = Mat3::identity();
        for (double& v : twist.m) v += rng.uniform(-0.08, 0.08) * s;
        const Mat3 high = base * twist;
        if (!sensor_acceptable(base, high, opts.max_condition, probe)) continue;
        VirtualSensor vs{name, base, high, seed};
        CameraProfile profile(name, base, high, Cct::from_kelvin(kVirtualCalibLowK),
                              Cct::from_kelvin(kVirtualCalibHighK));
        return {std::move(vs), std::move(profile)};
    }
    throw GenerationError("virtual sensor generation failed after " + std::to_string(opts.max_attempts) +
                          " attempts (seed " + std::to_string(seed) + ")");
}

std::vector<ColorVec> sample_illuminants(std::size_t n, double cct_low, double cct_high, double chroma_noise,
                                         std::uint64_t seed) {
    if (n < 1) throw ConfigError("illuminant count must be >= 1");
    if (!(cct_low >= 1667.0 && cct_low <= cct_high && cct_high <= 15000.0))
        throw ConfigError("illuminant CCT bounds must satisfy 1667 <= low <= high <= 15000 K");
    if (!(chroma_noise >= 0.0)) throw ConfigError("chroma noise must be >= 0");
    Rng rng(seed);
    const double m_lo = 1e6 / cct_high, m_hi = 1e6 / cct_low;
    std::vector<ColorVec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double mired = rng.uniform(m_lo, m_hi);
        auto uv = illuminant_locus_uv(1e6 / mired);
        uv.u += chroma_noise * rng.normal();
        uv.v += chroma_noise * rng.normal();
        out.push_back(uv_to_xyz(uv));
    }
    return out;
}

void validate(const PreferencePolicy& p) {
    if (!(p.lambda >= 0.0 && p.lambda <= 1.0)) throw ConfigError("preference lambda must lie in [0, 1]");
    if (!std::isfinite(p.delta_mired)) throw ConfigError("preference delta must be finite");
    if (!(p.tint_gain >= 0.0) || !std::isfinite(p.tint_gain)) throw ConfigError("tint gain must be >= 0");
}

PreferenceResult synth_preference(const ColorVec& l_xyz, const PreferencePolicy& policy) {
    validate(policy);
    if (!l_xyz.space().is_xyz()) throw UsageError("synth_preference expects a CIE XYZ vector");
    const ColorVec l = normalize_l2(l_xyz);
    if (policy.lambda == 0.0) return {l, false};
    constexpr double kMinMired = 1e6 / 15000.0;
    constexpr double kMaxMired = 600.0;
    const double m = robertson_cct(l).mired();
    const double shifted = m + policy.delta_mired;
    const double m_target = std::clamp(shifted, kMinMired, kMaxMired);
    const auto uv_l = xyz_to_uv(l);
    const auto anchor = planckian_uv(1e6 / std::clamp(m, kMinMired, kMaxMired));
    const auto base = planckian_uv(1e6 / m_target);
    const ChromaticityUv target{base.u + policy.tint_gain * (uv_l.u - anchor.u),
                                base.v + policy.tint_gain * (uv_l.v - anchor.v)};
    const ColorVec t = normalize_l2(uv_to_xyz(target));
    Vec3 mix{};
    for (std::size_t i = 0; i < 3; ++i) mix[i] = (1.0 - policy.lambda) * l[i] + policy.lambda * t[i];
    return {normalize_l2(ColorVec(mix, ColorSpace::xyz())), m_target != shifted};
}

Vec3 jitter_direction(const Vec3& v, double mean_deg, Rng& rng) {
    const double a = rng.normal(), b = rng.normal();
    if (mean_deg == 0.0) return v;
    const double n = l2_norm(v);
    const Vec3 u{v[0] / n, v[1] / n, v[2] / n};
    // Orthonormal tangent basis from the axis least aligned with u.
    std::size_t k = 0;
    for (std::size_t i = 1; i < 3; ++i)
        if (std::abs(u[i]) < std::abs(u[k])) k = i;
    Vec3 axis{0.0, 0.0, 0.0};
    axis[k] = 1.0;
    Vec3 e1{axis[0] - u[k] * u[0], axis[1] - u[k] * u[1], axis[2] - u[k] * u[2]};
    const double n1 = l2_norm(e1);
    for (double& x : e1) x /= n1;
    const Vec3 e2{u[1] * e1[2] - u[2] * e1[1], u[2] * e1[0] - u[0] * e1[2], u[0] * e1[1] - u[1] * e1[0]};
    // A 2-D Gaussian of per-axis sigma s has Rayleigh magnitude with mean s*sqrt(pi/2).
    const double sigma = mean_deg * std::numbers::pi / 180.0 / std::sqrt(std::numbers::pi / 2.0);
    const double ta = sigma * a, tb = sigma * b;
    const double theta = std::hypot(ta, tb);
    if (theta == 0.0) return u;
    const double c = std::cos(theta), s = std::sin(theta) / theta;
    Vec3 out{};
    for (std::size_t i = 0; i < 3; ++i) out[i] = c * u[i] + s * (ta * e1[i] + tb * e2[i]);
    return out;
}

namespace {

// The forward matrix is the one calibrated for `scene`, even when mapping
// another vector through it.
ColorVec forward_to_raw(const CameraProfile& profile, const ColorVec& scene, const ColorVec& xyz,
                        const std::string& what) {
    const double alpha = interpolation_weight(robertson_cct(scene), profile.calib_cct_1(), profile.calib_cct_2());
    const Vec3 raw = blend(profile.forward_matrix_1(), profile.forward_matrix_2(), alpha) * xyz.values();
    if (!(raw[0] > 0.0 && raw[1] > 0.0 && raw[2] > 0.0))
        throw GenerationError("sensor '" + profile.sensor_name() + "' maps " + what + " to a non-positive raw vector");
    return normalize_l2(ColorVec(raw, profile.raw_space()));
}

// Jittered estimates are redrawn until their CCT is resolvable, so every
// front end stays inside the plausible illuminant gamut.
ColorVec jittered_estimate(const CameraProfile& profile, const ColorVec& neutral, const FrontEndNoise& fe, Rng& rng,
                           const std::string& id) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        ColorVec est(jitter_direction(neutral.values(), fe.noise_deg, rng), profile.raw_space());
        try {
            (void)resolve_cst(profile, est);
            return est;
        } catch (const OutOfGamutError&) {
        }
    }
    throw GenerationError("front end '" + fe.name + "' produced no resolvable estimate for scene " + id);
}

}  // namespace

std::vector<DatasetRecord> generate_records(const CameraProfile& profile, std::span<const ColorVec> scenes_xyz,
                                            const GenerationOptions& opts) {
    validate(opts.policy);
    for (const auto& fe : opts.front_ends)
        if (!(fe.noise_deg >= 0.0)) throw ConfigError("estimator noise must be >= 0");
    Rng rng(opts.seed);
    std::vector<DatasetRecord> out;
    out.reserve(scenes_xyz.size());
    for (std::size_t i = 0; i < scenes_xyz.size(); ++i) {
        const std::string id = opts.id_prefix + std::to_string(i);
        const ColorVec xyz = normalize_l2(scenes_xyz[i]);
        const ColorVec neutral = forward_to_raw(profile, xyz, xyz, "scene " + id);
        const ColorVec pref = synth_preference(scenes_xyz[i], opts.policy).xyz;
        const ColorVec preferred = forward_to_raw(profile, xyz, pref, "the preference of scene " + id);
        DatasetRecord rec{id, profile.sensor_name(), {}, preferred, neutral, std::nullopt};
        for (const auto& fe : opts.front_ends)
            rec.neutral_estimates.insert_or_assign(fe.name, jittered_estimate(profile, neutral, fe, rng, id));
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<DatasetRecord> generate_synthetic_dataset(const CameraProfile& profile, std::size_t n, double cct_low,
                                                      double cct_high, double chroma_noise,
                                                      const GenerationOptions& opts) {
    const auto scenes = sample_illuminants(n, cct_low, cct_high, chroma_noise, opts.seed);
    GenerationOptions g = opts;
    g.seed = opts.seed + 0x9E3779B97F4A7C15ULL;
    return generate_records(profile, scenes, g);
}

// ---------------------------------------------------------------------------
// Profile documents

namespace {

constexpr int kProfileFormatVersion = 1;

std::string format_matrix(const Mat3& m) {
    std::string s;
    for (double v : m.m) s += " " + text::format_real(v);
    return s;
}

bool valid_name(std::string_view s) {
    return !s.empty() && s.find_first_of(" \t\r\n|#") == std::string_view::npos;
}

}  // namespace

std::string serialize_profile(const CameraProfile& p) {
    std::string out = "wbpref-profile " + std::to_string(kProfileFormatVersion) + "\n";
    out += "sensor_name " + p.sensor_name() + "\n";
    out += "color_matrix_1" + format_matrix(p.forward_matrix_1()) + "\n";
    out += "color_matrix_2" + format_matrix(p.forward_matrix_2()) + "\n";
    out += "calib_cct_1 " + text::format_real(p.calib_cct_1().kelvin()) + "\n";
    out += "calib_cct_2 " + text::format_real(p.calib_cct_2().kelvin()) + "\n";
    return out;
}

CameraProfile parse_profile(std::string_view doc) {
    text::LineReader reader(doc);
    text::Line line;
    bool header = false;
    std::optional<std::string> name;
    std::optional<Mat3> m1, m2;
    std::optional<double> c1, c2;
    while (reader.next(line)) {
        const auto t = text::trim(line.text);
        if (t.empty() || t.front() == '#') continue;
        const auto f = text::split_ws(t);
        if (!header) {
            if (f.size() != 2 || f[0] != "wbpref-profile")
                throw ParseError("not a profile document", line.number, line.offset);
            const auto v = text::parse_int(f[1]);
            if (!v || *v != kProfileFormatVersion)
                throw ParseError("unsupported profile format version '" + std::string(f[1]) + "'", line.number,
                                 line.offset);
            header = true;
            continue;
        }
        const std::string key(f[0]);
        if (key == "sensor_name") {
            if (f.size() != 2 || !valid_name(f[1]))
                throw ParseError("sensor_name needs one token", line.number, line.offset);
            name = std::string(f[1]);
        } else if (key == "color_matrix_1" || key == "color_matrix_2") {
            if (f.size() != 10) throw ParseError(key + " needs 9 values", line.number, line.offset);
            Mat3 m;
            for (std::size_t i = 0; i < 9; ++i) {
                const auto v = text::parse_real(f[i + 1]);
                if (!v) throw ParseError(key + " has a malformed value", line.number, line.offset);
                m.m[i] = *v;
            }
            (key == "color_matrix_1" ? m1 : m2) = m;
        } else if (key == "calib_cct_1" || key == "calib_cct_2") {
            const auto v = f.size() == 2 ? text::parse_real(f[1]) : std::nullopt;
            if (!v) throw ParseError(key + " needs one value", line.number, line.offset);
            (key == "calib_cct_1" ? c1 : c2) = *v;
        } else {
            throw ParseError("unknown profile field '" + key + "'", line.number, line.offset);
        }
    }
    if (!header) throw ParseError("empty profile document");
    if (!name || !m1 || !m2 || !c1 || !c2)
        throw ParseError("profile document is missing a field", std::nullopt, doc.size());
    try {
        return CameraProfile(*name, *m1, *m2, Cct::from_kelvin(*c1), Cct::from_kelvin(*c2));
    } catch (const Error& e) {
        throw ParseError(std::string("invalid profile: ") + e.what());
    }
}

void save_profile(const CameraProfile& p, const std::filesystem::path& path) {
    text::write_file_atomic(path, serialize_profile(p));
}

CameraProfile load_profile(const std::filesystem::path& path) {
    try {
        return parse_profile(text::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Dataset documents

namespace {

ColorVec parse_vector(std::string_view field, const ColorSpace& space, const std::string& what, const text::Line& line) {
    const auto f = text::split_ws(field);
    if (f.size() != 3) throw ParseError(what + " needs 3 values", line.number, line.offset);
    Vec3 v{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto x = text::parse_real(f[i]);
        if (!x || *x < 0.0) throw ParseError(what + " has a malformed or negative value", line.number, line.offset);
        v[i] = *x;
    }
    if (!(l2_norm(v) > 0.0)) throw ParseError(what + " has zero norm", line.number, line.offset);
    return ColorVec(v, space);
}

std::string format_vector(const ColorVec& v) {
    return text::format_real(v[0]) + " " + text::format_real(v[1]) + " " + text::format_real(v[2]);
}

}  // namespace

Dataset parse_dataset(std::string_view doc, const std::filesystem::path& base_dir) {
    Dataset ds;
    std::set<std::string> ids;
    text::LineReader reader(doc);
    text::Line line;
    while (reader.next(line)) {
        const auto t = text::trim(line.text);
        if (t.empty()) continue;
        if (t.front() == '#') {
            if (t.substr(0, 8) != "#camera ") continue;
            const auto f = text::split_ws(t.substr(8));
            if (f.size() != 2 || !valid_name(f[0]))
                throw ParseError("camera header needs '<name> <profile-path>'", line.number, line.offset);
            const std::string cam(f[0]);
            if (ds.profiles.count(cam)) throw ParseError("duplicate camera '" + cam + "'", line.number, line.offset);
            std::filesystem::path p{std::string(f[1])};
            if (p.is_relative()) p = base_dir / p;
            CameraProfile prof = load_profile(p);
            if (prof.sensor_name() != cam)
                throw ParseError("profile for camera '" + cam + "' names sensor '" + prof.sensor_name() + "'",
                                 line.number, line.offset);
            ds.profiles.emplace(cam, std::move(prof));
            ds.profile_paths.emplace(cam, std::string(f[1]));
            continue;
        }
        const auto fields = text::split_char(t, '|');
        if (fields.size() < 4) throw ParseError("record needs at least 4 '|' fields", line.number, line.offset);
        const std::string id(text::trim(fields[0]));
        const std::string cam(text::trim(fields[1]));
        if (!valid_name(id)) throw ParseError("malformed record id", line.number, line.offset);
        if (!ids.insert(id).second)
            throw ParseError("duplicate record id '" + id + "'", line.number, line.offset);
        if (!ds.profiles.count(cam))
            throw ParseError("record '" + id + "' names unknown camera '" + cam + "'", line.number, line.offset);
        const ColorSpace space = ColorSpace::raw(cam);
        DatasetRecord rec{id, cam, {}, parse_vector(fields[2], space, "gt_preferred of '" + id + "'", line),
                          std::nullopt, std::nullopt};
        if (!text::trim(fields[3]).empty())
            rec.gt_neutral_raw = parse_vector(fields[3], space, "gt_neutral of '" + id + "'", line);
        for (std::size_t i = 4; i < fields.size(); ++i) {
            const auto fld = text::trim(fields[i]);
            if (fld.substr(0, 4) == "est:") {
                const auto rest = fld.substr(4);
                const auto sp = rest.find(' ');
                if (sp == std::string_view::npos || sp == 0)
                    throw ParseError("estimate field needs 'est:<front-end> r g b'", line.number, line.offset);
                const std::string fe(rest.substr(0, sp));
                ColorVec v = parse_vector(rest.substr(sp + 1), space, "estimate '" + fe + "' of '" + id + "'", line);
                if (!rec.neutral_estimates.emplace(fe, v).second)
                    throw ParseError("duplicate estimate '" + fe + "' in record '" + id + "'", line.number,
                                     line.offset);
            } else if (fld.substr(0, 4) == "img:") {
                rec.image_path = std::string(fld.substr(4));
            } else {
                throw ParseError("unknown field '" + std::string(fld) + "'", line.number, line.offset);
            }
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
    return parse_dataset(text::read_file(path), path.parent_path());
}

std::string format_dataset(const Dataset& ds) {
    std::string out;
    for (const auto& [cam, p] : ds.profile_paths) out += "#camera " + cam + " " + p + "\n";
    for (const auto& r : ds.records) {
        out += r.id + "|" + r.camera + "|" + format_vector(r.gt_preferred_raw) + "|";
        if (r.gt_neutral_raw) out += format_vector(*r.gt_neutral_raw);
        for (const auto& [fe, v] : r.neutral_estimates) out += "|est:" + fe + " " + format_vector(v);
        if (r.image_path) out += "|img:" + *r.image_path;
        out += "\n";
    }
    return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
    text::write_file_atomic(path, format_dataset(ds));
}

std::tuple<std::vector<DatasetRecord>, std::vector<DatasetRecord>, std::vector<DatasetRecord>> split(
    std::span<const DatasetRecord> records, const SplitRatios& r, std::uint64_t seed) {
    if (records.empty()) throw ConfigError("cannot split an empty dataset");
    if (!(r.train > 0.0 && r.val > 0.0 && r.test > 0.0) || std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
        throw ConfigError("split ratios must be positive and sum to 1");
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    const auto n = static_cast<double>(records.size());
    const auto n_train = std::min(records.size(), static_cast<std::size_t>(std::llround(n * r.train)));
    const auto n_val = std::min(records.size() - n_train, static_cast<std::size_t>(std::llround(n * r.val)));
    std::vector<DatasetRecord> a, b, c;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto& dst = i < n_train ? a : (i < n_train + n_val ? b : c);
        dst.push_back(records[idx[i]]);
    }
    return {std::move(a), std::move(b), std::move(c)};
}

}  // namespace wbpref
