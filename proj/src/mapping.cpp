// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/mapping.hpp>

#include <wbpref/error.hpp>
#include <wbpref/text_io.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace wbpref {

namespace {

using O = PreferenceMlp::Offsets;

inline double elu(double x) noexcept { return x > 0.0 ? x : PreferenceMlp::kEluAlpha * std::expm1(x); }

template <std::size_t N>
void check_finite(const std::array<double, N>& a, const char* layer) {
    for (double v : a)
        if (!std::isfinite(v)) throw NumericError(std::string("non-finite activation in ") + layer);
}

// out = W x + b, W row-major [out][in] inside the flat parameter array.
template <std::size_t In, std::size_t Out>
void affine(const PreferenceMlp::Params& p, std::size_t w_off, std::size_t b_off, const std::array<double, In>& x,
            std::array<double, Out>& out) noexcept {
    for (std::size_t o = 0; o < Out; ++o) {
        double s = p[b_off + o];
        const double* w = &p[w_off + o * In];
        for (std::size_t i = 0; i < In; ++i) s += w[i] * x[i];
        out[o] = s;
    }
}

}  // namespace

KernelFeatures polynomial_expand(const Vec3& l) {
    const double n = l2_norm(l);
    if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("polynomial kernel of a zero or non-finite vector");
    const double x = l[0] / n, y = l[1] / n, z = l[2] / n;
    return {x, y, z, x * y, x * z, y * z, x * x, y * y, z * z, x * y * z};
}

KernelFeatures polynomial_expand(const ColorVec& l) { return polynomial_expand(l.values()); }

PreferenceMlp::PreferenceMlp() {
    for (std::size_t i = 0; i < kH1; ++i) {
        params_[O::gamma + i] = 1.0;
        running_var_[i] = 1.0;
    }
}

PreferenceMlp::PreferenceMlp(std::span<const double> params, std::span<const double> running_mean,
                             std::span<const double> running_var) {
    if (params.size() != kParamCount)
        throw UsageError("preference network needs exactly 539 parameters, got " + std::to_string(params.size()));
    if (running_mean.size() != kH1 || running_var.size() != kH1)
        throw UsageError("batch-norm running statistics must have 16 entries");
    std::copy(params.begin(), params.end(), params_.begin());
    std::copy(running_mean.begin(), running_mean.end(), running_mean_.begin());
    std::copy(running_var.begin(), running_var.end(), running_var_.begin());
    for (double v : params_)
        if (!std::isfinite(v)) throw NumericError("non-finite network parameter");
    for (std::size_t i = 0; i < kH1; ++i)
        if (!std::isfinite(running_mean_[i]) || !(running_var_[i] > 0.0) || !std::isfinite(running_var_[i]))
            throw NumericError("invalid batch-norm running statistics");
}

double PreferenceMlp::weight(int layer, std::size_t row, std::size_t col) const {
    switch (layer) {
        case 1: return params_.at(O::w1 + row * kIn + col);
        case 2: return params_.at(O::w2 + row * kH1 + col);
        case 3: return params_.at(O::w3 + row * kH2 + col);
        case 4: return params_.at(O::w4 + row * kH3 + col);
        default: throw UsageError("layer index must be 1..4");
    }
}

ParameterCounts count_parameters(const PreferenceMlp&) {
    ParameterCounts c;
    c.layer1 = O::gamma - O::w1;
    c.bn1 = O::w2 - O::gamma;
    c.layer2 = O::w3 - O::w2;
    c.layer3 = O::w4 - O::w3;
    c.layer4 = O::end - O::w4;
    c.total = c.layer1 + c.bn1 + c.layer2 + c.layer3 + c.layer4;
    return c;
}

Vec3 mlp_forward_unnormalized(const PreferenceMlp& model, const KernelFeatures& f, const BatchNormStats* batch) {
    const auto& p = model.params();
    std::array<double, PreferenceMlp::kH1> h1{};
    affine(p, O::w1, O::b1, f, h1);
    const auto& mean = batch ? batch->mean : model.running_mean();
    const auto& var = batch ? batch->var : model.running_var();
    for (std::size_t i = 0; i < h1.size(); ++i) {
        const double xhat = (h1[i] - mean[i]) / std::sqrt(var[i] + PreferenceMlp::kBnEpsilon);
        h1[i] = elu(p[O::gamma + i] * xhat + p[O::beta + i]);
    }
    check_finite(h1, "layer 1");
    std::array<double, PreferenceMlp::kH2> h2{};
    affine(p, O::w2, O::b2, h1, h2);
    for (double& v : h2) v = elu(v);
    check_finite(h2, "layer 2");
    std::array<double, PreferenceMlp::kH3> h3{};
    affine(p, O::w3, O::b3, h2, h3);
    for (double& v : h3) v = elu(v);
    check_finite(h3, "layer 3");
    std::array<double, 3> out{};
    affine(p, O::w4, O::b4, h3, out);
    check_finite(out, "layer 4");
    return out;
}

namespace {

ColorVec normalize_output(const Vec3& out) {
    const double n = l2_norm(out);
    if (!(n > 0.0)) throw NumericError("network output has zero norm (output layer)");
    return normalize_l2(ColorVec(out[0] / n, out[1] / n, out[2] / n, ColorSpace::xyz()));
}

}  // namespace

ColorVec mlp_forward(const PreferenceMlp& model, const KernelFeatures& f) {
    return normalize_output(mlp_forward_unnormalized(model, f, nullptr));
}

ColorVec mlp_forward(const PreferenceMlp& model, const KernelFeatures& f, const BatchNormStats& batch) {
    return normalize_output(mlp_forward_unnormalized(model, f, &batch));
}

void validate(const LinearMapModel& m) {
    if (m.matrix.size() != 3 * m.cols())
        throw UsageError("linear map needs " + std::to_string(3 * m.cols()) + " entries, got " +
                         std::to_string(m.matrix.size()));
    for (double v : m.matrix)
        if (!std::isfinite(v)) throw NumericError("non-finite linear map entry");
}

namespace {

LinearMapModel fit_linear(std::span<const IlluminantPair> pairs, LinearKind kind) {
    const std::size_t k = kind == LinearKind::ThreeByThree ? 3 : 10;
    if (pairs.size() < k)
        throw ConfigError(std::string(kind == LinearKind::ThreeByThree ? "3x3" : "polynomial") + " fit needs at least " +
                          std::to_string(k) + " pairs, got " + std::to_string(pairs.size()));
    const auto n = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd a(n, static_cast<Eigen::Index>(k));
    Eigen::MatrixXd b(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& [src, dst] = pairs[static_cast<std::size_t>(i)];
        if (kind == LinearKind::ThreeByThree) {
            const double ns = l2_norm(src);
            if (!(ns > 0.0)) throw DomainError("fit input has zero norm");
            for (std::size_t j = 0; j < 3; ++j) a(i, static_cast<Eigen::Index>(j)) = src[j] / ns;
        } else {
            const auto f = polynomial_expand(src);
            for (std::size_t j = 0; j < 10; ++j) a(i, static_cast<Eigen::Index>(j)) = f[j];
        }
        const double nd = l2_norm(dst);
        if (!(nd > 0.0)) throw DomainError("fit target has zero norm");
        for (int j = 0; j < 3; ++j) b(i, j) = dst[static_cast<std::size_t>(j)] / nd;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(k))
        throw FitError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                       std::to_string(k) + ")");

    // Normal equations when well conditioned, QR otherwise.
    const Eigen::MatrixXd normal = a.transpose() * a;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    Eigen::MatrixXd x;
    if (ldlt.info() == Eigen::Success && ldlt.rcond() > 1e-12)
        x = ldlt.solve(a.transpose() * b);
    else
        x = qr.solve(b);

    LinearMapModel m;
    m.kind = kind;
    m.matrix.resize(3 * k);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < k; ++c)
            m.matrix[r * k + c] = x(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
    validate(m);
    return m;
}

}  // namespace

LinearMapModel fit_3x3(std::span<const IlluminantPair> pairs) { return fit_linear(pairs, LinearKind::ThreeByThree); }

LinearMapModel fit_polynomial(std::span<const IlluminantPair> pairs) {
    return fit_linear(pairs, LinearKind::Polynomial);
}

Vec3 apply_linear_unnormalized(const LinearMapModel& model, const Vec3& l) {
    Vec3 out{0.0, 0.0, 0.0};
    if (model.kind == LinearKind::ThreeByThree) {
        const double n = l2_norm(l);
        if (!(n > 0.0)) throw DomainError("linear map of a zero vector");
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) out[r] += model.matrix[r * 3 + c] * (l[c] / n);
    } else {
        const auto f = polynomial_expand(l);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 10; ++c) out[r] += model.matrix[r * 10 + c] * f[c];
    }
    return out;
}

ColorVec apply_linear(const LinearMapModel& model, const ColorVec& l_xyz) {
    if (!l_xyz.space().is_xyz()) throw UsageError("apply_linear expects a CIE XYZ vector");
    return normalize_l2(ColorVec(apply_linear_unnormalized(model, l_xyz.values()), ColorSpace::xyz()));
}

std::string to_string(TrainingSpace s) { return s == TrainingSpace::Xyz ? "xyz" : "raw"; }

std::string MappingModel::kind_name() const {
    if (std::holds_alternative<PreferenceMlp>(g)) return "mlp";
    return std::get<LinearMapModel>(g).kind == LinearKind::ThreeByThree ? "three-by-three" : "polynomial";
}

namespace {

Vec3 unit(const Vec3& v) {
    const double n = l2_norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("mapping produced a zero or non-finite vector");
    return {v[0] / n, v[1] / n, v[2] / n};
}

MappedIlluminant finish_raw(const Vec3& raw_out, const ColorSpace& raw_space, CstResolution res) {
    MappedIlluminant m;
    m.direction = unit(raw_out);
    m.resolution = std::move(res);
    m.clamped = m.direction[0] < 0.0 || m.direction[1] < 0.0 || m.direction[2] < 0.0;
    if (m.direction[0] > 0.0 || m.direction[1] > 0.0 || m.direction[2] > 0.0)
        m.raw = normalize_l2(ColorVec(m.direction, raw_space));
    return m;
}

MappedIlluminant finish_xyz(const Vec3& xyz_out, const ColorSpace& raw_space, CstResolution res) {
    const Vec3 back = inverse(res.cst_raw_to_xyz, "CST") * unit(xyz_out);
    return finish_raw(back, raw_space, std::move(res));
}

}  // namespace

MappedIlluminant map_illuminant(const PreferenceMlp& model, const CameraProfile& profile, const ColorVec& l_raw,
                                const ResolveOptions& opts) {
    CstResolution res = resolve_cst(profile, l_raw, opts);
    const ColorVec l_xyz = raw_to_xyz(l_raw, res.cst_raw_to_xyz);
    const Vec3 out = mlp_forward_unnormalized(model, polynomial_expand(l_xyz), nullptr);
    return finish_xyz(out, l_raw.space(), std::move(res));
}

MappedIlluminant apply_mapping(const MappingModel& model, const CameraProfile& profile, const ColorVec& l_raw) {
    if (!(l_raw.space() == profile.raw_space()))
        throw UsageError("apply_mapping: illuminant in " + l_raw.space().describe() + " but profile is " +
                         profile.raw_space().describe());
    auto g_of = [&](const Vec3& v) -> Vec3 {
        if (const auto* mlp = std::get_if<PreferenceMlp>(&model.g)) return mlp_forward_unnormalized(*mlp, polynomial_expand(v), nullptr);
        return apply_linear_unnormalized(std::get<LinearMapModel>(model.g), v);
    };

    if (model.space == TrainingSpace::Raw) return finish_raw(g_of(l_raw.values()), l_raw.space(), CstResolution{});

    ResolveOptions opts;
    opts.mode = model.cst_mode;
    CstResolution res = resolve_cst(profile, l_raw, opts);
    const ColorVec l_xyz = raw_to_xyz(l_raw, res.cst_raw_to_xyz);
    return finish_xyz(g_of(l_xyz.values()), l_raw.space(), std::move(res));
}

// ---------------------------------------------------------------------------
// Model documents

namespace {

constexpr int kModelFormatVersion = 1;

void put_field(std::string& out, const std::string& name, std::size_t rows, std::size_t cols,
               std::span<const double> values) {
    out += name + " " + std::to_string(rows) + " " + std::to_string(cols);
    for (double v : values) out += " " + text::format_real(v);
    out += "\n";
}

struct Field {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::size_t offset = 0;
};

struct ModelDoc {
    std::map<std::string, std::string> scalars;
    std::map<std::string, Field> arrays;
    std::size_t end_offset = 0;
};

const std::map<std::string, std::pair<std::size_t, std::size_t>>& mlp_shapes() {
    using M = PreferenceMlp;
    static const std::map<std::string, std::pair<std::size_t, std::size_t>> s = {
        {"layer1.weight", {M::kH1, M::kIn}}, {"layer1.bias", {M::kH1, 1}},
        {"bn1.gamma", {M::kH1, 1}},          {"bn1.beta", {M::kH1, 1}},
        {"bn1.running_mean", {M::kH1, 1}},   {"bn1.running_var", {M::kH1, 1}},
        {"bn1.epsilon", {1, 1}},             {"layer2.weight", {M::kH2, M::kH1}},
        {"layer2.bias", {M::kH2, 1}},        {"layer3.weight", {M::kH3, M::kH2}},
        {"layer3.bias", {M::kH3, 1}},        {"layer4.weight", {M::kOut, M::kH3}},
        {"layer4.bias", {M::kOut, 1}},
    };
    return s;
}

// Order of the flat parameter array.
const std::vector<std::pair<std::string, std::size_t>>& mlp_param_fields() {
    static const std::vector<std::pair<std::string, std::size_t>> f = {
        {"layer1.weight", O::w1}, {"layer1.bias", O::b1}, {"bn1.gamma", O::gamma}, {"bn1.beta", O::beta},
        {"layer2.weight", O::w2}, {"layer2.bias", O::b2}, {"layer3.weight", O::w3}, {"layer3.bias", O::b3},
        {"layer4.weight", O::w4}, {"layer4.bias", O::b4},
    };
    return f;
}

ModelDoc tokenize_model(std::string_view doc) {
    text::LineReader reader(doc);
    text::Line line;
    ModelDoc out;
    bool saw_header = false;
    bool saw_end = false;
    while (reader.next(line)) {
        const auto t = text::trim(line.text);
        if (t.empty() || t.front() == '#') continue;
        const auto f = text::split_ws(t);
        if (!saw_header) {
            if (f.size() != 2 || f[0] != "wbpref-model")
                throw ParseError("not a model document (field 'header')", line.number, line.offset);
            const auto v = text::parse_int(f[1]);
            if (!v || *v != kModelFormatVersion)
                throw ParseError("unsupported model format version '" + std::string(f[1]) + "' (field 'version')",
                                 line.number, line.offset);
            saw_header = true;
            continue;
        }
        if (f[0] == "end") {
            saw_end = true;
            out.end_offset = line.offset;
            break;
        }
        const std::string key(f[0]);
        if (key == "kind" || key == "training_space" || key == "front_end" || key == "cst_mode") {
            if (f.size() != 2) throw ParseError("field '" + key + "' needs one value", line.number, line.offset);
            out.scalars[key] = std::string(f[1]);
            continue;
        }
        if (f.size() < 3) throw ParseError("field '" + key + "' is truncated", line.number, line.offset);
        Field fld;
        fld.offset = line.offset;
        const auto r = text::parse_int(f[1]), c = text::parse_int(f[2]);
        if (!r || !c || *r < 1 || *c < 1)
            throw ParseError("field '" + key + "' has an invalid shape", line.number, line.offset);
        fld.rows = static_cast<std::size_t>(*r);
        fld.cols = static_cast<std::size_t>(*c);
        if (f.size() - 3 != fld.rows * fld.cols)
            throw ParseError("field '" + key + "' has " + std::to_string(f.size() - 3) + " values, expected " +
                                 std::to_string(fld.rows * fld.cols),
                             line.number, line.offset);
        for (std::size_t i = 3; i < f.size(); ++i) {
            const auto v = text::parse_real(f[i]);
            if (!v)
                throw ParseError("field '" + key + "' value " + std::to_string(i - 3) + " is not a finite number",
                                 line.number, line.offset);
            fld.values.push_back(*v);
        }
        if (!out.arrays.emplace(key, std::move(fld)).second)
            throw ParseError("duplicate field '" + key + "'", line.number, line.offset);
    }
    if (!saw_header) throw ParseError("empty model document", std::nullopt, doc.size());
    if (!saw_end) throw ParseError("truncated model document (missing 'end')", std::nullopt, doc.size());
    return out;
}

const Field& need(const ModelDoc& d, const std::string& key, std::size_t rows, std::size_t cols) {
    const auto it = d.arrays.find(key);
    if (it == d.arrays.end()) throw ParseError("missing field '" + key + "'", std::nullopt, d.end_offset);
    if (it->second.rows != rows || it->second.cols != cols)
        throw ParseError("field '" + key + "' has shape " + std::to_string(it->second.rows) + "x" +
                             std::to_string(it->second.cols) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(cols),
                         std::nullopt, it->second.offset);
    return it->second;
}

const std::string& need_scalar(const ModelDoc& d, const std::string& key) {
    const auto it = d.scalars.find(key);
    if (it == d.scalars.end()) throw ParseError("missing field '" + key + "'", std::nullopt, d.end_offset);
    return it->second;
}

}  // namespace

std::string serialize_model(const MappingModel& model) {
    if (model.front_end.empty() || model.front_end.find_first_of(" \t\n") != std::string::npos)
        throw UsageError("front-end name must be a single non-empty token");
    std::string out = "wbpref-model " + std::to_string(kModelFormatVersion) + "\n";
    out += "kind " + model.kind_name() + "\n";
    out += "training_space " + to_string(model.space) + "\n";
    out += "front_end " + model.front_end + "\n";
    out += "cst_mode " + to_string(model.cst_mode) + "\n";
    if (const auto* mlp = std::get_if<PreferenceMlp>(&model.g)) {
        const auto& shapes = mlp_shapes();
        for (const auto& [name, off] : mlp_param_fields()) {
            const auto [r, c] = shapes.at(name);
            put_field(out, name, r, c, std::span<const double>(mlp->params()).subspan(off, r * c));
            if (name == "bn1.beta") {
                put_field(out, "bn1.running_mean", PreferenceMlp::kH1, 1, mlp->running_mean());
                put_field(out, "bn1.running_var", PreferenceMlp::kH1, 1, mlp->running_var());
                const double eps = PreferenceMlp::kBnEpsilon;
                put_field(out, "bn1.epsilon", 1, 1, std::span<const double>(&eps, 1));
            }
        }
    } else {
        const auto& lin = std::get<LinearMapModel>(model.g);
        validate(lin);
        put_field(out, "matrix", 3, lin.cols(), lin.matrix);
    }
    out += "end\n";
    return out;
}

MappingModel parse_model(std::string_view doc) {
    const ModelDoc d = tokenize_model(doc);
    MappingModel m;
    const std::string& kind = need_scalar(d, "kind");
    const std::string& space = need_scalar(d, "training_space");
    if (space == "xyz")
        m.space = TrainingSpace::Xyz;
    else if (space == "raw")
        m.space = TrainingSpace::Raw;
    else
        throw ParseError("field 'training_space' must be xyz or raw, got '" + space + "'");
    m.front_end = need_scalar(d, "front_end");
    if (const auto it = d.scalars.find("cst_mode"); it != d.scalars.end()) {
        const auto mode = parse_cst_mode(it->second);
        if (!mode) throw ParseError("field 'cst_mode' has unknown value '" + it->second + "'");
        m.cst_mode = *mode;
    }

    if (kind == "mlp") {
        std::vector<double> params(PreferenceMlp::kParamCount);
        const auto& shapes = mlp_shapes();
        for (const auto& [name, off] : mlp_param_fields()) {
            const auto [r, c] = shapes.at(name);
            const Field& f = need(d, name, r, c);
            std::copy(f.values.begin(), f.values.end(), params.begin() + static_cast<std::ptrdiff_t>(off));
        }
        const Field& rm = need(d, "bn1.running_mean", PreferenceMlp::kH1, 1);
        const Field& rv = need(d, "bn1.running_var", PreferenceMlp::kH1, 1);
        const Field& eps = need(d, "bn1.epsilon", 1, 1);
        if (eps.values[0] != PreferenceMlp::kBnEpsilon)
            throw ParseError("field 'bn1.epsilon' must be 1e-05", std::nullopt, eps.offset);
        try {
            m.g = PreferenceMlp(params, rm.values, rv.values);
        } catch (const NumericError& e) {
            throw ParseError(std::string("field 'bn1.running_var': ") + e.what(), std::nullopt, rv.offset);
        }
    } else if (kind == "three-by-three" || kind == "polynomial") {
        LinearMapModel lin;
        lin.kind = kind == "polynomial" ? LinearKind::Polynomial : LinearKind::ThreeByThree;
        lin.matrix = need(d, "matrix", 3, lin.cols()).values;
        m.g = std::move(lin);
    } else {
        throw ParseError("field 'kind' has unknown value '" + kind + "'");
    }
    return m;
}

void save_model(const MappingModel& model, const std::filesystem::path& path) {
    text::write_file_atomic(path, serialize_model(model));
}

MappingModel load_model(const std::filesystem::path& path) { return parse_model(text::read_file(path)); }

}  // namespace wbpref
