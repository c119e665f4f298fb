// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/estimators.hpp>

#include <wbpref/error.hpp>
#include <wbpref/text_io.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

namespace wbpref {

namespace {

// Reads the whitespace/comment separated ASCII header fields of PPM and PFM.
class HeaderScanner {
public:
    explicit HeaderScanner(std::span<const std::uint8_t> b) : b_(b) {}

    std::string token(bool allow_comments) {
        skip_space(allow_comments);
        std::string out;
        while (pos_ < b_.size() && !std::isspace(b_[pos_])) out.push_back(static_cast<char>(b_[pos_++]));
        if (out.empty()) throw ParseError("image header ended early", std::nullopt, pos_);
        return out;
    }

    /// Consumes exactly one whitespace byte (the separator before raster data).
    void single_space() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_]))
            throw ParseError("image header not terminated by whitespace", std::nullopt, pos_);
        ++pos_;
    }

    std::size_t pos() const noexcept { return pos_; }

private:
    void skip_space(bool allow_comments) {
        for (;;) {
            while (pos_ < b_.size() && std::isspace(b_[pos_])) ++pos_;
            if (allow_comments && pos_ < b_.size() && b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
                continue;
            }
            return;
        }
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

int parse_dim(const std::string& tok, const char* what, std::size_t offset) {
    const auto v = text::parse_int(tok);
    if (!v || *v < 1 || *v > (1 << 20))
        throw ParseError(std::string("invalid image ") + what + " '" + tok + "'", std::nullopt, offset);
    return static_cast<int>(*v);
}

void require_payload(std::size_t have, std::size_t need) {
    if (have < need)
        throw IoError("truncated image payload: expected " + std::to_string(need) + " bytes, got " +
                      std::to_string(have));
}

RawImage decode_ppm(std::span<const std::uint8_t> b) {
    HeaderScanner h(b);
    (void)h.token(true);  // "P6"
    const int w = parse_dim(h.token(true), "width", h.pos());
    const int ht = parse_dim(h.token(true), "height", h.pos());
    const auto maxval_tok = h.token(true);
    const auto maxval = text::parse_int(maxval_tok);
    if (!maxval || (*maxval != 255 && *maxval != 65535))
        throw ParseError("unsupported PPM maxval '" + maxval_tok + "' (expected 255 or 65535)", std::nullopt, h.pos());
    h.single_space();

    RawImage img;
    img.width = w;
    img.height = ht;
    const std::size_t n = 3 * img.pixel_count();
    const std::size_t bps = *maxval == 255 ? 1 : 2;
    require_payload(b.size() - h.pos(), n * bps);
    img.pixels.resize(n);
    const auto* p = b.data() + h.pos();
    const double scale = static_cast<double>(*maxval);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned code = bps == 1 ? p[i] : static_cast<unsigned>((p[2 * i] << 8) | p[2 * i + 1]);
        img.pixels[i] = static_cast<double>(code) / scale;
    }
    validate(img);
    return img;
}

RawImage decode_pfm(std::span<const std::uint8_t> b) {
    HeaderScanner h(b);
    (void)h.token(false);  // "PF"
    const int w = parse_dim(h.token(false), "width", h.pos());
    const int ht = parse_dim(h.token(false), "height", h.pos());
    const auto scale_tok = h.token(false);
    const auto scale = text::parse_real(scale_tok);
    if (!scale || *scale == 0.0) throw ParseError("invalid PFM scale '" + scale_tok + "'", std::nullopt, h.pos());
    h.single_space();

    const bool little = *scale < 0.0;
    RawImage img;
    img.width = w;
    img.height = ht;
    const std::size_t n = 3 * img.pixel_count();
    require_payload(b.size() - h.pos(), n * 4);
    img.pixels.resize(n);
    const auto* p = b.data() + h.pos();
    const double mag = std::abs(*scale);
    const std::size_t row = 3 * static_cast<std::size_t>(w);
    for (int y = 0; y < ht; ++y) {
        // PFM rows run bottom to top.
        const std::size_t src_row = static_cast<std::size_t>(ht - 1 - y);
        for (std::size_t i = 0; i < row; ++i) {
            const auto* q = p + 4 * (src_row * row + i);
            std::uint32_t bits = little ? (std::uint32_t(q[0]) | std::uint32_t(q[1]) << 8 | std::uint32_t(q[2]) << 16 |
                                           std::uint32_t(q[3]) << 24)
                                        : (std::uint32_t(q[3]) | std::uint32_t(q[2]) << 8 | std::uint32_t(q[1]) << 16 |
                                           std::uint32_t(q[0]) << 24);
            img.pixels[static_cast<std::size_t>(y) * row + i] = static_cast<double>(std::bit_cast<float>(bits)) / mag;
        }
    }
    validate(img);
    return img;
}

std::vector<std::size_t> masked_indices(const RawImage& img, const EstimatorConfig& cfg) {
    std::vector<std::size_t> idx;
    idx.reserve(img.pixel_count());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        bool ok = true;
        if (cfg.masking) {
            for (int c = 0; c < 3; ++c) {
                const double v = img.pixels[3 * i + static_cast<std::size_t>(c)];
                if (!(v > cfg.dark_threshold && v < cfg.saturation_threshold)) ok = false;
            }
        }
        if (ok) idx.push_back(i);
    }
    return idx;
}

std::vector<bool> mask_bits(const RawImage& img, const EstimatorConfig& cfg) {
    std::vector<bool> keep(img.pixel_count(), false);
    for (std::size_t i : masked_indices(img, cfg)) keep[i] = true;
    return keep;
}

ColorVec finish(const Vec3& v, const RawImage& img, const char* what) {
    if (!(l2_norm(v) > 0.0)) throw DomainError(std::string(what) + ": estimate is the zero vector");
    return normalize_l2(ColorVec(v, ColorSpace::raw(img.sensor)));
}

// One channel plane, row-major.
using Plane = std::vector<double>;

Plane channel(const RawImage& img, int c) {
    Plane out(img.pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.pixels[3 * i + static_cast<std::size_t>(c)];
    return out;
}

Plane smooth(const Plane& in, int w, int h, double sigma) {
    if (sigma == 0.0) return in;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    Plane tmp(in.size()), out(in.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -r; t <= r; ++t)
                s += k[static_cast<std::size_t>(t + r)] * in[static_cast<std::size_t>(y * w + reflect_index(x + t, w))];
            tmp[static_cast<std::size_t>(y * w + x)] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -r; t <= r; ++t)
                s += k[static_cast<std::size_t>(t + r)] * tmp[static_cast<std::size_t>(reflect_index(y + t, h) * w + x)];
            out[static_cast<std::size_t>(y * w + x)] = s;
        }
    return out;
}

Plane derivative_magnitude(const Plane& f, int w, int h, int order) {
    auto at = [&](int x, int y) {
        return f[static_cast<std::size_t>(reflect_index(y, h) * w + reflect_index(x, w))];
    };
    Plane out(f.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m;
            if (order == 1) {
                const double dx = 0.5 * (at(x + 1, y) - at(x - 1, y));
                const double dy = 0.5 * (at(x, y + 1) - at(x, y - 1));
                m = std::sqrt(dx * dx + dy * dy);
            } else {
                const double dxx = at(x + 1, y) - 2.0 * at(x, y) + at(x - 1, y);
                const double dyy = at(x, y + 1) - 2.0 * at(x, y) + at(x, y - 1);
                const double dxy =
                    0.25 * (at(x + 1, y + 1) - at(x + 1, y - 1) - at(x - 1, y + 1) + at(x - 1, y - 1));
                m = std::sqrt(dxx * dxx + dyy * dyy + 2.0 * dxy * dxy);
            }
            out[static_cast<std::size_t>(y * w + x)] = m;
        }
    return out;
}

}  // namespace

void validate(const RawImage& img) {
    if (img.width < 1 || img.height < 1) throw ParseError("image must have at least one pixel");
    if (img.pixels.size() != 3 * img.pixel_count()) throw ParseError("image pixel buffer has the wrong size");
    for (double v : img.pixels)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw ParseError("image value outside [0, 1]");
}

RawImage decode_raw_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
    if (bytes.size() >= 3 && bytes[0] == 'P' && bytes[1] == 'F' && std::isspace(bytes[2])) return decode_pfm(bytes);
    throw ParseError("unknown image format (expected binary PPM 'P6' or PFM 'PF')", std::nullopt, 0);
}

RawImage load_raw_image(const std::filesystem::path& path) {
    const auto bytes = text::read_binary_file(path);
    RawImage img = decode_raw_image(bytes);
    img.sensor = "camera";
    return img;
}

std::vector<std::uint8_t> encode_pfm(const RawImage& img) {
    validate(img);
    const std::string header =
        "PF\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t row = 3 * static_cast<std::size_t>(img.width);
    for (int y = img.height - 1; y >= 0; --y)
        for (std::size_t i = 0; i < row; ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(
                static_cast<float>(img.pixels[static_cast<std::size_t>(y) * row + i]));
            for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
        }
    return out;
}

std::vector<std::uint8_t> encode_ppm(const RawImage& img, int maxval) {
    validate(img);
    if (maxval != 255 && maxval != 65535) throw UsageError("PPM maxval must be 255 or 65535");
    const std::string header =
        "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (double v : img.pixels) {
        const auto code = static_cast<unsigned>(std::lround(v * maxval));
        if (maxval == 255) {
            out.push_back(static_cast<std::uint8_t>(code));
        } else {
            out.push_back(static_cast<std::uint8_t>(code >> 8));
            out.push_back(static_cast<std::uint8_t>(code & 0xFF));
        }
    }
    return out;
}

void save_raw_image(const RawImage& img, const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    const auto bytes = ext == ".pfm" ? encode_pfm(img) : encode_ppm(img, 65535);
    text::write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void validate(const EstimatorConfig& cfg) {
    if (!(cfg.saturation_threshold > 0.0 && cfg.saturation_threshold <= 1.0))
        throw ConfigError("saturation threshold must lie in (0, 1]");
    if (!(cfg.dark_threshold >= 0.0 && cfg.dark_threshold < 1.0))
        throw ConfigError("dark threshold must lie in [0, 1)");
    if (!(cfg.dark_threshold < cfg.saturation_threshold))
        throw ConfigError("dark threshold must be below the saturation threshold");
    if (const auto* m = std::get_if<Minkowski>(&cfg.method); m && !(m->p >= 1.0))
        throw ConfigError("Minkowski norm p must be >= 1");
    if (const auto* g = std::get_if<GrayEdge>(&cfg.method)) {
        if (g->order != 1 && g->order != 2) throw ConfigError("gray-edge order must be 1 or 2");
        if (!(g->p >= 1.0)) throw ConfigError("gray-edge norm p must be >= 1");
        if (!(g->sigma >= 0.0) || !std::isfinite(g->sigma)) throw ConfigError("gray-edge sigma must be >= 0");
    }
}

std::string describe(const EstimatorConfig& cfg) {
    std::ostringstream os;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GrayWorld>)
                os << "method=gray-world";
            else if constexpr (std::is_same_v<T, Minkowski>)
                os << "method=minkowski p=" << text::format_real(m.p);
            else
                os << "method=gray-edge order=" << m.order << " p=" << text::format_real(m.p)
                   << " sigma=" << text::format_real(m.sigma);
        },
        cfg.method);
    if (cfg.masking)
        os << " saturation=" << text::format_real(cfg.saturation_threshold)
           << " dark=" << text::format_real(cfg.dark_threshold);
    else
        os << " masking=off";
    return os.str();
}

ColorVec gray_world(const RawImage& img, const EstimatorConfig& cfg) {
    return minkowski_estimate(img, 1.0, cfg);
}

ColorVec minkowski_estimate(const RawImage& img, double p, const EstimatorConfig& cfg) {
    if (!(p >= 1.0)) throw ConfigError("Minkowski norm p must be >= 1");
    const auto idx = masked_indices(img, cfg);
    if (idx.empty()) throw DomainError("no valid pixels after saturation/dark masking");
    Vec3 acc{0.0, 0.0, 0.0};
    const bool inf = std::isinf(p);
    for (std::size_t i : idx)
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = img.pixels[3 * i + c];
            if (inf)
                acc[c] = std::max(acc[c], v);
            else
                acc[c] += p == 1.0 ? v : std::pow(v, p);
        }
    if (!inf) {
        const double n = static_cast<double>(idx.size());
        for (double& a : acc) a = p == 1.0 ? a / n : std::pow(a / n, 1.0 / p);
    }
    return finish(acc, img, "Minkowski estimate");
}

int reflect_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int t = -r; t <= r; ++t) {
        const double v = std::exp(-0.5 * (t * t) / (sigma * sigma));
        k[static_cast<std::size_t>(t + r)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

ColorVec gray_edge(const RawImage& img, int n, double p, double sigma,
                   std::optional<std::span<const double>> weight_map, const EstimatorConfig& cfg) {
    if (n != 1 && n != 2) throw ConfigError("gray-edge order must be 1 or 2");
    if (!(p >= 1.0)) throw ConfigError("gray-edge norm p must be >= 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("gray-edge sigma must be >= 0");
    if (std::min(img.width, img.height) < 2 * n + 1)
        throw ConfigError("image of " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                          " is smaller than the order-" + std::to_string(n) + " derivative stencil");
    if (weight_map) {
        if (weight_map->size() != img.pixel_count()) throw UsageError("weight map does not match image dimensions");
        for (double w : *weight_map)
            if (!std::isfinite(w) || w < 0.0) throw UsageError("weight map entries must be finite and nonnegative");
    }

    const auto keep = mask_bits(img, cfg);
    const bool inf = std::isinf(p);
    Vec3 acc{0.0, 0.0, 0.0};
    double wsum = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Plane e = derivative_magnitude(smooth(channel(img, c), img.width, img.height, sigma), img.width,
                                             img.height, n);
        double s = 0.0;
        double wtot = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (!keep[i]) continue;
            const double w = weight_map ? (*weight_map)[i] : 1.0;
            if (w == 0.0) continue;
            if (inf)
                s = std::max(s, e[i]);
            else
                s += w * std::pow(e[i], p);
            wtot += w;
        }
        acc[static_cast<std::size_t>(c)] = s;
        wsum = wtot;
    }
    if (wsum == 0.0) throw DomainError("no valid pixels after saturation/dark masking");
    if (!inf)
        for (double& a : acc) a = std::pow(a / wsum, 1.0 / p);
    if (!(l2_norm(acc) > 0.0)) throw DomainError("degenerate image: all derivatives are zero");
    return finish(acc, img, "gray-edge estimate");
}

ColorVec estimate(const RawImage& img, const EstimatorConfig& cfg) {
    validate(cfg);
    return std::visit(
        [&](const auto& m) -> ColorVec {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GrayWorld>)
                return gray_world(img, cfg);
            else if constexpr (std::is_same_v<T, Minkowski>)
                return minkowski_estimate(img, m.p, cfg);
            else
                return gray_edge(img, m.order, m.p, m.sigma, std::nullopt, cfg);
        },
        cfg.method);
}

Predictions parse_predictions(std::string_view doc) {
    Predictions out;
    text::LineReader reader(doc);
    text::Line line;
    while (reader.next(line)) {
        const auto t = text::trim(line.text);
        if (t.empty() || t.front() == '#') continue;
        const auto f = text::split_ws(t);
        if (f.size() != 4) throw ParseError("prediction line needs '<id> <r> <g> <b>'", line.number);
        Vec3 v{};
        for (std::size_t i = 0; i < 3; ++i) {
            const auto x = text::parse_real(f[i + 1]);
            if (!x) throw ParseError("invalid number '" + std::string(f[i + 1]) + "'", line.number);
            v[i] = *x;
        }
        if (v[0] < 0.0 || v[1] < 0.0 || v[2] < 0.0 || !(l2_norm(v) > 0.0))
            throw ParseError("prediction for '" + std::string(f[0]) + "' is not a positive vector", line.number);
        if (!out.emplace(std::string(f[0]), v).second)
            throw ParseError("duplicate prediction id '" + std::string(f[0]) + "'", line.number);
    }
    return out;
}

Predictions load_external_predictions(const std::filesystem::path& path) {
    return parse_predictions(text::read_file(path));
}

std::string format_predictions(const Predictions& preds, std::string_view header_comment) {
    std::string out;
    if (!header_comment.empty()) {
        text::LineReader r(header_comment);
        text::Line l;
        while (r.next(l)) out += "# " + std::string(l.text) + "\n";
    }
    for (const auto& [id, v] : preds)
        out += id + " " + text::format_real(v[0]) + " " + text::format_real(v[1]) + " " + text::format_real(v[2]) + "\n";
    return out;
}

void save_predictions(const Predictions& preds, const std::filesystem::path& path, std::string_view header_comment) {
    text::write_file_atomic(path, format_predictions(preds, header_comment));
}

}  // namespace wbpref
