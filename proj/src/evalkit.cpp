// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include <wbpref/evalkit.hpp>

#include <wbpref/error.hpp>
#include <wbpref/text_io.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace wbpref {

double quantile_sorted(std::span<const double> x, double q) {
    if (x.empty()) throw DomainError("quantile of an empty list");
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= x.size()) return x.back();
    const double frac = pos - static_cast<double>(lo);
    return x[lo] + frac * (x[lo + 1] - x[lo]);
}

namespace {

// Mean of x[begin, end) anchored at x[0] so a constant list averages exactly.
double anchored_mean(std::span<const double> x, std::size_t begin, std::size_t end) {
    const double anchor = x.front();
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += x[i] - anchor;
    return anchor + s / static_cast<double>(end - begin);
}

}  // namespace

double tail_mean(std::span<const double> x, double q, bool worst) {
    if (x.empty()) throw DomainError("tail mean of an empty list");
    const auto n = x.size();
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(q * static_cast<double>(n))), 1, n);
    return worst ? anchored_mean(x, n - k, n) : anchored_mean(x, 0, k);
}

ErrorStats compute_stats(std::span<const double> errors) {
    if (errors.empty()) throw DomainError("statistics of an empty error list");
    std::vector<double> x(errors.begin(), errors.end());
    for (double v : x)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("angular errors must be finite and >= 0");
    std::sort(x.begin(), x.end());
    ErrorStats s;
    s.n = x.size();
    s.mean = anchored_mean(x, 0, x.size());
    s.median = quantile_sorted(x, 0.5);
    const double q1 = quantile_sorted(x, 0.25), q3 = quantile_sorted(x, 0.75);
    s.trimean = s.median + ((q1 - s.median) + (q3 - s.median)) / 4.0;
    s.best25_mean = tail_mean(x, 0.25, false);
    s.worst25_mean = tail_mean(x, 0.25, true);
    s.worst5_mean = tail_mean(x, 0.05, true);
    s.max = x.back();
    return s;
}

std::string to_string(MappingKind k) {
    switch (k) {
        case MappingKind::None: return "none";
        case MappingKind::ThreeByThree: return "three-by-three";
        case MappingKind::Polynomial: return "polynomial";
        case MappingKind::Mlp: return "mlp";
    }
    return "none";
}

std::vector<double> evaluate_errors(const std::optional<MappingModel>& model, std::span<const DatasetRecord> records,
                                    const std::string& front_end, const std::map<std::string, CameraProfile>& profiles) {
    std::vector<double> errors;
    errors.reserve(records.size());
    for (const auto& r : records) {
        try {
            const auto it = r.neutral_estimates.find(front_end);
            if (it == r.neutral_estimates.end()) throw ParseError("no estimate for front end '" + front_end + "'");
            if (!model) {
                errors.push_back(angular_error_degrees(it->second, r.gt_preferred_raw));
                continue;
            }
            const auto p = profiles.find(r.camera);
            if (p == profiles.end()) throw ParseError("no profile for camera '" + r.camera + "'");
            const MappedIlluminant m = apply_mapping(*model, p->second, it->second);
            errors.push_back(angle_degrees(m.direction, r.gt_preferred_raw.values()));
        } catch (const Error& e) {
            rethrow_with_context(e, "record '" + r.id + "'");
        }
    }
    return errors;
}

ErrorStats evaluate(const std::optional<MappingModel>& model, std::span<const DatasetRecord> records,
                    const std::string& front_end, const std::map<std::string, CameraProfile>& profiles) {
    return compute_stats(evaluate_errors(model, records, front_end, profiles));
}

void ReportTable::normalize() {
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.front_end, a.mapping) < std::tie(b.front_end, b.mapping);
    });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].front_end == rows[i - 1].front_end && rows[i].mapping == rows[i - 1].mapping)
            throw UsageError("duplicate report row (" + rows[i].front_end + ", " + rows[i].mapping + ")");
}

namespace {

std::string pad(const std::string& s, std::size_t w, bool right) {
    if (s.size() >= w) return s;
    const std::string fill(w - s.size(), ' ');
    return right ? fill + s : s + fill;
}

std::vector<double> stat_values(const ErrorStats& s) {
    return {s.mean, s.median, s.best25_mean, s.worst25_mean, s.worst5_mean, s.trimean, s.max};
}

}  // namespace

std::string render_report(std::span<const ReportTable> tables) {
    static const std::vector<std::string> heads = {"Mean", "Med.", "Best 25%", "Worst 25%", "Worst 5%", "Tri.", "Max"};
    std::string out;
    for (const auto& t : tables) {
        if (!out.empty()) out += "\n";
        out += "== " + t.title + " ==\n";
        for (const auto& [k, v] : t.metadata) out += "# " + k + ": " + v + "\n";
        std::size_t wf = 9, wm = 7;
        for (const auto& r : t.rows) {
            wf = std::max(wf, r.front_end.size());
            wm = std::max(wm, r.mapping.size());
        }
        std::string line = pad("Front end", wf, false) + "  " + pad("Mapping", wm, false) + "  " + pad("N", 5, true);
        for (const auto& h : heads) line += "  " + pad(h, 9, true);
        out += line + "\n" + std::string(line.size(), '-') + "\n";
        for (const auto& r : t.rows) {
            std::string l = pad(r.front_end, wf, false) + "  " + pad(r.mapping, wm, false) + "  " +
                            pad(std::to_string(r.stats.n), 5, true);
            for (double v : stat_values(r.stats)) l += "  " + pad(text::format_fixed(v, 2), 9, true);
            out += l + "\n";
        }
    }
    return out;
}

std::string render_csv(std::span<const ReportTable> tables) {
    std::string out = "front_end,mapping,n,mean,median,trimean,best25,worst25,worst5,max\n";
    for (const auto& t : tables) {
        out += "# table: " + t.title + "\n";
        for (const auto& r : t.rows) {
            const auto& s = r.stats;
            out += r.front_end + "," + r.mapping + "," + std::to_string(s.n);
            for (double v : {s.mean, s.median, s.trimean, s.best25_mean, s.worst25_mean, s.worst5_mean, s.max})
                out += "," + text::format_real(v);
            out += "\n";
        }
    }
    return out;
}

std::vector<CsvRow> parse_csv(std::string_view doc) {
    std::vector<CsvRow> out;
    text::LineReader reader(doc);
    text::Line line;
    std::string table;
    bool header = false;
    while (reader.next(line)) {
        if (line.text.empty()) continue;
        if (line.text.substr(0, 9) == "# table: ") {
            table = std::string(line.text.substr(9));
            continue;
        }
        if (!header) {
            if (line.text != "front_end,mapping,n,mean,median,trimean,best25,worst25,worst5,max")
                throw ParseError("unexpected CSV header", line.number, line.offset);
            header = true;
            continue;
        }
        const auto f = text::split_char(line.text, ',');
        if (f.size() != 10) throw ParseError("CSV row needs 10 columns", line.number, line.offset);
        CsvRow row;
        row.table = table;
        row.row.front_end = std::string(f[0]);
        row.row.mapping = std::string(f[1]);
        const auto n = text::parse_int(f[2]);
        if (!n || *n < 0) throw ParseError("bad count", line.number, line.offset);
        row.row.stats.n = static_cast<std::size_t>(*n);
        double* dst[] = {&row.row.stats.mean,         &row.row.stats.median,       &row.row.stats.trimean,
                         &row.row.stats.best25_mean,  &row.row.stats.worst25_mean, &row.row.stats.worst5_mean,
                         &row.row.stats.max};
        for (std::size_t i = 0; i < 7; ++i) {
            const auto v = text::parse_real(f[3 + i]);
            if (!v) throw ParseError("bad statistic", line.number, line.offset);
            *dst[i] = *v;
        }
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

std::string scene_key(const std::string& id) {
    const auto at = id.rfind('@');
    return at == std::string::npos ? id : id.substr(0, at);
}

}  // namespace

std::vector<ConsistencyResult> xyz_consistency_check(std::span<const DatasetRecord> records,
                                                     const std::string& reference_camera,
                                                     const std::map<std::string, CameraProfile>& profiles,
                                                     CstMode mode) {
    std::map<std::string, std::map<std::string, const DatasetRecord*>> by_camera;
    for (const auto& r : records) {
        auto& scenes = by_camera[r.camera];
        if (!scenes.emplace(scene_key(r.id), &r).second)
            throw ParseError("camera '" + r.camera + "' has scene '" + scene_key(r.id) + "' twice");
    }
    const auto ref_it = by_camera.find(reference_camera);
    if (ref_it == by_camera.end()) throw ParseError("no records for reference camera '" + reference_camera + "'");
    if (by_camera.size() < 2) throw UsageError("consistency check needs records from at least two cameras");
    auto profile_of = [&](const std::string& cam) -> const CameraProfile& {
        const auto p = profiles.find(cam);
        if (p == profiles.end()) throw ParseError("no profile for camera '" + cam + "'");
        return p->second;
    };
    ResolveOptions opts;
    opts.mode = mode;
    auto to_xyz = [&](const DatasetRecord& r) {
        try {
            const auto& prof = profile_of(r.camera);
            const ColorVec& basis = r.gt_neutral_raw ? *r.gt_neutral_raw : r.gt_preferred_raw;
            return raw_to_xyz(r.gt_preferred_raw, resolve_cst(prof, basis, opts).cst_raw_to_xyz);
        } catch (const Error& e) {
            rethrow_with_context(e, "record '" + r.id + "'");
        }
    };

    std::vector<ConsistencyResult> out;
    for (const auto& [cam, scenes] : by_camera) {
        if (cam == reference_camera) continue;
        for (const auto& [key, rec] : ref_it->second)
            if (!scenes.count(key)) throw ParseError("scene '" + key + "' has no pair in camera '" + cam + "'");
        ConsistencyResult res;
        res.camera = cam;
        double raw_sum = 0.0, xyz_sum = 0.0;
        for (const auto& [key, rec] : scenes) {
            const auto ref = ref_it->second.find(key);
            if (ref == ref_it->second.end())
                throw ParseError("scene '" + key + "' has no pair in reference camera '" + reference_camera + "'");
            raw_sum += angle_degrees(ref->second->gt_preferred_raw.values(), rec->gt_preferred_raw.values());
            xyz_sum += angular_error_degrees(to_xyz(*ref->second), to_xyz(*rec));
            ++res.n;
        }
        res.raw_mean_error = raw_sum / static_cast<double>(res.n);
        res.xyz_mean_error = xyz_sum / static_cast<double>(res.n);
        out.push_back(res);
    }
    return out;
}

}  // namespace wbpref
