// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <wbpref/datakit.hpp>
#include <wbpref/mapping.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wbpref {

struct ErrorStats {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double trimean = 0.0;
    double best25_mean = 0.0;
    double worst25_mean = 0.0;
    double worst5_mean = 0.0;
    double max = 0.0;
};

/// Quantile by linear interpolation between order statistics at q * (n - 1).
double quantile_sorted(std::span<const double> sorted, double q);

/// Trimean from inclusive quartiles; best/worst means over
/// k = max(1, round(q * n)) values. Throws DomainError on an empty or negative list.
ErrorStats compute_stats(std::span<const double> errors);

/// Mean of the k smallest (best) or largest (worst) values.
double tail_mean(std::span<const double> sorted, double q, bool worst);

enum class MappingKind { None, ThreeByThree, Polynomial, Mlp };
std::string to_string(MappingKind k);

/// A mapping row: `model` is absent for MappingKind::None.
struct MappingEntry {
    std::string label;
    std::optional<MappingModel> model;
};

/// Per-record angular errors in the record's raw space, in dataset order.
std::vector<double> evaluate_errors(const std::optional<MappingModel>& model, std::span<const DatasetRecord> records,
                                    const std::string& front_end, const std::map<std::string, CameraProfile>& profiles);

ErrorStats evaluate(const std::optional<MappingModel>& model, std::span<const DatasetRecord> records,
                    const std::string& front_end, const std::map<std::string, CameraProfile>& profiles);

struct ReportRow {
    std::string front_end;
    std::string mapping;
    ErrorStats stats;
};

struct ReportTable {
    std::string title;
    std::vector<std::pair<std::string, std::string>> metadata;  ///< echoed in the header, in order
    std::vector<ReportRow> rows;

    /// Sorts rows by (front_end, mapping); throws UsageError on a duplicate key.
    void normalize();
};

/// Fixed-width text tables with a metadata header, statistics to 2 decimals.
std::string render_report(std::span<const ReportTable> tables);
/// CSV twin: `table,front_end,mapping,n,mean,...` with 17 significant digits.
std::string render_csv(std::span<const ReportTable> tables);

struct CsvRow {
    std::string table;
    ReportRow row;
};
std::vector<CsvRow> parse_csv(std::string_view doc);

struct ConsistencyResult {
    std::string camera;
    std::size_t n = 0;
    double raw_mean_error = 0.0;
    double xyz_mean_error = 0.0;
};

/// Cross-camera disagreement of gt preferred illuminants, paired by scene id,
/// directly in raw and in XYZ. The CST is resolved from gt_neutral_raw when
/// present, else from the preferred vector itself. One result per
/// non-reference camera, sorted by camera name.
std::vector<ConsistencyResult> xyz_consistency_check(std::span<const DatasetRecord> records,
                                                     const std::string& reference_camera,
                                                     const std::map<std::string, CameraProfile>& profiles,
                                                     CstMode mode = CstMode::ForwardThenInvert);

}  // namespace wbpref
