#include "pelvseg/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pelvseg/error.hpp"

namespace pelvseg {

namespace {

void check_dims(const BinaryMask& a, const BinaryMask& b) {
    if (a.dims() != b.dims()) {
        throw Error(ErrorCode::DimMismatch, "prediction and ground truth dims differ");
    }
}

// max over `from` voxels of the squared distance to `to`.
double directed_squared(const BinaryMask& from, const BinaryMask& to, DistanceUnits units) {
    const auto dist = squared_edt(to, units);
    double worst = 0.0;
    for (std::size_t n = 0; n < dist.size(); ++n) {
        if (from.test(n)) {
            worst = std::max(worst, dist[n]);
        }
    }
    return worst;
}

Metric class_metric(const BinaryMask& pred, const BinaryMask& gt, const HdOptions& options) {
    Metric m;
    m.dice = dice(pred, gt);
    if (!pred.none() && !gt.none()) {
        m.hd = hausdorff(pred, gt, options);
    }
    return m;
}

} // namespace

std::string_view column_name(Column column) noexcept {
    switch (column) {
    case Column::Whole: return "Whole";
    case Column::Sacrum: return "Sacrum";
    case Column::LeftHip: return "Left hip";
    case Column::RightHip: return "Right hip";
    case Column::LumbarSpine: return "Lumbar spine";
    case Column::Average: return "Average";
    }
    return "";
}

Column column_of_class(Label class_id) {
    switch (class_id) {
    case kSacrum: return Column::Sacrum;
    case kLeftHip: return Column::LeftHip;
    case kRightHip: return Column::RightHip;
    case kLumbarSpine: return Column::LumbarSpine;
    default: throw Error(ErrorCode::InvalidClass, fmt::format("no column for label {}", class_id));
    }
}

HdSet parse_hd_set(std::string_view text) {
    if (text == "boundary") {
        return HdSet::Boundary;
    }
    if (text == "full") {
        return HdSet::Full;
    }
    throw Error(ErrorCode::UsageError, fmt::format("unknown HD voxel set '{}'", text));
}

double dice(const BinaryMask& pred, const BinaryMask& gt) {
    check_dims(pred, gt);
    std::size_t p = 0;
    std::size_t g = 0;
    std::size_t both = 0;
    for (std::size_t n = 0; n < pred.bits().size(); ++n) {
        const bool in_p = pred.test(n);
        const bool in_g = gt.test(n);
        p += in_p ? 1 : 0;
        g += in_g ? 1 : 0;
        both += (in_p && in_g) ? 1 : 0;
    }
    if (p + g == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

double hausdorff(const BinaryMask& pred, const BinaryMask& gt, const HdOptions& options) {
    check_dims(pred, gt);
    if (pred.none() || gt.none()) {
        throw Error(ErrorCode::EmptyMask, "Hausdorff distance of an empty mask");
    }
    if (options.set == HdSet::Full) {
        return std::sqrt(
            std::max(directed_squared(pred, gt, options.units), directed_squared(gt, pred, options.units)));
    }
    const BinaryMask bp = face_boundary(pred, true);
    const BinaryMask bg = face_boundary(gt, true);
    return std::sqrt(std::max(directed_squared(bp, bg, options.units), directed_squared(bg, bp, options.units)));
}

MetricsRecord evaluate_case(const LabelVolume& pred, const LabelVolume& gt, const HdOptions& options) {
    if (pred.dims() != gt.dims() || pred.spacing() != gt.spacing()) {
        throw Error(ErrorCode::DimMismatch, fmt::format("case '{}': prediction and ground truth grids differ",
                                                        gt.case_id().empty() ? pred.case_id() : gt.case_id()));
    }
    MetricsRecord record;
    record.case_id = gt.case_id().empty() ? pred.case_id() : gt.case_id();
    record[Column::Whole] = class_metric(foreground_mask(pred), foreground_mask(gt), options);

    double dice_sum = 0.0;
    double hd_sum = 0.0;
    bool hd_defined = true;
    for (Label c : kAllClasses) {
        const Metric m = class_metric(class_mask(pred, c), class_mask(gt, c), options);
        record[column_of_class(c)] = m;
        dice_sum += m.dice;
        if (m.hd) {
            hd_sum += *m.hd;
        } else {
            hd_defined = false;
        }
    }
    record[Column::Average].dice = dice_sum / kNumClasses;
    if (hd_defined) {
        record[Column::Average].hd = hd_sum / kNumClasses;
    }
    return record;
}

Summary aggregate(std::span<const MetricsRecord> records, std::string label) {
    if (records.empty()) {
        throw Error(ErrorCode::EmptyInput, "no records to aggregate");
    }
    Summary s;
    s.label = std::move(label);
    s.cases = records.size();
    for (std::size_t c = 0; c < kNumColumns; ++c) {
        double dice_sum = 0.0;
        double hd_sum = 0.0;
        std::size_t hd_count = 0;
        for (const auto& r : records) {
            dice_sum += r.columns[c].dice;
            if (r.columns[c].hd) {
                hd_sum += *r.columns[c].hd;
                ++hd_count;
            }
        }
        FieldSummary& f = s.columns[c];
        f.dice = dice_sum / static_cast<double>(records.size());
        f.hd_undefined = records.size() - hd_count;
        if (hd_count > 0) {
            f.hd = hd_sum / static_cast<double>(hd_count);
        }
    }
    return s;
}

double percent_change(double before, double after) {
    if (before == 0.0) {
        throw Error(ErrorCode::EmptyInput, "percentage change from zero");
    }
    return 100.0 * (before - after) / before;
}

std::optional<double> hd_reduction(const Summary& before, const Summary& after, Column column) {
    const auto& b = before[column].hd;
    const auto& a = after[column].hd;
    if (!b || !a || *b == 0.0) {
        return std::nullopt;
    }
    return percent_change(*b, *a);
}

} // namespace pelvseg
