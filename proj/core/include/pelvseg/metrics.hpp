#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pelvseg/distance.hpp"
#include "pelvseg/volume.hpp"

namespace pelvseg {

// Table column order: the pooled bone first, the four classes, then their mean.
enum class Column { Whole, Sacrum, LeftHip, RightHip, LumbarSpine, Average };

inline constexpr int kNumColumns = 6;
inline constexpr std::array<Column, kNumColumns> kColumns{Column::Whole,    Column::Sacrum,      Column::LeftHip,
                                                          Column::RightHip, Column::LumbarSpine, Column::Average};

std::string_view column_name(Column column) noexcept;
Column column_of_class(Label class_id);

enum class HdSet { Boundary, Full };

HdSet parse_hd_set(std::string_view text);

struct HdOptions {
    HdSet set = HdSet::Boundary;
    DistanceUnits units = DistanceUnits::Voxel;
};

struct Metric {
    double dice = 0.0;
    // nullopt when either side is empty.
    std::optional<double> hd;

    friend bool operator==(const Metric&, const Metric&) = default;
};

struct MetricsRecord {
    std::string case_id;
    std::array<Metric, kNumColumns> columns{};

    Metric& operator[](Column c) { return columns[static_cast<std::size_t>(c)]; }
    const Metric& operator[](Column c) const { return columns[static_cast<std::size_t>(c)]; }

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

// 2|P∩G| / (|P|+|G|); 1 when both are empty. Throws DimMismatch.
double dice(const BinaryMask& pred, const BinaryMask& gt);

// Symmetric Hausdorff distance between the two boundary sets (or the full
// voxel sets), via one EDT per side. Throws EmptyMask, DimMismatch.
double hausdorff(const BinaryMask& pred, const BinaryMask& gt, const HdOptions& options = {});

// Per-class, Whole and Average metrics. Average HD is undefined when any class
// HD is undefined. Throws DimMismatch when dims or spacing differ.
MetricsRecord evaluate_case(const LabelVolume& pred, const LabelVolume& gt, const HdOptions& options = {});

struct FieldSummary {
    double dice = 0.0;
    std::optional<double> hd;   // mean over cases with a defined HD
    std::size_t hd_undefined = 0;

    friend bool operator==(const FieldSummary&, const FieldSummary&) = default;
};

struct Summary {
    std::string label;
    std::size_t cases = 0;
    std::array<FieldSummary, kNumColumns> columns{};

    const FieldSummary& operator[](Column c) const { return columns[static_cast<std::size_t>(c)]; }

    friend bool operator==(const Summary&, const Summary&) = default;
};

// Per-field arithmetic means over cases. Throws EmptyInput.
Summary aggregate(std::span<const MetricsRecord> records, std::string label = {});

// 100 * (before - after) / before, positive for a decrease.
double percent_change(double before, double after);
std::optional<double> hd_reduction(const Summary& before, const Summary& after, Column column = Column::Average);

} // namespace pelvseg
