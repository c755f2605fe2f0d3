#pragma once

#include <string>
#include <string_view>

#include "pelvseg/components.hpp"
#include "pelvseg/distance.hpp"
#include "pelvseg/volume.hpp"

namespace pelvseg {

enum class FilterMode { NoOp, Mcr, Sdf };

FilterMode parse_filter_mode(std::string_view text);
std::string_view to_string(FilterMode mode) noexcept;

inline constexpr double kDefaultSdfThreshold = 35.0;

struct FilterConfig {
    FilterMode mode = FilterMode::Sdf;
    // Distance constraint for Sdf mode, in `units`.
    double threshold = kDefaultSdfThreshold;
    Connectivity connectivity = kDefaultConnectivity;
    DistanceUnits units = DistanceUnits::Voxel;
    // false pools all four classes into one foreground before filtering.
    bool per_class = true;

    // Row label used in tables: "w/o Post", "MCR", "SDF(35)".
    std::string label() const;
};

// Throws UsageError on a negative or non-finite threshold.
void validate(const FilterConfig& cfg);

// Keeps only the largest connected component of each class.
LabelVolume mcr_filter(const LabelVolume& vol, Connectivity conn = kDefaultConnectivity);

// Keeps each class's largest component plus every other component whose
// closest voxel lies within `threshold` of it; the rest becomes background.
LabelVolume sdf_filter(const LabelVolume& vol, const FilterConfig& cfg);

LabelVolume apply_filter(const LabelVolume& vol, const FilterConfig& cfg);

} // namespace pelvseg
