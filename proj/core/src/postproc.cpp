#include "pelvseg/postproc.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pelvseg/error.hpp"

namespace pelvseg {

namespace {

// Minimum squared distance from each component to the reference component,
// read off the reference's EDT. Index 0 is unused.
std::vector<double> component_gaps(const ComponentSet& cs, ComponentId reference, DistanceUnits units) {
    const auto to_reference = squared_edt(cs.mask_of(reference), units);
    std::vector<double> gap(cs.count() + 1, std::numeric_limits<double>::infinity());
    const auto ids = cs.ids();
    for (std::size_t n = 0; n < ids.size(); ++n) {
        if (ids[n] != 0 && to_reference[n] < gap[ids[n]]) {
            gap[ids[n]] = to_reference[n];
        }
    }
    return gap;
}

// Components of `mask` that survive the filter; index 0 is unused.
std::vector<bool> kept_components(const ComponentSet& cs, FilterMode mode, double threshold, DistanceUnits units) {
    std::vector<bool> keep(cs.count() + 1, false);
    if (cs.count() == 0) {
        return keep;
    }
    const ComponentId mcr = cs.largest();
    keep[mcr] = true;
    if (mode == FilterMode::Sdf && cs.count() > 1) {
        const auto gap = component_gaps(cs, mcr, units);
        for (ComponentId id = 1; id <= cs.count(); ++id) {
            if (std::sqrt(gap[id]) <= threshold) {
                keep[id] = true;
            }
        }
    }
    return keep;
}

void erase_rejected(const BinaryMask& mask, const FilterConfig& cfg, std::vector<Label>& labels) {
    if (mask.none()) {
        return;
    }
    const ComponentSet cs = label_components(mask, cfg.connectivity);
    const auto keep = kept_components(cs, cfg.mode, cfg.threshold, cfg.units);
    const auto ids = cs.ids();
    for (std::size_t n = 0; n < ids.size(); ++n) {
        if (ids[n] != 0 && !keep[ids[n]]) {
            labels[n] = kBackground;
        }
    }
}

LabelVolume filter_components(const LabelVolume& vol, const FilterConfig& cfg) {
    std::vector<Label> labels(vol.labels().begin(), vol.labels().end());
    if (cfg.per_class) {
        for (Label c : kAllClasses) {
            erase_rejected(class_mask(vol, c), cfg, labels);
        }
    } else {
        erase_rejected(foreground_mask(vol), cfg, labels);
    }
    return vol.with_labels(std::move(labels));
}

} // namespace

FilterMode parse_filter_mode(std::string_view text) {
    if (text == "none" || text == "noop") {
        return FilterMode::NoOp;
    }
    if (text == "mcr") {
        return FilterMode::Mcr;
    }
    if (text == "sdf") {
        return FilterMode::Sdf;
    }
    throw Error(ErrorCode::UsageError, fmt::format("unknown filter mode '{}'", text));
}

std::string_view to_string(FilterMode mode) noexcept {
    switch (mode) {
    case FilterMode::NoOp: return "none";
    case FilterMode::Mcr: return "mcr";
    case FilterMode::Sdf: return "sdf";
    }
    return "none";
}

std::string FilterConfig::label() const {
    switch (mode) {
    case FilterMode::NoOp: return "w/o Post";
    case FilterMode::Mcr: return "MCR";
    case FilterMode::Sdf: return fmt::format("SDF({:g})", threshold);
    }
    return {};
}

void validate(const FilterConfig& cfg) {
    if (!std::isfinite(cfg.threshold) || cfg.threshold < 0.0) {
        throw Error(ErrorCode::UsageError, fmt::format("threshold {} must be a finite value >= 0", cfg.threshold));
    }
}

LabelVolume mcr_filter(const LabelVolume& vol, Connectivity conn) {
    FilterConfig cfg;
    cfg.mode = FilterMode::Mcr;
    cfg.connectivity = conn;
    return filter_components(vol, cfg);
}

LabelVolume sdf_filter(const LabelVolume& vol, const FilterConfig& cfg) {
    if (cfg.mode != FilterMode::Sdf) {
        throw Error(ErrorCode::UsageError, "sdf_filter requires mode sdf");
    }
    validate(cfg);
    return filter_components(vol, cfg);
}

LabelVolume apply_filter(const LabelVolume& vol, const FilterConfig& cfg) {
    validate(cfg);
    switch (cfg.mode) {
    case FilterMode::NoOp: return vol;
    case FilterMode::Mcr: return filter_components(vol, cfg);
    case FilterMode::Sdf: return sdf_filter(vol, cfg);
    }
    return vol;
}

} // namespace pelvseg
