#include "pelvseg/volume.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pelvseg/error.hpp"

namespace pelvseg {

namespace {

void check_class(Label class_id) {
    if (class_id == kBackground || class_id > kMaxLabel) {
        throw Error(ErrorCode::InvalidClass, fmt::format("class id {} not in 1..{}", class_id, kMaxLabel));
    }
}

void check_same_grid(const BinaryMask& a, const BinaryMask& b) {
    if (a.dims() != b.dims()) {
        throw Error(ErrorCode::DimMismatch, "mask dimensions differ");
    }
}

} // namespace

std::string_view class_name(Label label) {
    switch (label) {
    case kBackground: return "Background";
    case kSacrum: return "Sacrum";
    case kLeftHip: return "Left hip";
    case kRightHip: return "Right hip";
    case kLumbarSpine: return "Lumbar spine";
    default: throw Error(ErrorCode::InvalidClass, fmt::format("no class named for label {}", label));
    }
}

void validate_geometry(const Dims& dims, const Spacing& spacing) {
    if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
        throw Error(ErrorCode::InvalidVolume, fmt::format("dims ({}, {}, {}) must be positive", dims.nx, dims.ny, dims.nz));
    }
    for (int a = 0; a < 3; ++a) {
        if (!(spacing[a] > 0.0F) || !std::isfinite(spacing[a])) {
            throw Error(ErrorCode::InvalidVolume, fmt::format("spacing[{}] = {} must be positive", a, spacing[a]));
        }
    }
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing, std::vector<Label> labels, std::string case_id)
    : dims_(dims), spacing_(spacing), labels_(std::move(labels)), case_id_(std::move(case_id)) {
    validate_geometry(dims_, spacing_);
    if (labels_.size() != dims_.voxel_count()) {
        throw Error(ErrorCode::InvalidVolume,
                    fmt::format("{} labels for {} voxels", labels_.size(), dims_.voxel_count()));
    }
    const auto bad = std::find_if(labels_.begin(), labels_.end(), [](Label l) { return l > kMaxLabel; });
    if (bad != labels_.end()) {
        throw Error(ErrorCode::LabelOutOfRange, fmt::format("label {} at offset {}", *bad, bad - labels_.begin()));
    }
}

LabelVolume LabelVolume::zeros(Dims dims, Spacing spacing, std::string case_id) {
    validate_geometry(dims, spacing);
    return {dims, spacing, std::vector<Label>(dims.voxel_count(), kBackground), std::move(case_id)};
}

LabelVolume LabelVolume::with_case_id(std::string case_id) const {
    LabelVolume copy = *this;
    copy.case_id_ = std::move(case_id);
    return copy;
}

LabelVolume LabelVolume::with_labels(std::vector<Label> labels) const {
    return {dims_, spacing_, std::move(labels), case_id_};
}

BinaryMask::BinaryMask(Dims dims, Spacing spacing, std::vector<std::uint8_t> bits)
    : dims_(dims), spacing_(spacing), bits_(std::move(bits)) {
    validate_geometry(dims_, spacing_);
    if (bits_.size() != dims_.voxel_count()) {
        throw Error(ErrorCode::InvalidVolume, fmt::format("{} mask bits for {} voxels", bits_.size(), dims_.voxel_count()));
    }
    for (auto& b : bits_) {
        b = b != 0 ? 1 : 0;
    }
}

BinaryMask BinaryMask::empty(Dims dims, Spacing spacing) {
    validate_geometry(dims, spacing);
    return {dims, spacing, std::vector<std::uint8_t>(dims.voxel_count(), 0)};
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask class_mask(const LabelVolume& vol, Label class_id) {
    check_class(class_id);
    std::vector<std::uint8_t> bits(vol.labels().size());
    std::transform(vol.labels().begin(), vol.labels().end(), bits.begin(),
                   [class_id](Label l) { return static_cast<std::uint8_t>(l == class_id); });
    return {vol.dims(), vol.spacing(), std::move(bits)};
}

BinaryMask union_mask(const LabelVolume& vol, std::span<const Label> class_ids) {
    if (class_ids.empty()) {
        throw Error(ErrorCode::InvalidClass, "union of an empty class set");
    }
    std::array<bool, kMaxLabel + 1> wanted{};
    for (Label c : class_ids) {
        check_class(c);
        wanted[c] = true;
    }
    std::vector<std::uint8_t> bits(vol.labels().size());
    std::transform(vol.labels().begin(), vol.labels().end(), bits.begin(),
                   [&wanted](Label l) { return static_cast<std::uint8_t>(wanted[l]); });
    return {vol.dims(), vol.spacing(), std::move(bits)};
}

BinaryMask foreground_mask(const LabelVolume& vol) {
    return union_mask(vol, kAllClasses);
}

BinaryMask complement(const BinaryMask& mask) {
    std::vector<std::uint8_t> bits(mask.bits().size());
    std::transform(mask.bits().begin(), mask.bits().end(), bits.begin(),
                   [](std::uint8_t b) { return static_cast<std::uint8_t>(b == 0); });
    return {mask.dims(), mask.spacing(), std::move(bits)};
}

BinaryMask unite(const BinaryMask& a, const BinaryMask& b) {
    check_same_grid(a, b);
    std::vector<std::uint8_t> bits(a.bits().size());
    std::transform(a.bits().begin(), a.bits().end(), b.bits().begin(), bits.begin(),
                   [](std::uint8_t x, std::uint8_t y) { return static_cast<std::uint8_t>(x | y); });
    return {a.dims(), a.spacing(), std::move(bits)};
}

BinaryMask intersect(const BinaryMask& a, const BinaryMask& b) {
    check_same_grid(a, b);
    std::vector<std::uint8_t> bits(a.bits().size());
    std::transform(a.bits().begin(), a.bits().end(), b.bits().begin(), bits.begin(),
                   [](std::uint8_t x, std::uint8_t y) { return static_cast<std::uint8_t>(x & y); });
    return {a.dims(), a.spacing(), std::move(bits)};
}

bool is_subset(const BinaryMask& a, const BinaryMask& b) {
    check_same_grid(a, b);
    for (std::size_t n = 0; n < a.bits().size(); ++n) {
        if (a.bits()[n] != 0 && b.bits()[n] == 0) {
            return false;
        }
    }
    return true;
}

Label map_label(std::int64_t raw, const LabelMapping* mapping) {
    std::int64_t value = raw;
    if (mapping != nullptr) {
        const auto it = mapping->find(raw);
        if (it == mapping->end()) {
            throw Error(ErrorCode::UnmappedLabel, fmt::format("label {} has no mapping entry", raw));
        }
        value = it->second;
    }
    if (value < 0 || value > kMaxLabel) {
        throw Error(ErrorCode::LabelOutOfRange, fmt::format("label {} not in 0..{}", value, kMaxLabel));
    }
    return static_cast<Label>(value);
}

LabelVolume relabel(const LabelVolume& vol, const LabelMapping& mapping) {
    // Resolve the 5-entry table once; only labels actually present must be mapped.
    std::array<bool, kMaxLabel + 1> present{};
    for (Label l : vol.labels()) {
        present[l] = true;
    }
    std::array<Label, kMaxLabel + 1> table{};
    for (Label l = 0; l <= kMaxLabel; ++l) {
        if (present[l]) {
            table[l] = map_label(l, &mapping);
        }
    }
    std::vector<Label> out(vol.labels().size());
    std::transform(vol.labels().begin(), vol.labels().end(), out.begin(), [&table](Label l) { return table[l]; });
    return vol.with_labels(std::move(out));
}

} // namespace pelvseg
