#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pelvseg {

using Label = std::uint8_t;

inline constexpr Label kBackground = 0;
inline constexpr Label kSacrum = 1;
inline constexpr Label kLeftHip = 2;
inline constexpr Label kRightHip = 3;
inline constexpr Label kLumbarSpine = 4;
inline constexpr Label kMaxLabel = 4;
inline constexpr int kNumClasses = 4;

inline constexpr std::array<Label, kNumClasses> kAllClasses{kSacrum, kLeftHip, kRightHip, kLumbarSpine};

// Human-readable class name ("Sacrum", "Left hip", ...); "Background" for 0.
std::string_view class_name(Label label);

struct VoxelIndex {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t k = 0;

    friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

struct Dims {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nz = 0;

    std::size_t voxel_count() const noexcept { return nx * ny * nz; }
    // x-fastest linear offset, the NIfTI on-disk order.
    std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const noexcept { return i + nx * (j + ny * k); }
    std::size_t offset(const VoxelIndex& v) const noexcept { return offset(v.i, v.j, v.k); }
    VoxelIndex index(std::size_t offset) const noexcept {
        return {offset % nx, (offset / nx) % ny, offset / (nx * ny)};
    }
    bool contains(const VoxelIndex& v) const noexcept { return v.i < nx && v.j < ny && v.k < nz; }
    std::size_t operator[](int axis) const noexcept { return axis == 0 ? nx : axis == 1 ? ny : nz; }

    friend bool operator==(const Dims&, const Dims&) = default;
};

// Millimetres per voxel. Stored as float32 to match the NIfTI pixdim field,
// so a write/read cycle reproduces it exactly.
struct Spacing {
    float x = 1.0F;
    float y = 1.0F;
    float z = 1.0F;

    float operator[](int axis) const noexcept { return axis == 0 ? x : axis == 1 ? y : z; }

    friend bool operator==(const Spacing&, const Spacing&) = default;
};

void validate_geometry(const Dims& dims, const Spacing& spacing);

class LabelVolume {
public:
    LabelVolume(Dims dims, Spacing spacing, std::vector<Label> labels, std::string case_id = {});

    static LabelVolume zeros(Dims dims, Spacing spacing, std::string case_id = {});

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    const std::string& case_id() const noexcept { return case_id_; }
    std::span<const Label> labels() const noexcept { return labels_; }

    Label at(std::size_t i, std::size_t j, std::size_t k) const noexcept { return labels_[dims_.offset(i, j, k)]; }
    Label at(const VoxelIndex& v) const noexcept { return labels_[dims_.offset(v)]; }

    LabelVolume with_case_id(std::string case_id) const;
    LabelVolume with_labels(std::vector<Label> labels) const;

    friend bool operator==(const LabelVolume&, const LabelVolume&) = default;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<Label> labels_;
    std::string case_id_;
};

class BinaryMask {
public:
    // Any nonzero byte counts as foreground; storage is normalised to 0/1.
    BinaryMask(Dims dims, Spacing spacing, std::vector<std::uint8_t> bits);

    static BinaryMask empty(Dims dims, Spacing spacing);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    bool test(std::size_t offset) const noexcept { return bits_[offset] != 0; }
    bool test(std::size_t i, std::size_t j, std::size_t k) const noexcept { return bits_[dims_.offset(i, j, k)] != 0; }
    std::size_t count() const noexcept;
    bool none() const noexcept { return count() == 0; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<std::uint8_t> bits_;
};

BinaryMask class_mask(const LabelVolume& vol, Label class_id);
BinaryMask union_mask(const LabelVolume& vol, std::span<const Label> class_ids);
BinaryMask foreground_mask(const LabelVolume& vol);

BinaryMask complement(const BinaryMask& mask);
BinaryMask unite(const BinaryMask& a, const BinaryMask& b);
BinaryMask intersect(const BinaryMask& a, const BinaryMask& b);
bool is_subset(const BinaryMask& a, const BinaryMask& b);

// Source label -> canonical label. Keys are wide so foreign conventions
// (e.g. int16 atlases) can be expressed before narrowing to 0..4.
using LabelMapping = std::map<std::int64_t, std::int64_t>;

LabelVolume relabel(const LabelVolume& vol, const LabelMapping& mapping);

// Maps one raw stored value through an optional mapping and checks range.
// Throws UnmappedLabel / LabelOutOfRange.
Label map_label(std::int64_t raw, const LabelMapping* mapping);

} // namespace pelvseg
