#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "pelvseg/volume.hpp"

namespace pelvseg {

enum class DistanceUnits { Voxel, Millimeter };

DistanceUnits parse_units(std::string_view text);
std::string_view to_string(DistanceUnits units) noexcept;

class DistanceField {
public:
    DistanceField(Dims dims, Spacing spacing, DistanceUnits units, std::vector<double> values);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    DistanceUnits units() const noexcept { return units_; }
    std::span<const double> values() const noexcept { return values_; }
    double at(std::size_t offset) const noexcept { return values_[offset]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const noexcept { return values_[dims_.offset(i, j, k)]; }

private:
    Dims dims_;
    Spacing spacing_;
    DistanceUnits units_;
    std::vector<double> values_;
};

// Exact squared Euclidean distance from every voxel centre to the nearest
// mask voxel centre. Separable lower envelope of parabolas, one pass per
// axis. In voxel units every value is an integer held exactly in a double.
// Millimetre mode scales each axis by its spacing. Throws EmptyMask.
std::vector<double> squared_edt(const BinaryMask& mask, DistanceUnits units = DistanceUnits::Voxel);

DistanceField edt(const BinaryMask& mask, DistanceUnits units = DistanceUnits::Voxel);

// Positive outside (edt of the mask), negative inside (-edt of the
// complement). Mask voxels face-adjacent to the complement sit on the zero
// level. Throws EmptyMask, or FullMask when there is no outside.
DistanceField signed_distance(const BinaryMask& mask, DistanceUnits units = DistanceUnits::Voxel);

// Mask voxels with a face neighbour outside the mask, optionally counting the
// grid border as outside.
BinaryMask face_boundary(const BinaryMask& mask, bool border_is_outside);

} // namespace pelvseg
