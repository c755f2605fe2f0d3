#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pelvseg/volume.hpp"

namespace pelvseg {

enum class Connectivity { Face6, Edge18, Vertex26 };

inline constexpr Connectivity kDefaultConnectivity = Connectivity::Vertex26;

int neighbor_count(Connectivity conn) noexcept;
// Accepts "6"/"18"/"26" and the enumerator names.
Connectivity parse_connectivity(std::string_view text);
std::string_view to_string(Connectivity conn) noexcept;

using ComponentId = std::uint32_t;

class ComponentSet {
public:
    ComponentSet(Dims dims, Spacing spacing, std::vector<ComponentId> ids, std::vector<std::size_t> sizes);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    // Per-voxel id, 0 = background, components are 1..count().
    std::span<const ComponentId> ids() const noexcept { return ids_; }
    ComponentId count() const noexcept { return static_cast<ComponentId>(sizes_.size()); }
    std::size_t size_of(ComponentId id) const { return sizes_.at(id - 1); }
    std::span<const std::size_t> sizes() const noexcept { return sizes_; }

    // Id of the largest component, ties to the smallest id. Throws EmptyMask.
    ComponentId largest() const;
    BinaryMask mask_of(ComponentId id) const;

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<ComponentId> ids_;
    std::vector<std::size_t> sizes_;
};

// Union-find labelling. Ids are assigned in order of each component's first
// voxel in x-fastest scan order, so output is a pure function of the mask.
ComponentSet label_components(const BinaryMask& mask, Connectivity conn = kDefaultConnectivity);

BinaryMask largest_component(const ComponentSet& cs);

} // namespace pelvseg
