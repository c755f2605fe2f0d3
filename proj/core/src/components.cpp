#include "pelvseg/components.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "pelvseg/error.hpp"

namespace pelvseg {

namespace {

struct Offset {
    int di;
    int dj;
    int dk;
};

// Neighbours that precede a voxel in scan order (k, then j, then i).
std::vector<Offset> backward_neighbors(Connectivity conn) {
    const int max_manhattan = conn == Connectivity::Face6 ? 1 : conn == Connectivity::Edge18 ? 2 : 3;
    std::vector<Offset> out;
    for (int dk = -1; dk <= 0; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const bool precedes = dk < 0 || (dk == 0 && (dj < 0 || (dj == 0 && di < 0)));
                if (precedes && std::abs(di) + std::abs(dj) + std::abs(dk) <= max_manhattan) {
                    out.push_back({di, dj, dk});
                }
            }
        }
    }
    return out;
}

class DisjointSet {
public:
    ComponentId make() {
        parent_.push_back(static_cast<ComponentId>(parent_.size()));
        return parent_.back();
    }

    ComponentId find(ComponentId x) {
        ComponentId root = x;
        while (parent_[root] != root) {
            root = parent_[root];
        }
        while (parent_[x] != root) {
            const ComponentId next = parent_[x];
            parent_[x] = root;
            x = next;
        }
        return root;
    }

    // The smaller provisional label becomes the root.
    ComponentId unite(ComponentId a, ComponentId b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return a;
        }
        if (b < a) {
            std::swap(a, b);
        }
        parent_[b] = a;
        return a;
    }

    std::size_t size() const { return parent_.size(); }

private:
    std::vector<ComponentId> parent_;
};

} // namespace

int neighbor_count(Connectivity conn) noexcept {
    switch (conn) {
    case Connectivity::Face6: return 6;
    case Connectivity::Edge18: return 18;
    case Connectivity::Vertex26: return 26;
    }
    return 26;
}

Connectivity parse_connectivity(std::string_view text) {
    if (text == "6" || text == "face6" || text == "Face6") {
        return Connectivity::Face6;
    }
    if (text == "18" || text == "edge18" || text == "Edge18") {
        return Connectivity::Edge18;
    }
    if (text == "26" || text == "vertex26" || text == "Vertex26") {
        return Connectivity::Vertex26;
    }
    throw Error(ErrorCode::UsageError, fmt::format("unknown connectivity '{}'", text));
}

std::string_view to_string(Connectivity conn) noexcept {
    switch (conn) {
    case Connectivity::Face6: return "6";
    case Connectivity::Edge18: return "18";
    case Connectivity::Vertex26: return "26";
    }
    return "26";
}

ComponentSet::ComponentSet(Dims dims, Spacing spacing, std::vector<ComponentId> ids, std::vector<std::size_t> sizes)
    : dims_(dims), spacing_(spacing), ids_(std::move(ids)), sizes_(std::move(sizes)) {}

ComponentId ComponentSet::largest() const {
    if (sizes_.empty()) {
        throw Error(ErrorCode::EmptyMask, "no components");
    }
    // max_element returns the first maximum, i.e. the smallest id.
    const auto it = std::max_element(sizes_.begin(), sizes_.end());
    return static_cast<ComponentId>(it - sizes_.begin()) + 1;
}

BinaryMask ComponentSet::mask_of(ComponentId id) const {
    if (id == 0 || id > count()) {
        throw Error(ErrorCode::InvalidClass, fmt::format("component id {} not in 1..{}", id, count()));
    }
    std::vector<std::uint8_t> bits(ids_.size());
    std::transform(ids_.begin(), ids_.end(), bits.begin(),
                   [id](ComponentId c) { return static_cast<std::uint8_t>(c == id); });
    return {dims_, spacing_, std::move(bits)};
}

ComponentSet label_components(const BinaryMask& mask, Connectivity conn) {
    const Dims& d = mask.dims();
    const auto neighbors = backward_neighbors(conn);
    constexpr ComponentId kNone = std::numeric_limits<ComponentId>::max();

    // Pass 1: provisional labels, merging with already-visited neighbours.
    std::vector<ComponentId> provisional(d.voxel_count(), kNone);
    DisjointSet sets;
    for (std::size_t k = 0; k < d.nz; ++k) {
        for (std::size_t j = 0; j < d.ny; ++j) {
            for (std::size_t i = 0; i < d.nx; ++i) {
                const std::size_t here = d.offset(i, j, k);
                if (!mask.test(here)) {
                    continue;
                }
                ComponentId label = kNone;
                for (const auto& n : neighbors) {
                    const auto ni = static_cast<std::ptrdiff_t>(i) + n.di;
                    const auto nj = static_cast<std::ptrdiff_t>(j) + n.dj;
                    const auto nk = static_cast<std::ptrdiff_t>(k) + n.dk;
                    if (ni < 0 || nj < 0 || nk < 0 || ni >= static_cast<std::ptrdiff_t>(d.nx) ||
                        nj >= static_cast<std::ptrdiff_t>(d.ny)) {
                        continue;
                    }
                    const ComponentId other = provisional[d.offset(static_cast<std::size_t>(ni),
                                                                   static_cast<std::size_t>(nj),
                                                                   static_cast<std::size_t>(nk))];
                    if (other == kNone) {
                        continue;
                    }
                    label = label == kNone ? sets.find(other) : sets.unite(label, other);
                }
                provisional[here] = label == kNone ? sets.make() : label;
            }
        }
    }

    // Pass 2: dense ids in order of first appearance.
    std::vector<ComponentId> dense(sets.size(), 0);
    std::vector<std::size_t> sizes;
    std::vector<ComponentId> ids(d.voxel_count(), 0);
    for (std::size_t n = 0; n < provisional.size(); ++n) {
        if (provisional[n] == kNone) {
            continue;
        }
        const ComponentId root = sets.find(provisional[n]);
        if (dense[root] == 0) {
            sizes.push_back(0);
            dense[root] = static_cast<ComponentId>(sizes.size());
        }
        ids[n] = dense[root];
        ++sizes[dense[root] - 1];
    }
    return {d, mask.spacing(), std::move(ids), std::move(sizes)};
}

BinaryMask largest_component(const ComponentSet& cs) {
    return cs.mask_of(cs.largest());
}

} // namespace pelvseg
