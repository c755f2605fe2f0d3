#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pelvseg/metrics.hpp"
#include "pelvseg/postproc.hpp"
#include "pelvseg/volume.hpp"

namespace pelvseg::phantom {

enum class Shape { Ball, Box };

struct Primitive {
    Shape shape = Shape::Ball;
    Label class_id = kSacrum;
    std::array<long, 3> center{};
    double radius = 0.0;                 // Ball
    std::array<long, 3> half_extent{};   // Box: spans center +- half_extent
};

enum class FragmentKind {
    Outlier,       // prediction only, a false positive
    TrueFragment,  // present in ground truth too, e.g. a broken-off bone piece
};

enum class Direction { PlusX, MinusX, PlusY, MinusY, PlusZ, MinusZ };

std::string_view to_string(Direction d) noexcept;
Direction parse_direction(std::string_view text);

struct FragmentSpec {
    Label class_id = kSacrum;
    std::size_t voxels = 50;
    // Centre-to-centre distance in voxels from the fragment to its class's
    // largest component. Must be an integer >= 2.
    double gap = 10.0;
    FragmentKind kind = FragmentKind::Outlier;
    // Unset: tried in a seed-determined order until one fits.
    std::optional<Direction> direction;
};

// none, mcr, sdf(5), sdf(15), sdf(35), sdf(55).
std::vector<FilterConfig> default_truth_filters();

struct PhantomSpec {
    std::string case_id = "phantom";
    Dims dims{64, 64, 64};
    Spacing spacing{};
    std::vector<Primitive> primitives;
    std::vector<FragmentSpec> fragments;
    // Face-connected steps applied to every class of the prediction before
    // fragments are placed: > 0 dilates into background, < 0 erodes.
    int perturbation = 0;
    std::uint64_t seed = 0;
    // Filter scenarios the truth sheet predicts metrics for.
    // Voxel units and per-class filtering only.
    std::vector<FilterConfig> truth_filters = default_truth_filters();
};

struct FragmentTruth {
    Label class_id = kSacrum;
    FragmentKind kind = FragmentKind::Outlier;
    std::size_t voxels = 0;
    double requested_gap = 0.0;
    // Brute-force minimum distance to the class's largest component.
    double realized_gap = 0.0;
    Direction direction = Direction::PlusX;
    VoxelIndex seed_voxel;
};

struct ScenarioTruth {
    FilterConfig filter;
    // Indices into TruthSheet::fragments that the filter keeps.
    std::vector<std::size_t> kept_fragments;
    // Metrics of the filtered prediction against ground truth.
    MetricsRecord expected;
};

struct TruthSheet {
    std::string case_id;
    std::vector<FragmentTruth> fragments;
    std::vector<ScenarioTruth> scenarios;

    const ScenarioTruth& scenario(const std::string& label) const;
};

struct Phantom {
    LabelVolume gt;
    LabelVolume pred;
    TruthSheet truth;
};

// Builds gt and prediction volumes. Every truth-sheet number comes from
// brute-force set arithmetic in this module, never from the library's CCL,
// EDT or metric kernels. Throws SpecOutOfBounds, UnsatisfiableGap.
Phantom generate(const PhantomSpec& spec);

// Scenes used by the acceptance suite: one class-1 outlier at each gap in
// {3, 10, 20, 40, 60}, far-outlier scenes, near true-fragment scenes and a
// clean scene.
std::vector<PhantomSpec> standard_suite();

std::string spec_to_json(const PhantomSpec& spec);
// Accepts one spec object or {"phantoms": [spec, ...]}. Throws ParseError.
std::vector<PhantomSpec> specs_from_json(std::string_view text);
std::string truth_to_json(const TruthSheet& truth);
TruthSheet truth_from_json(std::string_view text);

} // namespace pelvseg::phantom
