#include "pelvseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pelvseg/error.hpp"

namespace pelvseg::phantom {

using nlohmann::json;

namespace {

using Coord = std::array<long, 3>;

constexpr std::array<Coord, 6> kFaceSteps{{{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

std::vector<Coord> vertex_steps() {
    std::vector<Coord> out;
    for (long dk = -1; dk <= 1; ++dk) {
        for (long dj = -1; dj <= 1; ++dj) {
            for (long di = -1; di <= 1; ++di) {
                if (di != 0 || dj != 0 || dk != 0) {
                    out.push_back({di, dj, dk});
                }
            }
        }
    }
    return out;
}

// Plain label grid with signed coordinate access; all of this module's
// oracles work on it directly.
class Grid {
public:
    explicit Grid(const Dims& d) : d_(d), v_(d.voxel_count(), kBackground) {}
    Grid(const Dims& d, std::vector<Label> v) : d_(d), v_(std::move(v)) {}

    bool inside(const Coord& c) const {
        return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < static_cast<long>(d_.nx) &&
               c[1] < static_cast<long>(d_.ny) && c[2] < static_cast<long>(d_.nz);
    }
    std::size_t offset(const Coord& c) const {
        return d_.offset(static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]), static_cast<std::size_t>(c[2]));
    }
    Coord coord(std::size_t n) const {
        const auto v = d_.index(n);
        return {static_cast<long>(v.i), static_cast<long>(v.j), static_cast<long>(v.k)};
    }
    Label& operator[](const Coord& c) { return v_[offset(c)]; }
    Label operator[](const Coord& c) const { return v_[offset(c)]; }
    Label& operator[](std::size_t n) { return v_[n]; }
    Label operator[](std::size_t n) const { return v_[n]; }
    std::size_t size() const { return v_.size(); }
    const Dims& dims() const { return d_; }
    std::vector<Label>& data() { return v_; }
    const std::vector<Label>& data() const { return v_; }

private:
    Dims d_;
    std::vector<Label> v_;
};

Coord add(const Coord& a, const Coord& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

long squared_distance(const Coord& a, const Coord& b) {
    const long di = a[0] - b[0];
    const long dj = a[1] - b[1];
    const long dk = a[2] - b[2];
    return di * di + dj * dj + dk * dk;
}

void check_class(Label c, std::string_view what) {
    if (c == kBackground || c > kMaxLabel) {
        throw Error(ErrorCode::SpecOutOfBounds, fmt::format("{} has class {}, expected 1..{}", what, c, kMaxLabel));
    }
}

void validate_spec(const PhantomSpec& spec) {
    try {
        validate_geometry(spec.dims, spec.spacing);
    } catch (const Error& e) {
        throw Error(ErrorCode::SpecOutOfBounds, e.what());
    }
    for (std::size_t n = 0; n < spec.primitives.size(); ++n) {
        const auto& p = spec.primitives[n];
        check_class(p.class_id, fmt::format("primitive {}", n));
        Coord reach{};
        if (p.shape == Shape::Ball) {
            if (!(p.radius > 0.0)) {
                throw Error(ErrorCode::SpecOutOfBounds, fmt::format("primitive {}: radius must be positive", n));
            }
            const auto r = static_cast<long>(std::floor(p.radius));
            reach = {r, r, r};
        } else {
            reach = p.half_extent;
        }
        for (int a = 0; a < 3; ++a) {
            if (reach[a] < 0 || p.center[a] - reach[a] < 0 ||
                p.center[a] + reach[a] >= static_cast<long>(spec.dims[a])) {
                throw Error(ErrorCode::SpecOutOfBounds, fmt::format("primitive {} leaves the grid on axis {}", n, a));
            }
        }
    }
    for (std::size_t n = 0; n < spec.fragments.size(); ++n) {
        const auto& f = spec.fragments[n];
        check_class(f.class_id, fmt::format("fragment {}", n));
        if (f.voxels == 0) {
            throw Error(ErrorCode::SpecOutOfBounds, fmt::format("fragment {} has no voxels", n));
        }
        // Below 2 the fragment would touch its structure under 26-connectivity.
        if (!(f.gap >= 2.0) || f.gap != std::floor(f.gap) || f.gap > 1e6) {
            throw Error(ErrorCode::UnsatisfiableGap, fmt::format("fragment {}: gap {} must be an integer >= 2", n, f.gap));
        }
    }
    for (const auto& cfg : spec.truth_filters) {
        if (cfg.units != DistanceUnits::Voxel || !cfg.per_class) {
            throw Error(ErrorCode::SpecOutOfBounds, "truth filters must use voxel units and per-class filtering");
        }
        validate(cfg);
    }
}

void paint(Grid& grid, const Primitive& p) {
    const Dims& d = grid.dims();
    for (long k = 0; k < static_cast<long>(d.nz); ++k) {
        for (long j = 0; j < static_cast<long>(d.ny); ++j) {
            for (long i = 0; i < static_cast<long>(d.nx); ++i) {
                const long di = i - p.center[0];
                const long dj = j - p.center[1];
                const long dk = k - p.center[2];
                const bool in = p.shape == Shape::Ball
                                    ? static_cast<double>(di * di + dj * dj + dk * dk) <= p.radius * p.radius
                                    : std::abs(di) <= p.half_extent[0] && std::abs(dj) <= p.half_extent[1] &&
                                          std::abs(dk) <= p.half_extent[2];
                if (in) {
                    grid[Coord{i, j, k}] = p.class_id;
                }
            }
        }
    }
}

void perturb(Grid& grid, int steps) {
    for (int s = 0; s < std::abs(steps); ++s) {
        const Grid before = grid;
        for (std::size_t n = 0; n < grid.size(); ++n) {
            const Coord c = before.coord(n);
            if (steps > 0 && before[n] == kBackground) {
                // Dilate: first class (in label order) touching this voxel wins.
                Label winner = kBackground;
                for (const auto& step : kFaceSteps) {
                    const Coord nb = add(c, step);
                    if (before.inside(nb) && before[nb] != kBackground && (winner == kBackground || before[nb] < winner)) {
                        winner = before[nb];
                    }
                }
                grid[n] = winner;
            } else if (steps < 0 && before[n] != kBackground) {
                for (const auto& step : kFaceSteps) {
                    const Coord nb = add(c, step);
                    if (before.inside(nb) && before[nb] != before[n]) {
                        grid[n] = kBackground;
                        break;
                    }
                }
            }
        }
    }
}

struct Placement {
    std::vector<Coord> voxels;
    Direction direction;
    Coord seed;
};

std::optional<Placement> try_place(const Grid& pred, const Grid& gt, const std::vector<Coord>& body,
                                   const FragmentSpec& f, Direction dir) {
    const int axis = static_cast<int>(dir) / 2;
    const long sign = static_cast<int>(dir) % 2 == 0 ? 1 : -1;

    long extreme = std::numeric_limits<long>::min();
    for (const auto& b : body) {
        extreme = std::max(extreme, sign * b[axis]);
    }
    // Cap voxel nearest the cap centroid.
    std::vector<Coord> cap;
    std::array<double, 3> centroid{};
    for (const auto& b : body) {
        if (sign * b[axis] == extreme) {
            cap.push_back(b);
            for (int a = 0; a < 3; ++a) {
                centroid[a] += static_cast<double>(b[a]);
            }
        }
    }
    for (auto& c : centroid) {
        c /= static_cast<double>(cap.size());
    }
    Coord anchor = cap.front();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cap) {
        double dist = 0.0;
        for (int a = 0; a < 3; ++a) {
            dist += (static_cast<double>(c[a]) - centroid[a]) * (static_cast<double>(c[a]) - centroid[a]);
        }
        if (dist < best) {
            best = dist;
            anchor = c;
        }
    }

    const auto gap = static_cast<long>(f.gap);
    Coord seed = anchor;
    seed[axis] += sign * gap;

    static const auto kVertexSteps = vertex_steps();
    // Allowed voxels lie in the half-space at least `gap` beyond the cap,
    // are free in both volumes and do not touch any voxel of the same class.
    const auto allowed = [&](const Coord& c) {
        if (!pred.inside(c) || sign * (c[axis] - anchor[axis]) < gap) {
            return false;
        }
        if (pred[c] != kBackground || gt[c] != kBackground) {
            return false;
        }
        for (const auto& step : kVertexSteps) {
            const Coord nb = add(c, step);
            if (pred.inside(nb) && (pred[nb] == f.class_id || gt[nb] == f.class_id)) {
                return false;
            }
        }
        return true;
    };
    if (!allowed(seed)) {
        return std::nullopt;
    }

    std::vector<std::uint8_t> visited(pred.size(), 0);
    std::deque<Coord> queue{seed};
    visited[pred.offset(seed)] = 1;
    Placement out{{}, dir, seed};
    while (!queue.empty() && out.voxels.size() < f.voxels) {
        const Coord c = queue.front();
        queue.pop_front();
        out.voxels.push_back(c);
        for (const auto& step : kFaceSteps) {
            const Coord nb = add(c, step);
            if (pred.inside(nb) && visited[pred.offset(nb)] == 0 && allowed(nb)) {
                visited[pred.offset(nb)] = 1;
                queue.push_back(nb);
            }
        }
    }
    if (out.voxels.size() < f.voxels) {
        return std::nullopt;
    }
    return out;
}

std::vector<Direction> direction_order(const FragmentSpec& f, std::uint64_t seed, std::size_t index) {
    if (f.direction) {
        return {*f.direction};
    }
    std::vector<Direction> dirs{Direction::PlusX, Direction::MinusX, Direction::PlusY,
                                Direction::MinusY, Direction::PlusZ, Direction::MinusZ};
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (index + 1));
    for (std::size_t i = dirs.size(); i > 1; --i) {
        const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(i)) % i;
        std::uint64_t x = rng();
        while (x < threshold) {
            x = rng();
        }
        std::swap(dirs[i - 1], dirs[static_cast<std::size_t>(x % i)]);
    }
    return dirs;
}

// Flood fill over voxels of one class. Returns per-voxel component ids
// (0 = not in class) and the component count.
std::pair<std::vector<int>, int> flood_components(const Grid& grid, Label c, bool vertex) {
    static const auto kVertexSteps = vertex_steps();
    const std::vector<Coord> face(kFaceSteps.begin(), kFaceSteps.end());
    const auto& steps = vertex ? kVertexSteps : face;
    std::vector<int> id(grid.size(), 0);
    int count = 0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (grid[n] != c || id[n] != 0) {
            continue;
        }
        ++count;
        std::vector<Coord> stack{grid.coord(n)};
        id[n] = count;
        while (!stack.empty()) {
            const Coord cur = stack.back();
            stack.pop_back();
            for (const auto& s : steps) {
                const Coord nb = add(cur, s);
                if (grid.inside(nb) && grid[nb] == c && id[grid.offset(nb)] == 0) {
                    id[grid.offset(nb)] = count;
                    stack.push_back(nb);
                }
            }
        }
    }
    return {std::move(id), count};
}

std::vector<Coord> boundary_voxels(const std::vector<std::uint8_t>& mask, const Grid& shape) {
    std::vector<Coord> out;
    for (std::size_t n = 0; n < mask.size(); ++n) {
        if (mask[n] == 0) {
            continue;
        }
        const Coord c = shape.coord(n);
        bool edge = false;
        for (const auto& s : kFaceSteps) {
            const Coord nb = add(c, s);
            if (!shape.inside(nb) || mask[shape.offset(nb)] == 0) {
                edge = true;
                break;
            }
        }
        if (edge) {
            out.push_back(c);
        }
    }
    return out;
}

long directed_squared(const std::vector<Coord>& from, const std::vector<Coord>& to) {
    long worst = 0;
    for (const auto& a : from) {
        long nearest = std::numeric_limits<long>::max();
        for (const auto& b : to) {
            nearest = std::min(nearest, squared_distance(a, b));
            if (nearest <= worst) {
                break; // cannot raise the maximum
            }
        }
        worst = std::max(worst, nearest);
    }
    return worst;
}

Metric brute_metric(const std::vector<std::uint8_t>& p, const std::vector<std::uint8_t>& g, const Grid& shape) {
    std::size_t np = 0;
    std::size_t ng = 0;
    std::size_t both = 0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        np += p[n];
        ng += g[n];
        both += p[n] & g[n];
    }
    Metric m;
    m.dice = np + ng == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(np + ng);
    if (np > 0 && ng > 0) {
        const auto bp = boundary_voxels(p, shape);
        const auto bg = boundary_voxels(g, shape);
        m.hd = std::sqrt(static_cast<double>(std::max(directed_squared(bp, bg), directed_squared(bg, bp))));
    }
    return m;
}

MetricsRecord brute_record(const Grid& pred, const Grid& gt, const std::string& case_id) {
    const auto select = [](const Grid& g, auto&& pred_fn) {
        std::vector<std::uint8_t> m(g.size());
        for (std::size_t n = 0; n < g.size(); ++n) {
            m[n] = pred_fn(g[n]) ? 1 : 0;
        }
        return m;
    };
    MetricsRecord r;
    r.case_id = case_id;
    const auto fg = [](Label l) { return l != kBackground; };
    r[Column::Whole] = brute_metric(select(pred, fg), select(gt, fg), gt);
    double dice_sum = 0.0;
    double hd_sum = 0.0;
    bool all_hd = true;
    for (Label c : kAllClasses) {
        const auto is_c = [c](Label l) { return l == c; };
        const Metric m = brute_metric(select(pred, is_c), select(gt, is_c), gt);
        r[column_of_class(c)] = m;
        dice_sum += m.dice;
        if (m.hd) {
            hd_sum += *m.hd;
        } else {
            all_hd = false;
        }
    }
    r[Column::Average].dice = dice_sum / kNumClasses;
    if (all_hd) {
        r[Column::Average].hd = hd_sum / kNumClasses;
    }
    return r;
}

FilterConfig parse_filter(const std::string& text) {
    FilterConfig cfg;
    if (text == "none" || text == "mcr") {
        cfg.mode = parse_filter_mode(text);
        return cfg;
    }
    if (text.starts_with("sdf:")) {
        cfg.mode = FilterMode::Sdf;
        try {
            cfg.threshold = std::stod(text.substr(4));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, fmt::format("bad filter '{}'", text));
        }
        return cfg;
    }
    throw Error(ErrorCode::ParseError, fmt::format("bad filter '{}', expected none|mcr|sdf:<t>", text));
}

std::string filter_text(const FilterConfig& cfg) {
    if (cfg.mode == FilterMode::Sdf) {
        return fmt::format("sdf:{:g}", cfg.threshold);
    }
    return std::string(to_string(cfg.mode));
}

json metric_json(const Metric& m) {
    return json{{"dice", m.dice}, {"hd", m.hd ? json(*m.hd) : json(nullptr)}};
}

Metric metric_from(const json& j) {
    Metric m;
    m.dice = j.at("dice").get<double>();
    if (!j.at("hd").is_null()) {
        m.hd = j.at("hd").get<double>();
    }
    return m;
}

std::string_view shape_name(Shape s) {
    return s == Shape::Ball ? "ball" : "box";
}

std::string_view kind_name(FragmentKind k) {
    return k == FragmentKind::Outlier ? "outlier" : "true";
}

FragmentKind parse_kind(const std::string& s) {
    if (s == "outlier") {
        return FragmentKind::Outlier;
    }
    if (s == "true" || s == "true_fragment") {
        return FragmentKind::TrueFragment;
    }
    throw Error(ErrorCode::ParseError, fmt::format("unknown fragment kind '{}'", s));
}

Label class_from(const json& j) {
    const int c = j.get<int>();
    if (c < 1 || c > kMaxLabel) {
        throw Error(ErrorCode::ParseError, fmt::format("class {} not in 1..{}", c, kMaxLabel));
    }
    return static_cast<Label>(c);
}

PhantomSpec spec_from(const json& j) {
    PhantomSpec s;
    s.case_id = j.value("case_id", s.case_id);
    const auto& d = j.at("dims");
    s.dims = {d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>(), d.at(2).get<std::size_t>()};
    if (j.contains("spacing")) {
        const auto& sp = j.at("spacing");
        s.spacing = {sp.at(0).get<float>(), sp.at(1).get<float>(), sp.at(2).get<float>()};
    }
    s.perturbation = j.value("perturbation", 0);
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.value("primitives", json::array())) {
        Primitive prim;
        const std::string shape = p.at("shape").get<std::string>();
        if (shape != "ball" && shape != "box") {
            throw Error(ErrorCode::ParseError, fmt::format("unknown shape '{}'", shape));
        }
        prim.shape = shape == "ball" ? Shape::Ball : Shape::Box;
        prim.class_id = class_from(p.at("class"));
        prim.center = p.at("center").get<Coord>();
        if (prim.shape == Shape::Ball) {
            prim.radius = p.at("radius").get<double>();
        } else {
            prim.half_extent = p.at("half_extent").get<Coord>();
        }
        s.primitives.push_back(prim);
    }
    for (const auto& f : j.value("fragments", json::array())) {
        FragmentSpec frag;
        frag.class_id = class_from(f.at("class"));
        frag.voxels = f.value("voxels", frag.voxels);
        frag.gap = f.at("gap").get<double>();
        frag.kind = parse_kind(f.value("kind", std::string("outlier")));
        if (f.contains("direction")) {
            frag.direction = parse_direction(f.at("direction").get<std::string>());
        }
        s.fragments.push_back(frag);
    }
    if (j.contains("truth_filters")) {
        s.truth_filters.clear();
        for (const auto& t : j.at("truth_filters")) {
            s.truth_filters.push_back(parse_filter(t.get<std::string>()));
        }
    }
    return s;
}

json spec_json(const PhantomSpec& s) {
    json prims = json::array();
    for (const auto& p : s.primitives) {
        json jp{{"shape", shape_name(p.shape)}, {"class", p.class_id}, {"center", p.center}};
        if (p.shape == Shape::Ball) {
            jp["radius"] = p.radius;
        } else {
            jp["half_extent"] = p.half_extent;
        }
        prims.push_back(std::move(jp));
    }
    json frags = json::array();
    for (const auto& f : s.fragments) {
        json jf{{"class", f.class_id}, {"voxels", f.voxels}, {"gap", f.gap}, {"kind", kind_name(f.kind)}};
        if (f.direction) {
            jf["direction"] = to_string(*f.direction);
        }
        frags.push_back(std::move(jf));
    }
    json filters = json::array();
    for (const auto& cfg : s.truth_filters) {
        filters.push_back(filter_text(cfg));
    }
    return json{
        {"case_id", s.case_id},
        {"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
        {"spacing", {s.spacing.x, s.spacing.y, s.spacing.z}},
        {"perturbation", s.perturbation},
        {"seed", s.seed},
        {"primitives", std::move(prims)},
        {"fragments", std::move(frags)},
        {"truth_filters", std::move(filters)},
    };
}

// Base anatomy for the standard suite: three balls in a row along y with a
// box below the middle one, leaving the +x half of the grid free.
PhantomSpec base_scene(std::string id) {
    PhantomSpec s;
    s.case_id = std::move(id);
    s.dims = {128, 64, 48};
    s.primitives = {
        {Shape::Ball, kSacrum, {24, 32, 24}, 7.0, {}},
        {Shape::Ball, kLeftHip, {24, 12, 24}, 6.0, {}},
        {Shape::Ball, kRightHip, {24, 52, 24}, 6.0, {}},
        {Shape::Box, kLumbarSpine, {24, 32, 7}, 0.0, {5, 5, 3}},
    };
    return s;
}

FragmentSpec fragment(Label c, std::size_t voxels, double gap, FragmentKind kind) {
    return {c, voxels, gap, kind, Direction::PlusX};
}

} // namespace

std::string_view to_string(Direction d) noexcept {
    switch (d) {
    case Direction::PlusX: return "+x";
    case Direction::MinusX: return "-x";
    case Direction::PlusY: return "+y";
    case Direction::MinusY: return "-y";
    case Direction::PlusZ: return "+z";
    case Direction::MinusZ: return "-z";
    }
    return "+x";
}

Direction parse_direction(std::string_view text) {
    for (const Direction d : {Direction::PlusX, Direction::MinusX, Direction::PlusY, Direction::MinusY,
                              Direction::PlusZ, Direction::MinusZ}) {
        if (to_string(d) == text) {
            return d;
        }
    }
    throw Error(ErrorCode::ParseError, fmt::format("unknown direction '{}'", text));
}

std::vector<FilterConfig> default_truth_filters() {
    std::vector<FilterConfig> out;
    FilterConfig none;
    none.mode = FilterMode::NoOp;
    out.push_back(none);
    FilterConfig mcr;
    mcr.mode = FilterMode::Mcr;
    out.push_back(mcr);
    for (const double t : {5.0, 15.0, 35.0, 55.0}) {
        FilterConfig sdf;
        sdf.threshold = t;
        out.push_back(sdf);
    }
    return out;
}

const ScenarioTruth& TruthSheet::scenario(const std::string& label) const {
    for (const auto& s : scenarios) {
        if (s.filter.label() == label) {
            return s;
        }
    }
    throw Error(ErrorCode::EmptyInput, fmt::format("truth sheet {} has no scenario '{}'", case_id, label));
}

Phantom generate(const PhantomSpec& spec) {
    validate_spec(spec);
    Grid gt(spec.dims);
    for (const auto& p : spec.primitives) {
        paint(gt, p);
    }
    Grid pred = gt;
    perturb(pred, spec.perturbation);

    // Fragment index per voxel, -1 elsewhere.
    std::vector<int> owner(pred.size(), -1);
    TruthSheet truth;
    truth.case_id = spec.case_id;
    for (std::size_t idx = 0; idx < spec.fragments.size(); ++idx) {
        const auto& f = spec.fragments[idx];
        std::vector<Coord> body;
        for (std::size_t n = 0; n < pred.size(); ++n) {
            if (pred[n] == f.class_id && owner[n] < 0) {
                body.push_back(pred.coord(n));
            }
        }
        if (body.empty()) {
            throw Error(ErrorCode::SpecOutOfBounds,
                        fmt::format("fragment {}: class {} has no structure to attach to", idx, f.class_id));
        }
        std::optional<Placement> placed;
        for (const Direction dir : direction_order(f, spec.seed, idx)) {
            placed = try_place(pred, gt, body, f, dir);
            if (placed) {
                break;
            }
        }
        if (!placed) {
            throw Error(ErrorCode::UnsatisfiableGap,
                        fmt::format("fragment {}: no room for {} voxels at gap {}", idx, f.voxels, f.gap));
        }
        for (const auto& c : placed->voxels) {
            pred[c] = f.class_id;
            owner[pred.offset(c)] = static_cast<int>(idx);
            if (f.kind == FragmentKind::TrueFragment) {
                gt[c] = f.class_id;
            }
        }
        FragmentTruth ft;
        ft.class_id = f.class_id;
        ft.kind = f.kind;
        ft.voxels = placed->voxels.size();
        ft.requested_gap = f.gap;
        ft.direction = placed->direction;
        ft.seed_voxel = {static_cast<std::size_t>(placed->seed[0]), static_cast<std::size_t>(placed->seed[1]),
                         static_cast<std::size_t>(placed->seed[2])};
        truth.fragments.push_back(ft);
    }

    // Verify: per class, one structure plus one component per fragment under
    // both 6- and 26-connectivity, the structure strictly the largest, and
    // every realised gap equal to the request.
    for (Label c : kAllClasses) {
        std::size_t fragments_of_class = 0;
        for (const auto& f : truth.fragments) {
            fragments_of_class += f.class_id == c ? 1 : 0;
        }
        const int face_count = flood_components(pred, c, false).second;
        const int vertex_count = flood_components(pred, c, true).second;
        if (face_count == 0) {
            continue;
        }
        const auto expected = static_cast<int>(fragments_of_class + 1);
        if (face_count != expected || vertex_count != expected) {
            throw Error(ErrorCode::UnsatisfiableGap,
                        fmt::format("class {}: {} (6-conn) / {} (26-conn) components, expected {}", c, face_count,
                                    vertex_count, expected));
        }
        std::size_t body_size = 0;
        for (std::size_t n = 0; n < pred.size(); ++n) {
            body_size += (pred[n] == c && owner[n] < 0) ? 1 : 0;
        }
        for (const auto& f : truth.fragments) {
            if (f.class_id == c && f.voxels >= body_size) {
                throw Error(ErrorCode::UnsatisfiableGap,
                            fmt::format("class {}: fragment of {} voxels is not smaller than the structure ({})", c,
                                        f.voxels, body_size));
            }
        }
    }
    for (std::size_t idx = 0; idx < truth.fragments.size(); ++idx) {
        auto& ft = truth.fragments[idx];
        std::vector<Coord> body;
        std::vector<Coord> frag;
        for (std::size_t n = 0; n < pred.size(); ++n) {
            if (pred[n] == ft.class_id) {
                if (owner[n] < 0) {
                    body.push_back(pred.coord(n));
                } else if (owner[n] == static_cast<int>(idx)) {
                    frag.push_back(pred.coord(n));
                }
            }
        }
        long best = std::numeric_limits<long>::max();
        for (const auto& a : frag) {
            for (const auto& b : body) {
                best = std::min(best, squared_distance(a, b));
            }
        }
        ft.realized_gap = std::sqrt(static_cast<double>(best));
        if (ft.realized_gap != ft.requested_gap) {
            throw Error(ErrorCode::UnsatisfiableGap, fmt::format("fragment {}: realised gap {} != requested {}", idx,
                                                                 ft.realized_gap, ft.requested_gap));
        }
    }

    for (const auto& cfg : spec.truth_filters) {
        ScenarioTruth sc;
        sc.filter = cfg;
        Grid filtered = pred;
        for (std::size_t idx = 0; idx < truth.fragments.size(); ++idx) {
            const bool keep = cfg.mode == FilterMode::NoOp ||
                              (cfg.mode == FilterMode::Sdf && truth.fragments[idx].realized_gap <= cfg.threshold);
            if (keep) {
                sc.kept_fragments.push_back(idx);
                continue;
            }
            for (std::size_t n = 0; n < filtered.size(); ++n) {
                if (owner[n] == static_cast<int>(idx)) {
                    filtered[n] = kBackground;
                }
            }
        }
        sc.expected = brute_record(filtered, gt, spec.case_id);
        truth.scenarios.push_back(std::move(sc));
    }

    return {LabelVolume(spec.dims, spec.spacing, std::move(gt.data()), spec.case_id),
            LabelVolume(spec.dims, spec.spacing, std::move(pred.data()), spec.case_id), std::move(truth)};
}

std::vector<PhantomSpec> standard_suite() {
    std::vector<PhantomSpec> suite;
    for (const double gap : {3.0, 10.0, 20.0, 40.0, 60.0}) {
        auto s = base_scene(fmt::format("gap_{:02}", static_cast<int>(gap)));
        s.fragments = {fragment(kSacrum, 50, gap, FragmentKind::Outlier)};
        suite.push_back(std::move(s));
    }
    {
        auto s = base_scene("far_outliers_a");
        s.perturbation = 1;
        s.fragments = {fragment(kLeftHip, 50, 40.0, FragmentKind::Outlier),
                       fragment(kLumbarSpine, 50, 60.0, FragmentKind::Outlier)};
        suite.push_back(std::move(s));
    }
    {
        auto s = base_scene("far_outliers_b");
        s.fragments = {fragment(kSacrum, 80, 45.0, FragmentKind::Outlier),
                       fragment(kRightHip, 80, 50.0, FragmentKind::Outlier)};
        suite.push_back(std::move(s));
    }
    {
        auto s = base_scene("near_true_a");
        s.fragments = {fragment(kRightHip, 60, 3.0, FragmentKind::TrueFragment)};
        suite.push_back(std::move(s));
    }
    {
        auto s = base_scene("near_true_b");
        s.fragments = {fragment(kSacrum, 120, 10.0, FragmentKind::TrueFragment),
                       fragment(kLeftHip, 50, 60.0, FragmentKind::Outlier)};
        suite.push_back(std::move(s));
    }
    {
        auto s = base_scene("clean");
        s.perturbation = 1;
        suite.push_back(std::move(s));
    }
    return suite;
}

std::string spec_to_json(const PhantomSpec& spec) {
    return spec_json(spec).dump(2) + "\n";
}

std::vector<PhantomSpec> specs_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        std::vector<PhantomSpec> out;
        if (j.contains("phantoms")) {
            for (const auto& s : j.at("phantoms")) {
                out.push_back(spec_from(s));
            }
        } else {
            out.push_back(spec_from(j));
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::string truth_to_json(const TruthSheet& truth) {
    json frags = json::array();
    for (const auto& f : truth.fragments) {
        frags.push_back(json{
            {"class", f.class_id},
            {"kind", kind_name(f.kind)},
            {"voxels", f.voxels},
            {"requested_gap", f.requested_gap},
            {"realized_gap", f.realized_gap},
            {"direction", to_string(f.direction)},
            {"seed_voxel", {f.seed_voxel.i, f.seed_voxel.j, f.seed_voxel.k}},
        });
    }
    json scenarios = json::array();
    for (const auto& s : truth.scenarios) {
        json cols = json::object();
        for (const Column c : kColumns) {
            cols[std::string(column_name(c))] = metric_json(s.expected[c]);
        }
        scenarios.push_back(json{
            {"filter", filter_text(s.filter)},
            {"label", s.filter.label()},
            {"kept_fragments", s.kept_fragments},
            {"expected", std::move(cols)},
        });
    }
    const json j{
        {"schema", "pelvseg.truth"},
        {"version", 1},
        {"case_id", truth.case_id},
        {"fragments", std::move(frags)},
        {"scenarios", std::move(scenarios)},
    };
    return j.dump(2) + "\n";
}

TruthSheet truth_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        TruthSheet t;
        t.case_id = j.at("case_id").get<std::string>();
        for (const auto& f : j.at("fragments")) {
            FragmentTruth ft;
            ft.class_id = class_from(f.at("class"));
            ft.kind = parse_kind(f.at("kind").get<std::string>());
            ft.voxels = f.at("voxels").get<std::size_t>();
            ft.requested_gap = f.at("requested_gap").get<double>();
            ft.realized_gap = f.at("realized_gap").get<double>();
            ft.direction = parse_direction(f.at("direction").get<std::string>());
            const auto& sv = f.at("seed_voxel");
            ft.seed_voxel = {sv.at(0).get<std::size_t>(), sv.at(1).get<std::size_t>(), sv.at(2).get<std::size_t>()};
            t.fragments.push_back(ft);
        }
        for (const auto& s : j.at("scenarios")) {
            ScenarioTruth sc;
            sc.filter = parse_filter(s.at("filter").get<std::string>());
            sc.kept_fragments = s.at("kept_fragments").get<std::vector<std::size_t>>();
            sc.expected.case_id = t.case_id;
            for (const Column c : kColumns) {
                sc.expected[c] = metric_from(s.at("expected").at(std::string(column_name(c))));
            }
            t.scenarios.push_back(std::move(sc));
        }
        return t;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

} // namespace pelvseg::phantom
