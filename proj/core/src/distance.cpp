#include "pelvseg/distance.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pelvseg/error.hpp"

namespace pelvseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scratch for the 1-D transform, sized to the longest axis.
struct Envelope {
    std::vector<double> f;
    std::vector<std::size_t> site;
    std::vector<double> boundary;

    explicit Envelope(std::size_t n) : f(n), site(n), boundary(n + 1) {}
};

// In-place 1-D squared distance over a strided line:
//   out[q] = min_p f[p] + w2 * (q - p)^2
// Infinite samples contribute no parabola.
void transform_line(double* line, std::size_t n, std::size_t stride, double w2, Envelope& env) {
    for (std::size_t q = 0; q < n; ++q) {
        env.f[q] = line[q * stride];
    }

    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
        const double fq = env.f[q];
        if (fq == kInf) {
            continue;
        }
        const auto qd = static_cast<double>(q);
        if (!any) {
            env.site[0] = q;
            env.boundary[0] = -kInf;
            env.boundary[1] = kInf;
            any = true;
            continue;
        }
        // boundary[0] is -inf, so the scan stops at the first site at worst.
        double s = 0.0;
        while (true) {
            const auto vd = static_cast<double>(env.site[k]);
            s = ((fq + w2 * qd * qd) - (env.f[env.site[k]] + w2 * vd * vd)) / (2.0 * w2 * (qd - vd));
            if (s > env.boundary[k]) {
                break;
            }
            --k;
        }
        ++k;
        env.site[k] = q;
        env.boundary[k] = s;
        env.boundary[k + 1] = kInf;
    }
    if (!any) {
        return; // whole line stays infinite
    }

    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const auto qd = static_cast<double>(q);
        while (env.boundary[k + 1] < qd) {
            ++k;
        }
        const auto delta = qd - static_cast<double>(env.site[k]);
        line[q * stride] = env.f[env.site[k]] + w2 * delta * delta;
    }
}

std::array<double, 3> axis_weights(const Spacing& spacing, DistanceUnits units) {
    if (units == DistanceUnits::Voxel) {
        return {1.0, 1.0, 1.0};
    }
    return {static_cast<double>(spacing.x) * spacing.x, static_cast<double>(spacing.y) * spacing.y,
            static_cast<double>(spacing.z) * spacing.z};
}

} // namespace

DistanceUnits parse_units(std::string_view text) {
    if (text == "voxel" || text == "voxels") {
        return DistanceUnits::Voxel;
    }
    if (text == "mm") {
        return DistanceUnits::Millimeter;
    }
    throw Error(ErrorCode::UsageError, fmt::format("unknown distance units '{}'", text));
}

std::string_view to_string(DistanceUnits units) noexcept {
    return units == DistanceUnits::Voxel ? "voxel" : "mm";
}

DistanceField::DistanceField(Dims dims, Spacing spacing, DistanceUnits units, std::vector<double> values)
    : dims_(dims), spacing_(spacing), units_(units), values_(std::move(values)) {
    if (values_.size() != dims_.voxel_count()) {
        throw Error(ErrorCode::InvalidVolume, "distance field size does not match dims");
    }
}

std::vector<double> squared_edt(const BinaryMask& mask, DistanceUnits units) {
    if (mask.none()) {
        throw Error(ErrorCode::EmptyMask, "distance transform of an empty mask");
    }
    const Dims& d = mask.dims();
    const auto w2 = axis_weights(mask.spacing(), units);

    std::vector<double> field(d.voxel_count());
    for (std::size_t n = 0; n < field.size(); ++n) {
        field[n] = mask.test(n) ? 0.0 : kInf;
    }

    Envelope env(std::max({d.nx, d.ny, d.nz}));
    for (std::size_t k = 0; k < d.nz; ++k) {
        for (std::size_t j = 0; j < d.ny; ++j) {
            transform_line(field.data() + d.offset(0, j, k), d.nx, 1, w2[0], env);
        }
    }
    for (std::size_t k = 0; k < d.nz; ++k) {
        for (std::size_t i = 0; i < d.nx; ++i) {
            transform_line(field.data() + d.offset(i, 0, k), d.ny, d.nx, w2[1], env);
        }
    }
    const std::size_t plane = d.nx * d.ny;
    for (std::size_t j = 0; j < d.ny; ++j) {
        for (std::size_t i = 0; i < d.nx; ++i) {
            transform_line(field.data() + d.offset(i, j, 0), d.nz, plane, w2[2], env);
        }
    }
    return field;
}

DistanceField edt(const BinaryMask& mask, DistanceUnits units) {
    auto field = squared_edt(mask, units);
    for (auto& v : field) {
        v = std::sqrt(v);
    }
    return {mask.dims(), mask.spacing(), units, std::move(field)};
}

BinaryMask face_boundary(const BinaryMask& mask, bool border_is_outside) {
    const Dims& d = mask.dims();
    std::vector<std::uint8_t> bits(d.voxel_count(), 0);
    for (std::size_t k = 0; k < d.nz; ++k) {
        for (std::size_t j = 0; j < d.ny; ++j) {
            for (std::size_t i = 0; i < d.nx; ++i) {
                if (!mask.test(i, j, k)) {
                    continue;
                }
                const bool on_border = i == 0 || j == 0 || k == 0 || i + 1 == d.nx || j + 1 == d.ny || k + 1 == d.nz;
                bool edge = border_is_outside && on_border;
                edge = edge || (i > 0 && !mask.test(i - 1, j, k)) || (i + 1 < d.nx && !mask.test(i + 1, j, k)) ||
                       (j > 0 && !mask.test(i, j - 1, k)) || (j + 1 < d.ny && !mask.test(i, j + 1, k)) ||
                       (k > 0 && !mask.test(i, j, k - 1)) || (k + 1 < d.nz && !mask.test(i, j, k + 1));
                bits[d.offset(i, j, k)] = edge ? 1 : 0;
            }
        }
    }
    return {d, mask.spacing(), std::move(bits)};
}

DistanceField signed_distance(const BinaryMask& mask, DistanceUnits units) {
    if (mask.none()) {
        throw Error(ErrorCode::EmptyMask, "signed distance of an empty mask");
    }
    const BinaryMask outside = complement(mask);
    if (outside.none()) {
        throw Error(ErrorCode::FullMask, "signed distance of a full mask has no outside");
    }
    const auto to_mask = squared_edt(mask, units);
    const auto to_outside = squared_edt(outside, units);
    const BinaryMask zero_level = face_boundary(mask, false);

    std::vector<double> values(to_mask.size());
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (!mask.test(n)) {
            values[n] = std::sqrt(to_mask[n]);
        } else if (zero_level.test(n)) {
            values[n] = 0.0;
        } else {
            values[n] = -std::sqrt(to_outside[n]);
        }
    }
    return {mask.dims(), mask.spacing(), units, std::move(values)};
}

} // namespace pelvseg
