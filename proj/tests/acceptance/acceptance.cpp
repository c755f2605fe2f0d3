// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   pelvseg_acceptance [--seed N] [--only NAME]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cli.hpp"
#include "nifti_fixture.hpp"
#include "oracles.hpp"
#include "pelvseg/components.hpp"
#include "pelvseg/dataset.hpp"
#include "pelvseg/distance.hpp"
#include "pelvseg/metrics.hpp"
#include "pelvseg/nifti.hpp"
#include "pelvseg/phantom.hpp"
#include "pelvseg/postproc.hpp"
#include "pelvseg/report.hpp"

using namespace pelvseg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

FilterConfig sdf(double t) {
    FilterConfig c;
    c.threshold = t;
    return c;
}

FilterConfig mcr() {
    FilterConfig c;
    c.mode = FilterMode::Mcr;
    return c;
}

// Exhaustive within a proven bound: after scanning every voxel of Chebyshev
// radius <= r, an unseen seed is at least r+1 away.
std::int64_t nearest_seed_cube(const BinaryMask& m, const VoxelIndex& p) {
    const Dims d = m.dims();
    std::int64_t best = INT64_MAX;
    const long maxr = static_cast<long>(std::max({d.nx, d.ny, d.nz}));
    for (long r = 0; r <= maxr; ++r) {
        for (long dk = -r; dk <= r; ++dk) {
            for (long dj = -r; dj <= r; ++dj) {
                for (long di = -r; di <= r; ++di) {
                    if (std::max({std::labs(di), std::labs(dj), std::labs(dk)}) != r) {
                        continue;
                    }
                    const long i = static_cast<long>(p.i) + di;
                    const long j = static_cast<long>(p.j) + dj;
                    const long k = static_cast<long>(p.k) + dk;
                    if (i < 0 || j < 0 || k < 0 || i >= static_cast<long>(d.nx) || j >= static_cast<long>(d.ny) ||
                        k >= static_cast<long>(d.nz)) {
                        continue;
                    }
                    if (m.test(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                               static_cast<std::size_t>(k))) {
                        best = std::min(best, di * di + dj * dj + dk * dk);
                    }
                }
            }
        }
        if (best <= (r + 1) * (r + 1)) {
            break;
        }
    }
    return best;
}

Outcome edt_exactness(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> side(16, 32);
    std::uniform_real_distribution<double> log_density(std::log(1e-4), std::log(0.6));
    double edt_time = 0.0;
    const auto t0 = Clock::now();
    std::size_t mismatches = 0;
    std::size_t voxels = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Dims d{side(rng), side(rng), side(rng)};
        auto m = oracle::random_mask(rng, d, std::exp(log_density(rng)));
        if (m.none()) {
            std::vector<std::uint8_t> bits(d.voxel_count(), 0);
            bits[rng() % bits.size()] = 1;
            m = BinaryMask(d, {}, std::move(bits));
        }
        const auto t1 = Clock::now();
        const auto got = squared_edt(m);
        edt_time += seconds_since(t1);

        const auto seeds = oracle::voxels_of(m);
        for (std::size_t n = 0; n < got.size(); ++n) {
            const VoxelIndex p = d.index(n);
            std::int64_t want = INT64_MAX;
            if (seeds.size() <= 1500) {
                for (const auto& s : seeds) {
                    want = std::min(want, oracle::sq_dist(p, s));
                }
            } else {
                want = nearest_seed_cube(m, p);
            }
            const bool integral = got[n] == std::floor(got[n]);
            if (!integral || static_cast<std::int64_t>(got[n]) != want) {
                ++mismatches;
            }
        }
        voxels += got.size();
    }
    const double total = seconds_since(t0);
    return {mismatches == 0 && edt_time < 60.0,
            fmt::format("200 masks, {} voxels, {} mismatches; edt {:.2f} s (< 60 s), with oracle {:.1f} s", voxels,
                        mismatches, edt_time, total)};
}

Outcome ccl_correctness(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> side(4, 20);
    std::uniform_real_distribution<double> density(0.05, 0.65);
    std::size_t partition_fail = 0;
    std::size_t monotone_fail = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = oracle::random_mask(rng, {side(rng), side(rng), side(rng)}, density(rng));
        ComponentId counts[3] = {};
        int idx = 0;
        for (auto conn : {Connectivity::Face6, Connectivity::Edge18, Connectivity::Vertex26}) {
            const auto cs = label_components(m, conn);
            const auto want = oracle::flood_fill(m, conn);
            if (cs.count() != oracle::count_ids(want) || !oracle::same_partition(cs.ids(), want)) {
                ++partition_fail;
            }
            counts[idx++] = cs.count();
        }
        if (!(counts[2] <= counts[1] && counts[1] <= counts[0])) {
            ++monotone_fail;
        }
    }
    return {partition_fail == 0 && monotone_fail == 0,
            fmt::format("200 masks x 3 connectivities: {} partition mismatches, {} monotonicity violations",
                        partition_fail, monotone_fail)};
}

Outcome metrics_oracle(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> side(1, 12);
    std::uniform_real_distribution<double> density(0.02, 0.7);
    std::size_t dice_fail = 0;
    double worst = 0.0;
    int pairs = 0;
    while (pairs < 200) {
        const Dims d{side(rng), side(rng), side(rng)};
        const auto p = oracle::random_mask(rng, d, density(rng));
        const auto g = oracle::random_mask(rng, d, density(rng));
        if (p.none() || g.none()) {
            continue;
        }
        ++pairs;
        if (dice(p, g) != oracle::brute_dice(p, g)) {
            ++dice_fail;
        }
        worst = std::max(worst, std::abs(hausdorff(p, g) - oracle::brute_hausdorff(p, g)));
    }
    return {dice_fail == 0 && worst <= 1e-9,
            fmt::format("200 nonempty pairs <= 12^3: {} dice mismatches, max |HD - oracle| = {:.3g} (<= 1e-9)",
                        dice_fail, worst)};
}

// Fragment voxels of one class: everything outside the largest component.
BinaryMask fragments_of(const LabelVolume& pred, Label c) {
    const auto all = class_mask(pred, c);
    const auto body = class_mask(mcr_filter(pred), c);
    return intersect(all, complement(body));
}

Outcome filter_semantics() {
    const double thresholds[] = {5, 15, 35, 55};
    std::size_t keep_checks = 0;
    std::size_t keep_fail = 0;
    std::size_t sandwich_fail = 0;
    std::size_t monotone_fail = 0;
    std::size_t truth_fail = 0;
    std::vector<std::string> notes;
    for (const auto& spec : phantom::standard_suite()) {
        const auto ph = phantom::generate(spec);
        const auto m = mcr_filter(ph.pred);
        std::optional<LabelVolume> prev;
        for (double t : thresholds) {
            const auto s = sdf_filter(ph.pred, sdf(t));
            for (Label c : kAllClasses) {
                if (!is_subset(class_mask(m, c), class_mask(s, c)) ||
                    !is_subset(class_mask(s, c), class_mask(ph.pred, c))) {
                    ++sandwich_fail;
                }
                if (prev && !is_subset(class_mask(*prev, c), class_mask(s, c))) {
                    ++monotone_fail;
                }
            }
            prev = s;
            // The truth sheet's scenario of this threshold must equal the filtered volume's metrics.
            const auto& sc = ph.truth.scenario(sdf(t).label());
            const auto got = evaluate_case(s, ph.gt);
            for (Column col : kColumns) {
                const bool hd_same = got[col].hd.has_value() == sc.expected[col].hd.has_value() &&
                                     (!got[col].hd || std::abs(*got[col].hd - *sc.expected[col].hd) <= 1e-9);
                if (got[col].dice != sc.expected[col].dice || !hd_same) {
                    ++truth_fail;
                }
            }
        }
        if (spec.case_id.rfind("gap_", 0) != 0) {
            continue;
        }
        // Gap scenes: one class-1 fragment at the named gap.
        const double gap = ph.truth.fragments.at(0).realized_gap;
        const auto frag = fragments_of(ph.pred, kSacrum);
        for (double t : thresholds) {
            const auto out = class_mask(sdf_filter(ph.pred, sdf(t)), kSacrum);
            const bool kept = is_subset(frag, out);
            const bool erased = intersect(frag, out).none();
            ++keep_checks;
            if (!(gap <= t ? kept : erased)) {
                ++keep_fail;
                notes.push_back(fmt::format("{} t={}", spec.case_id, t));
            }
        }
    }
    return {keep_fail == 0 && sandwich_fail == 0 && monotone_fail == 0 && truth_fail == 0 && keep_checks == 20,
            fmt::format("gaps {{3,10,20,40,60}} x t {{5,15,35,55}}: {}/{} keep decisions correct; sandwich "
                        "violations {}, t-monotonicity violations {}, truth-sheet mismatches {}{}",
                        keep_checks - keep_fail, keep_checks, sandwich_fail, monotone_fail, truth_fail,
                        notes.empty() ? "" : " [" + fmt::format("{}", fmt::join(notes, ", ")) + "]")};
}

Outcome directional_analogue() {
    std::vector<MetricsRecord> none_r;
    std::vector<MetricsRecord> mcr_r;
    std::vector<MetricsRecord> sdf_r;
    bool near_kept = true;
    bool mcr_deletes_near = true;
    bool outlier_only_match = true;
    std::size_t outlier_only = 0;
    std::size_t near_scenes = 0;
    FilterConfig none;
    none.mode = FilterMode::NoOp;
    for (const auto& spec : phantom::standard_suite()) {
        const auto ph = phantom::generate(spec);
        const auto m = apply_filter(ph.pred, mcr());
        const auto s = apply_filter(ph.pred, sdf(35));
        none_r.push_back(evaluate_case(ph.pred, ph.gt));
        mcr_r.push_back(evaluate_case(m, ph.gt));
        sdf_r.push_back(evaluate_case(s, ph.gt));

        bool has_true = false;
        bool all_far = !ph.truth.fragments.empty();
        for (std::size_t i = 0; i < ph.truth.fragments.size(); ++i) {
            const auto& f = ph.truth.fragments[i];
            has_true = has_true || f.kind == phantom::FragmentKind::TrueFragment;
            all_far = all_far && f.kind == phantom::FragmentKind::Outlier && f.realized_gap > 35.0;
        }
        if (has_true) {
            ++near_scenes;
            for (const auto& f : ph.truth.fragments) {
                if (f.kind != phantom::FragmentKind::TrueFragment) {
                    continue;
                }
                const auto& v = f.seed_voxel;
                near_kept = near_kept && s.at(v) == f.class_id;
                mcr_deletes_near = mcr_deletes_near && m.at(v) == kBackground;
            }
            const auto& sd = sdf_r.back()[Column::Average];
            const auto& md = mcr_r.back()[Column::Average];
            near_kept = near_kept && sd.dice > md.dice;
        }
        if (all_far) {
            ++outlier_only;
            outlier_only_match = outlier_only_match && sdf_r.back() == mcr_r.back();
        }
    }
    const auto sn = aggregate(none_r, "w/o Post");
    const auto sm = aggregate(mcr_r, "MCR");
    const auto ss = aggregate(sdf_r, "SDF(35)");
    const double hn = *sn[Column::Average].hd;
    const double hm = *sm[Column::Average].hd;
    const double hs = *ss[Column::Average].hd;
    const bool ordering = hn > hm;
    return {ordering && near_kept && mcr_deletes_near && outlier_only_match && near_scenes > 0 && outlier_only > 0,
            fmt::format("mean Average HD w/o {:.2f} > MCR {:.2f} (SDF(35) {:.2f}); mean Average Dice w/o {:.4f}, "
                        "MCR {:.4f}, SDF(35) {:.4f}; {} near-fragment scenes kept by SDF(35) and deleted by MCR: {}; "
                        "{} outlier-only scenes SDF(35) == MCR: {}",
                        hn, hm, hs, sn[Column::Average].dice, sm[Column::Average].dice, ss[Column::Average].dice,
                        near_scenes, near_kept && mcr_deletes_near ? "yes" : "no", outlier_only,
                        outlier_only_match ? "yes" : "no")};
}

Outcome percentage_arithmetic() {
    const auto summary_with_hd = [](double hd, const char* label) {
        MetricsRecord r;
        r.case_id = "x";
        for (auto& m : r.columns) {
            m = {0.9, hd};
        }
        const MetricsRecord rs[] = {r};
        return aggregate(rs, label);
    };
    const auto w = summary_with_hd(28.43, "w/o Post");
    const auto m = summary_with_hd(6.48, "MCR");
    const auto s = summary_with_hd(5.50, "SDF(35)");
    const auto a = fmt::format("{:.1f}", *hd_reduction(w, s));
    const auto b = fmt::format("{:.1f}", *hd_reduction(m, s));
    return {a == "80.7" && b == "15.1",
            fmt::format("(28.43 -> 5.50) = {}% (want 80.7), (6.48 -> 5.50) = {}% (want 15.1)", a, b)};
}

Outcome split_protocol(std::uint64_t seed) {
    dataset::Manifest m;
    for (const auto& row : dataset::kPublishedSplits) {
        auto& cases = m.sub_datasets[std::string(row.name)];
        for (std::size_t i = 0; i < row.counts.total(); ++i) {
            cases.push_back({fmt::format("{}_{:04d}", row.name, i), "", std::nullopt, {64, 64, 64}, {}});
        }
    }
    const auto over = dataset::split(m, seed, dataset::SplitRule::Table1Override);
    std::size_t matched = 0;
    std::vector<std::string> triples;
    for (const auto& row : dataset::kPublishedSplits) {
        const auto c = over.subsets.at(std::string(row.name)).counts();
        matched += c == row.counts ? 1 : 0;
        triples.push_back(fmt::format("{} {}/{}/{}", row.name, c.train, c.val, c.test));
    }
    const auto r1 = dataset::split_to_json(dataset::split(m, seed, dataset::SplitRule::Fractional));
    const auto r2 = dataset::split_to_json(dataset::split(m, seed, dataset::SplitRule::Fractional));
    const auto r3 = dataset::split_to_json(dataset::split(m, seed, dataset::SplitRule::Fractional));
    const bool deterministic = r1 == r2 && r2 == r3;
    return {matched == dataset::kPublishedSplits.size() && deterministic,
            fmt::format("override {}/6 triples ({}); fractional seed {} identical over 3 runs: {}", matched,
                        fmt::join(triples, ", "), seed, deterministic ? "yes" : "no")};
}

Outcome nifti_round_trip(std::uint64_t seed, const fs::path& dir) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> side(1, 24);
    std::uniform_real_distribution<float> sp(0.2F, 5.0F);
    std::uniform_real_distribution<double> density(0.0, 1.0);
    std::size_t failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Dims d{side(rng), side(rng), side(rng)};
        const auto v = oracle::random_labels(rng, d, density(rng), {sp(rng), sp(rng), sp(rng)})
                           .with_case_id(fmt::format("rt{:03d}", trial));
        for (bool gz : {false, true}) {
            const auto p = dir / fmt::format("rt{:03d}{}", trial, gz ? ".nii.gz" : ".nii");
            nifti::write_label_nifti(v, p, gz);
            const auto back = nifti::read_label_nifti(p);
            failures += back == v ? 0 : 1;
        }
    }
    const auto be = dir / "big_endian.nii";
    const auto bytes = oracle::fixture_2x2x2(true);
    std::ofstream(be, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    const auto img = nifti::read_label_image(be);
    const std::vector<Label> want{0, 1, 2, 3, 4, 0, 1, 2};
    const bool swapped_ok = img.summary.endian == nifti::Endian::Big && img.volume.dims() == Dims{2, 2, 2} &&
                            img.volume.spacing() == Spacing{0.85F, 0.85F, 0.80F} &&
                            std::equal(want.begin(), want.end(), img.volume.labels().begin());
    return {failures == 0 && swapped_ok,
            fmt::format("100 volumes x {{plain, gzip}}: {} mismatches; byte-swapped fixture read: {}", failures,
                        swapped_ok ? "ok" : "wrong")};
}

int run_cli(std::vector<std::string> args, std::string* err_out = nullptr) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    if (err_out) {
        *err_out = err.str();
    }
    return code;
}

Outcome end_to_end_determinism(const fs::path& dir) {
    std::string err;
    if (run_cli({"phantom", "--suite", "-o", (dir / "corpus").string()}, &err) != 0) {
        return {false, "phantom corpus generation failed: " + err};
    }
    std::vector<std::string> outputs;
    for (const char* jobs : {"1", "8"}) {
        const auto tag = std::string("j") + jobs;
        for (const char* mode : {"none", "mcr", "sdf"}) {
            const auto pp = dir / (tag + "_pp_" + mode);
            if (run_cli({"postprocess", (dir / "corpus/pred").string(), "-o", pp.string(), "--mode", mode, "--jobs",
                         jobs},
                        &err) != 0) {
                return {false, "postprocess failed: " + err};
            }
            const auto rec = dir / (tag + "_" + mode + ".jsonl");
            const auto tab = dir / (tag + "_" + mode + ".csv");
            if (run_cli({"evaluate", "--pred", pp.string(), "--gt", (dir / "corpus/gt").string(), "--records",
                         rec.string(), "--table", tab.string(), "--label", mode, "--jobs", jobs},
                        &err) != 0) {
                return {false, "evaluate failed: " + err};
            }
        }
        const auto md = dir / (tag + "_report.md");
        if (run_cli({"report", "--input", "w/o Post=" + (dir / (tag + "_none.jsonl")).string(), "--input",
                     "MCR=" + (dir / (tag + "_mcr.jsonl")).string(), "--input",
                     "SDF(35)=" + (dir / (tag + "_sdf.jsonl")).string(), "--format", "markdown", "--change-from",
                     "w/o Post", "-o", md.string()},
                    &err) != 0) {
            return {false, "report failed: " + err};
        }
        std::string all;
        for (const char* mode : {"none", "mcr", "sdf"}) {
            all += slurp(dir / (tag + "_" + mode + ".jsonl"));
            all += slurp(dir / (tag + "_" + mode + ".csv"));
            for (const auto& e : fs::directory_iterator(dir / (tag + "_pp_" + mode))) {
                all += slurp(e.path());
            }
        }
        all += slurp(md);
        outputs.push_back(std::move(all));
    }
    const bool same = outputs[0] == outputs[1] && !outputs[0].empty();
    return {same, fmt::format("phantom corpus (10 cases) postprocess + evaluate + report, --jobs 1 vs --jobs 8: {} "
                              "({} bytes compared)",
                              same ? "byte-identical" : "DIFFERENT", outputs[0].size())};
}

} // namespace

int main(int argc, char** argv) {
    std::uint64_t seed = 20240607;
    std::string only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--seed" && i + 1 < argc) {
            seed = std::stoull(argv[++i]);
        } else if (a == "--only" && i + 1 < argc) {
            only = argv[++i];
        } else {
            std::cerr << "usage: pelvseg_acceptance [--seed N] [--only NAME]\n";
            return 2;
        }
    }

    const fs::path dir = fs::temp_directory_path() / fmt::format("pelvseg_acceptance_{}", seed);
    fs::remove_all(dir);
    fs::create_directories(dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"edt-exactness", [&] { return edt_exactness(seed); }},
        {"ccl-correctness", [&] { return ccl_correctness(seed + 1); }},
        {"metrics-oracle", [&] { return metrics_oracle(seed + 2); }},
        {"filter-semantics", [] { return filter_semantics(); }},
        {"directional-outlier-analogue", [] { return directional_analogue(); }},
        {"percentage-arithmetic", [] { return percentage_arithmetic(); }},
        {"split-protocol", [&] { return split_protocol(seed); }},
        {"nifti-round-trip", [&] { return nifti_round_trip(seed + 3, dir); }},
        {"end-to-end-determinism", [&] { return end_to_end_determinism(dir); }},
    };

    int failed = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && name != only) {
            continue;
        }
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << fmt::format("{} {:<30} {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", name, o.detail,
                                 seconds_since(t0))
                  << std::flush;
    }
    fs::remove_all(dir);
    std::cout << (failed == 0 ? "acceptance: all criteria passed\n"
                              : fmt::format("acceptance: {} criteria failed\n", failed));
    return failed == 0 ? 0 : 1;
}
