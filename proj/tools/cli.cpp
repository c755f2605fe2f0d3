#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pelvseg/components.hpp"
#include "pelvseg/dataset.hpp"
#include "pelvseg/error.hpp"
#include "pelvseg/metrics.hpp"
#include "pelvseg/nifti.hpp"
#include "pelvseg/phantom.hpp"
#include "pelvseg/postproc.hpp"
#include "pelvseg/report.hpp"
#include "pelvseg/version.hpp"

namespace pelvseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CaseFailure {
    std::string case_id;
    std::string path;
    ErrorCode code = ErrorCode::IoError;
    std::string message;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
    }
}

// {"<source label>": <canonical label>, ...}
LabelMapping load_mapping(const fs::path& path) {
    try {
        const json j = json::parse(read_text(path));
        LabelMapping m;
        for (const auto& [key, value] : j.items()) {
            m[std::stoll(key)] = value.get<std::int64_t>();
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path.string(), e.what()));
    } catch (const std::invalid_argument&) {
        throw Error(ErrorCode::ParseError, fmt::format("{}: mapping keys must be integers", path.string()));
    }
}

nifti::ReadOptions read_options(const std::string& relabel_path) {
    nifti::ReadOptions opts;
    if (!relabel_path.empty()) {
        opts.relabel = load_mapping(relabel_path);
    }
    return opts;
}

std::vector<fs::path> list_nifti(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && nifti::has_nifti_extension(e.path())) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return nifti::case_id_from_path(a) < nifti::case_id_from_path(b);
    });
    return out;
}

bool same_file(const fs::path& a, const fs::path& b) {
    std::error_code ec;
    return fs::weakly_canonical(a, ec) == fs::weakly_canonical(b, ec);
}

bool is_gzip_name(const fs::path& p) {
    return p.filename().string().ends_with(".gz");
}

void report_failures(const std::vector<CaseFailure>& failures, const std::string& errors_path, std::ostream& err) {
    for (const auto& f : failures) {
        err << fmt::format("error: {} ({}): {}\n", f.case_id, f.path, f.message);
    }
    if (!errors_path.empty()) {
        std::string text;
        for (const auto& f : failures) {
            text += json{{"case_id", f.case_id}, {"path", f.path}, {"code", to_string(f.code)}, {"message", f.message}}
                        .dump();
            text += '\n';
        }
        write_text(errors_path, text);
    }
}

// Per-case fan-out shared by the batch commands: results land at their
// input index, so output order never depends on scheduling.
template <typename Result>
struct Batch {
    std::vector<std::optional<Result>> results;
    std::vector<std::optional<CaseFailure>> failures;

    std::vector<CaseFailure> failure_list() const {
        std::vector<CaseFailure> out;
        for (const auto& f : failures) {
            if (f) {
                out.push_back(*f);
            }
        }
        return out;
    }
};

template <typename Result, typename Fn>
Batch<Result> run_batch(std::size_t count, unsigned jobs, bool strict, const std::vector<std::string>& ids,
                        const std::vector<std::string>& paths, Fn&& fn) {
    Batch<Result> batch;
    batch.results.resize(count);
    batch.failures.resize(count);
    std::atomic<bool> failed{false};
    parallel_for(
        count, jobs,
        [&](std::size_t i) {
            try {
                batch.results[i] = fn(i);
            } catch (const Error& e) {
                batch.failures[i] = CaseFailure{ids[i], paths[i], e.code(), e.what()};
                failed = true;
            } catch (const std::exception& e) {
                batch.failures[i] = CaseFailure{ids[i], paths[i], ErrorCode::IoError, e.what()};
                failed = true;
            }
        },
        [&] { return strict && failed.load(); });
    return batch;
}

struct FilterFlags {
    std::string mode = "sdf";
    double threshold = kDefaultSdfThreshold;
    std::string connectivity = "26";
    std::string units = "voxel";

    FilterConfig config() const {
        FilterConfig cfg;
        cfg.mode = parse_filter_mode(mode);
        cfg.threshold = threshold;
        cfg.connectivity = parse_connectivity(connectivity);
        cfg.units = parse_units(units);
        validate(cfg);
        return cfg;
    }
};

struct BatchFlags {
    unsigned jobs = 1;
    bool strict = false;
    std::string relabel;
    std::string errors;
};

void add_batch_flags(CLI::App* cmd, BatchFlags& flags) {
    cmd->add_option("--jobs", flags.jobs, "Worker threads")->envname("PELVSEG_JOBS")->check(CLI::Range(1U, 1024U));
    cmd->add_flag("--strict", flags.strict, "Stop at the first failing case");
    cmd->add_option("--relabel", flags.relabel, "JSON label mapping applied on read")
        ->envname("PELVSEG_RELABEL")
        ->check(CLI::ExistingFile);
    cmd->add_option("--errors", flags.errors, "Write failed cases as JSON lines to this file");
}

void add_units_flag(CLI::App* cmd, std::string& units) {
    cmd->add_option("--units", units, "Distance units")
        ->envname("PELVSEG_UNITS")
        ->check(CLI::IsMember({"voxel", "mm"}))
        ->capture_default_str();
}

// --- postprocess -----------------------------------------------------------

struct PostprocessArgs {
    std::vector<std::string> inputs;
    std::string output;
    FilterFlags filter;
    BatchFlags batch;
};

int cmd_postprocess(const PostprocessArgs& a, std::ostream& out, std::ostream& err) {
    const FilterConfig cfg = a.filter.config();
    const auto opts = read_options(a.batch.relabel);

    std::vector<fs::path> sources;
    for (const auto& in : a.inputs) {
        if (fs::is_directory(in)) {
            const auto files = list_nifti(in);
            sources.insert(sources.end(), files.begin(), files.end());
        } else if (fs::is_regular_file(in)) {
            sources.emplace_back(in);
        } else {
            throw Error(ErrorCode::UsageError, fmt::format("input {} does not exist", in));
        }
    }
    const bool single_file_out = sources.size() == 1 && nifti::has_nifti_extension(a.output) && !fs::is_directory(a.output);
    std::vector<fs::path> targets;
    std::vector<std::string> ids;
    std::vector<std::string> paths;
    for (const auto& src : sources) {
        const fs::path target = single_file_out ? fs::path(a.output) : fs::path(a.output) / src.filename();
        if (same_file(src, target)) {
            throw Error(ErrorCode::UsageError, fmt::format("refusing to overwrite input {}", src.string()));
        }
        targets.push_back(target);
        ids.push_back(nifti::case_id_from_path(src));
        paths.push_back(src.string());
    }
    {
        std::vector<std::string> names;
        for (const auto& t : targets) {
            names.push_back(t.string());
        }
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
            throw Error(ErrorCode::UsageError, "two inputs map to the same output file");
        }
    }
    if (!single_file_out) {
        fs::create_directories(a.output);
    } else if (fs::path(a.output).has_parent_path()) {
        fs::create_directories(fs::path(a.output).parent_path());
    }

    const auto batch = run_batch<bool>(sources.size(), a.batch.jobs, a.batch.strict, ids, paths, [&](std::size_t i) {
        const auto image = nifti::read_label_image(sources[i], opts);
        const LabelVolume filtered = apply_filter(image.volume, cfg);
        nifti::write_label_nifti(filtered, targets[i], is_gzip_name(targets[i]), image.orientation);
        return true;
    });
    const auto failures = batch.failure_list();
    report_failures(failures, a.batch.errors, err);
    out << fmt::format("postprocess {}: {} written, {} failed\n", cfg.label(), sources.size() - failures.size(),
                       failures.size());
    return failures.empty() ? kExitOk : kExitFailure;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
    std::string pred_dir;
    std::string gt_dir;
    std::string records;
    std::string table;
    std::string format = "csv";
    std::string label;
    std::string units = "voxel";
    std::string hd_set = "boundary";
    BatchFlags batch;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
    const auto format = report::parse_format(a.format);
    HdOptions hd;
    hd.units = parse_units(a.units);
    hd.set = parse_hd_set(a.hd_set);
    const auto opts = read_options(a.batch.relabel);

    std::map<std::string, fs::path> preds;
    std::map<std::string, fs::path> gts;
    for (const auto& p : list_nifti(a.pred_dir)) {
        preds.emplace(nifti::case_id_from_path(p), p);
    }
    for (const auto& p : list_nifti(a.gt_dir)) {
        gts.emplace(nifti::case_id_from_path(p), p);
    }
    std::vector<CaseFailure> unmatched;
    std::vector<std::string> ids;
    std::vector<std::string> paths;
    for (const auto& [id, p] : preds) {
        if (gts.contains(id)) {
            ids.push_back(id);
            paths.push_back(p.string());
        } else {
            unmatched.push_back({id, p.string(), ErrorCode::IoError, "no ground truth with this case id"});
        }
    }
    for (const auto& [id, p] : gts) {
        if (!preds.contains(id)) {
            unmatched.push_back({id, p.string(), ErrorCode::IoError, "no prediction with this case id"});
        }
    }
    std::sort(unmatched.begin(), unmatched.end(),
              [](const CaseFailure& x, const CaseFailure& y) { return x.case_id < y.case_id; });
    if (a.batch.strict && !unmatched.empty()) {
        report_failures(unmatched, a.batch.errors, err);
        return kExitFailure;
    }

    const auto batch = run_batch<MetricsRecord>(ids.size(), a.batch.jobs, a.batch.strict, ids, paths, [&](std::size_t i) {
        const LabelVolume pred = nifti::read_label_nifti(preds.at(ids[i]), opts);
        const LabelVolume gt = nifti::read_label_nifti(gts.at(ids[i]), opts);
        return evaluate_case(pred, gt, hd);
    });

    std::vector<MetricsRecord> records;
    for (const auto& r : batch.results) {
        if (r) {
            records.push_back(*r);
        }
    }
    auto failures = batch.failure_list();
    failures.insert(failures.end(), unmatched.begin(), unmatched.end());
    std::sort(failures.begin(), failures.end(),
              [](const CaseFailure& x, const CaseFailure& y) { return x.case_id < y.case_id; });
    report_failures(failures, a.batch.errors, err);

    if (!a.records.empty()) {
        write_text(a.records, report::records_to_jsonl(records));
    }
    if (!records.empty()) {
        const std::string label = a.label.empty() ? fs::path(a.pred_dir).filename().string() : a.label;
        const Summary s = aggregate(records, label);
        const std::string table = report::emit_table(std::span<const Summary>(&s, 1), format);
        if (a.table.empty()) {
            out << table;
        } else {
            write_text(a.table, table);
        }
    } else {
        err << "error: no case could be evaluated\n";
    }
    return failures.empty() && !records.empty() ? kExitOk : kExitFailure;
}

// --- split -----------------------------------------------------------------

struct SplitArgs {
    std::string manifest;
    std::string dataset;
    std::string output;
    std::string rule = "fractional";
    bool override_table1 = false;
    std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
    dataset::Manifest m = dataset::manifest_from_json(read_text(a.manifest));
    if (!a.dataset.empty()) {
        const auto it = m.sub_datasets.find(a.dataset);
        if (it == m.sub_datasets.end()) {
            throw Error(ErrorCode::UsageError, fmt::format("manifest has no sub-dataset '{}'", a.dataset));
        }
        dataset::Manifest only;
        only.notes = m.notes;
        only.sub_datasets.emplace(it->first, it->second);
        m = std::move(only);
    }
    const auto rule = a.override_table1 ? dataset::SplitRule::Table1Override : dataset::parse_split_rule(a.rule);
    const dataset::Split s = dataset::split(m, a.seed, rule);
    for (const auto& note : s.notes) {
        err << "note: " << note << "\n";
    }
    for (const auto& [name, subset] : s.subsets) {
        const auto c = subset.counts();
        out << fmt::format("{} {}/{}/{} ({})\n", name, c.train, c.val, c.test, to_string(subset.rule_applied));
    }
    if (!a.output.empty()) {
        write_text(a.output, dataset::split_to_json(s));
    }
    return kExitOk;
}

// --- manifest --------------------------------------------------------------

struct ManifestArgs {
    std::string root;
    std::string output;
    std::string errors;
    bool stats = false;
};

int cmd_manifest(const ManifestArgs& a, std::ostream& out, std::ostream& err) {
    const auto build = dataset::build_manifest(a.root);
    for (const auto& w : build.warnings) {
        err << "warning: " << w << "\n";
    }
    std::vector<CaseFailure> failures;
    for (const auto& e : build.errors) {
        failures.push_back({nifti::case_id_from_path(e.path), e.path, e.code, e.message});
    }
    report_failures(failures, a.errors, err);
    const std::string text = dataset::manifest_to_json(build.manifest);
    if (a.output.empty()) {
        out << text;
    } else {
        write_text(a.output, text);
    }
    if (a.stats && build.manifest.case_count() > 0) {
        std::vector<std::vector<std::string>> rows{{"Dataset", "#", "Mean spacing(mm)", "Mean size"}};
        for (const auto& st : dataset::dataset_stats(build.manifest)) {
            rows.push_back({st.name, std::to_string(st.count),
                            fmt::format("({:.2f}, {:.2f}, {:.2f})", st.mean_spacing[0], st.mean_spacing[1],
                                        st.mean_spacing[2]),
                            fmt::format("({:.0f}, {:.0f}, {:.0f})", st.mean_size[0], st.mean_size[1], st.mean_size[2])});
        }
        out << report::write_csv(rows);
    }
    return failures.empty() ? kExitOk : kExitFailure;
}

// --- phantom ---------------------------------------------------------------

struct PhantomArgs {
    std::string spec;
    bool suite = false;
    std::string output;
    unsigned jobs = 1;
};

int cmd_phantom(const PhantomArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<phantom::PhantomSpec> specs;
    if (a.suite) {
        specs = phantom::standard_suite();
    }
    if (!a.spec.empty()) {
        const auto more = phantom::specs_from_json(read_text(a.spec));
        specs.insert(specs.end(), more.begin(), more.end());
    }
    if (specs.empty()) {
        throw Error(ErrorCode::UsageError, "give --spec and/or --suite");
    }
    const fs::path root(a.output);
    for (const char* sub : {"gt", "pred", "truth"}) {
        fs::create_directories(root / sub);
    }
    std::vector<std::string> ids;
    for (const auto& s : specs) {
        ids.push_back(s.case_id);
    }
    const auto batch = run_batch<bool>(specs.size(), a.jobs, false, ids, ids, [&](std::size_t i) {
        const auto ph = phantom::generate(specs[i]);
        nifti::write_label_nifti(ph.gt, root / "gt" / (ids[i] + ".nii.gz"), true);
        nifti::write_label_nifti(ph.pred, root / "pred" / (ids[i] + ".nii.gz"), true);
        write_text(root / "truth" / (ids[i] + ".json"), phantom::truth_to_json(ph.truth));
        return true;
    });
    const auto failures = batch.failure_list();
    report_failures(failures, {}, err);
    out << fmt::format("phantom: {} generated, {} failed\n", specs.size() - failures.size(), failures.size());
    return failures.empty() ? kExitOk : kExitFailure;
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string grid;
    std::string format = "csv";
    std::string output;
    std::string change_from;
    std::optional<double> floor;
    std::optional<double> cap;
    int precision = 2;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& /*err*/) {
    if (a.inputs.empty() == a.grid.empty()) {
        throw Error(ErrorCode::UsageError, "give either --input records or --grid, not both");
    }
    std::string text;
    if (!a.grid.empty()) {
        const auto grid = report::parse_grid_csv(read_text(a.grid));
        text = report::emit_grid(grid, {a.floor, a.cap, a.precision});
    } else {
        std::vector<Summary> summaries;
        for (const auto& in : a.inputs) {
            const auto eq = in.find('=');
            const std::string label = eq == std::string::npos ? fs::path(in).stem().string() : in.substr(0, eq);
            const std::string path = eq == std::string::npos ? in : in.substr(eq + 1);
            const auto records = report::records_from_jsonl(read_text(path));
            summaries.push_back(aggregate(records, label));
        }
        text = report::emit_table(summaries, report::parse_format(a.format));
        if (!a.change_from.empty()) {
            const auto base = std::find_if(summaries.begin(), summaries.end(),
                                           [&](const Summary& s) { return s.label == a.change_from; });
            if (base == summaries.end()) {
                throw Error(ErrorCode::UsageError, fmt::format("no input labelled '{}'", a.change_from));
            }
            text += "\n";
            for (const auto& s : summaries) {
                if (&s == &*base) {
                    continue;
                }
                const auto change = hd_reduction(*base, s, Column::Average);
                text += change ? fmt::format("Average HD change {} -> {}: {:.1f}% decrease\n", base->label, s.label, *change)
                               : fmt::format("Average HD change {} -> {}: undefined\n", base->label, s.label);
            }
        }
    }
    if (a.output.empty()) {
        out << text;
    } else {
        write_text(a.output, text);
    }
    return kExitOk;
}

} // namespace

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task,
                  const std::function<bool()>& stop) {
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        while (!(stop && stop())) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            task(i);
        }
    };
    const unsigned width = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    if (width <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(width);
    for (unsigned t = 0; t < width; ++t) {
        pool.emplace_back(worker);
    }
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pelvic bone segmentation post-processing and evaluation toolkit", "pelvseg"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    PostprocessArgs pp;
    auto* postprocess = app.add_subcommand("postprocess", "Filter prediction volumes (MCR or SDF distance constraint)");
    postprocess->add_option("inputs", pp.inputs, "Prediction NIfTI files or directories")->required();
    postprocess->add_option("-o,--output", pp.output, "Output directory (or file for a single input)")->required();
    postprocess->add_option("--mode", pp.filter.mode, "Filter mode")
        ->envname("PELVSEG_MODE")
        ->check(CLI::IsMember({"none", "mcr", "sdf"}))
        ->capture_default_str();
    postprocess->add_option("--t", pp.filter.threshold, "SDF distance threshold")
        ->envname("PELVSEG_T")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    postprocess->add_option("--connectivity", pp.filter.connectivity, "Component connectivity")
        ->envname("PELVSEG_CONNECTIVITY")
        ->check(CLI::IsMember({"6", "18", "26"}))
        ->capture_default_str();
    add_units_flag(postprocess, pp.filter.units);
    add_batch_flags(postprocess, pp.batch);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Dice / Hausdorff of predictions against ground truth");
    evaluate->add_option("--pred", ev.pred_dir, "Prediction directory")->required()->check(CLI::ExistingDirectory);
    evaluate->add_option("--gt", ev.gt_dir, "Ground-truth directory")->required()->check(CLI::ExistingDirectory);
    evaluate->add_option("--records", ev.records, "Write per-case records (JSON lines)");
    evaluate->add_option("--table", ev.table, "Write the summary table here instead of stdout");
    evaluate->add_option("--format", ev.format, "Table format")
        ->envname("PELVSEG_FORMAT")
        ->check(CLI::IsMember({"csv", "markdown"}))
        ->capture_default_str();
    evaluate->add_option("--label", ev.label, "Row label for the summary (default: prediction dir name)");
    add_units_flag(evaluate, ev.units);
    evaluate->add_option("--hd-set", ev.hd_set, "Voxel sets compared by the Hausdorff distance")
        ->check(CLI::IsMember({"boundary", "full"}))
        ->capture_default_str();
    add_batch_flags(evaluate, ev.batch);

    SplitArgs sp;
    auto* split = app.add_subcommand("split", "Deterministic train/val/test split of a manifest");
    split->add_option("--manifest", sp.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    split->add_option("--dataset", sp.dataset, "Only split this sub-dataset");
    split->add_option("-o,--output", sp.output, "Write the split JSON here");
    split->add_option("--rule", sp.rule, "Split rule")
        ->check(CLI::IsMember({"fractional", "table1"}))
        ->capture_default_str();
    split->add_flag("--override-table1", sp.override_table1, "Use the published per-dataset counts");
    split->add_option("--seed", sp.seed, "Shuffle seed")->envname("PELVSEG_SEED")->capture_default_str();

    ManifestArgs mf;
    auto* manifest = app.add_subcommand("manifest", "Index a directory of NIfTI volumes");
    manifest->add_option("root", mf.root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    manifest->add_option("-o,--output", mf.output, "Write the manifest JSON here instead of stdout");
    manifest->add_option("--errors", mf.errors, "Write unreadable files as JSON lines to this file");
    manifest->add_flag("--stats", mf.stats, "Print per-sub-dataset count, mean spacing and mean size");

    PhantomArgs ph;
    auto* phantom_cmd = app.add_subcommand("phantom", "Generate synthetic gt/pred volumes with truth sheets");
    phantom_cmd->add_option("--spec", ph.spec, "Phantom spec JSON")->check(CLI::ExistingFile);
    phantom_cmd->add_flag("--suite", ph.suite, "Generate the built-in verification suite");
    phantom_cmd->add_option("-o,--output", ph.output, "Output directory (gt/, pred/, truth/)")->required();
    phantom_cmd->add_option("--jobs", ph.jobs, "Worker threads")->envname("PELVSEG_JOBS")->check(CLI::Range(1U, 1024U));

    ReportArgs rp;
    auto* report_cmd = app.add_subcommand("report", "Tables from evaluation records, or clipped value grids");
    report_cmd->add_option("--input", rp.inputs, "LABEL=records.jsonl (repeatable)");
    report_cmd->add_option("--grid", rp.grid, "CSV value grid to clip and annotate")->check(CLI::ExistingFile);
    report_cmd->add_option("--format", rp.format, "Table format")
        ->envname("PELVSEG_FORMAT")
        ->check(CLI::IsMember({"csv", "markdown"}))
        ->capture_default_str();
    report_cmd->add_option("-o,--output", rp.output, "Write here instead of stdout");
    report_cmd->add_option("--change-from", rp.change_from, "Report Average HD % decrease relative to this row");
    report_cmd->add_option("--floor", rp.floor, "Grid lower clip bound");
    report_cmd->add_option("--cap", rp.cap, "Grid upper clip bound");
    report_cmd->add_option("--precision", rp.precision, "Grid decimals")->check(CLI::Range(0, 9))->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*postprocess) {
            return cmd_postprocess(pp, out, err);
        }
        if (*evaluate) {
            return cmd_evaluate(ev, out, err);
        }
        if (*split) {
            return cmd_split(sp, out, err);
        }
        if (*manifest) {
            return cmd_manifest(mf, out, err);
        }
        if (*phantom_cmd) {
            return cmd_phantom(ph, out, err);
        }
        if (*report_cmd) {
            return cmd_report(rp, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::UsageError ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace pelvseg::cli
