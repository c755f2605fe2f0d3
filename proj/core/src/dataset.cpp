#include "pelvseg/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pelvseg/nifti.hpp"

namespace pelvseg::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifestSchema = "pelvseg.manifest";
constexpr std::string_view kSplitSchema = "pelvseg.split";

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Uniform integer in [0, bound) by rejection, independent of the standard
// library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    // Values below 2^64 mod bound would bias the low residues.
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        const std::uint64_t x = rng();
        if (x >= threshold) {
            return x % bound;
        }
    }
}

void shuffle(std::vector<std::string>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(bounded(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

std::vector<fs::path> nifti_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) {
        return out;
    }
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && nifti::has_nifti_extension(e.path())) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void collect_subset(const std::string& name, const fs::path& dir, ManifestBuild& build) {
    std::vector<fs::path> images = nifti_files(dir / "images");
    const bool structured = !images.empty() || fs::is_directory(dir / "images");
    if (!structured) {
        images = nifti_files(dir);
    }
    std::map<std::string, fs::path> labels;
    for (const auto& p : nifti_files(dir / "labels")) {
        labels.emplace(nifti::case_id_from_path(p), p);
    }

    std::vector<CaseEntry> entries;
    std::set<std::string> seen;
    for (const auto& path : images) {
        const std::string id = nifti::case_id_from_path(path);
        if (!seen.insert(id).second) {
            build.errors.push_back({path.string(), ErrorCode::ParseError,
                                    fmt::format("duplicate case id '{}' in sub-dataset {}", id, name)});
            continue;
        }
        try {
            const auto summary = nifti::inspect_header(path);
            CaseEntry entry{id, path.string(), std::nullopt, summary.dims, summary.spacing};
            if (const auto it = labels.find(id); it != labels.end()) {
                try {
                    nifti::inspect_header(it->second);
                    entry.label = it->second.string();
                } catch (const Error& e) {
                    build.errors.push_back({it->second.string(), e.code(), e.what()});
                }
            }
            entries.push_back(std::move(entry));
        } catch (const Error& e) {
            build.errors.push_back({path.string(), e.code(), e.what()});
        }
    }
    if (!entries.empty()) {
        std::sort(entries.begin(), entries.end(),
                  [](const CaseEntry& a, const CaseEntry& b) { return a.case_id < b.case_id; });
        build.manifest.sub_datasets[name] = std::move(entries);
    }
}

json entry_to_json(const CaseEntry& e) {
    return json{
        {"case_id", e.case_id},
        {"image", e.image},
        {"label", e.label ? json(*e.label) : json(nullptr)},
        {"dims", {e.dims.nx, e.dims.ny, e.dims.nz}},
        {"spacing", {e.spacing.x, e.spacing.y, e.spacing.z}},
    };
}

CaseEntry entry_from_json(const json& j) {
    CaseEntry e;
    e.case_id = j.at("case_id").get<std::string>();
    e.image = j.value("image", std::string{});
    if (j.contains("label") && !j.at("label").is_null()) {
        e.label = j.at("label").get<std::string>();
    }
    const auto& d = j.at("dims");
    e.dims = {d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>(), d.at(2).get<std::size_t>()};
    const auto& s = j.at("spacing");
    e.spacing = {s.at(0).get<float>(), s.at(1).get<float>(), s.at(2).get<float>()};
    return e;
}

void check_schema(const json& j, std::string_view schema, int version) {
    if (j.value("schema", std::string{}) != schema) {
        throw Error(ErrorCode::ParseError, fmt::format("expected schema '{}'", schema));
    }
    const int v = j.value("version", 0);
    if (v != version) {
        throw Error(ErrorCode::ParseError, fmt::format("unsupported {} version {}", schema, v));
    }
}

double sorted_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return s;
}

} // namespace

std::size_t Manifest::case_count() const {
    std::size_t n = 0;
    for (const auto& [name, cases] : sub_datasets) {
        n += cases.size();
    }
    return n;
}

ManifestBuild build_manifest(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw Error(ErrorCode::IoError, fmt::format("{} is not a directory", root.string()));
    }
    ManifestBuild build;
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) {
            subdirs.push_back(e.path());
        }
    }
    std::sort(subdirs.begin(), subdirs.end());
    for (const auto& dir : subdirs) {
        collect_subset(dir.filename().string(), dir, build);
    }
    const std::string root_name = fs::weakly_canonical(root).filename().string();
    if (!nifti_files(root).empty()) {
        if (build.manifest.sub_datasets.contains(root_name)) {
            build.warnings.push_back(fmt::format("sub-dataset '{}' also names the root; loose files skipped", root_name));
        } else {
            collect_subset(root_name, root, build);
        }
    }
    if (build.manifest.sub_datasets.empty()) {
        build.warnings.push_back(fmt::format("no NIfTI volumes found under {}", root.string()));
    }
    return build;
}

std::string manifest_to_json(const Manifest& manifest) {
    json subsets = json::object();
    for (const auto& [name, cases] : manifest.sub_datasets) {
        json list = json::array();
        for (const auto& c : cases) {
            list.push_back(entry_to_json(c));
        }
        subsets[name] = std::move(list);
    }
    const json j{
        {"schema", kManifestSchema},
        {"version", kManifestVersion},
        {"notes", manifest.notes},
        {"sub_datasets", std::move(subsets)},
    };
    return j.dump(2) + "\n";
}

Manifest manifest_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        check_schema(j, kManifestSchema, kManifestVersion);
        Manifest m;
        m.notes = j.value("notes", std::vector<std::string>{});
        for (const auto& [name, list] : j.at("sub_datasets").items()) {
            auto& cases = m.sub_datasets[name];
            std::set<std::string> ids;
            for (const auto& e : list) {
                cases.push_back(entry_from_json(e));
                if (!ids.insert(cases.back().case_id).second) {
                    throw Error(ErrorCode::ParseError,
                                fmt::format("duplicate case id '{}' in {}", cases.back().case_id, name));
                }
            }
            std::sort(cases.begin(), cases.end(),
                      [](const CaseEntry& a, const CaseEntry& b) { return a.case_id < b.case_id; });
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

SplitRule parse_split_rule(std::string_view text) {
    if (text == "fractional") {
        return SplitRule::Fractional;
    }
    if (text == "table1" || text == "table1-override") {
        return SplitRule::Table1Override;
    }
    throw Error(ErrorCode::UsageError, fmt::format("unknown split rule '{}'", text));
}

std::string_view to_string(SplitRule rule) noexcept {
    return rule == SplitRule::Fractional ? "fractional" : "table1-override";
}

SplitCounts fractional_counts(std::size_t n) {
    if (n < 3) {
        throw Error(ErrorCode::TooFewCases, fmt::format("{} cases, need at least 3", n));
    }
    // n/5 never has fractional part .5, so this is round-to-nearest.
    const std::size_t fifth = (n + 2) / 5;
    return {n - 2 * fifth, fifth, fifth};
}

std::optional<SplitCounts> published_counts(std::string_view sub_dataset) {
    const std::string key = upper(sub_dataset);
    for (const auto& p : kPublishedSplits) {
        if (p.name == key) {
            return p.counts;
        }
    }
    return std::nullopt;
}

Split split(const Manifest& manifest, std::uint64_t seed, SplitRule rule) {
    Split out;
    out.seed = seed;
    out.rule = rule;
    for (const auto& [name, cases] : manifest.sub_datasets) {
        std::vector<std::string> ids;
        ids.reserve(cases.size());
        for (const auto& c : cases) {
            ids.push_back(c.case_id);
        }
        std::sort(ids.begin(), ids.end());

        SplitCounts counts = fractional_counts(ids.size());
        SubsetSplit subset;
        if (rule == SplitRule::Table1Override) {
            if (const auto published = published_counts(name)) {
                if (published->total() == ids.size()) {
                    counts = *published;
                    subset.rule_applied = SplitRule::Table1Override;
                } else {
                    out.notes.push_back(fmt::format("{}: {} cases but published split totals {}; used fractional rule",
                                                    name, ids.size(), published->total()));
                }
            }
        }

        std::mt19937_64 rng(seed ^ fnv1a64(name));
        shuffle(ids, rng);
        const auto train_end = ids.begin() + static_cast<std::ptrdiff_t>(counts.train);
        const auto val_end = train_end + static_cast<std::ptrdiff_t>(counts.val);
        subset.train.assign(ids.begin(), train_end);
        subset.val.assign(train_end, val_end);
        subset.test.assign(val_end, ids.end());
        for (auto* list : {&subset.train, &subset.val, &subset.test}) {
            std::sort(list->begin(), list->end());
        }
        out.subsets.emplace(name, std::move(subset));
    }
    return out;
}

std::string split_to_json(const Split& s) {
    json subsets = json::object();
    for (const auto& [name, subset] : s.subsets) {
        subsets[name] = json{
            {"rule", to_string(subset.rule_applied)},
            {"counts", {subset.train.size(), subset.val.size(), subset.test.size()}},
            {"train", subset.train},
            {"val", subset.val},
            {"test", subset.test},
        };
    }
    const json j{
        {"schema", kSplitSchema},
        {"version", kSplitVersion},
        {"seed", s.seed},
        {"rule", to_string(s.rule)},
        {"shuffle", kShuffleAlgorithm},
        {"notes", s.notes},
        {"subsets", std::move(subsets)},
    };
    return j.dump(2) + "\n";
}

Split split_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        check_schema(j, kSplitSchema, kSplitVersion);
        Split s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.rule = parse_split_rule(j.at("rule").get<std::string>());
        s.notes = j.value("notes", std::vector<std::string>{});
        for (const auto& [name, sub] : j.at("subsets").items()) {
            SubsetSplit subset;
            subset.rule_applied = parse_split_rule(sub.at("rule").get<std::string>());
            subset.train = sub.at("train").get<std::vector<std::string>>();
            subset.val = sub.at("val").get<std::vector<std::string>>();
            subset.test = sub.at("test").get<std::vector<std::string>>();
            s.subsets.emplace(name, std::move(subset));
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::vector<SubsetStats> dataset_stats(const Manifest& manifest) {
    if (manifest.case_count() == 0) {
        throw Error(ErrorCode::EmptyInput, "manifest has no cases");
    }
    std::vector<SubsetStats> out;
    for (const auto& [name, cases] : manifest.sub_datasets) {
        if (cases.empty()) {
            continue;
        }
        SubsetStats st;
        st.name = name;
        st.count = cases.size();
        const auto n = static_cast<double>(cases.size());
        for (int a = 0; a < 3; ++a) {
            std::vector<double> spacing;
            std::vector<double> size;
            for (const auto& c : cases) {
                spacing.push_back(c.spacing[a]);
                size.push_back(static_cast<double>(c.dims[a]));
            }
            st.mean_spacing[static_cast<std::size_t>(a)] = sorted_sum(std::move(spacing)) / n;
            st.mean_size[static_cast<std::size_t>(a)] = sorted_sum(std::move(size)) / n;
        }
        out.push_back(std::move(st));
    }
    return out;
}

} // namespace pelvseg::dataset
