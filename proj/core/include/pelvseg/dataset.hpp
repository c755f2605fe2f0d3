#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pelvseg/error.hpp"
#include "pelvseg/volume.hpp"

namespace pelvseg::dataset {

inline constexpr int kManifestVersion = 1;
inline constexpr int kSplitVersion = 1;

struct CaseEntry {
    std::string case_id;
    std::string image;
    std::optional<std::string> label;
    Dims dims;
    Spacing spacing;

    friend bool operator==(const CaseEntry&, const CaseEntry&) = default;
};

struct Manifest {
    // Sub-dataset name -> cases sorted by case_id.
    std::map<std::string, std::vector<CaseEntry>> sub_datasets;
    std::vector<std::string> notes;

    std::size_t case_count() const;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct FileIssue {
    std::string path;
    ErrorCode code = ErrorCode::IoError;
    std::string message;
};

struct ManifestBuild {
    Manifest manifest;
    std::vector<FileIssue> errors;
    std::vector<std::string> warnings;
};

// Layout under `root`, one directory per sub-dataset:
//   <root>/<SUB>/images/<case>.nii[.gz]   (optional <root>/<SUB>/labels/<case>.nii[.gz])
//   <root>/<SUB>/<case>.nii[.gz]          (images directly in the sub-dataset dir)
//   <root>/<case>.nii[.gz]                (sub-dataset named after <root>)
// Unreadable headers are reported in `errors` and left out.
ManifestBuild build_manifest(const std::filesystem::path& root);

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(std::string_view text);  // throws ParseError

enum class SplitRule { Fractional, Table1Override };

SplitRule parse_split_rule(std::string_view text);
std::string_view to_string(SplitRule rule) noexcept;

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;

    std::size_t total() const noexcept { return train + val + test; }
    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct PublishedSplit {
    std::string_view name;
    SplitCounts counts;
};

// Published Tr/Val/Ts counts of the metal-free sub-datasets.
inline constexpr std::array<PublishedSplit, 6> kPublishedSplits{{
    {"ABDOMEN", {21, 7, 7}},
    {"COLONOG", {440, 146, 145}},
    {"MSD_T10", {93, 31, 31}},
    {"KITS19", {26, 9, 9}},
    {"CERVIX", {24, 8, 9}},
    {"CLINIC", {61, 21, 21}},
}};

// Test and val take round(n/5) each, train the rest. Throws TooFewCases.
SplitCounts fractional_counts(std::size_t n);
// Case-insensitive lookup in kPublishedSplits.
std::optional<SplitCounts> published_counts(std::string_view sub_dataset);

struct SubsetSplit {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    SplitRule rule_applied = SplitRule::Fractional;

    SplitCounts counts() const noexcept { return {train.size(), val.size(), test.size()}; }
    friend bool operator==(const SubsetSplit&, const SubsetSplit&) = default;
};

struct Split {
    std::uint64_t seed = 0;
    SplitRule rule = SplitRule::Fractional;
    std::map<std::string, SubsetSplit> subsets;
    std::vector<std::string> notes;

    friend bool operator==(const Split&, const Split&) = default;
};

// Name of the shuffle, recorded in split files.
inline constexpr std::string_view kShuffleAlgorithm = "mt19937_64/fisher-yates-rejection";

// Per sub-dataset: sort case ids, shuffle with mt19937_64 seeded by
// seed ^ fnv1a64(name), then take train, val, test in that order.
// Table1Override uses the published counts when the name and case total
// match, otherwise falls back to Fractional with a note.
Split split(const Manifest& manifest, std::uint64_t seed, SplitRule rule);

std::string split_to_json(const Split& split);
Split split_from_json(std::string_view text);

struct SubsetStats {
    std::string name;
    std::size_t count = 0;
    std::array<double, 3> mean_spacing{};
    std::array<double, 3> mean_size{};
};

// Order-independent means of spacing and dims. Throws EmptyInput.
std::vector<SubsetStats> dataset_stats(const Manifest& manifest);

} // namespace pelvseg::dataset
