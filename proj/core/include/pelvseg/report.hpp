#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pelvseg/metrics.hpp"

namespace pelvseg::report {

enum class Format { Csv, Markdown };

Format parse_format(std::string_view text);

// Rendered metric table. Cells are "dice/hd" with Dice to 3 and HD to 2
// decimals; HD shows "n/a" when no case had one, and a "*N" suffix when N
// cases were excluded from the HD mean.
struct ReportTable {
    std::string corner = "Method";
    std::vector<std::string> columns;
    struct Row {
        std::string label;
        std::vector<std::string> cells;

        friend bool operator==(const Row&, const Row&) = default;
    };
    std::vector<Row> rows;

    friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

std::string format_cell(const FieldSummary& field);
ReportTable make_table(std::span<const Summary> summaries);  // throws EmptyInput
std::string render(const ReportTable& table, Format format);
std::string emit_table(std::span<const Summary> summaries, Format format);

// RFC 4180 subset: quoted fields, doubled quotes, LF or CRLF records.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string write_csv(const std::vector<std::vector<std::string>>& rows);
ReportTable parse_table_csv(std::string_view text);

// Model x dataset grid for heat-map style plots.
struct ValueGrid {
    std::string corner = "Dataset";
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
    // values[row][column]; nullopt marks a missing experiment.
    std::vector<std::vector<std::optional<double>>> values;
};

struct ClipBounds {
    std::optional<double> floor;
    std::optional<double> cap;
    int precision = 2;
};

inline constexpr std::string_view kMissingCell = "x";

// Clipped values are written as the bound followed by the original in
// parentheses, e.g. "0.95 (0.60)". Throws RaggedMatrix.
std::string emit_grid(const ValueGrid& grid, const ClipBounds& bounds);
// Reads a plain numeric grid; empty or "x" cells are missing.
ValueGrid parse_grid_csv(std::string_view text);

// One JSON object per line; undefined HD is null.
std::string record_to_json(const MetricsRecord& record);
std::string records_to_jsonl(std::span<const MetricsRecord> records);
std::vector<MetricsRecord> records_from_jsonl(std::string_view text);  // throws ParseError

} // namespace pelvseg::report
