#include "pelvseg/report.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pelvseg/error.hpp"

namespace pelvseg::report {

using nlohmann::json;

namespace {

constexpr std::string_view kUndefinedHd = "n/a";

bool needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quote(const std::string& s) {
    if (!needs_quotes(s)) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string md_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += '\\';
        }
        out += c;
    }
    return out;
}

std::string format_value(double v, int precision) {
    return fmt::format("{:.{}f}", v, precision);
}

std::optional<double> parse_grid_value(const std::string& cell) {
    if (cell.empty() || cell == kMissingCell) {
        return std::nullopt;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, fmt::format("grid cell '{}' is not a number", cell));
    }
    if (used != cell.size()) {
        throw Error(ErrorCode::ParseError, fmt::format("grid cell '{}' is not a number", cell));
    }
    return v;
}

} // namespace

Format parse_format(std::string_view text) {
    if (text == "csv") {
        return Format::Csv;
    }
    if (text == "markdown" || text == "md") {
        return Format::Markdown;
    }
    throw Error(ErrorCode::UsageError, fmt::format("unknown format '{}'", text));
}

std::string format_cell(const FieldSummary& field) {
    std::string cell = format_value(field.dice, 3) + "/";
    cell += field.hd ? format_value(*field.hd, 2) : std::string(kUndefinedHd);
    if (field.hd && field.hd_undefined > 0) {
        cell += fmt::format("*{}", field.hd_undefined);
    }
    return cell;
}

ReportTable make_table(std::span<const Summary> summaries) {
    if (summaries.empty()) {
        throw Error(ErrorCode::EmptyInput, "no summaries to tabulate");
    }
    ReportTable t;
    for (const Column c : kColumns) {
        t.columns.emplace_back(column_name(c));
    }
    for (const auto& s : summaries) {
        ReportTable::Row row{s.label, {}};
        for (const Column c : kColumns) {
            row.cells.push_back(format_cell(s[c]));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string render(const ReportTable& table, Format format) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{table.corner};
    header.insert(header.end(), table.columns.begin(), table.columns.end());
    rows.push_back(std::move(header));
    for (const auto& r : table.rows) {
        std::vector<std::string> line{r.label};
        line.insert(line.end(), r.cells.begin(), r.cells.end());
        rows.push_back(std::move(line));
    }
    if (format == Format::Csv) {
        return write_csv(rows);
    }

    std::string out;
    const auto emit = [&out](const std::vector<std::string>& cells) {
        out += "|";
        for (const auto& c : cells) {
            out += " " + md_escape(c) + " |";
        }
        out += "\n";
    };
    emit(rows.front());
    out += "|";
    for (std::size_t c = 0; c < rows.front().size(); ++c) {
        out += c == 0 ? " --- |" : " ---: |";
    }
    out += "\n";
    bool starred = false;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        emit(rows[r]);
        for (const auto& cell : rows[r]) {
            starred = starred || cell.find('*') != std::string::npos;
        }
    }
    bool undefined = false;
    for (const auto& r : table.rows) {
        for (const auto& cell : r.cells) {
            undefined = undefined || cell.find(kUndefinedHd) != std::string::npos;
        }
    }
    if (starred || undefined) {
        out += "\n";
    }
    if (undefined) {
        out += fmt::format("{} HD undefined in every case (empty prediction or ground truth).\n", kUndefinedHd);
    }
    if (starred) {
        out += "*N: N cases had an undefined HD and are excluded from that HD mean.\n";
    }
    return out;
}

std::string emit_table(std::span<const Summary> summaries, Format format) {
    return render(make_table(summaries), format);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t n = 0; n < text.size(); ++n) {
        const char c = text[n];
        if (quoted) {
            if (c == '"') {
                if (n + 1 < text.size() && text[n + 1] == '"') {
                    field += '"';
                    ++n;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && n + 1 < text.size() && text[n + 1] == '\n') {
                ++n;
            }
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) {
        throw Error(ErrorCode::ParseError, "unterminated quoted CSV field");
    }
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string write_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) {
                out += ',';
            }
            out += quote(row[c]);
        }
        out += '\n';
    }
    return out;
}

ReportTable parse_table_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows.front().empty()) {
        throw Error(ErrorCode::ParseError, "table has no header");
    }
    ReportTable t;
    t.corner = rows.front().front();
    t.columns.assign(rows.front().begin() + 1, rows.front().end());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) {
            throw Error(ErrorCode::ParseError, fmt::format("table row {} has {} cells, header has {}", r,
                                                           rows[r].size(), rows.front().size()));
        }
        t.rows.push_back({rows[r].front(), {rows[r].begin() + 1, rows[r].end()}});
    }
    return t;
}

std::string emit_grid(const ValueGrid& grid, const ClipBounds& bounds) {
    if (grid.values.size() != grid.row_labels.size()) {
        throw Error(ErrorCode::RaggedMatrix,
                    fmt::format("{} value rows for {} row labels", grid.values.size(), grid.row_labels.size()));
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{grid.corner};
    header.insert(header.end(), grid.column_labels.begin(), grid.column_labels.end());
    rows.push_back(std::move(header));
    for (std::size_t r = 0; r < grid.values.size(); ++r) {
        if (grid.values[r].size() != grid.column_labels.size()) {
            throw Error(ErrorCode::RaggedMatrix, fmt::format("row '{}' has {} values for {} columns",
                                                             grid.row_labels[r], grid.values[r].size(),
                                                             grid.column_labels.size()));
        }
        std::vector<std::string> line{grid.row_labels[r]};
        for (const auto& v : grid.values[r]) {
            if (!v) {
                line.emplace_back(kMissingCell);
                continue;
            }
            std::optional<double> bound;
            if (bounds.floor && *v < *bounds.floor) {
                bound = bounds.floor;
            } else if (bounds.cap && *v > *bounds.cap) {
                bound = bounds.cap;
            }
            line.push_back(bound ? fmt::format("{} ({})", format_value(*bound, bounds.precision),
                                               format_value(*v, bounds.precision))
                                 : format_value(*v, bounds.precision));
        }
        rows.push_back(std::move(line));
    }
    return write_csv(rows);
}

ValueGrid parse_grid_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows.front().empty()) {
        throw Error(ErrorCode::ParseError, "grid has no header");
    }
    ValueGrid g;
    g.corner = rows.front().front();
    g.column_labels.assign(rows.front().begin() + 1, rows.front().end());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].empty()) {
            continue;
        }
        g.row_labels.push_back(rows[r].front());
        std::vector<std::optional<double>> values;
        for (std::size_t c = 1; c < rows[r].size(); ++c) {
            values.push_back(parse_grid_value(rows[r][c]));
        }
        g.values.push_back(std::move(values));
    }
    return g;
}

std::string record_to_json(const MetricsRecord& record) {
    json cols = json::object();
    for (const Column c : kColumns) {
        const Metric& m = record[c];
        cols[std::string(column_name(c))] = json{{"dice", m.dice}, {"hd", m.hd ? json(*m.hd) : json(nullptr)}};
    }
    // nlohmann's object keys are sorted, so output is stable.
    return json{{"case_id", record.case_id}, {"metrics", std::move(cols)}}.dump();
}

std::string records_to_jsonl(std::span<const MetricsRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r);
        out += '\n';
    }
    return out;
}

std::vector<MetricsRecord> records_from_jsonl(std::string_view text) {
    std::vector<MetricsRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const json j = json::parse(line);
            MetricsRecord r;
            r.case_id = j.at("case_id").get<std::string>();
            for (const Column c : kColumns) {
                const auto& m = j.at("metrics").at(std::string(column_name(c)));
                r[c].dice = m.at("dice").get<double>();
                if (!m.at("hd").is_null()) {
                    r[c].hd = m.at("hd").get<double>();
                }
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, fmt::format("records line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

} // namespace pelvseg::report
