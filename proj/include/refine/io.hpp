#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refine/types.hpp"

namespace refine {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Calls `on_row(row, line_number)` for each non-blank line. Malformed JSON
/// throws ParseError naming the file and line; exceptions thrown by `on_row`
/// are rethrown with the same location prefix.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& on_row);

// Row schemas. Each throws ParseError with a field-level message.
RawPrediction parse_prediction(const Json& row);
ReferenceRecord parse_reference(const Json& row);

std::vector<RawPrediction> read_candidates(const std::filesystem::path& path);
std::vector<ReferenceRecord> read_references(const std::filesystem::path& path);

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

struct ScoreRow {
    std::string sample_id;
    int candidate_id = 0;
    std::string text;
    int multiplicity = 1;
    double s_sta = 0.0;
    double s_ent = 0.0;
    double s_unc = 0.0;
};

struct SelectionRow {
    std::string sample_id;
    std::string method;
    int candidate_id = 0;
    std::string text;
    double final = 0.0;
};

std::vector<ScoreRow> read_scores(const std::filesystem::path& path);
std::vector<SelectionRow> read_selections(const std::filesystem::path& path);

std::string score_row_line(const ScoreRow& row);
std::string selection_row_line(const SelectionRow& row);

/// Writes `content` to `path` through a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace refine
