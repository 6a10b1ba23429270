#include "refine/io.hpp"

#include <fstream>
#include <sstream>

#include "refine/error.hpp"

namespace refine {
namespace {

std::string required_string(const Json& row, const char* key) {
    const auto it = row.find(key);
    if (it == row.end() || !it->is_string()) {
        throw Error(ErrorCode::ParseError, std::string("field \"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

int required_int(const Json& row, const char* key) {
    const auto it = row.find(key);
    if (it == row.end() || !it->is_number_integer()) {
        throw Error(ErrorCode::ParseError, std::string("field \"") + key + "\" must be an integer");
    }
    return it->get<int>();
}

double required_number(const Json& row, const char* key) {
    const auto it = row.find(key);
    if (it == row.end() || !it->is_number()) {
        throw Error(ErrorCode::ParseError, std::string("field \"") + key + "\" must be a number");
    }
    return it->get<double>();
}

}  // namespace

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& on_row) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_number) + ": ";
        Json row;
        try {
            row = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::ParseError, where + "malformed JSON (" + e.what() + ")");
        }
        if (!row.is_object()) {
            throw Error(ErrorCode::ParseError, where + "row is not a JSON object");
        }
        try {
            on_row(row, line_number);
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        }
    }
}

RawPrediction parse_prediction(const Json& row) {
    RawPrediction prediction;
    prediction.sample_id = required_string(row, "sample_id");
    prediction.rank = required_int(row, "rank");
    prediction.text = required_string(row, "text");
    if (prediction.rank < 0) {
        throw Error(ErrorCode::ParseError, "rank must be >= 0");
    }
    return prediction;
}

std::string_view to_string(TaskKind kind) {
    return kind == TaskKind::qa ? "qa" : "summarization";
}

TaskKind parse_task_kind(std::string_view text) {
    if (text == "qa") return TaskKind::qa;
    if (text == "summarization") return TaskKind::summarization;
    throw Error(ErrorCode::ParseError, "task must be \"qa\" or \"summarization\", got \"" + std::string(text) + "\"");
}

ReferenceRecord parse_reference(const Json& row) {
    ReferenceRecord record;
    record.sample_id = required_string(row, "sample_id");
    record.task = parse_task_kind(required_string(row, "task"));
    const auto answers = row.find("answers");
    if (answers == row.end() || !answers->is_array() || answers->empty()) {
        throw Error(ErrorCode::ParseError, "field \"answers\" must be a non-empty array");
    }
    for (const auto& answer : *answers) {
        if (!answer.is_string()) {
            throw Error(ErrorCode::ParseError, "answers must be strings");
        }
        record.answers.push_back(answer.get<std::string>());
    }
    if (record.task == TaskKind::summarization && record.answers.size() != 1) {
        throw Error(ErrorCode::ParseError, "summarization records carry exactly one reference");
    }
    return record;
}

std::vector<RawPrediction> read_candidates(const std::filesystem::path& path) {
    std::vector<RawPrediction> out;
    for_each_jsonl(path, [&](const Json& row, std::size_t) { out.push_back(parse_prediction(row)); });
    return out;
}

std::vector<ReferenceRecord> read_references(const std::filesystem::path& path) {
    std::vector<ReferenceRecord> out;
    for_each_jsonl(path, [&](const Json& row, std::size_t) { out.push_back(parse_reference(row)); });
    return out;
}

std::vector<ScoreRow> read_scores(const std::filesystem::path& path) {
    std::vector<ScoreRow> out;
    for_each_jsonl(path, [&](const Json& row, std::size_t) {
        ScoreRow score;
        score.sample_id = required_string(row, "sample_id");
        score.candidate_id = required_int(row, "candidate_id");
        score.text = required_string(row, "text");
        score.multiplicity = required_int(row, "multiplicity");
        score.s_sta = required_number(row, "s_sta");
        score.s_ent = required_number(row, "s_ent");
        score.s_unc = required_number(row, "s_unc");
        out.push_back(std::move(score));
    });
    return out;
}

std::vector<SelectionRow> read_selections(const std::filesystem::path& path) {
    std::vector<SelectionRow> out;
    for_each_jsonl(path, [&](const Json& row, std::size_t) {
        SelectionRow selection;
        selection.sample_id = required_string(row, "sample_id");
        selection.method = required_string(row, "method");
        selection.candidate_id = required_int(row, "candidate_id");
        selection.text = required_string(row, "text");
        selection.final = required_number(row, "final");
        out.push_back(std::move(selection));
    });
    return out;
}

std::string score_row_line(const ScoreRow& row) {
    OrderedJson j;
    j["sample_id"] = row.sample_id;
    j["candidate_id"] = row.candidate_id;
    j["text"] = row.text;
    j["multiplicity"] = row.multiplicity;
    j["s_sta"] = row.s_sta;
    j["s_ent"] = row.s_ent;
    j["s_unc"] = row.s_unc;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string selection_row_line(const SelectionRow& row) {
    OrderedJson j;
    j["sample_id"] = row.sample_id;
    j["method"] = row.method;
    j["candidate_id"] = row.candidate_id;
    j["text"] = row.text;
    j["final"] = row.final;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        out << content;
        if (!out) {
            throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace refine
