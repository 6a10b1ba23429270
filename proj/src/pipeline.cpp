#include "refine/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "refine/dedup.hpp"
#include "refine/error.hpp"
#include "refine/hashing.hpp"
#include "refine/io.hpp"
#include "refine/parallel.hpp"

namespace refine {
namespace {

using Severity = Diagnostic::Severity;

std::string format_number(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

std::string key_of(const std::string& sample_id, int rank) {
    return "(" + sample_id + ", " + std::to_string(rank) + ")";
}

/// Reads a JSONL file row by row, turning parse and schema errors into
/// diagnostics instead of aborting.
void scan_jsonl(const std::filesystem::path& path, ValidationReport& report,
                const std::function<void(const Json&, std::size_t)>& on_row) {
    std::ifstream in(path);
    if (!in) {
        report.diagnostics.push_back({Severity::error, path.string(), 0, "", "cannot open file"});
        return;
    }
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const Json row = Json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            report.diagnostics.push_back({Severity::error, path.string(), number, "", "malformed JSON object"});
            continue;
        }
        try {
            on_row(row, number);
        } catch (const Error& e) {
            report.diagnostics.push_back({Severity::error, path.string(), number, "", e.what()});
        }
    }
}

std::unique_ptr<EmbeddingBackend> make_embedding_backend(const BackendConfig& backend) {
    if (backend.kind == BackendConfig::Kind::file) {
        return std::make_unique<FileEmbeddingBackend>(backend.path);
    }
    return std::make_unique<HttpEmbeddingBackend>(backend.http);
}

std::unique_ptr<EntailmentBackend> make_entailment_backend(const BackendConfig& backend) {
    if (backend.kind == BackendConfig::Kind::file) {
        return std::make_unique<FileEntailmentBackend>(backend.path);
    }
    return std::make_unique<HttpEntailmentBackend>(backend.http);
}

const std::filesystem::path& require_references(const RunConfig& config, std::string_view command) {
    if (!config.references) {
        throw Error(ErrorCode::ConfigError,
                    std::string(command) + " needs \"references\" in " + config.config_path.string());
    }
    if (!std::filesystem::is_regular_file(*config.references)) {
        throw Error(ErrorCode::ConfigError, "references file not found: " + config.references->string());
    }
    return *config.references;
}

Json read_json_file(const std::filesystem::path& path, std::string_view what) {
    if (!std::filesystem::is_regular_file(path)) {
        throw Error(ErrorCode::ConfigError, std::string(what) + " not found: " + path.string() +
                                                " (run `refine tune` on a validation config first, or set fixed "
                                                "values in the config)");
    }
    const Json value = Json::parse(read_file(path), nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
        throw Error(ErrorCode::ConfigError, std::string(what) + " is not a JSON object: " + path.string());
    }
    return value;
}

double number_field(const Json& object, const char* key, const std::filesystem::path& path) {
    const auto it = object.find(key);
    if (it == object.end() || !it->is_number()) {
        throw Error(ErrorCode::ConfigError, path.string() + " lacks numeric \"" + key + "\"");
    }
    return it->get<double>();
}

Coefficients coefficients_from(const Json& object, const std::filesystem::path& path) {
    Coefficients c{number_field(object, "alpha", path), number_field(object, "beta", path),
                   number_field(object, "gamma", path)};
    if (!c.valid()) {
        throw Error(ErrorCode::InvalidCoefficients, "coefficients in " + path.string() + " are not on the simplex");
    }
    return c;
}

ScalingFactors scaling_from(const Json& object, const std::filesystem::path& path) {
    ScalingFactors u;
    u.u_sta = number_field(object, "u_sta", path);
    u.u_ent = number_field(object, "u_ent", path);
    u.u_unc = number_field(object, "u_unc", path);
    u.source = ScalingFactors::Source::fitted;
    if (const auto it = object.find("validation_run_id"); it != object.end() && it->is_string()) {
        u.validation_run_id = it->get<std::string>();
    }
    u.validate();
    return u;
}

std::vector<ScoreVector> all_scores(const std::vector<ScoredGroup>& scored) {
    std::vector<ScoreVector> out;
    for (const auto& g : scored) {
        out.insert(out.end(), g.scores.begin(), g.scores.end());
    }
    return out;
}

std::vector<std::string> expand_methods(const std::vector<std::string>& requested, const RunConfig& config) {
    std::set<std::string> chosen{"ceret"};
    for (const auto& method : requested) {
        if (method == "all") {
            chosen.insert("no_refinement");
            if (config.task == TaskKind::qa) chosen.insert("self_consistency");
            if (config.references) chosen.insert("oracle");
            continue;
        }
        if (method_order(method) > 3) {
            throw Error(ErrorCode::ConfigError, "unknown method \"" + method +
                                                    "\" (expected ceret, no_refinement, self_consistency, oracle, all)");
        }
        if (method == "self_consistency" && config.task != TaskKind::qa) {
            throw Error(ErrorCode::ConfigError, "self_consistency needs fixed answers and only applies to qa tasks");
        }
        if (method == "oracle") require_references(config, "select --methods oracle");
        chosen.insert(method);
    }
    std::vector<std::string> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return method_order(a) < method_order(b); });
    return out;
}

std::map<std::string, const ReferenceRecord*> index_references(const std::vector<ReferenceRecord>& references) {
    std::map<std::string, const ReferenceRecord*> out;
    for (const auto& r : references) out.emplace(r.sample_id, &r);
    return out;
}

void throw_missing(const std::vector<std::string>& missing, std::string_view context) {
    if (missing.empty()) return;
    std::string listed;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
        listed += (i ? ", " : "") + missing[i];
    }
    if (missing.size() > 20) listed += ", ...";
    throw Error(ErrorCode::MissingSample, std::to_string(missing.size()) + " sample(s) missing from " +
                                              std::string(context) + ": " + listed);
}

}  // namespace

std::size_t ValidationReport::errors() const {
    return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                                  [](const auto& d) { return d.severity == Severity::error; }));
}

std::size_t ValidationReport::warnings() const {
    return diagnostics.size() - errors();
}

std::string format_diagnostic(const Diagnostic& d) {
    std::string out = d.severity == Severity::error ? "error: " : "warning: ";
    out += d.file;
    if (d.line > 0) out += ":" + std::to_string(d.line);
    if (!d.key.empty()) out += " " + d.key;
    out += ": " + d.message;
    return out;
}

std::string run_id_of(const std::filesystem::path& scores_path) {
    return file_sha256_hex(scores_path.string()).substr(0, 16);
}

ValidationReport cmd_validate(const RunConfig& config) {
    ValidationReport report;
    auto add = [&](Severity severity, const std::filesystem::path& file, std::size_t line, std::string key,
                   std::string message) {
        report.diagnostics.push_back({severity, file.string(), line, std::move(key), std::move(message)});
    };

    // candidates.jsonl
    std::vector<std::string> sample_order;
    std::map<std::string, std::vector<int>> ranks_by_sample;
    std::set<PredictionKey> seen;
    scan_jsonl(config.candidates, report, [&](const Json& row, std::size_t line) {
        const RawPrediction p = parse_prediction(row);
        if (!seen.insert({p.sample_id, p.rank}).second) {
            add(Severity::error, config.candidates, line, key_of(p.sample_id, p.rank), "duplicate (sample_id, rank)");
            return;
        }
        if (p.rank >= config.k) {
            add(Severity::warning, config.candidates, line, key_of(p.sample_id, p.rank),
                "rank >= declared k=" + std::to_string(config.k));
        }
        auto [it, inserted] = ranks_by_sample.try_emplace(p.sample_id);
        if (inserted) sample_order.push_back(p.sample_id);
        it->second.push_back(p.rank);
    });
    for (const auto& sample : sample_order) {
        const auto count = ranks_by_sample[sample].size();
        if (count != static_cast<std::size_t>(config.k)) {
            add(Severity::warning, config.candidates, 0, "(" + sample + ")",
                std::to_string(count) + " predictions, expected k=" + std::to_string(config.k));
        }
    }

    // references.jsonl
    if (config.references) {
        std::set<std::string> referenced;
        scan_jsonl(*config.references, report, [&](const Json& row, std::size_t line) {
            const ReferenceRecord r = parse_reference(row);
            if (r.task != config.task) {
                add(Severity::error, *config.references, line, "(" + r.sample_id + ")",
                    "task \"" + std::string(to_string(r.task)) + "\" differs from config task \"" +
                        std::string(to_string(config.task)) + "\"");
            }
            if (!referenced.insert(r.sample_id).second) {
                add(Severity::error, *config.references, line, "(" + r.sample_id + ")", "duplicate sample_id");
            } else if (!ranks_by_sample.contains(r.sample_id)) {
                add(Severity::error, *config.references, line, "(" + r.sample_id + ")", "sample has no candidates");
            }
        });
        for (const auto& sample : sample_order) {
            if (!referenced.contains(sample)) {
                add(Severity::warning, *config.references, 0, "(" + sample + ")", "sample has no reference");
            }
        }
    }

    // embeddings.jsonl
    if (config.embeddings.kind == BackendConfig::Kind::file) {
        const auto& path = config.embeddings.path;
        std::set<PredictionKey> covered;
        std::size_t dimension = 0;
        scan_jsonl(path, report, [&](const Json& row, std::size_t line) {
            auto [key, vector] = parse_embedding_row(row);
            if (dimension == 0) {
                dimension = vector.size();
            } else if (vector.size() != dimension) {
                add(Severity::error, path, line, key_of(key.sample_id, key.rank),
                    "vector length " + std::to_string(vector.size()) + " differs from " + std::to_string(dimension));
                return;
            }
            if (!covered.insert(key).second) {
                add(Severity::warning, path, line, key_of(key.sample_id, key.rank), "duplicate key; last row wins");
            }
        });
        for (const auto& sample : sample_order) {
            for (int rank : ranks_by_sample[sample]) {
                if (!covered.contains({sample, rank})) {
                    add(Severity::error, path, 0, key_of(sample, rank), "missing embedding");
                }
            }
        }
    }

    // nli.jsonl
    if (config.nli.kind == BackendConfig::Kind::file) {
        const auto& path = config.nli.path;
        std::set<PairKey> covered;
        scan_jsonl(path, report, [&](const Json& row, std::size_t line) {
            auto [key, value] = parse_nli_row(row);
            if (!covered.insert(key).second) {
                add(Severity::warning, path, line,
                    "(" + key.sample_id + ", " + std::to_string(key.premise_rank) + ", " +
                        std::to_string(key.hypothesis_rank) + ")",
                    "duplicate key; last row wins");
            }
        });
        for (const auto& sample : sample_order) {
            const auto& ranks = ranks_by_sample[sample];
            for (int premise : ranks) {
                for (int hypothesis : ranks) {
                    if (premise != hypothesis && !covered.contains({sample, premise, hypothesis})) {
                        add(Severity::error, path, 0,
                            "(" + sample + ", " + std::to_string(premise) + ", " + std::to_string(hypothesis) + ")",
                            "missing entailment pair");
                    }
                }
            }
        }
    }
    return report;
}

ScoreSummary cmd_score(const RunConfig& config, const CommandOptions& options) {
    if (!options.force) {
        const ValidationReport validation = cmd_validate(config);
        if (!validation.clean()) {
            std::string first;
            for (const auto& d : validation.diagnostics) {
                if (d.severity == Severity::error) {
                    first = format_diagnostic(d);
                    break;
                }
            }
            throw Error(ErrorCode::ValidationFailed, std::to_string(validation.errors()) +
                                                         " validation error(s), first: " + first +
                                                         " (run `refine validate`, or pass --force)");
        }
    }
    const unsigned workers = std::max(1u, options.workers);
    const std::vector<RawPrediction> raw = read_candidates(config.candidates);
    std::vector<CandidateGroup> groups = group_predictions(raw);

    ScoreSummary summary;
    summary.samples = groups.size();

    EmbeddingProvider embeddings(make_embedding_backend(config.embeddings), config.cache_dir());
    std::vector<EmbedRequest> embed_requests;
    for (const auto& group : groups) {
        for (const auto& candidate : group.candidates) {
            embed_requests.push_back({candidate.text, {group.sample_id, candidate.min_rank()}});
        }
    }
    summary.candidates = embed_requests.size();
    std::vector<Vector> vectors = embeddings.embed_batch(embed_requests);
    std::size_t next = 0;
    for (auto& group : groups) {
        for (auto& candidate : group.candidates) {
            candidate.embedding = std::move(vectors[next++]);
        }
    }

    std::vector<std::vector<double>> stability(groups.size());
    parallel_for(groups.size(), workers,
                 [&](std::size_t g) { stability[g] = stability_scores(groups[g], config.stability_metric); });

    EntailmentProvider entailment(make_entailment_backend(config.nli), config.cache_dir());
    {
        // One ordered warm-up pass; the parallel scorers below then only hit the cache.
        std::vector<EntailRequest> all_pairs;
        for (const auto& group : groups) {
            auto pairs = entailment_requests(group);
            all_pairs.insert(all_pairs.end(), std::make_move_iterator(pairs.begin()),
                             std::make_move_iterator(pairs.end()));
        }
        entailment.entail_pairs(all_pairs);
    }
    std::vector<std::vector<double>> entail(groups.size());
    parallel_for(groups.size(), workers, [&](std::size_t g) {
        entail[g] = entailment_scores(groups[g], entailment, config.length_penalty);
    });

    const UncertaintyResult uncertainty =
        uncertainty_scores(groups, config.uncertainty_metric, config.uncertainty, workers);
    summary.clamped_batches = uncertainty.clamped_batches;

    std::string out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        for (std::size_t c = 0; c < group.candidates.size(); ++c) {
            const auto& candidate = group.candidates[c];
            out += score_row_line({group.sample_id, candidate.candidate_id, candidate.text, candidate.multiplicity,
                                   stability[g][c], entail[g][c], uncertainty.scores[g][c]});
            out += '\n';
        }
    }
    write_file_atomic(config.scores_path(), out);
    summary.embedding_cache = embeddings.stats();
    summary.entailment_cache = entailment.stats();
    return summary;
}

std::vector<ScoredGroup> load_scored_groups(const RunConfig& config) {
    if (!std::filesystem::is_regular_file(config.scores_path())) {
        throw Error(ErrorCode::IoError, config.scores_path().string() + " not found; run `refine score` first");
    }
    const std::vector<ScoreRow> rows = read_scores(config.scores_path());
    std::unordered_map<std::string, std::vector<const ScoreRow*>> rows_by_sample;
    for (const auto& row : rows) {
        rows_by_sample[row.sample_id].push_back(&row);
    }
    std::vector<ScoredGroup> out;
    for (auto& group : group_predictions(read_candidates(config.candidates))) {
        const auto it = rows_by_sample.find(group.sample_id);
        const bool matches = it != rows_by_sample.end() && it->second.size() == group.candidates.size() &&
                             std::equal(group.candidates.begin(), group.candidates.end(), it->second.begin(),
                                        [](const Candidate& c, const ScoreRow* r) {
                                            return c.candidate_id == r->candidate_id && c.text == r->text &&
                                                   c.multiplicity == r->multiplicity;
                                        });
        if (!matches) {
            throw Error(ErrorCode::ValidationFailed, "scores for sample \"" + group.sample_id +
                                                         "\" do not match the candidates file; rerun `refine score`");
        }
        ScoredGroup scored{std::move(group), {}};
        for (const ScoreRow* row : it->second) {
            ScoreVector s;
            s.s_sta = row->s_sta;
            s.s_ent = row->s_ent;
            s.s_unc = row->s_unc;
            scored.scores.push_back(s);
        }
        out.push_back(std::move(scored));
    }
    if (out.size() != rows_by_sample.size()) {
        throw Error(ErrorCode::ValidationFailed, "scores file holds samples absent from the candidates file");
    }
    return out;
}

TuneSummary cmd_tune(const RunConfig& config, const CommandOptions& options) {
    if (config.coefficients.kind != Source<Coefficients>::Kind::tuned) {
        throw Error(ErrorCode::ConfigError, "tune searches the coefficients, but " + config.config_path.string() +
                                                " fixes them; set \"coefficients\": \"tune\" to tune, or run "
                                                "`refine select` directly with the fixed values");
    }
    const std::vector<ReferenceRecord> references = read_references(require_references(config, "tune"));
    std::vector<ScoredGroup> scored = load_scored_groups(config);
    const std::string run_id = run_id_of(config.scores_path());

    TuneSummary summary;
    switch (config.scaling.kind) {
        case Source<ScalingFactors>::Kind::tuned: summary.scaling = fit_scaling(all_scores(scored), run_id); break;
        case Source<ScalingFactors>::Kind::fixed: summary.scaling = config.scaling.value; break;
        case Source<ScalingFactors>::Kind::file:
            summary.scaling = scaling_from(read_json_file(config.scaling.file, "scaling file"), config.scaling.file);
            summary.scaling.source = ScalingFactors::Source::fixed;
            break;
    }

    std::map<std::string, const ScoredGroup*> by_id;
    for (const auto& g : scored) by_id.emplace(g.group.sample_id, &g);

    const MetricSpec spec = config.metric_spec();
    TuningSet set;
    set.metric_name = std::string(to_string(spec.kind));
    set.scale = metric_scale(spec.kind);
    std::vector<std::string> missing;
    for (const auto& reference : references) {
        const auto it = by_id.find(reference.sample_id);
        if (it == by_id.end()) {
            missing.push_back(reference.sample_id);
            continue;
        }
        TuningSample sample;
        for (std::size_t c = 0; c < it->second->scores.size(); ++c) {
            sample.scores.push_back(apply_scaling(it->second->scores[c], summary.scaling));
            sample.metric.push_back(sample_metric(it->second->group.candidates[c].text, reference, spec));
        }
        set.samples.push_back(std::move(sample));
    }
    throw_missing(missing, "scores.jsonl");

    const GridSearchResult grid = grid_search(set, config.grid_step, options.workers);
    summary.best = grid.best;
    summary.grid_points = grid.table.size();

    OrderedJson best;
    best["alpha"] = grid.best.coefficients.alpha;
    best["beta"] = grid.best.coefficients.beta;
    best["gamma"] = grid.best.coefficients.gamma;
    best["u_sta"] = summary.scaling.u_sta;
    best["u_ent"] = summary.scaling.u_ent;
    best["u_unc"] = summary.scaling.u_unc;
    best["metric_name"] = grid.best.metric_name;
    best["metric_value"] = grid.best.metric_value;
    best["validation_run_id"] = run_id;
    best["grid_step"] = config.grid_step;
    best["grid_points"] = grid.table.size();
    best["scaling_source"] = summary.scaling.source == ScalingFactors::Source::fitted ? "fitted" : "fixed";
    best["degenerate_dimensions"] = summary.scaling.degenerate;
    write_file_atomic(config.best_path(), best.dump(2) + "\n");

    std::string grid_csv = "alpha,beta,gamma,metric_name,metric_value\n";
    for (const auto& point : grid.table) {
        grid_csv += format_number(point.coefficients.alpha) + "," + format_number(point.coefficients.beta) + "," +
                    format_number(point.coefficients.gamma) + "," + point.metric_name + "," +
                    format_number(point.metric_value) + "\n";
    }
    write_file_atomic(config.grid_path(), grid_csv);

    std::string sweep_csv = "axis,x,alpha,beta,gamma,metric_name,metric_value\n";
    for (Axis axis : {Axis::alpha, Axis::beta, Axis::gamma}) {
        for (const auto& point : sensitivity_sweep(set, axis, config.grid_step)) {
            sweep_csv += std::string(to_string(axis)) + "," + format_number(point.x) + "," +
                         format_number(point.coefficients.alpha) + "," + format_number(point.coefficients.beta) +
                         "," + format_number(point.coefficients.gamma) + "," + point.metric_name + "," +
                         format_number(point.metric_value) + "\n";
        }
    }
    write_file_atomic(config.sweep_path(), sweep_csv);
    return summary;
}

SelectSummary cmd_select(const RunConfig& config, const CommandOptions& options) {
    const std::vector<std::string> methods = expand_methods(options.methods, config);
    std::vector<ScoredGroup> scored = load_scored_groups(config);

    SelectSummary summary;
    std::optional<Json> tuned;
    std::filesystem::path tuned_path;
    switch (config.coefficients.kind) {
        case Source<Coefficients>::Kind::fixed: summary.coefficients = config.coefficients.value; break;
        case Source<Coefficients>::Kind::tuned: tuned_path = config.best_path(); break;
        case Source<Coefficients>::Kind::file: tuned_path = config.coefficients.file; break;
    }
    if (!tuned_path.empty()) {
        tuned = read_json_file(tuned_path, "coefficients file");
        summary.coefficients = coefficients_from(*tuned, tuned_path);
    }
    switch (config.scaling.kind) {
        case Source<ScalingFactors>::Kind::fixed: summary.scaling = config.scaling.value; break;
        case Source<ScalingFactors>::Kind::file:
            summary.scaling = scaling_from(read_json_file(config.scaling.file, "scaling file"), config.scaling.file);
            break;
        case Source<ScalingFactors>::Kind::tuned:
            if (tuned && tuned->contains("u_sta")) {
                summary.scaling = scaling_from(*tuned, tuned_path);
            } else if (!scored.empty()) {
                summary.scaling = fit_scaling(all_scores(scored), run_id_of(config.scores_path()));
            }
            break;
    }

    std::vector<ReferenceRecord> references;
    std::map<std::string, const ReferenceRecord*> reference_by_id;
    if (std::find(methods.begin(), methods.end(), "oracle") != methods.end()) {
        references = read_references(require_references(config, "select --methods oracle"));
        reference_by_id = index_references(references);
    }
    const MetricSpec spec = config.metric_spec();

    std::vector<std::vector<SelectionRow>> rows(scored.size());
    std::vector<std::string> missing;
    for (const auto& g : scored) {
        if (!reference_by_id.empty() && !reference_by_id.contains(g.group.sample_id)) {
            missing.push_back(g.group.sample_id);
        }
    }
    if (std::find(methods.begin(), methods.end(), "oracle") != methods.end()) {
        throw_missing(missing, config.references->string());
    }

    parallel_for(scored.size(), std::max(1u, options.workers), [&](std::size_t i) {
        const ScoredGroup& g = scored[i];
        std::vector<double> finals;
        for (const auto& s : g.scores) {
            finals.push_back(fuse(apply_scaling(s, summary.scaling), summary.coefficients));
        }
        for (const auto& method : methods) {
            Selection selection;
            if (method == "ceret") {
                const std::size_t chosen = select(finals);
                selection = {chosen, g.group.candidates[chosen].text};
            } else if (method == "no_refinement") {
                selection = no_refinement(g.group);
            } else if (method == "self_consistency") {
                selection = self_consistency(g.group, config.extraction, config.normalize_answers);
            } else {
                const OracleResult best = oracle(g.group, *reference_by_id.at(g.group.sample_id), spec);
                selection = {best.candidate_index, g.group.candidates[best.candidate_index].text};
            }
            rows[i].push_back({g.group.sample_id, method, g.group.candidates[selection.candidate_index].candidate_id,
                               selection.text, finals[selection.candidate_index]});
        }
    });

    std::string out;
    for (const auto& sample_rows : rows) {
        for (const auto& row : sample_rows) {
            out += selection_row_line(row);
            out += '\n';
            ++summary.rows;
        }
    }
    write_file_atomic(config.selected_path(), out);
    summary.samples = scored.size();
    return summary;
}

EvalReport cmd_eval(const RunConfig& config, const CommandOptions&) {
    const std::vector<ReferenceRecord> references = read_references(require_references(config, "eval"));
    if (!std::filesystem::is_regular_file(config.selected_path())) {
        throw Error(ErrorCode::IoError, config.selected_path().string() + " not found; run `refine select` first");
    }
    SelectionsByMethod selections;
    for (const auto& row : read_selections(config.selected_path())) {
        selections[row.method][row.sample_id] = row.text;
    }

    const MetricSpec spec = config.metric_spec();
    std::map<std::string, CandidateGroup> groups;
    for (auto& group : group_predictions(read_candidates(config.candidates))) {
        groups.emplace(group.sample_id, std::move(group));
    }
    auto& oracle_column = selections["oracle"];
    oracle_column.clear();
    std::vector<std::string> missing;
    for (const auto& reference : references) {
        const auto it = groups.find(reference.sample_id);
        if (it == groups.end()) {
            missing.push_back(reference.sample_id);
            continue;
        }
        const OracleResult best = oracle(it->second, reference, spec);
        oracle_column[reference.sample_id] = it->second.candidates[best.candidate_index].text;
    }
    throw_missing(missing, config.candidates.string());

    EvalReport report = evaluate_run(selections, references, spec);

    OrderedJson doc;
    doc["metric"] = report.metric_name;
    doc["methods"] = OrderedJson::object();
    for (const auto& [method, aggregate] : report.methods) {
        doc["methods"][method] = {{"aggregate", round_to_one_decimal(aggregate.aggregate)}, {"n", aggregate.n}};
    }
    write_file_atomic(config.report_path(), doc.dump(2) + "\n");

    std::string records;
    for (const auto& record : report.records) {
        OrderedJson row;
        row["sample_id"] = record.sample_id;
        row["method"] = record.method;
        row["selected_text"] = record.selected_text;
        row["metric_name"] = record.metric_name;
        row["metric_value"] = record.metric_value;
        records += row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    }
    write_file_atomic(config.eval_path(), records);
    return report;
}

}  // namespace refine
