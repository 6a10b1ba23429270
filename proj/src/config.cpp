#include "refine/config.hpp"

#include <cstdlib>
#include <set>

#include "refine/error.hpp"
#include "refine/io.hpp"
#include "refine/tuning.hpp"

namespace refine {
namespace {

[[noreturn]] void fail(const std::string& message) {
    throw Error(ErrorCode::ConfigError, message);
}

void reject_unknown(const Json& object, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        if (!allowed.contains(key)) {
            fail("unknown key \"" + key + "\" in " + where);
        }
    }
}

const Json& object_at(const Json& parent, const char* key, const std::string& where) {
    const auto& value = parent.at(key);
    if (!value.is_object()) fail(where + "." + key + " must be an object");
    return value;
}

std::string string_at(const Json& parent, const char* key, const std::string& where) {
    const auto it = parent.find(key);
    if (it == parent.end() || !it->is_string()) fail(where + "." + key + " must be a string");
    return it->get<std::string>();
}

double number_or(const Json& parent, const char* key, double fallback, const std::string& where) {
    const auto it = parent.find(key);
    if (it == parent.end()) return fallback;
    if (!it->is_number()) fail(where + "." + key + " must be a number");
    return it->get<double>();
}

long long integer_or(const Json& parent, const char* key, long long fallback, const std::string& where) {
    const auto it = parent.find(key);
    if (it == parent.end()) return fallback;
    if (!it->is_number_integer()) fail(where + "." + key + " must be an integer");
    return it->get<long long>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::filesystem::path existing_file(const std::filesystem::path& base, const std::string& value,
                                    const std::string& what) {
    auto path = resolve(base, value);
    if (!std::filesystem::is_regular_file(path)) {
        fail(what + " file not found: " + path.string());
    }
    return path;
}

BackendConfig parse_backend(const Json& value, const std::filesystem::path& base, const std::string& where) {
    if (!value.is_object() || value.size() != 1) {
        fail(where + " must be {\"file\": path} or {\"http\": {...}}");
    }
    BackendConfig backend;
    if (value.contains("file")) {
        backend.kind = BackendConfig::Kind::file;
        backend.path = existing_file(base, string_at(value, "file", where), where);
        return backend;
    }
    if (!value.contains("http")) {
        fail(where + " must be {\"file\": path} or {\"http\": {...}}");
    }
    const Json& http = object_at(value, "http", where);
    reject_unknown(http, {"base_url", "timeout_ms", "max_batch"}, where + ".http");
    backend.kind = BackendConfig::Kind::http;
    backend.http.base_url = string_at(http, "base_url", where + ".http");
    const long long timeout = integer_or(http, "timeout_ms", 30'000, where + ".http");
    const long long max_batch = integer_or(http, "max_batch", 64, where + ".http");
    if (timeout <= 0 || max_batch <= 0) fail(where + ".http timeout_ms and max_batch must be positive");
    backend.http.timeout = std::chrono::milliseconds(timeout);
    backend.http.max_batch = static_cast<std::size_t>(max_batch);
    return backend;
}

DistanceMetric parse_distance(const std::string& text, const std::string& where) {
    if (text == "euclidean") return DistanceMetric::euclidean;
    if (text == "cosine") return DistanceMetric::cosine;
    fail(where + " must be \"euclidean\" or \"cosine\"");
}

}  // namespace

std::filesystem::path RunConfig::cache_dir() const {
    if (const char* env = std::getenv("REFINE_CACHE_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return output_dir / ".cache";
}

RunConfig parse_config(const std::string& document, const std::filesystem::path& base_dir) {
    Json root;
    try {
        root = Json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("config must be a JSON object");
    reject_unknown(root,
                   {"version", "task", "candidates", "references", "embeddings", "nli", "output_dir", "metric",
                    "k", "stability_metric", "uncertainty_metric", "length_penalty", "uncertainty", "coefficients",
                    "scaling", "extraction", "normalize_answers", "grid_step", "deterministic"},
                   "config");

    RunConfig config;
    if (integer_or(root, "version", -1, "config") != RunConfig::kVersion) {
        fail("config.version must be " + std::to_string(RunConfig::kVersion));
    }
    try {
        config.task = parse_task_kind(string_at(root, "task", "config"));
    } catch (const Error& e) {
        fail(e.what());
    }
    config.candidates = existing_file(base_dir, string_at(root, "candidates", "config"), "candidates");
    if (root.contains("references")) {
        config.references = existing_file(base_dir, string_at(root, "references", "config"), "references");
    }
    if (!root.contains("embeddings")) fail("config.embeddings is required");
    if (!root.contains("nli")) fail("config.nli is required");
    config.embeddings = parse_backend(root["embeddings"], base_dir, "config.embeddings");
    config.nli = parse_backend(root["nli"], base_dir, "config.nli");
    config.output_dir = resolve(base_dir, string_at(root, "output_dir", "config"));

    config.metric = config.task == TaskKind::qa ? MetricKind::hit_rate : MetricKind::rouge1;
    if (root.contains("metric")) {
        config.metric = parse_metric_kind(string_at(root, "metric", "config"));
    }
    if (root.contains("stability_metric")) {
        config.stability_metric = parse_distance(string_at(root, "stability_metric", "config"), "config.stability_metric");
    }
    if (root.contains("uncertainty_metric")) {
        config.uncertainty_metric =
            parse_distance(string_at(root, "uncertainty_metric", "config"), "config.uncertainty_metric");
    }
    config.k = static_cast<int>(integer_or(root, "k", 5, "config"));
    if (config.k < 1) fail("config.k must be >= 1");

    if (root.contains("length_penalty")) {
        const Json& lp = object_at(root, "length_penalty", "config");
        reject_unknown(lp, {"q", "p"}, "config.length_penalty");
        config.length_penalty.q = number_or(lp, "q", 0.0, "config.length_penalty");
        config.length_penalty.p = number_or(lp, "p", 2.0, "config.length_penalty");
    }
    config.length_penalty.validate();

    if (root.contains("uncertainty")) {
        const Json& unc = object_at(root, "uncertainty", "config");
        reject_unknown(unc, {"neighborhood_size", "batch_limit"}, "config.uncertainty");
        const long long s = integer_or(unc, "neighborhood_size", 5, "config.uncertainty");
        const long long limit = integer_or(unc, "batch_limit", 1000, "config.uncertainty");
        if (s < 1 || limit < 1) fail("config.uncertainty values must be >= 1");
        config.uncertainty.neighborhood_size = static_cast<std::size_t>(s);
        config.uncertainty.batch_limit = static_cast<std::size_t>(limit);
    }

    if (root.contains("coefficients")) {
        const Json& c = root["coefficients"];
        if (c.is_string()) {
            if (c.get<std::string>() != "tune") fail("config.coefficients must be \"tune\" or an object");
        } else if (c.is_object() && c.contains("file")) {
            reject_unknown(c, {"file"}, "config.coefficients");
            config.coefficients.kind = Source<Coefficients>::Kind::file;
            config.coefficients.file = resolve(base_dir, string_at(c, "file", "config.coefficients"));
        } else if (c.is_object()) {
            reject_unknown(c, {"alpha", "beta", "gamma"}, "config.coefficients");
            config.coefficients.kind = Source<Coefficients>::Kind::fixed;
            config.coefficients.value = {number_or(c, "alpha", -1, "config.coefficients"),
                                         number_or(c, "beta", -1, "config.coefficients"),
                                         number_or(c, "gamma", -1, "config.coefficients")};
            if (!config.coefficients.value.valid()) {
                throw Error(ErrorCode::InvalidCoefficients, "config.coefficients must be non-negative and sum to 1");
            }
        } else {
            fail("config.coefficients must be \"tune\" or an object");
        }
    }

    if (root.contains("scaling")) {
        const Json& s = root["scaling"];
        if (s.is_string()) {
            if (s.get<std::string>() != "fit") fail("config.scaling must be \"fit\" or an object");
        } else if (s.is_object() && s.contains("file")) {
            reject_unknown(s, {"file"}, "config.scaling");
            config.scaling.kind = Source<ScalingFactors>::Kind::file;
            config.scaling.file = resolve(base_dir, string_at(s, "file", "config.scaling"));
        } else if (s.is_object()) {
            reject_unknown(s, {"u_sta", "u_ent", "u_unc"}, "config.scaling");
            config.scaling.kind = Source<ScalingFactors>::Kind::fixed;
            auto& u = config.scaling.value;
            u.u_sta = number_or(s, "u_sta", -1, "config.scaling");
            u.u_ent = number_or(s, "u_ent", -1, "config.scaling");
            u.u_unc = number_or(s, "u_unc", -1, "config.scaling");
            u.validate();
        } else {
            fail("config.scaling must be \"fit\" or an object");
        }
    }

    config.extraction = config.task == TaskKind::qa ? ExtractionRule::prefix_marker("Answer:")
                                                    : ExtractionRule::whole_text();
    if (root.contains("extraction")) {
        const Json& e = root["extraction"];
        if (e.is_string() && e.get<std::string>() == "whole_text") {
            config.extraction = ExtractionRule::whole_text();
        } else if (e.is_string() && e.get<std::string>() == "auto") {
        } else if (e.is_object()) {
            reject_unknown(e, {"prefix_marker"}, "config.extraction");
            config.extraction = ExtractionRule::prefix_marker(string_at(e, "prefix_marker", "config.extraction"));
        } else {
            fail("config.extraction must be \"auto\", \"whole_text\" or {\"prefix_marker\": str}");
        }
    }

    if (root.contains("normalize_answers")) {
        if (!root["normalize_answers"].is_boolean()) fail("config.normalize_answers must be a boolean");
        config.normalize_answers = root["normalize_answers"].get<bool>();
    }
    config.grid_step = number_or(root, "grid_step", 0.1, "config");
    grid_divisions(config.grid_step);
    if (root.contains("deterministic")) {
        if (!root["deterministic"].is_boolean() || !root["deterministic"].get<bool>()) {
            fail("config.deterministic must be true; every stage is seedless and schedule-independent");
        }
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string document;
    try {
        document = read_file(path);
    } catch (const Error&) {
        fail("cannot read config " + path.string());
    }
    const auto absolute = std::filesystem::absolute(path);
    RunConfig config = parse_config(document, absolute.parent_path());
    config.config_path = absolute;
    return config;
}

}  // namespace refine
