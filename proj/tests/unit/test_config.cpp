#include <doctest.h>

#include "refine/config.hpp"
#include "refine/error.hpp"
#include "support.hpp"

using namespace refine;
using refine::testing::TempDir;
using nlohmann::json;

namespace {

json base() {
    return {{"version", 1},
            {"task", "qa"},
            {"candidates", "candidates.jsonl"},
            {"embeddings", {{"file", "embeddings.jsonl"}}},
            {"nli", {{"file", "nli.jsonl"}}},
            {"output_dir", "out"}};
}

ErrorCode parse_error(const json& doc, const std::filesystem::path& dir) {
    try {
        parse_config(doc.dump(), dir);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("config was accepted: " << doc.dump());
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("config defaults follow the task") {
    TempDir tmp;
    const auto dir = refine::testing::copy_fixture("qa", tmp.path());
    const RunConfig qa = parse_config(base().dump(), dir);
    CHECK(qa.metric == MetricKind::hit_rate);
    CHECK(qa.extraction.kind == ExtractionRule::Kind::prefix_marker);
    CHECK(qa.extraction.marker == "Answer:");
    CHECK(qa.k == 5);
    CHECK(qa.grid_step == 0.1);
    CHECK(qa.uncertainty.neighborhood_size == 5);
    CHECK(qa.uncertainty.batch_limit == 1000);
    CHECK(qa.stability_metric == DistanceMetric::euclidean);
    CHECK(qa.coefficients.kind == Source<Coefficients>::Kind::tuned);
    CHECK(qa.scaling.kind == Source<ScalingFactors>::Kind::tuned);
    CHECK(qa.output_dir == dir / "out");
    CHECK_FALSE(qa.references.has_value());

    json doc = base();
    doc["task"] = "summarization";
    const RunConfig summ = parse_config(doc.dump(), dir);
    CHECK(summ.metric == MetricKind::rouge1);
    CHECK(summ.extraction.kind == ExtractionRule::Kind::whole_text);
}

TEST_CASE("config explicit values") {
    TempDir tmp;
    const auto dir = refine::testing::copy_fixture("qa", tmp.path());
    json doc = base();
    doc["coefficients"] = {{"alpha", 0.2}, {"beta", 0.3}, {"gamma", 0.5}};
    doc["scaling"] = {{"u_sta", 2.0}, {"u_ent", 3.0}, {"u_unc", 4.0}};
    doc["length_penalty"] = {{"q", 0.1}, {"p", 3}};
    doc["uncertainty"] = {{"neighborhood_size", 3}, {"batch_limit", 20}};
    doc["stability_metric"] = "cosine";
    doc["extraction"] = {{"prefix_marker", "Final:"}};
    doc["embeddings"] = {{"http", {{"base_url", "http://localhost:9000"}, {"timeout_ms", 1500}, {"max_batch", 8}}}};
    doc["grid_step"] = 0.25;
    const RunConfig c = parse_config(doc.dump(), dir);
    CHECK(c.coefficients.kind == Source<Coefficients>::Kind::fixed);
    CHECK(c.coefficients.value.gamma == 0.5);
    CHECK(c.scaling.value.u_unc == 4.0);
    CHECK(c.length_penalty.q == 0.1);
    CHECK(c.uncertainty.batch_limit == 20);
    CHECK(c.stability_metric == DistanceMetric::cosine);
    CHECK(c.extraction.marker == "Final:");
    CHECK(c.embeddings.kind == BackendConfig::Kind::http);
    CHECK(c.embeddings.http.max_batch == 8);
    CHECK(c.embeddings.http.timeout == std::chrono::milliseconds(1500));
}

TEST_CASE("config rejections") {
    TempDir tmp;
    const auto dir = refine::testing::copy_fixture("qa", tmp.path());
    auto with = [](const char* key, json value) {
        json doc = base();
        doc[key] = std::move(value);
        return doc;
    };
    CHECK(parse_error(with("colour", "blue"), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("version", 2), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("candidates", "nope.jsonl"), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("references", "nope.jsonl"), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("coefficients", {{"alpha", 0.5}, {"beta", 0.5}, {"gamma", 0.5}}), dir) ==
          ErrorCode::InvalidCoefficients);
    CHECK(parse_error(with("scaling", {{"u_sta", 0}, {"u_ent", 1}, {"u_unc", 1}}), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("grid_step", 0.3), dir) == ErrorCode::InvalidStep);
    CHECK(parse_error(with("length_penalty", {{"q", 0.1}, {"p", 0.5}}), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("uncertainty", {{"neighborhood_size", 0}}), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("uncertainty", {{"neighbourhood_size", 3}}), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("deterministic", false), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("task", "translation"), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("metric", "bleu"), dir) == ErrorCode::ConfigError);
    CHECK(parse_error(with("nli", {{"ftp", "x"}}), dir) == ErrorCode::ConfigError);
    try {
        parse_config("{not json", dir);
        FAIL("malformed config accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
}

TEST_CASE("cache directory override") {
    TempDir tmp;
    const auto dir = refine::testing::copy_fixture("qa", tmp.path());
    const RunConfig c = parse_config(base().dump(), dir);
    ::unsetenv("REFINE_CACHE_DIR");
    CHECK(c.cache_dir() == dir / "out" / ".cache");
    ::setenv("REFINE_CACHE_DIR", "/tmp/somewhere", 1);
    CHECK(c.cache_dir() == std::filesystem::path("/tmp/somewhere"));
    ::unsetenv("REFINE_CACHE_DIR");
}
