#pragma once

#include <chrono>
#include <compare>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "refine/types.hpp"

namespace refine {

struct PredictionKey {
    std::string sample_id;
    int rank = 0;

    auto operator<=>(const PredictionKey&) const = default;
};

struct PairKey {
    std::string sample_id;
    int premise_rank = 0;
    int hypothesis_rank = 0;

    auto operator<=>(const PairKey&) const = default;
};

/// A text to embed plus the (sample_id, rank) it was drawn from; file
/// backends look vectors up by key, remote backends by text.
struct EmbedRequest {
    std::string text;
    PredictionKey key;
};

struct EntailRequest {
    std::string premise;
    std::string hypothesis;
    PairKey key;
};

// embeddings.jsonl: {"sample_id": str, "rank": int, "vector": [number, ...]}
struct EmbeddingTable {
    std::map<PredictionKey, Vector> vectors;
    std::size_t dimension = 0;
    std::size_t duplicate_keys = 0;
};

EmbeddingTable load_embedding_file(const std::filesystem::path& path);
std::pair<PredictionKey, Vector> parse_embedding_row(const nlohmann::json& row);

// nli.jsonl: {"sample_id": str, "premise_rank": int, "hypothesis_rank": int, "p_entail": number}
struct EntailmentTable {
    std::map<PairKey, double> values;
    std::size_t duplicate_keys = 0;
};

EntailmentTable load_nli_file(const std::filesystem::path& path);
std::pair<PairKey, double> parse_nli_row(const nlohmann::json& row);

class EmbeddingBackend {
  public:
    virtual ~EmbeddingBackend() = default;

    /// One vector per request, in request order.
    virtual std::vector<Vector> fetch(std::span<const EmbedRequest> requests) = 0;

    /// Identifies the data source; on-disk cache entries are namespaced by it.
    virtual std::string fingerprint() const = 0;

    /// Largest request the backend accepts; 0 means unbounded.
    virtual std::size_t max_batch() const { return 0; }

    /// Known dimension before any fetch, or 0.
    virtual std::size_t declared_dimension() const { return 0; }
};

class EntailmentBackend {
  public:
    virtual ~EntailmentBackend() = default;
    virtual std::vector<double> fetch(std::span<const EntailRequest> requests) = 0;
    virtual std::string fingerprint() const = 0;
    virtual std::size_t max_batch() const { return 0; }
};

class FileEmbeddingBackend final : public EmbeddingBackend {
  public:
    explicit FileEmbeddingBackend(const std::filesystem::path& path);
    FileEmbeddingBackend(EmbeddingTable table, std::string fingerprint);

    std::vector<Vector> fetch(std::span<const EmbedRequest> requests) override;
    std::string fingerprint() const override { return fingerprint_; }
    std::size_t declared_dimension() const override { return table_.dimension; }

    const EmbeddingTable& table() const { return table_; }

  private:
    EmbeddingTable table_;
    std::string fingerprint_;
};

class FileEntailmentBackend final : public EntailmentBackend {
  public:
    explicit FileEntailmentBackend(const std::filesystem::path& path);
    FileEntailmentBackend(EntailmentTable table, std::string fingerprint);

    std::vector<double> fetch(std::span<const EntailRequest> requests) override;
    std::string fingerprint() const override { return fingerprint_; }

    const EntailmentTable& table() const { return table_; }

  private:
    EntailmentTable table_;
    std::string fingerprint_;
};

struct HttpOptions {
    std::string base_url;  // e.g. "http://127.0.0.1:8080"
    std::chrono::milliseconds timeout{30'000};
    std::size_t max_batch = 64;
    int attempts = 3;
    std::chrono::milliseconds backoff_base{250};
    double backoff_factor = 2.0;
};

/// POST /v1/embed {"texts": [...]} -> {"vectors": [[...], ...], "dim": d}
class HttpEmbeddingBackend final : public EmbeddingBackend {
  public:
    explicit HttpEmbeddingBackend(HttpOptions options);

    std::vector<Vector> fetch(std::span<const EmbedRequest> requests) override;
    std::string fingerprint() const override { return "http:" + options_.base_url; }
    std::size_t max_batch() const override { return options_.max_batch; }

  private:
    HttpOptions options_;
};

/// POST /v1/entail {"pairs": [{"premise", "hypothesis"}, ...]} -> {"entail": [...]}
class HttpEntailmentBackend final : public EntailmentBackend {
  public:
    explicit HttpEntailmentBackend(HttpOptions options);

    std::vector<double> fetch(std::span<const EntailRequest> requests) override;
    std::string fingerprint() const override { return "http:" + options_.base_url; }
    std::size_t max_batch() const override { return options_.max_batch; }

  private:
    HttpOptions options_;
};

struct CacheStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t loaded = 0;      // entries restored from disk
    bool rebuilt = false;        // on-disk cache was unreadable and discarded
};

/// Content-addressed cache in front of a backend. Identical texts always
/// receive the identical vector; results never depend on cache temperature
/// or request chunking. Safe for concurrent callers.
class EmbeddingProvider {
  public:
    explicit EmbeddingProvider(std::unique_ptr<EmbeddingBackend> backend,
                               std::optional<std::filesystem::path> cache_dir = std::nullopt);
    ~EmbeddingProvider();
    EmbeddingProvider(EmbeddingProvider&&) noexcept;
    EmbeddingProvider& operator=(EmbeddingProvider&&) noexcept;

    std::vector<Vector> embed_batch(std::span<const EmbedRequest> requests);

    /// 0 until the first vector is seen unless the backend declares it.
    std::size_t dimension() const;
    CacheStats stats() const;

  private:
    struct State;
    std::unique_ptr<State> state_;
};

/// Directional (premise, hypothesis) cache in front of an NLI backend.
class EntailmentProvider {
  public:
    explicit EntailmentProvider(std::unique_ptr<EntailmentBackend> backend,
                                std::optional<std::filesystem::path> cache_dir = std::nullopt);
    ~EntailmentProvider();
    EntailmentProvider(EntailmentProvider&&) noexcept;
    EntailmentProvider& operator=(EntailmentProvider&&) noexcept;

    std::vector<double> entail_pairs(std::span<const EntailRequest> requests);
    CacheStats stats() const;

  private:
    struct State;
    std::unique_ptr<State> state_;
};

}  // namespace refine
