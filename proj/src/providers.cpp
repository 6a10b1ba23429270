#include "refine/providers.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <unordered_set>

#include "refine/error.hpp"
#include "refine/hashing.hpp"
#include "refine/io.hpp"

namespace refine {
namespace {

std::string key_label(const PredictionKey& key) {
    return "(sample_id=\"" + key.sample_id + "\", rank=" + std::to_string(key.rank) + ")";
}

std::string key_label(const PairKey& key) {
    return "(sample_id=\"" + key.sample_id + "\", premise_rank=" + std::to_string(key.premise_rank) +
           ", hypothesis_rank=" + std::to_string(key.hypothesis_rank) + ")";
}

Vector parse_vector(const Json& value) {
    if (!value.is_array() || value.empty()) {
        throw Error(ErrorCode::ParseError, "vector must be a non-empty array of numbers");
    }
    Vector out;
    out.reserve(value.size());
    for (const auto& x : value) {
        if (!x.is_number()) {
            throw Error(ErrorCode::ParseError, "vector must contain only numbers");
        }
        const double v = x.get<double>();
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::ParseError, "vector contains a non-finite value");
        }
        out.push_back(v);
    }
    return out;
}

std::filesystem::path cache_file(const std::filesystem::path& dir, std::string_view kind, const std::string& fingerprint) {
    return dir / (std::string(kind) + "-" + sha256_hex(fingerprint).substr(0, 16) + ".jsonl");
}

/// In-memory map from content hash to value, optionally mirrored to an
/// append-only JSONL file. Unreadable files are discarded and rewritten.
template <typename Value>
class ContentCache {
  public:
    using Decoder = Value (*)(const Json&);
    using Encoder = Json (*)(const Value&);

    ContentCache(std::optional<std::filesystem::path> file, Decoder decode, Encoder encode)
      : file_{std::move(file)}
      , encode_{encode} {
        if (file_) {
            load(decode);
        }
    }

    std::optional<Value> find(const std::string& key) const {
        std::shared_lock lock(mutex_);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    /// First insertion wins; returns the stored value.
    void insert(const std::vector<std::pair<std::string, Value>>& batch) {
        std::unique_lock lock(mutex_);
        std::string lines;
        for (const auto& [key, value] : batch) {
            if (entries_.try_emplace(key, value).second && file_) {
                Json row;
                row["k"] = key;
                row["v"] = encode_(value);
                lines += row.dump();
                lines += '\n';
            }
        }
        if (file_ && !lines.empty()) {
            std::ofstream out(*file_, std::ios::app | std::ios::binary);
            out << lines;
        }
    }

    template <typename Check>
    void validate(Check&& check) {
        for (const auto& [key, value] : entries_) {
            if (!check(value)) {
                discard();
                return;
            }
        }
    }

    std::size_t loaded() const { return loaded_; }
    bool rebuilt() const { return rebuilt_; }

  private:
    void load(Decoder decode) {
        std::filesystem::create_directories(file_->parent_path());
        if (!std::filesystem::exists(*file_)) return;
        try {
            for_each_jsonl(*file_, [&](const Json& row, std::size_t) {
                const auto k = row.find("k");
                const auto v = row.find("v");
                if (k == row.end() || !k->is_string() || v == row.end()) {
                    throw Error(ErrorCode::ParseError, "bad cache row");
                }
                entries_.insert_or_assign(k->get<std::string>(), decode(*v));
            });
            loaded_ = entries_.size();
        } catch (const std::exception&) {
            discard();
        }
    }

    void discard() {
        entries_.clear();
        loaded_ = 0;
        rebuilt_ = true;
        std::ofstream truncate(*file_, std::ios::trunc);
    }

    std::optional<std::filesystem::path> file_;
    Encoder encode_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, Value> entries_;
    std::size_t loaded_ = 0;
    bool rebuilt_ = false;
};

Vector decode_vector(const Json& value) { return parse_vector(value); }
Json encode_vector(const Vector& value) { return Json(value); }

double decode_probability(const Json& value) {
    if (!value.is_number()) throw Error(ErrorCode::ParseError, "bad cached probability");
    const double p = value.get<double>();
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::RangeViolation, "bad cached probability");
    return p;
}
Json encode_probability(const double& value) { return Json(value); }

template <typename Request, typename Fetch>
void fetch_in_chunks(std::span<const Request> requests, std::size_t max_batch, Fetch&& fetch) {
    const std::size_t chunk = max_batch == 0 ? requests.size() : max_batch;
    for (std::size_t begin = 0; begin < requests.size(); begin += chunk) {
        fetch(requests.subspan(begin, std::min(chunk, requests.size() - begin)));
    }
}

}  // namespace

std::pair<PredictionKey, Vector> parse_embedding_row(const Json& row) {
    const auto sample_id = row.find("sample_id");
    const auto rank = row.find("rank");
    if (sample_id == row.end() || !sample_id->is_string()) {
        throw Error(ErrorCode::ParseError, "field \"sample_id\" must be a string");
    }
    if (rank == row.end() || !rank->is_number_integer()) {
        throw Error(ErrorCode::ParseError, "field \"rank\" must be an integer");
    }
    const auto vector = row.find("vector");
    if (vector == row.end()) {
        throw Error(ErrorCode::ParseError, "missing field \"vector\"");
    }
    return {PredictionKey{sample_id->get<std::string>(), rank->get<int>()}, parse_vector(*vector)};
}

std::pair<PairKey, double> parse_nli_row(const Json& row) {
    const auto sample_id = row.find("sample_id");
    const auto premise = row.find("premise_rank");
    const auto hypothesis = row.find("hypothesis_rank");
    const auto p = row.find("p_entail");
    if (sample_id == row.end() || !sample_id->is_string()) {
        throw Error(ErrorCode::ParseError, "field \"sample_id\" must be a string");
    }
    if (premise == row.end() || !premise->is_number_integer() || hypothesis == row.end() ||
        !hypothesis->is_number_integer()) {
        throw Error(ErrorCode::ParseError, "premise_rank and hypothesis_rank must be integers");
    }
    if (p == row.end() || !p->is_number()) {
        throw Error(ErrorCode::ParseError, "field \"p_entail\" must be a number");
    }
    const double value = p->get<double>();
    if (!(value >= 0.0 && value <= 1.0)) {
        throw Error(ErrorCode::RangeViolation, "p_entail " + std::to_string(value) + " outside [0, 1]");
    }
    return {PairKey{sample_id->get<std::string>(), premise->get<int>(), hypothesis->get<int>()}, value};
}

EmbeddingTable load_embedding_file(const std::filesystem::path& path) {
    EmbeddingTable table;
    for_each_jsonl(path, [&](const Json& row, std::size_t) {
        auto [key, vector] = parse_embedding_row(row);
        if (table.dimension == 0) {
            table.dimension = vector.size();
        } else if (vector.size() != table.dimension) {
            throw Error(ErrorCode::DimensionMismatch, "vector has length " + std::to_string(vector.size()) +
                                                          ", expected " + std::to_string(table.dimension));
        }
        if (!table.vectors.insert_or_assign(std::move(key), std::move(vector)).second) {
            ++table.duplicate_keys;
        }
    });
    return table;
}

EntailmentTable load_nli_file(const std::filesystem::path& path) {
    EntailmentTable table;
    for_each_jsonl(path, [&](const Json& row, std::size_t) {
        auto [key, value] = parse_nli_row(row);
        if (!table.values.insert_or_assign(std::move(key), value).second) {
            ++table.duplicate_keys;
        }
    });
    return table;
}

FileEmbeddingBackend::FileEmbeddingBackend(const std::filesystem::path& path)
  : table_{load_embedding_file(path)}
  , fingerprint_{"file:" + file_sha256_hex(path.string())} {}

FileEmbeddingBackend::FileEmbeddingBackend(EmbeddingTable table, std::string fingerprint)
  : table_{std::move(table)}
  , fingerprint_{std::move(fingerprint)} {}

std::vector<Vector> FileEmbeddingBackend::fetch(std::span<const EmbedRequest> requests) {
    std::vector<Vector> out;
    out.reserve(requests.size());
    for (const auto& request : requests) {
        const auto it = table_.vectors.find(request.key);
        if (it == table_.vectors.end()) {
            throw Error(ErrorCode::MissingEmbedding, "no embedding for " + key_label(request.key));
        }
        out.push_back(it->second);
    }
    return out;
}

FileEntailmentBackend::FileEntailmentBackend(const std::filesystem::path& path)
  : table_{load_nli_file(path)}
  , fingerprint_{"file:" + file_sha256_hex(path.string())} {}

FileEntailmentBackend::FileEntailmentBackend(EntailmentTable table, std::string fingerprint)
  : table_{std::move(table)}
  , fingerprint_{std::move(fingerprint)} {}

std::vector<double> FileEntailmentBackend::fetch(std::span<const EntailRequest> requests) {
    std::vector<double> out;
    out.reserve(requests.size());
    for (const auto& request : requests) {
        const auto it = table_.values.find(request.key);
        if (it == table_.values.end()) {
            throw Error(ErrorCode::MissingEntailment, "no entailment value for " + key_label(request.key));
        }
        out.push_back(it->second);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct EmbeddingProvider::State {
    std::unique_ptr<EmbeddingBackend> backend;
    std::mutex backend_mutex;
    ContentCache<Vector> cache;
    std::atomic<std::size_t> dimension{0};
    std::atomic<std::size_t> hits{0};
    std::atomic<std::size_t> misses{0};

    State(std::unique_ptr<EmbeddingBackend> b, std::optional<std::filesystem::path> file)
      : backend{std::move(b)}
      , cache{std::move(file), &decode_vector, &encode_vector}
      , dimension{backend->declared_dimension()} {
        std::size_t cached_dimension = dimension.load();
        cache.validate([&](const Vector& v) {
            if (cached_dimension == 0) cached_dimension = v.size();
            return v.size() == cached_dimension;
        });
    }

    void check_dimension(const Vector& v) {
        std::size_t expected = 0;
        if (dimension.compare_exchange_strong(expected, v.size())) return;
        if (expected != v.size()) {
            throw Error(ErrorCode::DimensionMismatch, "vector has length " + std::to_string(v.size()) +
                                                          ", expected " + std::to_string(expected));
        }
    }
};

EmbeddingProvider::EmbeddingProvider(std::unique_ptr<EmbeddingBackend> backend,
                                     std::optional<std::filesystem::path> cache_dir) {
    std::optional<std::filesystem::path> file;
    if (cache_dir) {
        file = cache_file(*cache_dir, "embed", backend->fingerprint());
    }
    state_ = std::make_unique<State>(std::move(backend), std::move(file));
}

EmbeddingProvider::~EmbeddingProvider() = default;
EmbeddingProvider::EmbeddingProvider(EmbeddingProvider&&) noexcept = default;
EmbeddingProvider& EmbeddingProvider::operator=(EmbeddingProvider&&) noexcept = default;

std::vector<Vector> EmbeddingProvider::embed_batch(std::span<const EmbedRequest> requests) {
    State& state = *state_;
    std::vector<std::string> keys;
    keys.reserve(requests.size());
    std::vector<EmbedRequest> pending;
    std::vector<std::string> pending_keys;
    std::unordered_set<std::string> pending_seen;
    for (const auto& request : requests) {
        keys.push_back(sha256_hex(request.text));
        if (state.cache.find(keys.back())) {
            ++state.hits;
        } else if (pending_seen.insert(keys.back()).second) {
            pending.push_back(request);
            pending_keys.push_back(keys.back());
        }
    }
    state.misses += pending.size();

    std::size_t offset = 0;
    fetch_in_chunks<EmbedRequest>(pending, state.backend->max_batch(), [&](std::span<const EmbedRequest> chunk) {
        std::vector<Vector> vectors;
        {
            std::lock_guard lock(state.backend_mutex);
            vectors = state.backend->fetch(chunk);
        }
        if (vectors.size() != chunk.size()) {
            throw Error(ErrorCode::BackendUnavailable, "backend returned " + std::to_string(vectors.size()) +
                                                           " vectors for " + std::to_string(chunk.size()) + " texts");
        }
        std::vector<std::pair<std::string, Vector>> batch;
        batch.reserve(chunk.size());
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            for (double x : vectors[i]) {
                if (!std::isfinite(x)) {
                    throw Error(ErrorCode::RangeViolation, "non-finite embedding component for " +
                                                               key_label(chunk[i].key));
                }
            }
            state.check_dimension(vectors[i]);
            batch.emplace_back(pending_keys[offset + i], std::move(vectors[i]));
        }
        offset += chunk.size();
        state.cache.insert(batch);
    });

    std::vector<Vector> out;
    out.reserve(requests.size());
    for (const auto& key : keys) {
        auto vector = state.cache.find(key);
        state.check_dimension(*vector);
        out.push_back(std::move(*vector));
    }
    return out;
}

std::size_t EmbeddingProvider::dimension() const {
    return state_->dimension.load();
}

CacheStats EmbeddingProvider::stats() const {
    return {state_->hits.load(), state_->misses.load(), state_->cache.loaded(), state_->cache.rebuilt()};
}

// ---------------------------------------------------------------------------

struct EntailmentProvider::State {
    std::unique_ptr<EntailmentBackend> backend;
    std::mutex backend_mutex;
    ContentCache<double> cache;
    std::atomic<std::size_t> hits{0};
    std::atomic<std::size_t> misses{0};

    State(std::unique_ptr<EntailmentBackend> b, std::optional<std::filesystem::path> file)
      : backend{std::move(b)}
      , cache{std::move(file), &decode_probability, &encode_probability} {}
};

EntailmentProvider::EntailmentProvider(std::unique_ptr<EntailmentBackend> backend,
                                       std::optional<std::filesystem::path> cache_dir) {
    std::optional<std::filesystem::path> file;
    if (cache_dir) {
        file = cache_file(*cache_dir, "nli", backend->fingerprint());
    }
    state_ = std::make_unique<State>(std::move(backend), std::move(file));
}

EntailmentProvider::~EntailmentProvider() = default;
EntailmentProvider::EntailmentProvider(EntailmentProvider&&) noexcept = default;
EntailmentProvider& EntailmentProvider::operator=(EntailmentProvider&&) noexcept = default;

std::vector<double> EntailmentProvider::entail_pairs(std::span<const EntailRequest> requests) {
    State& state = *state_;
    std::vector<std::string> keys;
    keys.reserve(requests.size());
    std::vector<EntailRequest> pending;
    std::vector<std::string> pending_keys;
    std::unordered_set<std::string> pending_seen;
    for (const auto& request : requests) {
        keys.push_back(sha256_hex(request.premise) + ":" + sha256_hex(request.hypothesis));
        if (state.cache.find(keys.back())) {
            ++state.hits;
        } else if (pending_seen.insert(keys.back()).second) {
            pending.push_back(request);
            pending_keys.push_back(keys.back());
        }
    }
    state.misses += pending.size();

    std::size_t offset = 0;
    fetch_in_chunks<EntailRequest>(pending, state.backend->max_batch(), [&](std::span<const EntailRequest> chunk) {
        std::vector<double> values;
        {
            std::lock_guard lock(state.backend_mutex);
            values = state.backend->fetch(chunk);
        }
        if (values.size() != chunk.size()) {
            throw Error(ErrorCode::BackendUnavailable, "backend returned " + std::to_string(values.size()) +
                                                           " values for " + std::to_string(chunk.size()) + " pairs");
        }
        std::vector<std::pair<std::string, double>> batch;
        batch.reserve(chunk.size());
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
                throw Error(ErrorCode::RangeViolation, "entailment probability " + std::to_string(values[i]) +
                                                           " outside [0, 1] for " + key_label(chunk[i].key));
            }
            batch.emplace_back(pending_keys[offset + i], values[i]);
        }
        offset += chunk.size();
        state.cache.insert(batch);
    });

    std::vector<double> out;
    out.reserve(requests.size());
    for (const auto& key : keys) {
        out.push_back(*state.cache.find(key));
    }
    return out;
}

CacheStats EntailmentProvider::stats() const {
    return {state_->hits.load(), state_->misses.load(), state_->cache.loaded(), state_->cache.rebuilt()};
}

}  // namespace refine
