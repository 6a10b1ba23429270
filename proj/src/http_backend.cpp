#include <httplib.h>

#include <cmath>
#include <thread>

#include "refine/error.hpp"
#include "refine/io.hpp"
#include "refine/providers.hpp"

namespace refine {
namespace {

/// POSTs `body` and returns the parsed 200 response. Any transport failure,
/// non-200 status or unparseable body is retried with exponential backoff.
Json post_with_retry(const HttpOptions& options, const std::string& path, const Json& body) {
    httplib::Client client(options.base_url);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    const std::string payload = body.dump();
    std::string last_error = "no attempt made";
    const int attempts = std::max(1, options.attempts);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const double factor = std::pow(options.backoff_factor, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(
                options.backoff_base * factor));
        }
        auto response = client.Post(path, payload, "application/json");
        if (!response) {
            last_error = httplib::to_string(response.error());
            continue;
        }
        if (response->status != 200) {
            last_error = "HTTP " + std::to_string(response->status);
            const Json error_body = Json::parse(response->body, nullptr, false);
            if (error_body.is_object() && error_body.contains("error") && error_body["error"].is_string()) {
                last_error += " (" + error_body["error"].get<std::string>() + ")";
            }
            continue;
        }
        Json parsed = Json::parse(response->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            last_error = "malformed response body";
            continue;
        }
        return parsed;
    }
    throw Error(ErrorCode::BackendUnavailable, options.base_url + path + " failed after " +
                                                   std::to_string(attempts) + " attempts: " + last_error);
}

}  // namespace

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpOptions options)
  : options_{std::move(options)} {}

std::vector<Vector> HttpEmbeddingBackend::fetch(std::span<const EmbedRequest> requests) {
    Json body;
    body["texts"] = Json::array();
    for (const auto& request : requests) {
        body["texts"].push_back(request.text);
    }
    const Json response = post_with_retry(options_, "/v1/embed", body);
    const auto vectors = response.find("vectors");
    if (vectors == response.end() || !vectors->is_array() || vectors->size() != requests.size()) {
        throw Error(ErrorCode::BackendUnavailable, "embed response must carry one vector per text");
    }
    std::size_t dim = 0;
    if (const auto d = response.find("dim"); d != response.end() && d->is_number_unsigned()) {
        dim = d->get<std::size_t>();
    }
    std::vector<Vector> out;
    out.reserve(requests.size());
    for (const auto& row : *vectors) {
        if (!row.is_array()) {
            throw Error(ErrorCode::BackendUnavailable, "embed response vectors must be arrays");
        }
        Vector vector;
        vector.reserve(row.size());
        for (const auto& x : row) {
            if (!x.is_number()) {
                throw Error(ErrorCode::BackendUnavailable, "embed response vectors must hold numbers");
            }
            vector.push_back(x.get<double>());
        }
        if (dim != 0 && vector.size() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "embed response vector of length " +
                                                          std::to_string(vector.size()) + " but dim " +
                                                          std::to_string(dim));
        }
        out.push_back(std::move(vector));
    }
    return out;
}

HttpEntailmentBackend::HttpEntailmentBackend(HttpOptions options)
  : options_{std::move(options)} {}

std::vector<double> HttpEntailmentBackend::fetch(std::span<const EntailRequest> requests) {
    Json body;
    body["pairs"] = Json::array();
    for (const auto& request : requests) {
        body["pairs"].push_back({{"premise", request.premise}, {"hypothesis", request.hypothesis}});
    }
    const Json response = post_with_retry(options_, "/v1/entail", body);
    const auto values = response.find("entail");
    if (values == response.end() || !values->is_array() || values->size() != requests.size()) {
        throw Error(ErrorCode::BackendUnavailable, "entail response must carry one value per pair");
    }
    std::vector<double> out;
    out.reserve(requests.size());
    for (const auto& x : *values) {
        if (!x.is_number()) {
            throw Error(ErrorCode::BackendUnavailable, "entail response values must be numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace refine
