#include <cmath>
#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "camera/errors.hpp"
#include "camera/io.hpp"

namespace camera {

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/embeddings
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

FeatureMatrix fetch_embeddings(const std::vector<TextRecord>& records,
                               const EmbeddingServiceConfig& config) {
    if (records.empty()) throw DataError("fetch_embeddings: no records");
    if (config.batch_size < 1) throw ConfigError("fetch_embeddings: batch_size must be >= 1");

    std::string token;
    if (!config.auth_token_env.empty()) {
        const char* v = std::getenv(config.auth_token_env.c_str());
        if (v == nullptr || *v == '\0')
            throw ConfigError("fetch_embeddings: auth token env var " + config.auth_token_env +
                              " is not set");
        token = v;
    }

    const SplitUrl url = split_url(config.endpoint_url);
    httplib::Client client(url.base);
    client.set_connection_timeout(config.timeout.count(), 0);
    client.set_read_timeout(config.timeout.count(), 0);

    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    std::vector<std::vector<float>> rows;
    rows.reserve(records.size());
    std::size_t dim = 0;

    for (std::size_t start = 0; start < records.size(); start += config.batch_size) {
        const std::size_t end = std::min(records.size(), start + config.batch_size);
        nlohmann::json body;
        body["model"] = config.model_name;
        auto& input = body["input"] = nlohmann::json::array();
        for (std::size_t i = start; i < end; ++i) input.push_back(records[i].text);
        const std::string payload = body.dump();

        httplib::Result res;
        std::string last_error;
        for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
            res = client.Post(url.path, headers, payload, "application/json");
            if (res && res->status == 200) break;
            last_error = res ? "HTTP " + std::to_string(res->status)
                             : "connection error (" + httplib::to_string(res.error()) + ")";
            res = httplib::Result();
        }
        if (!res)
            throw DataError("fetch_embeddings: batch at record " + std::to_string(start) +
                            " failed after " + std::to_string(config.max_attempts) +
                            " attempts: " + last_error);

        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("fetch_embeddings: invalid JSON reply: ") + e.what());
        }
        if (!reply.contains("data") || !reply["data"].is_array() ||
            reply["data"].size() != end - start)
            throw DataError("fetch_embeddings: reply row count != batch size");

        for (const auto& item : reply["data"]) {
            if (!item.contains("embedding") || !item["embedding"].is_array())
                throw DataError("fetch_embeddings: reply item missing embedding array");
            std::vector<float> row;
            row.reserve(item["embedding"].size());
            for (const auto& x : item["embedding"]) {
                if (!x.is_number()) throw DataError("fetch_embeddings: non-numeric embedding entry");
                const float f = x.get<float>();
                if (!std::isfinite(f)) throw DataError("fetch_embeddings: non-finite embedding entry");
                row.push_back(f);
            }
            if (dim == 0) dim = row.size();
            if (row.size() != dim)
                throw DataError("fetch_embeddings: dimension mismatch across batches (" +
                                std::to_string(row.size()) + " vs " + std::to_string(dim) + ")");
            rows.push_back(std::move(row));
        }
    }

    if (dim == 0) throw DataError("fetch_embeddings: service returned zero-dimensional embeddings");
    FeatureMatrix m(rows.size(), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), m.row(i));
    return m;
}

}  // namespace camera
