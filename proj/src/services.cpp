#include "evsum/services.hpp"

#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evsum/error.hpp"

namespace evsum {

namespace {

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         std::chrono::milliseconds timeout) {
    const auto ep = HttpEndpoint::parse(url);
    httplib::Client client(ep.base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) {
        throw io_error("request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw io_error("request to " + url + " returned HTTP " + std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("malformed reply from " + url + ": " + e.what());
    }
}

}  // namespace

bool is_http_url(const std::string& s) {
    return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0;
}

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/?#]+)([^#]*)$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw validation_error("not an http URL: '" + url + "'");
    HttpEndpoint ep{m[1].str(), m[2].str()};
    if (ep.path.empty()) ep.path = "/";
    return ep;
}

RewriteResponse rewrite(const std::string& endpoint, const RewriteRequest& request,
                        std::chrono::milliseconds timeout) {
    if (request.sentences.empty()) throw validation_error("rewrite request has no sentences");
    const nlohmann::json body = {{"prompt", kRewritePrompt}, {"sentences", request.sentences}};
    const auto reply = post_json(endpoint, body, timeout);
    if (!reply.is_object() || !reply.contains("summary") || !reply["summary"].is_string()) {
        throw validation_error("rewrite reply lacks a string 'summary'");
    }
    RewriteResponse out{reply["summary"].get<std::string>()};
    if (out.summary_text.empty()) throw validation_error("rewrite reply is empty");
    return out;
}

std::string passthrough_rewrite(const RewriteRequest& request) {
    std::string out;
    for (const auto& s : request.sentences) {
        if (!out.empty()) out += ' ';
        out += s;
    }
    return out;
}

EmbeddingStore fetch_embeddings(const std::string& service_url, const std::vector<std::string>& sentences,
                                const std::vector<std::string>& keys,
                                std::chrono::milliseconds timeout) {
    if (sentences.size() != keys.size()) throw validation_error("one key per sentence is required");
    const auto reply = post_json(service_url, {{"sentences", sentences}}, timeout);
    if (!reply.is_object() || !reply.contains("dim") || !reply["dim"].is_number_unsigned() ||
        !reply.contains("vectors") || !reply["vectors"].is_array()) {
        throw validation_error("embedding reply needs 'dim' and 'vectors'");
    }
    const auto dim = reply["dim"].get<std::size_t>();
    const auto& vectors = reply["vectors"];
    if (vectors.size() != sentences.size()) {
        throw validation_error("embedding service returned " + std::to_string(vectors.size()) +
                               " vectors for " + std::to_string(sentences.size()) + " sentences");
    }
    EmbeddingStore store(dim);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const auto& jv = vectors[i];
        if (!jv.is_array()) throw validation_error("embedding vector must be an array");
        std::vector<float> v;
        v.reserve(jv.size());
        for (const auto& x : jv) {
            if (!x.is_number()) {
                throw validation_error("embedding vector " + std::to_string(i) +
                                       " has a non-numeric component");
            }
            v.push_back(x.get<float>());
        }
        store.insert(keys[i], std::move(v));
    }
    return store;
}

}  // namespace evsum
