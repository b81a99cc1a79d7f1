#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "evsum/simgraph.hpp"

namespace evsum {

inline constexpr std::chrono::seconds kDefaultServiceTimeout{30};
inline constexpr const char* kRewritePrompt = "re-write";

struct RewriteRequest {
    std::vector<std::string> sentences;  // document order, non-empty
};

struct RewriteResponse {
    std::string summary_text;
};

/// An http(s) URL split into the scheme+authority part and the request path.
struct HttpEndpoint {
    std::string base;  // e.g. "http://localhost:8080"
    std::string path;  // e.g. "/rewrite"; "/" when absent

    static HttpEndpoint parse(const std::string& url);
};

bool is_http_url(const std::string& s);

/// POST {"prompt":"re-write","sentences":[...]} and expect {"summary": str}.
/// Throws io errors for transport failures and non-2xx statuses, validation
/// errors for malformed replies.
RewriteResponse rewrite(const std::string& endpoint, const RewriteRequest& request,
                        std::chrono::milliseconds timeout = kDefaultServiceTimeout);

/// Sentences joined by single spaces.
std::string passthrough_rewrite(const RewriteRequest& request);

/// POST {"sentences":[...]} and expect {"dim": d, "vectors": [[...], ...]}.
/// Vector i is stored under keys[i].
EmbeddingStore fetch_embeddings(const std::string& service_url, const std::vector<std::string>& sentences,
                                const std::vector<std::string>& keys,
                                std::chrono::milliseconds timeout = kDefaultServiceTimeout);

}  // namespace evsum
