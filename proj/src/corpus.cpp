#include "evsum/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

#include "evsum/error.hpp"
#include "evsum/io.hpp"

namespace evsum {

namespace {

constexpr std::array<std::string_view, 6> kAbbreviations = {
    "Mr.", "Mrs.", "Dr.", "U.S.", "St.", "vs.",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool has_content(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return !is_space(c); });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

// The whitespace-delimited word ending at `end` (inclusive).
std::string_view word_ending_at(std::string_view text, std::size_t end) {
    std::size_t begin = end;
    while (begin > 0 && !is_space(text[begin - 1])) --begin;
    return text.substr(begin, end - begin + 1);
}

bool is_abbreviation(std::string_view word) {
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view raw_text) {
    if (!has_content(raw_text)) {
        throw validation_error("cannot segment empty or all-whitespace text");
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        auto piece = trim(raw_text.substr(start, end - start));
        if (!piece.empty()) out.emplace_back(piece);
        start = end;
    };
    for (std::size_t i = 0; i < raw_text.size(); ++i) {
        if (!is_terminator(raw_text[i])) continue;
        bool boundary = i + 1 == raw_text.size() || is_space(raw_text[i + 1]);
        if (!boundary) continue;
        if (raw_text[i] == '.' && is_abbreviation(word_ending_at(raw_text, i))) continue;
        emit(i + 1);
    }
    emit(raw_text.size());
    return out;
}

DocumentCluster::DocumentCluster(std::string cluster_id, std::vector<Document> documents)
    : cluster_id_(std::move(cluster_id)), documents_(std::move(documents)) {
    if (documents_.empty()) {
        throw validation_error("cluster '" + cluster_id_ + "' has no documents");
    }
    for (std::size_t d = 0; d < documents_.size(); ++d) {
        const auto& doc = documents_[d];
        if (doc.sentences.empty()) {
            throw validation_error("document '" + doc.doc_id + "' has no sentences");
        }
        doc_offsets_.push_back(universe_.size());
        for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
            if (!has_content(doc.sentences[s])) {
                throw validation_error("document '" + doc.doc_id + "' sentence " +
                                       std::to_string(s) + " is empty");
            }
            universe_.push_back({universe_.size(), d, s, doc.sentences[s]});
        }
    }
}

std::size_t DocumentCluster::universe_index(std::size_t doc_index, std::size_t sent_index) const {
    if (doc_index >= documents_.size() ||
        sent_index >= documents_[doc_index].sentences.size()) {
        throw validation_error("sentence (" + std::to_string(doc_index) + ", " +
                               std::to_string(sent_index) + ") is outside the cluster");
    }
    return doc_offsets_[doc_index] + sent_index;
}

std::string DocumentCluster::embedding_key(std::size_t universe_index) const {
    const auto& rec = universe_.at(universe_index);
    return cluster_id_ + "/" + std::to_string(rec.doc_index) + "/" + std::to_string(rec.sent_index);
}

DocumentCluster cluster_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("cluster_id") || !j["cluster_id"].is_string()) {
        throw validation_error("cluster JSON needs a string 'cluster_id'");
    }
    if (!j.contains("documents") || !j["documents"].is_array()) {
        throw validation_error("cluster JSON needs a 'documents' array");
    }
    std::vector<Document> docs;
    for (const auto& jd : j["documents"]) {
        if (!jd.is_object()) throw validation_error("document entry must be an object");
        Document doc;
        if (jd.contains("doc_id")) {
            if (!jd["doc_id"].is_string()) throw validation_error("'doc_id' must be a string");
            doc.doc_id = jd["doc_id"].get<std::string>();
        }
        bool has_text = jd.contains("text");
        bool has_sents = jd.contains("sentences");
        if (has_text == has_sents) {
            throw validation_error("document '" + doc.doc_id +
                                   "' needs exactly one of 'text' or 'sentences'");
        }
        if (has_text) {
            if (!jd["text"].is_string()) throw validation_error("'text' must be a string");
            auto text = jd["text"].get<std::string>();
            if (!has_content(text)) {
                throw validation_error("document '" + doc.doc_id + "' has no sentences");
            }
            doc.sentences = segment_sentences(text);
        } else {
            if (!jd["sentences"].is_array()) throw validation_error("'sentences' must be an array");
            for (const auto& s : jd["sentences"]) {
                if (!s.is_string()) throw validation_error("sentences must be strings");
                doc.sentences.push_back(s.get<std::string>());
            }
        }
        docs.push_back(std::move(doc));
    }
    return DocumentCluster(j["cluster_id"].get<std::string>(), std::move(docs));
}

nlohmann::json cluster_to_json(const DocumentCluster& cluster) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : cluster.documents()) {
        docs.push_back({{"doc_id", d.doc_id}, {"sentences", d.sentences}});
    }
    return {{"cluster_id", cluster.cluster_id()}, {"documents", std::move(docs)}};
}

DocumentCluster load_cluster(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw io_error("cluster file '" + path.string() + "' does not exist");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("malformed cluster JSON in '" + path.string() + "': " + e.what());
    }
    return cluster_from_json(j);
}

void save_cluster(const DocumentCluster& cluster, const std::filesystem::path& path) {
    write_file_atomic(path, cluster_to_json(cluster).dump(2) + "\n");
}

}  // namespace evsum
