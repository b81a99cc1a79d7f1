#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace evsum {

struct SentenceRecord {
    std::size_t universe_index = 0;
    std::size_t doc_index = 0;
    std::size_t sent_index = 0;
    std::string text;

    bool operator==(const SentenceRecord&) const = default;
};

struct Document {
    std::string doc_id;
    std::vector<std::string> sentences;

    bool operator==(const Document&) const = default;
};

/// A set of documents reporting one event, plus the flattened sentence
/// universe ordered by (document, sentence) position. Immutable once built.
class DocumentCluster {
public:
    /// Validates and indexes `documents`. Throws on an empty cluster or a
    /// document without sentences.
    DocumentCluster(std::string cluster_id, std::vector<Document> documents);

    const std::string& cluster_id() const noexcept { return cluster_id_; }
    const std::vector<Document>& documents() const noexcept { return documents_; }
    const std::vector<SentenceRecord>& universe() const noexcept { return universe_; }
    std::size_t size() const noexcept { return universe_.size(); }

    /// Universe index of sentence `sent_index` in document `doc_index`.
    std::size_t universe_index(std::size_t doc_index, std::size_t sent_index) const;

    /// Key under which the sentence's embedding is stored:
    /// "cluster_id/doc_index/sent_index".
    std::string embedding_key(std::size_t universe_index) const;

private:
    std::string cluster_id_;
    std::vector<Document> documents_;
    std::vector<SentenceRecord> universe_;
    std::vector<std::size_t> doc_offsets_;
};

/// Rule-based sentence splitter. Splits after '.', '!' or '?' when followed by
/// whitespace or end of input, except after a fixed list of abbreviations.
std::vector<std::string> segment_sentences(std::string_view raw_text);

DocumentCluster cluster_from_json(const nlohmann::json& j);
nlohmann::json cluster_to_json(const DocumentCluster& cluster);

DocumentCluster load_cluster(const std::filesystem::path& path);
/// Writes the cluster with pre-split sentences, so reloading is lossless.
void save_cluster(const DocumentCluster& cluster, const std::filesystem::path& path);

}  // namespace evsum
