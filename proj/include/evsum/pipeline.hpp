#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evsum/apcluster.hpp"
#include "evsum/cooc.hpp"
#include "evsum/corpus.hpp"
#include "evsum/extract.hpp"
#include "evsum/objective.hpp"
#include "evsum/rouge.hpp"
#include "evsum/services.hpp"

namespace evsum {

/// Every tunable constant of the engine, read from one JSON config file.
struct PipelineConfig {
    ObjectiveConfig objective;
    BudgetConfig budget;
    AffinityOptions clustering;
    double margin = kDefaultMargin;
    std::optional<std::filesystem::path> cooc_weights;
    std::optional<std::string> rewrite_endpoint;
    std::optional<std::string> embedding_source;  // SEMB file or http(s) service URL
    std::uint64_t seed = 0;
    std::chrono::milliseconds service_timeout = kDefaultServiceTimeout;

    void validate() const;
    void apply(const TuneParams& p);
};

/// Unknown keys are rejected. Relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

/// Reads the configured embeddings for `cluster` from a file or service.
EmbeddingStore resolve_embeddings(const DocumentCluster& cluster, const PipelineConfig& cfg);

/// The stages of a run that do not depend on objective weights or budget.
struct PreparedCluster {
    DocumentCluster cluster;
    std::vector<std::vector<double>> vectors;  // universe order
    SimilarityMatrix matrix;
    Clustering clustering;
    std::vector<std::size_t> candidates;
};

PreparedCluster prepare_cluster(DocumentCluster cluster, const EmbeddingStore& store,
                                const PipelineConfig& cfg,
                                const MainEventTagger& tagger = lead_sentence_tagger());

/// max(0, Coc(i, main)) for every sentence; all zeros without a model.
std::vector<double> bias_scores(const PreparedCluster& prepared, std::size_t main_index,
                                const CoocModelPair* model);

/// Main-event selection, bias scoring, budget and greedy extraction.
ExtractResult extract_prepared(const PreparedCluster& prepared, const PipelineConfig& cfg,
                               const CoocModelPair* model);

struct SummarizeOutput {
    ExtractResult result;
    std::string summary;
    bool rewritten = false;                // true when the service produced the text
    std::optional<std::string> warning;    // set when the service failed
};

/// Rewrites through the configured service, falling back to passthrough.
SummarizeOutput finalize_summary(ExtractResult result, const PipelineConfig& cfg);

/// load -> embeddings -> similarity -> clustering -> main event -> bias ->
/// budget -> extract -> rewrite. Failures are StageErrors naming the stage.
SummarizeOutput run_summarize(const std::filesystem::path& cluster_path, const PipelineConfig& cfg,
                              const MainEventTagger& tagger = lead_sentence_tagger());

nlohmann::json summarize_to_json(const SummarizeOutput& out);

}  // namespace evsum
