#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "evsum/objective.hpp"

namespace evsum {

class DocumentCluster;
struct Document;

/// Picks the main-event sentence of one document: returns a sentence index
/// within `doc`.
using MainEventTagger = std::function<std::size_t(std::size_t doc_index, const Document& doc)>;

/// Lead-sentence tagger: every document's first sentence.
MainEventTagger lead_sentence_tagger();

/// One candidate universe index per document, in document order.
std::vector<std::size_t> main_event_candidates(const DocumentCluster& cluster,
                                               const MainEventTagger& tagger = lead_sentence_tagger());

/// Candidate with the largest singleton coverage; ties to the lowest index.
std::size_t select_main_event(const std::vector<std::size_t>& candidates, const ObjectiveContext& ctx,
                              double alpha);

struct BudgetConfig {
    double k = 4.0;
    double c = 10.0;

    void validate() const;
};

/// floor(k + c * variance) clamped to [1, n]; variance is 0 when n < 2.
std::size_t budget(const SimilarityMatrix& matrix, const BudgetConfig& cfg);

struct ExtractResult {
    std::size_t main_index = 0;
    SentenceSelection selection;  // selection order, main_index first
    std::size_t budget = 0;
    std::vector<double> gains;    // gain of each sentence added after the seed
    ObjectiveBreakdown scores;
    std::vector<std::string> summary_sentences;  // document order
};

/// Lazy greedy maximisation of F seeded with {main_index}. Produces the same
/// selection as naive greedy with lowest-index tie-breaking.
ExtractResult greedy_extract(const ObjectiveContext& ctx, const ObjectiveConfig& cfg,
                             std::size_t main_index, std::size_t budget);

struct BruteForceResult {
    SentenceSelection selection;  // ascending indices
    double value = 0.0;
};

inline constexpr std::size_t kBruteForceMaxSentences = 20;

/// Exhaustive maximum of F over size-`budget` sets containing main_index.
/// Ties go to the lexicographically smallest index set.
BruteForceResult brute_force_extract(const ObjectiveContext& ctx, const ObjectiveConfig& cfg,
                                     std::size_t main_index, std::size_t budget);

/// Fills summary_sentences from the cluster in (doc, sentence) order.
void attach_sentences(ExtractResult& result, const DocumentCluster& cluster);

nlohmann::json extract_result_to_json(const ExtractResult& result);

}  // namespace evsum
