#include "evsum/extract.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <nlohmann/json.hpp>

#include "evsum/corpus.hpp"
#include "evsum/error.hpp"

namespace evsum {

MainEventTagger lead_sentence_tagger() {
    return [](std::size_t, const Document&) -> std::size_t { return 0; };
}

std::vector<std::size_t> main_event_candidates(const DocumentCluster& cluster,
                                               const MainEventTagger& tagger) {
    if (!tagger) throw validation_error("main-event tagger is not set");
    std::vector<std::size_t> out;
    const auto& docs = cluster.documents();
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const std::size_t s = tagger(d, docs[d]);
        if (s >= docs[d].sentences.size()) {
            throw validation_error("tagger returned sentence " + std::to_string(s) +
                                   " outside document " + std::to_string(d));
        }
        out.push_back(cluster.universe_index(d, s));
    }
    return out;
}

std::size_t select_main_event(const std::vector<std::size_t>& candidates, const ObjectiveContext& ctx,
                              double alpha) {
    if (candidates.empty()) throw validation_error("no main-event candidates");
    std::size_t best = 0;
    double best_cov = -1.0;
    for (std::size_t c : candidates) {
        const double cov = coverage(SentenceSelection({c}), ctx, alpha);
        if (cov > best_cov || (cov == best_cov && c < best)) {
            best = c;
            best_cov = cov;
        }
    }
    return best;
}

void BudgetConfig::validate() const {
    if (!std::isfinite(k) || k < 1.0) throw validation_error("budget k must be >= 1");
    if (!std::isfinite(c) || c < 0.0) throw validation_error("budget c must be >= 0");
}

std::size_t budget(const SimilarityMatrix& matrix, const BudgetConfig& cfg) {
    cfg.validate();
    const std::size_t n = matrix.size();
    if (n == 0) throw validation_error("budget needs a non-empty universe");
    const double variance = n < 2 ? 0.0 : pairwise_variance(matrix);
    const double raw = std::floor(cfg.k + cfg.c * variance);
    if (raw <= 1.0) return 1;
    if (raw >= static_cast<double>(n)) return n;
    return static_cast<std::size_t>(raw);
}

namespace {

struct Candidate {
    double bound;
    std::size_t index;
    std::size_t round;  // selection size when `bound` was computed
};

// Max-heap on bound, then lowest index.
struct CandidateOrder {
    bool operator()(const Candidate& a, const Candidate& b) const {
        if (a.bound != b.bound) return a.bound < b.bound;
        return a.index > b.index;
    }
};

}  // namespace

ExtractResult greedy_extract(const ObjectiveContext& ctx, const ObjectiveConfig& cfg,
                             std::size_t main_index, std::size_t budget) {
    const std::size_t n = ctx.size();
    if (budget < 1) throw validation_error("budget must be at least 1");
    if (main_index >= n) throw validation_error("main index out of range");
    budget = std::min(budget, n);

    GainTracker tracker(ctx, cfg);
    tracker.add(main_index);

    ExtractResult result;
    result.main_index = main_index;
    result.budget = budget;

    std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> heap;
    for (std::size_t x = 0; x < n; ++x) {
        if (x != main_index) heap.push({tracker.gain(x), x, 1});
    }
    // A stale bound is an upper bound on the fresh gain (submodularity), so a
    // freshly evaluated top element beats every other candidate.
    while (tracker.selection().size() < budget && !heap.empty()) {
        Candidate top = heap.top();
        heap.pop();
        const std::size_t round = tracker.selection().size();
        if (top.round == round) {
            tracker.add(top.index);
            result.gains.push_back(top.bound);
        } else {
            heap.push({tracker.gain(top.index), top.index, round});
        }
    }
    result.selection = tracker.selection();
    result.scores = objective_breakdown(result.selection, ctx, cfg);
    return result;
}

BruteForceResult brute_force_extract(const ObjectiveContext& ctx, const ObjectiveConfig& cfg,
                                     std::size_t main_index, std::size_t budget) {
    const std::size_t n = ctx.size();
    if (n > kBruteForceMaxSentences) {
        throw validation_error("brute force limited to " + std::to_string(kBruteForceMaxSentences) +
                               " sentences");
    }
    if (main_index >= n) throw validation_error("main index out of range");
    if (budget < 1) throw validation_error("budget must be at least 1");
    budget = std::min(budget, n);

    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != main_index) others.push_back(i);
    }
    const std::size_t pick = budget - 1;
    // Combinations of `others` in lexicographic order via a selector mask.
    std::vector<bool> mask(others.size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(pick), true);

    BruteForceResult best;
    bool have = false;
    std::vector<std::size_t> best_members;
    do {
        std::vector<std::size_t> members{main_index};
        for (std::size_t i = 0; i < others.size(); ++i) {
            if (mask[i]) members.push_back(others[i]);
        }
        std::sort(members.begin(), members.end());
        const double v = objective_value(SentenceSelection(members), ctx, cfg);
        if (!have || v > best.value || (v == best.value && members < best_members)) {
            best.value = v;
            best_members = members;
            have = true;
        }
    } while (std::prev_permutation(mask.begin(), mask.end()));
    best.selection = SentenceSelection(best_members);
    return best;
}

void attach_sentences(ExtractResult& result, const DocumentCluster& cluster) {
    std::vector<std::size_t> ordered = result.selection.members();
    // Universe indices already follow (doc, sentence) order.
    std::sort(ordered.begin(), ordered.end());
    result.summary_sentences.clear();
    for (std::size_t i : ordered) result.summary_sentences.push_back(cluster.universe().at(i).text);
}

nlohmann::json extract_result_to_json(const ExtractResult& result) {
    return {{"main_index", result.main_index},
            {"selection", result.selection.members()},
            {"budget", result.budget},
            {"gains", result.gains},
            {"scores",
             {{"coverage", result.scores.coverage},
              {"diversity", result.scores.diversity},
              {"bias", result.scores.bias},
              {"total", result.scores.total}}},
            {"sentences", result.summary_sentences}};
}

}  // namespace evsum
