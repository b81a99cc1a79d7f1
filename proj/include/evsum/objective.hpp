#pragma once

#include <cstddef>
#include <vector>

#include "evsum/apcluster.hpp"
#include "evsum/simgraph.hpp"

namespace evsum {

/// Tolerance for objective identities (monotonicity, incremental gains).
inline constexpr double kObjectiveTolerance = 1e-9;

struct ObjectiveConfig {
    double alpha = 0.3;    // coverage saturation factor
    double lambda1 = 1.0;  // diversity weight
    double lambda2 = 1.0;  // main-event bias weight

    void validate() const;
};

/// Everything the objective reads for one cluster: similarities, the sentence
/// partition, per-sentence bias against the main event and the precomputed
/// singleton coverage c_i(U). Immutable.
class ObjectiveContext {
public:
    /// Negative bias scores are clamped to zero.
    ObjectiveContext(SimilarityMatrix matrix, Clustering clustering, std::vector<double> bias_scores);

    std::size_t size() const noexcept { return matrix_.size(); }
    const SimilarityMatrix& matrix() const noexcept { return matrix_; }
    const Clustering& clustering() const noexcept { return clustering_; }
    const std::vector<double>& bias_scores() const noexcept { return bias_; }
    /// c_i(U) = sum_j Sim(i, j).
    const std::vector<double>& singleton_coverage() const noexcept { return coverage_; }

private:
    SimilarityMatrix matrix_;
    Clustering clustering_;
    std::vector<double> bias_;
    std::vector<double> coverage_;
};

/// Ordered set of universe indices, in the order they were selected.
class SentenceSelection {
public:
    SentenceSelection() = default;
    /// Throws on duplicates.
    explicit SentenceSelection(std::vector<std::size_t> members);

    const std::vector<std::size_t>& members() const noexcept { return members_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    bool contains(std::size_t i) const;
    /// Throws if already present.
    void add(std::size_t i);

    bool operator==(const SentenceSelection&) const = default;

private:
    std::vector<std::size_t> members_;
};

/// C(S) = sum_i min(sum_{j in S} Sim(i,j), alpha * c_i(U)).
double coverage(const SentenceSelection& s, const ObjectiveContext& ctx, double alpha);

/// D(S) = sum_k sqrt(sum_{j in P_k and S} c_j(U) / n).
double diversity(const SentenceSelection& s, const ObjectiveContext& ctx);

/// B(S) = sum_{i in S} bias_i.
double main_bias(const SentenceSelection& s, const ObjectiveContext& ctx);

struct ObjectiveBreakdown {
    double coverage = 0.0;
    double diversity = 0.0;
    double bias = 0.0;
    double total = 0.0;
};

ObjectiveBreakdown objective_breakdown(const SentenceSelection& s, const ObjectiveContext& ctx,
                                       const ObjectiveConfig& cfg);

/// F(S) = C(S) + lambda1 * D(S) + lambda2 * B(S).
double objective_value(const SentenceSelection& s, const ObjectiveContext& ctx,
                       const ObjectiveConfig& cfg);

/// F(S + x) - F(S). Throws if x is already in S.
double marginal_gain(const SentenceSelection& s, std::size_t x, const ObjectiveContext& ctx,
                     const ObjectiveConfig& cfg);

/// Running per-sentence coverage and per-cluster mass for one selection, so
/// each marginal gain costs O(n) instead of a full recompute.
class GainTracker {
public:
    GainTracker(const ObjectiveContext& ctx, const ObjectiveConfig& cfg);

    double gain(std::size_t x) const;
    void add(std::size_t x);
    const SentenceSelection& selection() const noexcept { return selection_; }

private:
    const ObjectiveContext* ctx_;
    ObjectiveConfig cfg_;
    SentenceSelection selection_;
    std::vector<double> covered_;       // sum_{j in S} Sim(i, j)
    std::vector<double> caps_;          // alpha * c_i(U)
    std::vector<double> cluster_mass_;  // sum_{j in P_k and S} c_j(U) / n
};

}  // namespace evsum
