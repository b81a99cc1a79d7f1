#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace evsum {

class SimilarityMatrix;

/// Partition of the sentence universe into k clusters, each represented by an
/// exemplar sentence.
struct Clustering {
    std::size_t k = 0;
    std::vector<std::size_t> exemplars;   // ascending universe indices
    std::vector<std::size_t> assignment;  // universe index -> cluster id
    std::size_t iterations_run = 0;
    bool converged = false;

    bool operator==(const Clustering&) const = default;
};

struct AffinityOptions {
    /// Self-similarity given to every point. Unset means the median of the
    /// off-diagonal similarities.
    std::optional<double> preference;
    double damping = 0.9;
    std::size_t max_iter = 1000;
    std::size_t stable_iter = 50;
};

/// Frey-Dueck affinity propagation. Points are assigned to their most similar
/// exemplar afterwards (ties to the lowest exemplar index), so the result is
/// well formed even when message passing stops before convergence.
Clustering affinity_propagation(const SimilarityMatrix& matrix, const AffinityOptions& options = {});

/// Median of the strictly off-diagonal entries (0 when n < 2).
double median_off_diagonal(const SimilarityMatrix& matrix);

/// Fraction of points whose cluster's majority label equals their own label.
double clustering_purity(const Clustering& clustering, const std::vector<int>& labels);

/// Throws if `c` violates the Clustering invariants with respect to `matrix`.
void validate_clustering(const Clustering& c, const SimilarityMatrix& matrix);

}  // namespace evsum
