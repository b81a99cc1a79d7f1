#include "evsum/apcluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "evsum/error.hpp"
#include "evsum/simgraph.hpp"

namespace evsum {

namespace {

// Nearest-exemplar assignment over `exemplars` (ascending). Exemplars belong
// to their own cluster.
Clustering assign(const SimilarityMatrix& s, std::vector<std::size_t> exemplars,
                  std::size_t iterations, bool converged) {
    const std::size_t n = s.size();
    Clustering c;
    c.k = exemplars.size();
    c.iterations_run = iterations;
    c.converged = converged;
    c.assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto self = std::find(exemplars.begin(), exemplars.end(), i);
        if (self != exemplars.end()) {
            c.assignment[i] = static_cast<std::size_t>(self - exemplars.begin());
            continue;
        }
        std::size_t best = 0;
        for (std::size_t e = 1; e < exemplars.size(); ++e) {
            if (s(i, exemplars[e]) > s(i, exemplars[best])) best = e;
        }
        c.assignment[i] = best;
    }
    c.exemplars = std::move(exemplars);
    return c;
}

}  // namespace

double median_off_diagonal(const SimilarityMatrix& matrix) {
    const std::size_t n = matrix.size();
    if (n < 2) return 0.0;
    std::vector<double> vals;
    vals.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) vals.push_back(matrix(i, j));
        }
    }
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size();
    return m % 2 == 1 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

Clustering affinity_propagation(const SimilarityMatrix& matrix, const AffinityOptions& options) {
    const std::size_t n = matrix.size();
    if (n == 0) throw validation_error("affinity propagation needs at least one point");
    if (!(options.damping >= 0.5 && options.damping < 1.0)) {
        throw validation_error("damping must lie in [0.5, 1)");
    }
    if (options.max_iter == 0 || options.stable_iter == 0) {
        throw validation_error("max_iter and stable_iter must be positive");
    }
    if (n == 1) return assign(matrix, {0}, 0, true);

    const double pref = options.preference.value_or(median_off_diagonal(matrix));
    if (!std::isfinite(pref)) throw validation_error("preference must be finite");

    // Constant off-diagonal similarity: message passing stays degenerate, so
    // decide directly. One exemplar unless the preference beats the shared value.
    {
        const double first = matrix(0, 1);
        bool constant = true;
        for (std::size_t i = 0; i < n && constant; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && matrix(i, j) != first) {
                    constant = false;
                    break;
                }
            }
        }
        if (constant) {
            std::vector<std::size_t> ex;
            if (pref > first) {
                for (std::size_t i = 0; i < n; ++i) ex.push_back(i);
            } else {
                ex.push_back(0);
            }
            return assign(matrix, std::move(ex), 0, true);
        }
    }

    std::vector<double> s(matrix.values());
    for (std::size_t i = 0; i < n; ++i) s[i * n + i] = pref;

    const double damp = options.damping;
    std::vector<double> r(n * n, 0.0), a(n * n, 0.0), col_pos(n);
    std::vector<std::size_t> prev_exemplars;
    std::size_t stable = 0;
    std::size_t iter = 0;
    bool converged = false;

    while (iter < options.max_iter) {
        ++iter;
        // Responsibilities.
        for (std::size_t i = 0; i < n; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            double second = best;
            std::size_t best_k = 0;
            for (std::size_t k = 0; k < n; ++k) {
                double v = a[i * n + k] + s[i * n + k];
                if (v > best) {
                    second = best;
                    best = v;
                    best_k = k;
                } else if (v > second) {
                    second = v;
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                double competitor = k == best_k ? second : best;
                double fresh = s[i * n + k] - competitor;
                r[i * n + k] = damp * r[i * n + k] + (1.0 - damp) * fresh;
            }
        }
        // Availabilities.
        for (std::size_t k = 0; k < n; ++k) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                col_pos[i] = i == k ? r[k * n + k] : std::max(0.0, r[i * n + k]);
                total += col_pos[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                double fresh = i == k ? total - col_pos[k]
                                      : std::min(0.0, total - col_pos[i]);
                a[i * n + k] = damp * a[i * n + k] + (1.0 - damp) * fresh;
            }
        }

        std::vector<std::size_t> exemplars;
        for (std::size_t k = 0; k < n; ++k) {
            if (a[k * n + k] + r[k * n + k] > 0.0) exemplars.push_back(k);
        }
        if (exemplars == prev_exemplars) {
            ++stable;
        } else {
            stable = 1;
            prev_exemplars = std::move(exemplars);
        }
        if (stable >= options.stable_iter && !prev_exemplars.empty()) {
            converged = true;
            break;
        }
    }

    if (prev_exemplars.empty()) {
        // No point elected itself; fall back to the best single exemplar.
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            double score = 0.0;
            for (std::size_t i = 0; i < n; ++i) score += s[i * n + k];
            if (score > best_score) {
                best_score = score;
                best = k;
            }
        }
        prev_exemplars.push_back(best);
    }
    return assign(matrix, std::move(prev_exemplars), iter, converged);
}

double clustering_purity(const Clustering& clustering, const std::vector<int>& labels) {
    const std::size_t n = clustering.assignment.size();
    if (labels.size() != n) throw validation_error("label map is not total over the universe");
    if (n == 0) throw validation_error("purity of an empty clustering is undefined");
    std::vector<std::map<int, std::size_t>> counts(clustering.k);
    for (std::size_t i = 0; i < n; ++i) {
        if (clustering.assignment[i] >= clustering.k) {
            throw validation_error("assignment refers to a missing cluster");
        }
        ++counts[clustering.assignment[i]][labels[i]];
    }
    std::size_t majority = 0;
    for (const auto& c : counts) {
        std::size_t top = 0;
        for (const auto& [label, cnt] : c) top = std::max(top, cnt);
        majority += top;
    }
    return static_cast<double>(majority) / static_cast<double>(n);
}

void validate_clustering(const Clustering& c, const SimilarityMatrix& matrix) {
    const std::size_t n = matrix.size();
    if (c.k == 0 || c.exemplars.size() != c.k) throw validation_error("clustering: bad k");
    if (c.assignment.size() != n) throw validation_error("clustering: assignment not total");
    std::vector<std::size_t> sizes(c.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (c.assignment[i] >= c.k) throw validation_error("clustering: cluster id out of range");
        ++sizes[c.assignment[i]];
    }
    if (std::find(sizes.begin(), sizes.end(), 0u) != sizes.end()) {
        throw validation_error("clustering: empty cluster");
    }
    for (std::size_t e = 0; e < c.k; ++e) {
        if (c.exemplars[e] >= n) throw validation_error("clustering: exemplar out of range");
        if (c.assignment[c.exemplars[e]] != e) {
            throw validation_error("clustering: exemplar not in its own cluster");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::find(c.exemplars.begin(), c.exemplars.end(), i) != c.exemplars.end()) continue;
        const double assigned = matrix(i, c.exemplars[c.assignment[i]]);
        for (std::size_t e = 0; e < c.k; ++e) {
            double v = matrix(i, c.exemplars[e]);
            if (v > assigned || (v == assigned && e < c.assignment[i])) {
                throw validation_error("clustering: point " + std::to_string(i) +
                                       " is not assigned to its nearest exemplar");
            }
        }
    }
}

}  // namespace evsum
