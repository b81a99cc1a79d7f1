#pragma once

// Seeded instance generators and definition-level oracles shared by the unit
// and acceptance suites. The oracles recompute the objective from scratch with
// plain loops and never call into the library's objective code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "evsum/apcluster.hpp"
#include "evsum/cooc.hpp"
#include "evsum/objective.hpp"
#include "evsum/simgraph.hpp"

namespace evsum::testing {

using Rng = std::mt19937_64;

inline std::vector<std::vector<double>> random_vectors(Rng& rng, std::size_t n, std::size_t dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (auto& v : out)
        for (auto& x : v) x = g(rng);
    return out;
}

/// Clamped-cosine matrix over random Gaussian vectors.
inline SimilarityMatrix random_matrix(Rng& rng, std::size_t n, std::size_t dim = 5) {
    return similarity_matrix(random_vectors(rng, n, dim));
}

/// Random exemplar set with nearest-exemplar assignment (ties to lowest).
inline Clustering random_clustering(Rng& rng, const SimilarityMatrix& m) {
    const std::size_t n = m.size();
    std::uniform_int_distribution<std::size_t> kdist(1, n);
    const std::size_t k = kdist(rng);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> ex(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(ex.begin(), ex.end());
    Clustering c;
    c.k = k;
    c.exemplars = ex;
    c.assignment.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto self = std::find(ex.begin(), ex.end(), i);
        if (self != ex.end()) {
            c.assignment[i] = static_cast<std::size_t>(self - ex.begin());
            continue;
        }
        std::size_t best = 0;
        for (std::size_t e = 1; e < k; ++e) {
            if (m(i, ex[e]) > m(i, ex[best])) best = e;
        }
        c.assignment[i] = best;
    }
    c.converged = true;
    return c;
}

inline std::vector<double> random_bias(Rng& rng, std::size_t n, double hi = 2.0) {
    std::uniform_real_distribution<double> u(0.0, hi);
    std::vector<double> b(n);
    for (auto& x : b) x = u(rng);
    return b;
}

inline ObjectiveConfig random_config(Rng& rng) {
    std::uniform_real_distribution<double> a(0.05, 1.5), l(0.0, 3.0);
    return {a(rng), l(rng), l(rng)};
}

inline ObjectiveContext random_context(Rng& rng, std::size_t n) {
    auto m = random_matrix(rng, n);
    auto c = random_clustering(rng, m);
    auto b = random_bias(rng, n);
    return ObjectiveContext(std::move(m), std::move(c), std::move(b));
}

/// Random subset of {0..n-1} as an index list; each element kept with prob p.
inline std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, double p) {
    std::bernoulli_distribution keep(p);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep(rng)) out.push_back(i);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

/// F(S) straight from the definitions of coverage, diversity and bias.
inline double oracle_objective(const std::vector<std::vector<double>>& sim,
                               const std::vector<std::size_t>& assignment, std::size_t k,
                               const std::vector<double>& bias, const std::vector<std::size_t>& s,
                               double alpha, double lambda1, double lambda2) {
    const std::size_t n = sim.size();
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ci_s = 0.0, ci_u = 0.0;
        for (std::size_t j : s) ci_s += sim[i][j];
        for (std::size_t j = 0; j < n; ++j) ci_u += sim[i][j];
        cov += std::min(ci_s, alpha * ci_u);
    }
    double div = 0.0;
    for (std::size_t cluster = 0; cluster < k; ++cluster) {
        double inner = 0.0;
        for (std::size_t j : s) {
            if (assignment[j] != cluster) continue;
            double cj_u = 0.0;
            for (std::size_t t = 0; t < n; ++t) cj_u += sim[j][t];
            inner += cj_u / static_cast<double>(n);
        }
        div += std::sqrt(inner);
    }
    double b = 0.0;
    for (std::size_t i : s) b += std::max(0.0, bias[i]);
    return cov + lambda1 * div + lambda2 * b;
}

inline std::vector<std::vector<double>> rows_of(const SimilarityMatrix& m) {
    std::vector<std::vector<double>> rows(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) rows[i].assign(m.row(i).begin(), m.row(i).end());
    return rows;
}

inline double oracle_objective(const ObjectiveContext& ctx, const std::vector<std::size_t>& s,
                               const ObjectiveConfig& cfg) {
    return oracle_objective(rows_of(ctx.matrix()), ctx.clustering().assignment, ctx.clustering().k,
                            ctx.bias_scores(), s, cfg.alpha, cfg.lambda1, cfg.lambda2);
}

/// Naive greedy from {seed}: recompute F for every candidate each round,
/// ties to the lowest index.
inline std::vector<std::size_t> oracle_greedy(const ObjectiveContext& ctx, const ObjectiveConfig& cfg,
                                              std::size_t seed, std::size_t budget) {
    std::vector<std::size_t> s{seed};
    const std::size_t n = ctx.size();
    budget = std::min(budget, n);
    while (s.size() < budget) {
        const double base = oracle_objective(ctx, s, cfg);
        std::size_t best = n;
        double best_gain = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            if (std::find(s.begin(), s.end(), x) != s.end()) continue;
            auto t = s;
            t.push_back(x);
            const double g = oracle_objective(ctx, t, cfg) - base;
            if (best == n || g > best_gain) {
                best = x;
                best_gain = g;
            }
        }
        s.push_back(best);
    }
    return s;
}

/// Non-lazy greedy over the library's marginal_gain, for identity checks
/// against the lazy implementation.
inline std::vector<std::size_t> naive_greedy(const ObjectiveContext& ctx, const ObjectiveConfig& cfg,
                                             std::size_t seed, std::size_t budget) {
    SentenceSelection s({seed});
    const std::size_t n = ctx.size();
    budget = std::min(budget, n);
    while (s.size() < budget) {
        std::size_t best = n;
        double best_gain = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            if (s.contains(x)) continue;
            const double g = marginal_gain(s, x, ctx, cfg);
            if (best == n || g > best_gain) {
                best = x;
                best_gain = g;
            }
        }
        s.add(best);
    }
    return s.members();
}

/// Optimum over all size-`budget` supersets of {seed}, by enumeration.
inline double oracle_optimum(const ObjectiveContext& ctx, const ObjectiveConfig& cfg, std::size_t seed,
                             std::size_t budget) {
    const std::size_t n = ctx.size();
    budget = std::min(budget, n);
    double best = -1.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (!(mask & (1u << seed))) continue;
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != budget) continue;
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) s.push_back(i);
        best = std::max(best, oracle_objective(ctx, s, cfg));
    }
    return best;
}


/// Planted co-occurrence task: positives are noisy copies of the anchor,
/// negatives are independent unit vectors.
inline std::vector<Triplet> planted_triplets(Rng& rng, std::size_t count, std::size_t dim,
                                             double noise = 0.35) {
    std::normal_distribution<double> g(0.0, 1.0);
    auto unit = [&](std::vector<double> v) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        return v;
    };
    auto draw = [&] {
        std::vector<double> v(dim);
        for (auto& x : v) x = g(rng);
        return unit(v);
    };
    std::vector<Triplet> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto anchor = draw();
        auto positive = anchor;
        for (auto& x : positive) x += noise * g(rng);
        out.push_back({anchor, unit(positive), draw()});
    }
    return out;
}

inline double ranking_accuracy(const CoocModelPair& pair, const std::vector<Triplet>& triplets) {
    std::size_t good = 0;
    for (const auto& t : triplets) {
        if (coc_score(pair, t.anchor, t.positive) > coc_score(pair, t.anchor, t.negative)) ++good;
    }
    return static_cast<double>(good) / static_cast<double>(triplets.size());
}

struct GradientCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;  // parameters where one-sided differences disagree
};

/// Central finite differences (step h) of triplet_loss against the analytic
/// gradient, for every parameter of both models. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradientCheck check_gradient(const CoocModelPair& pair, const Triplet& t, double margin,
                                    double h = 1e-4, double floor = 1e-6) {
    const CoocGradient analytic = loss_gradient(pair, t, margin);
    GradientCheck out;
    CoocModelPair probe = pair;
    auto visit = [&](std::vector<DenseLayer>& layers, const std::vector<DenseLayer>& grads) {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto check_param = [&](double& p, double a) {
                const double saved = p;
                const double base = triplet_loss(probe, t, margin);
                p = saved + h;
                const double up = triplet_loss(probe, t, margin);
                p = saved - h;
                const double down = triplet_loss(probe, t, margin);
                p = saved;
                const double fwd = (up - base) / h, bwd = (base - down) / h;
                if (std::abs(fwd - bwd) > 1e-4 * std::max({std::abs(fwd), std::abs(bwd), 1.0})) {
                    ++out.kinks;
                    return;
                }
                const double numeric = (up - down) / (2 * h);
                const double denom = std::max({std::abs(a), std::abs(numeric), floor});
                out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
                ++out.checked;
            };
            for (std::size_t i = 0; i < layers[l].w.size(); ++i) check_param(layers[l].w[i], grads[l].w[i]);
            for (std::size_t i = 0; i < layers[l].b.size(); ++i) check_param(layers[l].b[i], grads[l].b[i]);
        }
    };
    visit(probe.forward_model.layers, analytic.forward);
    visit(probe.backward_model.layers, analytic.backward);
    return out;
}

}  // namespace evsum::testing
