#include "evsum/objective.hpp"

#include <algorithm>
#include <cmath>

#include "evsum/error.hpp"

namespace evsum {

namespace {

void check_members(const SentenceSelection& s, std::size_t n) {
    for (std::size_t i : s.members()) {
        if (i >= n) throw validation_error("selection index " + std::to_string(i) + " out of range");
    }
}

}  // namespace

void ObjectiveConfig::validate() const {
    if (!std::isfinite(alpha) || !(alpha > 0.0)) throw validation_error("alpha must be positive");
    if (!std::isfinite(lambda1) || lambda1 < 0.0) throw validation_error("lambda1 must be >= 0");
    if (!std::isfinite(lambda2) || lambda2 < 0.0) throw validation_error("lambda2 must be >= 0");
}

ObjectiveContext::ObjectiveContext(SimilarityMatrix matrix, Clustering clustering,
                                   std::vector<double> bias_scores)
    : matrix_(std::move(matrix)), clustering_(std::move(clustering)), bias_(std::move(bias_scores)) {
    const std::size_t n = matrix_.size();
    if (bias_.size() != n) throw validation_error("bias scores do not cover the universe");
    validate_clustering(clustering_, matrix_);
    for (auto& b : bias_) {
        if (!std::isfinite(b)) throw validation_error("bias score is not finite");
        b = std::max(0.0, b);
    }
    coverage_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (double v : matrix_.row(i)) sum += v;
        coverage_[i] = sum;
    }
}

SentenceSelection::SentenceSelection(std::vector<std::size_t> members) {
    for (std::size_t i : members) add(i);
}

bool SentenceSelection::contains(std::size_t i) const {
    return std::find(members_.begin(), members_.end(), i) != members_.end();
}

void SentenceSelection::add(std::size_t i) {
    if (contains(i)) throw validation_error("sentence " + std::to_string(i) + " already selected");
    members_.push_back(i);
}

double coverage(const SentenceSelection& s, const ObjectiveContext& ctx, double alpha) {
    const std::size_t n = ctx.size();
    check_members(s, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double covered = 0.0;
        for (std::size_t j : s.members()) covered += ctx.matrix()(i, j);
        total += std::min(covered, alpha * ctx.singleton_coverage()[i]);
    }
    return total;
}

double diversity(const SentenceSelection& s, const ObjectiveContext& ctx) {
    const std::size_t n = ctx.size();
    check_members(s, n);
    std::vector<double> mass(ctx.clustering().k, 0.0);
    for (std::size_t j : s.members()) {
        mass[ctx.clustering().assignment[j]] +=
            ctx.singleton_coverage()[j] / static_cast<double>(n);
    }
    double total = 0.0;
    for (double m : mass) total += std::sqrt(m);
    return total;
}

double main_bias(const SentenceSelection& s, const ObjectiveContext& ctx) {
    check_members(s, ctx.size());
    double total = 0.0;
    for (std::size_t i : s.members()) total += ctx.bias_scores()[i];
    return total;
}

ObjectiveBreakdown objective_breakdown(const SentenceSelection& s, const ObjectiveContext& ctx,
                                       const ObjectiveConfig& cfg) {
    cfg.validate();
    ObjectiveBreakdown b;
    b.coverage = coverage(s, ctx, cfg.alpha);
    b.diversity = diversity(s, ctx);
    b.bias = main_bias(s, ctx);
    b.total = b.coverage + cfg.lambda1 * b.diversity + cfg.lambda2 * b.bias;
    return b;
}

double objective_value(const SentenceSelection& s, const ObjectiveContext& ctx,
                       const ObjectiveConfig& cfg) {
    return objective_breakdown(s, ctx, cfg).total;
}

double marginal_gain(const SentenceSelection& s, std::size_t x, const ObjectiveContext& ctx,
                     const ObjectiveConfig& cfg) {
    if (x >= ctx.size()) throw validation_error("candidate index out of range");
    if (s.contains(x)) throw validation_error("candidate " + std::to_string(x) + " already selected");
    GainTracker tracker(ctx, cfg);
    for (std::size_t i : s.members()) tracker.add(i);
    return tracker.gain(x);
}

GainTracker::GainTracker(const ObjectiveContext& ctx, const ObjectiveConfig& cfg)
    : ctx_(&ctx), cfg_(cfg), covered_(ctx.size(), 0.0), caps_(ctx.size()),
      cluster_mass_(ctx.clustering().k, 0.0) {
    cfg_.validate();
    for (std::size_t i = 0; i < ctx.size(); ++i) caps_[i] = cfg_.alpha * ctx.singleton_coverage()[i];
}

double GainTracker::gain(std::size_t x) const {
    const auto& m = ctx_->matrix();
    const std::size_t n = ctx_->size();
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double before = std::min(covered_[i], caps_[i]);
        const double after = std::min(covered_[i] + m(i, x), caps_[i]);
        cov += after - before;
    }
    const std::size_t k = ctx_->clustering().assignment[x];
    const double mass = cluster_mass_[k];
    const double div = std::sqrt(mass + ctx_->singleton_coverage()[x] / static_cast<double>(n)) -
                       std::sqrt(mass);
    return cov + cfg_.lambda1 * div + cfg_.lambda2 * ctx_->bias_scores()[x];
}

void GainTracker::add(std::size_t x) {
    if (x >= ctx_->size()) throw validation_error("candidate index out of range");
    selection_.add(x);
    const auto& m = ctx_->matrix();
    for (std::size_t i = 0; i < ctx_->size(); ++i) covered_[i] += m(i, x);
    cluster_mass_[ctx_->clustering().assignment[x]] +=
        ctx_->singleton_coverage()[x] / static_cast<double>(ctx_->size());
}

}  // namespace evsum
