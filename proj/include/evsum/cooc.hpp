#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace evsum {

class EmbeddingStore;

/// Margin used for co-occurrence training unless configured otherwise.
inline constexpr double kDefaultMargin = 5.4;

/// Dense affine layer, weights row-major (rows = outputs, cols = inputs).
struct DenseLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> w;
    std::vector<double> b;

    DenseLayer() = default;
    DenseLayer(std::size_t rows, std::size_t cols)
        : rows(rows), cols(cols), w(rows * cols, 0.0), b(rows, 0.0) {}

    double& weight(std::size_t r, std::size_t c) { return w[r * cols + c]; }
    double weight(std::size_t r, std::size_t c) const { return w[r * cols + c]; }
};

enum class Direction { kForward, kBackward };

/// Feed-forward scorer: rectifier hidden layers and one linear output unit.
struct CoocModel {
    Direction direction = Direction::kForward;
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
    std::vector<std::size_t> hidden_dims() const;
    double score(std::span<const double> features) const;
};

/// Forward and backward scorers sharing one architecture. Their averaged
/// output is the co-occurrence score Coc.
struct CoocModelPair {
    std::size_t embedding_dim = 0;
    CoocModel forward_model;
    CoocModel backward_model;

    /// Zero-initialised pair with the given hidden widths.
    static CoocModelPair zeros(std::size_t embedding_dim, const std::vector<std::size_t>& hidden);
    /// He-initialised pair, reproducible from `seed`.
    static CoocModelPair random(std::size_t embedding_dim, const std::vector<std::size_t>& hidden,
                                std::uint64_t seed);
};

/// Gradient with the same layout as a CoocModelPair's parameters.
struct CoocGradient {
    std::vector<DenseLayer> forward;
    std::vector<DenseLayer> backward;
};

struct Triplet {
    std::vector<double> anchor;
    std::vector<double> positive;
    std::vector<double> negative;
};

/// Throws unless the pair's layers chain from 5*d inputs to a scalar and all
/// parameters are finite.
void validate_model(const CoocModelPair& pair);

/// [a; b; a - b; a * b; |a - b|], length 5d.
std::vector<double> pair_features(std::span<const double> a, std::span<const double> b);

/// (f(a,b) + f(b,a) + g(a,b) + g(b,a)) / 4, bitwise symmetric in (a, b).
double coc_score(const CoocModelPair& pair, std::span<const double> a, std::span<const double> b);

/// max(0, m - Coc(anchor, positive) + Coc(anchor, negative)).
double triplet_loss(const CoocModelPair& pair, const Triplet& t, double margin);

/// Exact gradient of triplet_loss; all zeros when the hinge is inactive.
CoocGradient loss_gradient(const CoocModelPair& pair, const Triplet& t, double margin);

/// Gradient of coc_score(pair, a, b) with respect to every parameter.
CoocGradient score_gradient(const CoocModelPair& pair, std::span<const double> a,
                            std::span<const double> b);

struct TrainOptions {
    double margin = kDefaultMargin;
    double step_size = 0.01;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainResult {
    CoocModelPair model;
    std::vector<double> loss_history;  // mean triplet loss per epoch
};

/// Mini-batch gradient descent with a fixed step. Triplets are shuffled each
/// epoch by a generator seeded from options.seed.
TrainResult train(CoocModelPair pair, const std::vector<Triplet>& triplets,
                  const TrainOptions& options);

struct LabeledPair {
    std::vector<double> a;
    std::vector<double> b;
    int label = 0;  // 1 = co-occurring
};

struct PairMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

/// Predicts co-occurrence when coc_score >= threshold.
PairMetrics evaluate_pairs(const CoocModelPair& pair, const std::vector<LabeledPair>& pairs,
                           double threshold = 0.0);

nlohmann::json model_to_json(const CoocModelPair& pair);
CoocModelPair model_from_json(const nlohmann::json& j);
void save_model(const CoocModelPair& pair, const std::filesystem::path& path);
CoocModelPair load_model(const std::filesystem::path& path);

/// Reads JSON Lines {"anchor_key","positive_key","negative_key"} and resolves
/// the keys against `store`.
std::vector<Triplet> load_triplets(const std::filesystem::path& path, const EmbeddingStore& store);

/// Reads JSON Lines {"a_key","b_key","label"}.
std::vector<LabeledPair> load_labeled_pairs(const std::filesystem::path& path,
                                            const EmbeddingStore& store);

}  // namespace evsum
