#include "evsum/cooc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evsum/error.hpp"
#include "evsum/io.hpp"
#include "evsum/simgraph.hpp"

namespace evsum {

namespace {

void check_dims(std::span<const double> a, std::span<const double> b, std::size_t d) {
    if (a.size() != d || b.size() != d) {
        throw validation_error("co-occurrence input has dimension " + std::to_string(a.size()) +
                               "/" + std::to_string(b.size()) + ", model expects " +
                               std::to_string(d));
    }
}

void check_finite(std::span<const double> v, const char* what) {
    if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
        throw validation_error(std::string(what) + " contains a non-finite value");
    }
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> out;
    out.reserve(layers.size());
    for (const auto& l : layers) out.emplace_back(l.rows, l.cols);
    return out;
}

CoocGradient zero_gradient(const CoocModelPair& pair) {
    return {zero_like(pair.forward_model.layers), zero_like(pair.backward_model.layers)};
}

// Forward pass keeping every layer's input and pre-activation.
struct Trace {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> pre;
    double output = 0.0;
};

Trace run(const CoocModel& model, std::span<const double> features) {
    Trace t;
    std::vector<double> act(features.begin(), features.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        std::vector<double> z(layer.b);
        for (std::size_t r = 0; r < layer.rows; ++r) {
            const double* wr = layer.w.data() + r * layer.cols;
            double sum = 0.0;
            for (std::size_t c = 0; c < layer.cols; ++c) sum += wr[c] * act[c];
            z[r] += sum;
        }
        t.inputs.push_back(std::move(act));
        bool hidden = l + 1 < model.layers.size();
        act = z;
        if (hidden) {
            for (auto& v : act) v = std::max(0.0, v);
        }
        t.pre.push_back(std::move(z));
    }
    t.output = act.at(0);
    return t;
}

// Adds coef * d(model output)/d(params) into `grad`.
void backprop(const CoocModel& model, std::span<const double> features, double coef,
              std::vector<DenseLayer>& grad) {
    Trace t = run(model, features);
    std::vector<double> delta{coef};
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const auto& layer = model.layers[l];
        auto& g = grad[l];
        const auto& in = t.inputs[l];
        for (std::size_t r = 0; r < layer.rows; ++r) {
            if (delta[r] == 0.0) continue;
            g.b[r] += delta[r];
            double* gr = g.w.data() + r * layer.cols;
            for (std::size_t c = 0; c < layer.cols; ++c) gr[c] += delta[r] * in[c];
        }
        if (l == 0) break;
        std::vector<double> prev(layer.cols, 0.0);
        for (std::size_t r = 0; r < layer.rows; ++r) {
            if (delta[r] == 0.0) continue;
            const double* wr = layer.w.data() + r * layer.cols;
            for (std::size_t c = 0; c < layer.cols; ++c) prev[c] += wr[c] * delta[r];
        }
        const auto& z = t.pre[l - 1];
        for (std::size_t c = 0; c < prev.size(); ++c) {
            if (z[c] <= 0.0) prev[c] = 0.0;
        }
        delta = std::move(prev);
    }
}

void add_score_gradient(const CoocModelPair& pair, std::span<const double> a,
                        std::span<const double> b, double coef, CoocGradient& grad) {
    const auto ab = pair_features(a, b);
    const auto ba = pair_features(b, a);
    const double q = 0.25 * coef;
    backprop(pair.forward_model, ab, q, grad.forward);
    backprop(pair.forward_model, ba, q, grad.forward);
    backprop(pair.backward_model, ab, q, grad.backward);
    backprop(pair.backward_model, ba, q, grad.backward);
}

// Returns false if any updated parameter is non-finite.
bool axpy(std::vector<DenseLayer>& params, const std::vector<DenseLayer>& grad, double scale) {
    bool finite = true;
    for (std::size_t l = 0; l < params.size(); ++l) {
        for (std::size_t i = 0; i < params[l].w.size(); ++i) {
            params[l].w[i] += scale * grad[l].w[i];
            finite = finite && std::isfinite(params[l].w[i]);
        }
        for (std::size_t i = 0; i < params[l].b.size(); ++i) {
            params[l].b[i] += scale * grad[l].b[i];
            finite = finite && std::isfinite(params[l].b[i]);
        }
    }
    return finite;
}

std::vector<DenseLayer> build_layers(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
    std::vector<DenseLayer> layers;
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        if (h == 0) throw validation_error("hidden layer width must be positive");
        layers.emplace_back(h, in);
        in = h;
    }
    layers.emplace_back(1, in);
    return layers;
}

void validate_one(const CoocModel& m, std::size_t input_dim, const char* name) {
    if (m.layers.empty()) throw validation_error(std::string(name) + " model has no layers");
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const auto& layer = m.layers[l];
        if (layer.cols != in || layer.rows == 0 || layer.w.size() != layer.rows * layer.cols ||
            layer.b.size() != layer.rows) {
            throw validation_error(std::string(name) + " model: layer " + std::to_string(l) +
                                   " shape does not chain");
        }
        check_finite(layer.w, name);
        check_finite(layer.b, name);
        in = layer.rows;
    }
    if (in != 1) throw validation_error(std::string(name) + " model must end in a single output");
}

}  // namespace

std::vector<std::size_t> CoocModel::hidden_dims() const {
    std::vector<std::size_t> dims;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) dims.push_back(layers[l].rows);
    return dims;
}

double CoocModel::score(std::span<const double> features) const {
    return run(*this, features).output;
}

CoocModelPair CoocModelPair::zeros(std::size_t embedding_dim, const std::vector<std::size_t>& hidden) {
    if (embedding_dim == 0) throw validation_error("embedding dimension must be positive");
    CoocModelPair p;
    p.embedding_dim = embedding_dim;
    p.forward_model = {Direction::kForward, build_layers(5 * embedding_dim, hidden)};
    p.backward_model = {Direction::kBackward, build_layers(5 * embedding_dim, hidden)};
    return p;
}

CoocModelPair CoocModelPair::random(std::size_t embedding_dim, const std::vector<std::size_t>& hidden,
                                    std::uint64_t seed) {
    CoocModelPair p = zeros(embedding_dim, hidden);
    std::mt19937_64 rng(seed);
    for (auto* model : {&p.forward_model, &p.backward_model}) {
        for (auto& layer : model->layers) {
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(layer.cols)));
            for (auto& w : layer.w) w = dist(rng);
        }
    }
    return p;
}

void validate_model(const CoocModelPair& pair) {
    if (pair.embedding_dim == 0) throw validation_error("embedding dimension must be positive");
    if (pair.forward_model.direction != Direction::kForward ||
        pair.backward_model.direction != Direction::kBackward) {
        throw validation_error("model pair directions must be forward and backward");
    }
    validate_one(pair.forward_model, 5 * pair.embedding_dim, "forward");
    validate_one(pair.backward_model, 5 * pair.embedding_dim, "backward");
    if (pair.forward_model.hidden_dims() != pair.backward_model.hidden_dims()) {
        throw validation_error("forward and backward models differ in hidden widths");
    }
}

std::vector<double> pair_features(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw validation_error("pair_features: dimension mismatch (" + std::to_string(a.size()) +
                               " vs " + std::to_string(b.size()) + ")");
    }
    const std::size_t d = a.size();
    std::vector<double> f(5 * d);
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        f[i] = a[i];
        f[d + i] = b[i];
        f[2 * d + i] = diff;
        f[3 * d + i] = a[i] * b[i];
        f[4 * d + i] = std::abs(diff);
    }
    return f;
}

double coc_score(const CoocModelPair& pair, std::span<const double> a, std::span<const double> b) {
    check_dims(a, b, pair.embedding_dim);
    const auto ab = pair_features(a, b);
    const auto ba = pair_features(b, a);
    // Each inner sum commutes exactly, so swapping (a, b) gives identical bits.
    const double f = pair.forward_model.score(ab) + pair.forward_model.score(ba);
    const double g = pair.backward_model.score(ab) + pair.backward_model.score(ba);
    return (f + g) / 4.0;
}

double triplet_loss(const CoocModelPair& pair, const Triplet& t, double margin) {
    if (!(margin > 0.0) || !std::isfinite(margin)) {
        throw validation_error("triplet margin must be positive and finite");
    }
    check_finite(t.anchor, "triplet anchor");
    check_finite(t.positive, "triplet positive");
    check_finite(t.negative, "triplet negative");
    const double pos = coc_score(pair, t.anchor, t.positive);
    const double neg = coc_score(pair, t.anchor, t.negative);
    const double v = margin - pos + neg;
    return v > 0.0 || std::isnan(v) ? v : 0.0;  // let NaN through to the caller
}

CoocGradient score_gradient(const CoocModelPair& pair, std::span<const double> a,
                            std::span<const double> b) {
    check_dims(a, b, pair.embedding_dim);
    CoocGradient g = zero_gradient(pair);
    add_score_gradient(pair, a, b, 1.0, g);
    return g;
}

CoocGradient loss_gradient(const CoocModelPair& pair, const Triplet& t, double margin) {
    CoocGradient g = zero_gradient(pair);
    if (triplet_loss(pair, t, margin) <= 0.0) return g;
    add_score_gradient(pair, t.anchor, t.positive, -1.0, g);
    add_score_gradient(pair, t.anchor, t.negative, 1.0, g);
    return g;
}

TrainResult train(CoocModelPair pair, const std::vector<Triplet>& triplets,
                  const TrainOptions& options) {
    validate_model(pair);
    if (triplets.empty()) throw validation_error("training set is empty");
    if (options.epochs == 0 || options.batch_size == 0) {
        throw validation_error("epochs and batch size must be positive");
    }
    if (!std::isfinite(options.step_size) || options.step_size < 0.0) {
        throw validation_error("step size must be finite and non-negative");
    }
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            CoocGradient batch = zero_gradient(pair);
            for (std::size_t i = start; i < end; ++i) {
                const Triplet& t = triplets[order[i]];
                const double loss = triplet_loss(pair, t, options.margin);
                if (!std::isfinite(loss)) {
                    throw validation_error("non-finite training loss in epoch " +
                                           std::to_string(epoch));
                }
                loss_sum += loss;
                if (loss > 0.0) {
                    add_score_gradient(pair, t.anchor, t.positive, -1.0, batch);
                    add_score_gradient(pair, t.anchor, t.negative, 1.0, batch);
                }
            }
            const double scale = -options.step_size / static_cast<double>(end - start);
            const bool ok = axpy(pair.forward_model.layers, batch.forward, scale) &
                            axpy(pair.backward_model.layers, batch.backward, scale);
            if (!ok) {
                throw validation_error("non-finite weights after an update in epoch " +
                                       std::to_string(epoch));
            }
        }
        const double mean = loss_sum / static_cast<double>(triplets.size());
        if (!std::isfinite(mean)) {
            throw validation_error("non-finite training loss in epoch " + std::to_string(epoch));
        }
        result.loss_history.push_back(mean);
    }
    result.model = std::move(pair);
    return result;
}

PairMetrics evaluate_pairs(const CoocModelPair& pair, const std::vector<LabeledPair>& pairs,
                           double threshold) {
    if (pairs.empty()) throw validation_error("no labeled pairs to evaluate");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& p : pairs) {
        const bool predicted = coc_score(pair, p.a, p.b) >= threshold;
        const bool actual = p.label != 0;
        if (predicted && actual) ++tp;
        if (predicted && !actual) ++fp;
        if (!predicted && actual) ++fn;
    }
    PairMetrics m;
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f_measure = m.precision + m.recall == 0.0
                      ? 0.0
                      : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

namespace {

nlohmann::json layers_to_json(const CoocModel& m) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.layers) {
        layers.push_back({{"rows", l.rows}, {"cols", l.cols}, {"w", l.w}, {"b", l.b}});
    }
    return {{"layers", std::move(layers)}};
}

CoocModel layers_from_json(const nlohmann::json& j, Direction dir) {
    CoocModel m;
    m.direction = dir;
    for (const auto& jl : j.at("layers")) {
        DenseLayer l;
        l.rows = jl.at("rows").get<std::size_t>();
        l.cols = jl.at("cols").get<std::size_t>();
        l.w = jl.at("w").get<std::vector<double>>();
        l.b = jl.at("b").get<std::vector<double>>();
        m.layers.push_back(std::move(l));
    }
    return m;
}

}  // namespace

nlohmann::json model_to_json(const CoocModelPair& pair) {
    return {{"version", 1},
            {"embedding_dim", pair.embedding_dim},
            {"hidden", pair.forward_model.hidden_dims()},
            {"models",
             {{"forward", layers_to_json(pair.forward_model)},
              {"backward", layers_to_json(pair.backward_model)}}}};
}

CoocModelPair model_from_json(const nlohmann::json& j) {
    CoocModelPair pair;
    try {
        if (j.at("version").get<int>() != 1) {
            throw validation_error("unsupported weight file version " + j.at("version").dump());
        }
        pair.embedding_dim = j.at("embedding_dim").get<std::size_t>();
        const auto hidden = j.at("hidden").get<std::vector<std::size_t>>();
        pair.forward_model = layers_from_json(j.at("models").at("forward"), Direction::kForward);
        pair.backward_model = layers_from_json(j.at("models").at("backward"), Direction::kBackward);
        validate_model(pair);
        if (pair.forward_model.hidden_dims() != hidden) {
            throw validation_error("'hidden' does not match the layer shapes");
        }
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("malformed weight file: ") + e.what());
    }
    return pair;
}

void save_model(const CoocModelPair& pair, const std::filesystem::path& path) {
    validate_model(pair);
    // max_digits10 output keeps doubles bit-exact through the round trip.
    write_file_atomic(path, model_to_json(pair).dump() + "\n");
}

CoocModelPair load_model(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("malformed weight file '" + path.string() + "': " + e.what());
    }
    return model_from_json(j);
}

namespace {

template <class F>
void for_each_json_line(const std::filesystem::path& path, F&& fn) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::vector<double> lookup(const EmbeddingStore& store, const nlohmann::json& j, const char* field) {
    return to_double(store.at(j.at(field).get<std::string>()));
}

}  // namespace

std::vector<Triplet> load_triplets(const std::filesystem::path& path, const EmbeddingStore& store) {
    std::vector<Triplet> out;
    for_each_json_line(path, [&](const nlohmann::json& j) {
        out.push_back({lookup(store, j, "anchor_key"), lookup(store, j, "positive_key"),
                       lookup(store, j, "negative_key")});
    });
    return out;
}

std::vector<LabeledPair> load_labeled_pairs(const std::filesystem::path& path,
                                            const EmbeddingStore& store) {
    std::vector<LabeledPair> out;
    for_each_json_line(path, [&](const nlohmann::json& j) {
        out.push_back({lookup(store, j, "a_key"), lookup(store, j, "b_key"), j.at("label").get<int>()});
    });
    return out;
}

}  // namespace evsum
