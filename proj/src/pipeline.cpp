#include "evsum/pipeline.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "evsum/error.hpp"
#include "evsum/io.hpp"

namespace evsum {

namespace {

const std::set<std::string> kConfigKeys = {
    "alpha",       "lambda1",       "lambda2",         "k",       "c",
    "margin",      "preference",    "damping",         "max_iter", "stable_iter",
    "cooc_weights", "rewrite_endpoint", "embedding_source", "seed", "timeout_seconds",
};

double number(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    if (!j[key].is_number()) throw validation_error(std::string("config '") + key + "' must be a number");
    return j[key].get<double>();
}

std::size_t count(const nlohmann::json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    if (!j[key].is_number_unsigned()) {
        throw validation_error(std::string("config '") + key + "' must be a non-negative integer");
    }
    return j[key].get<std::size_t>();
}

std::optional<std::string> text(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw validation_error(std::string("config '") + key + "' must be a string");
    return j[key].get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

template <class F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

}  // namespace

namespace {

// Range checks that do not touch the filesystem or network.
void check_values(const PipelineConfig& cfg) {
    cfg.objective.validate();
    cfg.budget.validate();
    if (!std::isfinite(cfg.margin) || !(cfg.margin > 0.0)) throw validation_error("margin must be positive");
    const auto& ap = cfg.clustering;
    if (!(ap.damping >= 0.5 && ap.damping < 1.0)) throw validation_error("damping must lie in [0.5, 1)");
    if (ap.max_iter == 0 || ap.stable_iter == 0) {
        throw validation_error("max_iter and stable_iter must be positive");
    }
    if (ap.preference && !std::isfinite(*ap.preference)) {
        throw validation_error("preference must be finite or \"median\"");
    }
}

}  // namespace

void PipelineConfig::validate() const {
    check_values(*this);
    if (cooc_weights && !std::filesystem::exists(*cooc_weights)) {
        throw io_error("co-occurrence weights '" + cooc_weights->string() + "' not found");
    }
    if (embedding_source && !is_http_url(*embedding_source) &&
        !std::filesystem::exists(*embedding_source)) {
        throw io_error("embedding file '" + *embedding_source + "' not found");
    }
    if (rewrite_endpoint) HttpEndpoint::parse(*rewrite_endpoint);
}

void PipelineConfig::apply(const TuneParams& p) {
    objective.alpha = p.alpha;
    objective.lambda1 = p.lambda1;
    objective.lambda2 = p.lambda2;
    budget.k = p.k;
    budget.c = p.c;
}

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw validation_error("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (kConfigKeys.count(key) == 0) throw validation_error("unknown config key '" + key + "'");
    }
    PipelineConfig cfg;
    cfg.objective.alpha = number(j, "alpha", cfg.objective.alpha);
    cfg.objective.lambda1 = number(j, "lambda1", cfg.objective.lambda1);
    cfg.objective.lambda2 = number(j, "lambda2", cfg.objective.lambda2);
    cfg.budget.k = number(j, "k", cfg.budget.k);
    cfg.budget.c = number(j, "c", cfg.budget.c);
    cfg.margin = number(j, "margin", cfg.margin);
    if (j.contains("preference") && !j["preference"].is_null()) {
        const auto& p = j["preference"];
        if (p.is_string() && p.get<std::string>() == "median") {
            cfg.clustering.preference.reset();
        } else if (p.is_number()) {
            cfg.clustering.preference = p.get<double>();
        } else {
            throw validation_error("config 'preference' must be a number or \"median\"");
        }
    }
    cfg.clustering.damping = number(j, "damping", cfg.clustering.damping);
    cfg.clustering.max_iter = count(j, "max_iter", cfg.clustering.max_iter);
    cfg.clustering.stable_iter = count(j, "stable_iter", cfg.clustering.stable_iter);
    if (auto w = text(j, "cooc_weights")) cfg.cooc_weights = resolve(base_dir, *w);
    cfg.rewrite_endpoint = text(j, "rewrite_endpoint");
    if (auto e = text(j, "embedding_source")) {
        cfg.embedding_source = is_http_url(*e) ? *e : resolve(base_dir, *e).string();
    }
    cfg.seed = count(j, "seed", cfg.seed);
    const double timeout = number(j, "timeout_seconds", 30.0);
    if (!(timeout > 0.0)) throw validation_error("timeout_seconds must be positive");
    cfg.service_timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0));
    check_values(cfg);
    return cfg;
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j = {
        {"alpha", cfg.objective.alpha},
        {"lambda1", cfg.objective.lambda1},
        {"lambda2", cfg.objective.lambda2},
        {"k", cfg.budget.k},
        {"c", cfg.budget.c},
        {"margin", cfg.margin},
        {"damping", cfg.clustering.damping},
        {"max_iter", cfg.clustering.max_iter},
        {"stable_iter", cfg.clustering.stable_iter},
        {"seed", cfg.seed},
    };
    if (cfg.clustering.preference) {
        j["preference"] = *cfg.clustering.preference;
    } else {
        j["preference"] = "median";
    }
    if (cfg.cooc_weights) j["cooc_weights"] = cfg.cooc_weights->string();
    if (cfg.rewrite_endpoint) j["rewrite_endpoint"] = *cfg.rewrite_endpoint;
    if (cfg.embedding_source) j["embedding_source"] = *cfg.embedding_source;
    return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("malformed config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

EmbeddingStore resolve_embeddings(const DocumentCluster& cluster, const PipelineConfig& cfg) {
    if (!cfg.embedding_source) throw validation_error("no embedding source configured");
    if (is_http_url(*cfg.embedding_source)) {
        std::vector<std::string> sentences, keys;
        for (const auto& rec : cluster.universe()) {
            sentences.push_back(rec.text);
            keys.push_back(cluster.embedding_key(rec.universe_index));
        }
        return fetch_embeddings(*cfg.embedding_source, sentences, keys, cfg.service_timeout);
    }
    return load_embeddings(*cfg.embedding_source);
}

PreparedCluster prepare_cluster(DocumentCluster cluster, const EmbeddingStore& store,
                                const PipelineConfig& cfg, const MainEventTagger& tagger) {
    std::vector<std::vector<double>> vectors = stage("embeddings", [&] {
        std::vector<std::vector<double>> v;
        for (std::size_t i = 0; i < cluster.size(); ++i) {
            v.push_back(to_double(store.at(cluster.embedding_key(i))));
        }
        return v;
    });
    SimilarityMatrix matrix = stage("similarity", [&] { return similarity_matrix(vectors); });
    Clustering clustering =
        stage("clustering", [&] { return affinity_propagation(matrix, cfg.clustering); });
    auto candidates = stage("main_event", [&] { return main_event_candidates(cluster, tagger); });
    return {std::move(cluster), std::move(vectors), std::move(matrix), std::move(clustering),
            std::move(candidates)};
}

std::vector<double> bias_scores(const PreparedCluster& prepared, std::size_t main_index,
                                const CoocModelPair* model) {
    const std::size_t n = prepared.vectors.size();
    std::vector<double> bias(n, 0.0);
    if (model == nullptr) return bias;
    for (std::size_t i = 0; i < n; ++i) {
        bias[i] = std::max(0.0, coc_score(*model, prepared.vectors[i], prepared.vectors[main_index]));
    }
    return bias;
}

ExtractResult extract_prepared(const PreparedCluster& p, const PipelineConfig& cfg,
                               const CoocModelPair* model) {
    const std::size_t n = p.matrix.size();
    const std::size_t main = stage("main_event", [&] {
        ObjectiveContext unbiased(p.matrix, p.clustering, std::vector<double>(n, 0.0));
        return select_main_event(p.candidates, unbiased, cfg.objective.alpha);
    });
    ObjectiveContext ctx = stage("bias", [&] {
        return ObjectiveContext(p.matrix, p.clustering, bias_scores(p, main, model));
    });
    const std::size_t n_sentences = stage("budget", [&] { return budget(p.matrix, cfg.budget); });
    return stage("extract", [&] {
        ExtractResult r = greedy_extract(ctx, cfg.objective, main, n_sentences);
        attach_sentences(r, p.cluster);
        return r;
    });
}

SummarizeOutput finalize_summary(ExtractResult result, const PipelineConfig& cfg) {
    SummarizeOutput out;
    const RewriteRequest request{result.summary_sentences};
    out.summary = passthrough_rewrite(request);
    if (cfg.rewrite_endpoint) {
        try {
            out.summary = rewrite(*cfg.rewrite_endpoint, request, cfg.service_timeout).summary_text;
            out.rewritten = true;
        } catch (const Error& e) {
            out.warning = std::string("rewrite failed, used passthrough: ") + e.what();
        }
    }
    out.result = std::move(result);
    return out;
}

SummarizeOutput run_summarize(const std::filesystem::path& cluster_path, const PipelineConfig& cfg,
                              const MainEventTagger& tagger) {
    stage("config", [&] { cfg.validate(); });
    DocumentCluster cluster = stage("load", [&] { return load_cluster(cluster_path); });
    EmbeddingStore store = stage("embeddings", [&] { return resolve_embeddings(cluster, cfg); });
    std::optional<CoocModelPair> model;
    if (cfg.cooc_weights) {
        model = stage("bias", [&] {
            auto m = load_model(*cfg.cooc_weights);
            if (m.embedding_dim != store.dim()) {
                throw validation_error("co-occurrence model expects dimension " +
                                       std::to_string(m.embedding_dim) + ", embeddings have " +
                                       std::to_string(store.dim()));
            }
            return m;
        });
    }
    PreparedCluster prepared = prepare_cluster(std::move(cluster), store, cfg, tagger);
    ExtractResult result = extract_prepared(prepared, cfg, model ? &*model : nullptr);
    return finalize_summary(std::move(result), cfg);
}

nlohmann::json summarize_to_json(const SummarizeOutput& out) {
    nlohmann::json j = extract_result_to_json(out.result);
    j["summary"] = out.summary;
    j["rewrite"] = out.rewritten ? "service" : "passthrough";
    if (out.warning) j["warning"] = *out.warning;
    return j;
}

}  // namespace evsum
