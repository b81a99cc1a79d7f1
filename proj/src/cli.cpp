#include "evsum/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evsum/apcluster.hpp"
#include "evsum/cooc.hpp"
#include "evsum/error.hpp"
#include "evsum/extract.hpp"
#include "evsum/io.hpp"
#include "evsum/pipeline.hpp"
#include "evsum/rouge.hpp"

namespace evsum {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "JSON config file");
    cmd->add_option("--seed", opts.seed, "Random seed (overrides config)");
    cmd->add_option("--out", opts.out, "Write the result here instead of stdout");
}

PipelineConfig base_config(const CommonOptions& opts) {
    PipelineConfig cfg = opts.config.empty() ? PipelineConfig{} : load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    return cfg;
}

void emit(const CommonOptions& opts, const nlohmann::json& j, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (opts.out.empty()) {
        out << text;
    } else {
        write_file_atomic(opts.out, text);
    }
}

nlohmann::json parse_json_file(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

SimilarityMatrix matrix_from_json(const nlohmann::json& j) {
    const nlohmann::json& rows = j.is_object() ? j.at("values") : j;
    if (!rows.is_array()) throw validation_error("matrix file must hold an array of rows");
    return SimilarityMatrix::from_rows(rows.get<std::vector<std::vector<double>>>());
}

// --matrix, or --cluster with embeddings from --embeddings / config.
SimilarityMatrix matrix_input(const std::string& matrix_path, const std::string& cluster_path,
                              const std::string& embeddings, PipelineConfig cfg) {
    if (!matrix_path.empty()) return matrix_from_json(parse_json_file(matrix_path));
    if (cluster_path.empty()) throw validation_error("need --matrix or --cluster");
    if (!embeddings.empty()) cfg.embedding_source = embeddings;
    const auto cluster = load_cluster(cluster_path);
    return similarity_matrix(cluster, resolve_embeddings(cluster, cfg));
}

std::vector<std::size_t> parse_widths(const std::string& spec) {
    std::vector<std::size_t> out;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(part, &pos);
            if (pos != part.size() || v <= 0) throw std::invalid_argument(part);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            throw validation_error("bad hidden width '" + part + "'");
        }
    }
    return out;
}

struct EvalPair {
    std::string id;
    std::string hypothesis;
    std::string reference;
};

std::vector<EvalPair> read_eval_pairs(const fs::path& path) {
    std::vector<EvalPair> out;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out.push_back({j.contains("id") ? j["id"].get<std::string>() : std::to_string(out.size()),
                           j.at("hypothesis").get<std::string>(), j.at("reference").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (out.empty()) throw validation_error("no summary pairs in '" + path.string() + "'");
    return out;
}

nlohmann::json rouge_row(const std::string& id, const RougeTriple& r) {
    return {{"id", id},
            {"rouge1", rouge_to_json(r.rouge1)},
            {"rouge2", rouge_to_json(r.rouge2)},
            {"rougeL", rouge_to_json(r.rougeL)}};
}

struct DevItem {
    fs::path cluster;
    std::optional<std::string> embeddings;
    std::string reference;
};

std::vector<DevItem> read_dev_set(const fs::path& path) {
    std::vector<DevItem> out;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t lineno = 0;
    const auto base = path.parent_path();
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DevItem item;
            fs::path c = j.at("cluster").get<std::string>();
            item.cluster = c.is_relative() ? base / c : c;
            if (j.contains("embeddings")) {
                std::string e = j["embeddings"].get<std::string>();
                fs::path ep = e;
                item.embeddings = is_http_url(e) || ep.is_absolute() ? e : (base / ep).string();
            }
            item.reference = j.at("reference").get<std::string>();
            out.push_back(std::move(item));
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (out.empty()) throw validation_error("development set '" + path.string() + "' is empty");
    return out;
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::kIo ? kExitIo : kExitValidation; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Main-event-centric extractive multi-document summarizer", "evsum"};
    app.require_subcommand(1);

    CommonOptions common;
    std::function<void()> action;

    // summarize
    std::string sum_cluster, sum_embeddings;
    auto* summarize_cmd = app.add_subcommand("summarize", "Summarize one document cluster");
    add_common(summarize_cmd, common);
    summarize_cmd->add_option("--cluster", sum_cluster, "Cluster JSON file")->required();
    summarize_cmd->add_option("--embeddings", sum_embeddings, "SEMB file or embedding service URL");
    summarize_cmd->callback([&] {
        action = [&] {
            PipelineConfig cfg = base_config(common);
            if (!sum_embeddings.empty()) cfg.embedding_source = sum_embeddings;
            emit(common, summarize_to_json(run_summarize(sum_cluster, cfg)), out);
        };
    });

    // evaluate
    std::string eval_pairs, eval_hyp, eval_ref;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score summaries against references");
    add_common(evaluate_cmd, common);
    evaluate_cmd->add_option("--pairs", eval_pairs,
                             "JSON Lines of {\"id\",\"hypothesis\",\"reference\"}");
    evaluate_cmd->add_option("--hyp", eval_hyp, "Hypothesis text file");
    evaluate_cmd->add_option("--ref", eval_ref, "Reference text file");
    evaluate_cmd->callback([&] {
        action = [&] {
            std::vector<EvalPair> pairs;
            if (!eval_pairs.empty()) {
                pairs = read_eval_pairs(eval_pairs);
            } else if (!eval_hyp.empty() && !eval_ref.empty()) {
                pairs.push_back({fs::path(eval_hyp).stem().string(), read_text_file(eval_hyp),
                                 read_text_file(eval_ref)});
            } else {
                throw validation_error("need --pairs or both --hyp and --ref");
            }
            nlohmann::json rows = nlohmann::json::array();
            RougeTriple mean;
            auto accumulate = [](RougeScore& acc, const RougeScore& s) {
                acc.precision += s.precision;
                acc.recall += s.recall;
                acc.f_measure += s.f_measure;
            };
            for (const auto& p : pairs) {
                const auto r = rouge_all(p.hypothesis, p.reference);
                rows.push_back(rouge_row(p.id, r));
                accumulate(mean.rouge1, r.rouge1);
                accumulate(mean.rouge2, r.rouge2);
                accumulate(mean.rougeL, r.rougeL);
            }
            const double count = static_cast<double>(pairs.size());
            for (auto* s : {&mean.rouge1, &mean.rouge2, &mean.rougeL}) {
                s->precision /= count;
                s->recall /= count;
                s->f_measure /= count;
            }
            rows.push_back(rouge_row("mean", mean));
            emit(common, rows, out);
        };
    });

    // tune
    std::string tune_grid, tune_dev;
    auto* tune_cmd = app.add_subcommand("tune", "Grid-search objective and budget constants");
    add_common(tune_cmd, common);
    tune_cmd->add_option("--grid", tune_grid, "Grid spec JSON")->required();
    tune_cmd->add_option("--dev", tune_dev,
                         "Dev set JSON Lines of {\"cluster\",\"embeddings\",\"reference\"}")
        ->required();
    tune_cmd->callback([&] {
        action = [&] {
            PipelineConfig cfg = base_config(common);
            cfg.validate();
            const GridSpec grid = grid_from_json(parse_json_file(tune_grid));
            const auto dev = read_dev_set(tune_dev);
            std::optional<CoocModelPair> model;
            if (cfg.cooc_weights) model = load_model(*cfg.cooc_weights);

            // Similarity, clustering and candidates do not depend on the grid.
            std::vector<PreparedCluster> prepared;
            std::vector<std::string> references;
            for (const auto& item : dev) {
                PipelineConfig item_cfg = cfg;
                if (item.embeddings) item_cfg.embedding_source = item.embeddings;
                auto cluster = load_cluster(item.cluster);
                const auto store = resolve_embeddings(cluster, item_cfg);
                prepared.push_back(prepare_cluster(std::move(cluster), store, item_cfg));
                references.push_back(item.reference);
            }
            const auto result = grid_search(grid, references, [&](const TuneParams& p, std::size_t i) {
                PipelineConfig point = cfg;
                point.apply(p);
                auto r = extract_prepared(prepared[i], point, model ? &*model : nullptr);
                return finalize_summary(std::move(r), point).summary;
            });
            PipelineConfig best = cfg;
            best.apply(result.best);
            nlohmann::json table = nlohmann::json::array();
            for (const auto& row : result.table) {
                table.push_back({{"alpha", row.params.alpha},
                                 {"lambda1", row.params.lambda1},
                                 {"lambda2", row.params.lambda2},
                                 {"k", row.params.k},
                                 {"c", row.params.c},
                                 {"score", row.score}});
            }
            emit(common,
                 {{"best", config_to_json(best)}, {"best_score", result.best_score}, {"table", table}},
                 out);
        };
    });

    // cluster
    std::string cl_matrix, cl_cluster, cl_embeddings;
    auto* cluster_cmd = app.add_subcommand("cluster", "Affinity-propagation partition of sentences");
    add_common(cluster_cmd, common);
    cluster_cmd->add_option("--matrix", cl_matrix, "Similarity matrix JSON");
    cluster_cmd->add_option("--cluster", cl_cluster, "Cluster JSON file");
    cluster_cmd->add_option("--embeddings", cl_embeddings, "SEMB file or embedding service URL");
    cluster_cmd->callback([&] {
        action = [&] {
            const PipelineConfig cfg = base_config(common);
            cfg.validate();
            const auto matrix = matrix_input(cl_matrix, cl_cluster, cl_embeddings, cfg);
            const auto c = affinity_propagation(matrix, cfg.clustering);
            emit(common,
                 {{"k", c.k},
                  {"exemplars", c.exemplars},
                  {"assignment", c.assignment},
                  {"iterations", c.iterations_run},
                  {"converged", c.converged}},
                 out);
        };
    });

    // budget
    std::string bd_matrix, bd_cluster, bd_embeddings;
    std::optional<double> bd_k, bd_c;
    auto* budget_cmd = app.add_subcommand("budget", "Extraction budget from similarity variance");
    add_common(budget_cmd, common);
    budget_cmd->add_option("--matrix", bd_matrix, "Similarity matrix JSON");
    budget_cmd->add_option("--cluster", bd_cluster, "Cluster JSON file");
    budget_cmd->add_option("--embeddings", bd_embeddings, "SEMB file or embedding service URL");
    budget_cmd->add_option("--k", bd_k, "Base sentence count (overrides config)");
    budget_cmd->add_option("--c", bd_c, "Variance multiplier (overrides config)");
    budget_cmd->callback([&] {
        action = [&] {
            PipelineConfig cfg = base_config(common);
            if (bd_k) cfg.budget.k = *bd_k;
            if (bd_c) cfg.budget.c = *bd_c;
            cfg.budget.validate();
            const auto matrix = matrix_input(bd_matrix, bd_cluster, bd_embeddings, cfg);
            const double variance = matrix.size() < 2 ? 0.0 : pairwise_variance(matrix);
            emit(common,
                 {{"n", matrix.size()},
                  {"variance", variance},
                  {"k", cfg.budget.k},
                  {"c", cfg.budget.c},
                  {"budget", budget(matrix, cfg.budget)}},
                 out);
        };
    });

    // cooc-train
    std::string tr_triplets, tr_embeddings, tr_hidden = "64,64", tr_init;
    std::size_t tr_epochs = 20, tr_batch = 32;
    double tr_step = 0.01;
    auto* train_cmd = app.add_subcommand("cooc-train", "Train the co-occurrence scorer");
    add_common(train_cmd, common);
    train_cmd->add_option("--triplets", tr_triplets, "Triplet JSON Lines")->required();
    train_cmd->add_option("--embeddings", tr_embeddings, "SEMB file the triplet keys refer to")
        ->required();
    train_cmd->add_option("--hidden", tr_hidden, "Comma-separated hidden widths");
    train_cmd->add_option("--epochs", tr_epochs, "Training epochs");
    train_cmd->add_option("--batch", tr_batch, "Mini-batch size");
    train_cmd->add_option("--step", tr_step, "Gradient step size");
    train_cmd->add_option("--init", tr_init, "Start from these weights instead of a random init");
    train_cmd->callback([&] {
        action = [&] {
            const PipelineConfig cfg = base_config(common);
            if (common.out.empty()) throw validation_error("cooc-train needs --out for the weights");
            const auto store = load_embeddings(tr_embeddings);
            const auto triplets = load_triplets(tr_triplets, store);
            CoocModelPair init = tr_init.empty()
                                     ? CoocModelPair::random(store.dim(), parse_widths(tr_hidden), cfg.seed)
                                     : load_model(tr_init);
            TrainOptions opts;
            opts.margin = cfg.margin;
            opts.step_size = tr_step;
            opts.epochs = tr_epochs;
            opts.batch_size = tr_batch;
            opts.seed = cfg.seed;
            const auto result = train(std::move(init), triplets, opts);
            save_model(result.model, common.out);
            out << nlohmann::json{{"weights", common.out},
                                  {"margin", opts.margin},
                                  {"loss_history", result.loss_history}}
                       .dump(2)
                << "\n";
        };
    });

    // cooc-score
    std::string sc_weights, sc_embeddings, sc_a, sc_b, sc_pairs;
    double sc_threshold = 0.0;
    auto* score_cmd = app.add_subcommand("cooc-score", "Score sentence pairs with a trained model");
    add_common(score_cmd, common);
    score_cmd->add_option("--weights", sc_weights, "Weight file (defaults to config cooc_weights)");
    score_cmd->add_option("--embeddings", sc_embeddings, "SEMB file")->required();
    score_cmd->add_option("--a", sc_a, "Key of the first sentence");
    score_cmd->add_option("--b", sc_b, "Key of the second sentence");
    score_cmd->add_option("--pairs", sc_pairs, "Labeled pairs JSON Lines {\"a_key\",\"b_key\",\"label\"}");
    score_cmd->add_option("--threshold", sc_threshold, "Decision threshold for --pairs");
    score_cmd->callback([&] {
        action = [&] {
            const PipelineConfig cfg = base_config(common);
            fs::path weights = sc_weights;
            if (weights.empty()) {
                if (!cfg.cooc_weights) throw validation_error("no weights given");
                weights = *cfg.cooc_weights;
            }
            const auto model = load_model(weights);
            const auto store = load_embeddings(sc_embeddings);
            if (!sc_pairs.empty()) {
                const auto m = evaluate_pairs(model, load_labeled_pairs(sc_pairs, store), sc_threshold);
                emit(common,
                     {{"precision", m.precision}, {"recall", m.recall}, {"f", m.f_measure},
                      {"threshold", sc_threshold}},
                     out);
            } else if (!sc_a.empty() && !sc_b.empty()) {
                const double s =
                    coc_score(model, to_double(store.at(sc_a)), to_double(store.at(sc_b)));
                emit(common, {{"a", sc_a}, {"b", sc_b}, {"score", s}}, out);
            } else {
                throw validation_error("need --pairs or both --a and --b");
            }
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        action();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace evsum
