#include <doctest.h>

#include <httplib.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "evsum/cli.hpp"
#include "evsum/error.hpp"
#include "evsum/io.hpp"
#include "evsum/pipeline.hpp"

using namespace evsum;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = EVSUM_TEST_DATA_DIR;

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return (kData / name).string(); }

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "evsum_pipeline_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("config parsing resolves paths and rejects unknown keys") {
    const auto cfg = config_from_json(json::parse(R"({"alpha":0.5,"k":2,"c":0,"preference":-0.5,
        "cooc_weights":"w.json","embedding_source":"e.semb","timeout_seconds":3})"),
                                      "/base");
    CHECK(cfg.objective.alpha == 0.5);
    CHECK(cfg.budget.k == 2.0);
    CHECK(cfg.clustering.preference == -0.5);
    CHECK(*cfg.cooc_weights == fs::path("/base/w.json"));
    CHECK(*cfg.embedding_source == "/base/e.semb");
    CHECK(cfg.service_timeout == std::chrono::milliseconds(3000));

    const auto url = config_from_json(json::parse(R"({"embedding_source":"http://h:1/embed"})"), "/base");
    CHECK(*url.embedding_source == "http://h:1/embed");

    CHECK_THROWS_AS(config_from_json(json::parse(R"({"alhpa":0.5})")), Error);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"alpha":-1})")), Error);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"damping":1.5})")), Error);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"preference":"mean"})")), Error);

    const auto back = config_from_json(config_to_json(cfg));
    CHECK(back.objective.alpha == cfg.objective.alpha);
    CHECK(back.clustering.preference == cfg.clustering.preference);
}

TEST_CASE("summarize on the toy cluster") {
    auto cfg = load_config(kData / "toy_config.json");
    const auto out = run_summarize(kData / "toy_cluster.json", cfg);
    CHECK(out.result.selection.size() == out.result.budget);
    CHECK(out.result.selection.members().front() == out.result.main_index);
    CHECK_FALSE(out.rewritten);
    CHECK_FALSE(out.warning.has_value());
    std::string joined;
    for (const auto& s : out.result.summary_sentences) joined += (joined.empty() ? "" : " ") + s;
    CHECK(out.summary == joined);
    const auto j = summarize_to_json(out);
    CHECK(j["rewrite"] == "passthrough");
    CHECK(j["sentences"].size() == out.result.budget);
}

TEST_CASE("summarize output is byte-identical across runs") {
    std::string first;
    for (int run = 0; run < 3; ++run) {
        const auto r = cli({"summarize", "--cluster", data("toy_cluster.json"), "--config",
                            data("toy_config.json"), "--seed", "42"});
        REQUIRE(r.code == kExitOk);
        if (run == 0) first = r.out;
        CHECK(r.out == first);
    }
}

TEST_CASE("the bias weight pulls in the main-event sentence") {
    const auto off = run_summarize(kData / "ablation_cluster.json", load_config(kData / "ablation_nobias.json"));
    const auto on = run_summarize(kData / "ablation_cluster.json", load_config(kData / "ablation_bias.json"));
    CHECK_FALSE(off.result.selection.contains(4));
    CHECK(on.result.selection.contains(4));
    CHECK(on.result.scores.bias > 0.0);
    CHECK(off.result.main_index == on.result.main_index);
}

TEST_CASE("rewrite service output replaces the passthrough text") {
    httplib::Server srv;
    srv.Post("/rewrite", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"summary":"Rewritten."})", "application/json");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    auto cfg = load_config(kData / "toy_config.json");
    cfg.rewrite_endpoint = "http://127.0.0.1:" + std::to_string(port) + "/rewrite";
    const auto ok = run_summarize(kData / "toy_cluster.json", cfg);
    CHECK(ok.rewritten);
    CHECK(ok.summary == "Rewritten.");

    cfg.rewrite_endpoint = "http://127.0.0.1:" + std::to_string(port) + "/missing";
    const auto fallback = run_summarize(kData / "toy_cluster.json", cfg);
    CHECK_FALSE(fallback.rewritten);
    CHECK(fallback.warning.has_value());
    CHECK(summarize_to_json(fallback).contains("warning"));
    srv.stop();
    t.join();
}

TEST_CASE("stage errors name the failing stage") {
    PipelineConfig none;
    try {
        run_summarize(kData / "toy_cluster.json", none);
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK(std::string(e.what()).find("embeddings") != std::string::npos);
    }
    auto mismatched = load_config(kData / "toy_config.json");
    mismatched.embedding_source = data("ablation.semb");
    try {
        run_summarize(kData / "toy_cluster.json", mismatched);
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK(e.kind() == ErrorKind::kValidation);
    }
}

TEST_CASE("cli summarize reports errors with exit codes") {
    auto r = cli({"summarize", "--cluster", data("toy_cluster.json")});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("embeddings") != std::string::npos);

    r = cli({"summarize", "--cluster", "/does/not/exist.json", "--embeddings", data("toy.semb")});
    CHECK(r.code == kExitIo);

    r = cli({"summarize", "--cluster", data("toy_cluster.json"), "--no-such-flag"});
    CHECK(r.code == kExitValidation);

    r = cli({});
    CHECK(r.code == kExitValidation);

    r = cli({"--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("summarize") != std::string::npos);
}

TEST_CASE("cli summarize writes --out atomically") {
    const auto path = scratch("summary.json");
    fs::remove(path);
    const auto r = cli({"summarize", "--cluster", data("toy_cluster.json"), "--embeddings", data("toy.semb"),
                        "--out", path.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.empty());
    const auto j = json::parse(read_text_file(path));
    CHECK(j.contains("summary"));
}

TEST_CASE("cli budget on the worked matrix") {
    const auto r = cli({"budget", "--matrix", data("worked_matrix.json"), "--k", "3", "--c", "10"});
    REQUIRE(r.code == kExitOk);
    const auto j = json::parse(r.out);
    CHECK(j["budget"] == 3);
    CHECK(j["variance"].get<double>() == doctest::Approx(0.0155555555555556));
}

TEST_CASE("cli cluster accepts a matrix or a cluster with embeddings") {
    auto r = cli({"cluster", "--matrix", data("worked_matrix.json")});
    REQUIRE(r.code == kExitOk);
    CHECK(json::parse(r.out)["assignment"].size() == 3);
    r = cli({"cluster", "--cluster", data("toy_cluster.json"), "--embeddings", data("toy.semb")});
    REQUIRE(r.code == kExitOk);
    CHECK(json::parse(r.out)["assignment"].size() == 10);
    r = cli({"cluster"});
    CHECK(r.code == kExitValidation);
}

TEST_CASE("cli evaluate") {
    auto r = cli({"evaluate", "--pairs", data("eval_pairs.jsonl")});
    REQUIRE(r.code == kExitOk);
    const auto rows = json::parse(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["rouge1"]["f"] == 1.0);
    CHECK(rows[0]["rougeL"]["f"] == 1.0);
    CHECK(rows[2]["id"] == "mean");

    const auto hyp = scratch("hyp.txt"), ref = scratch("ref.txt");
    write_file_atomic(hyp, "the storm hit");
    write_file_atomic(ref, "the storm hit");
    r = cli({"evaluate", "--hyp", hyp.string(), "--ref", ref.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("1.0") != std::string::npos);
}

TEST_CASE("cli tune picks a grid point") {
    const auto r = cli({"tune", "--grid", data("grid.json"), "--dev", data("dev.jsonl")});
    REQUIRE(r.code == kExitOk);
    const auto j = json::parse(r.out);
    CHECK(j["table"].size() == 4);
    double best = -1.0;
    for (const auto& row : j["table"]) best = std::max(best, row["score"].get<double>());
    CHECK(j["best_score"].get<double>() == best);
}

TEST_CASE("cli cooc-train then cooc-score") {
    const auto weights = scratch("trained.json");
    auto r = cli({"cooc-train", "--triplets", data("triplets.jsonl"), "--embeddings", data("triplets.semb"),
                  "--hidden", "8", "--epochs", "5", "--out", weights.string()});
    REQUIRE(r.code == kExitOk);
    const auto summary = json::parse(r.out);
    CHECK(summary["loss_history"].size() == 5);
    CHECK(summary["margin"] == 5.4);

    r = cli({"cooc-score", "--embeddings", data("triplets.semb"), "--weights", weights.string(), "--a", "t/0/a",
             "--b", "t/0/p"});
    REQUIRE(r.code == kExitOk);
    const double ab = json::parse(r.out)["score"];
    r = cli({"cooc-score", "--embeddings", data("triplets.semb"), "--weights", weights.string(), "--a", "t/0/p",
             "--b", "t/0/a"});
    CHECK(json::parse(r.out)["score"].get<double>() == ab);

    r = cli({"cooc-score", "--embeddings", data("triplets.semb"), "--weights", weights.string(), "--pairs",
             data("labeled_pairs.jsonl"), "--threshold", "-100"});
    REQUIRE(r.code == kExitOk);
    CHECK(json::parse(r.out)["recall"] == 1.0);

    r = cli({"cooc-train", "--triplets", data("triplets.jsonl"), "--embeddings", data("triplets.semb")});
    CHECK(r.code == kExitValidation);
}
