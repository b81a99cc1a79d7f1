#include <doctest.h>

#include <functional>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "evsum/error.hpp"
#include "evsum/rouge.hpp"

using namespace evsum;

namespace {

using Tokens = std::vector<std::string>;

std::string join(const Tokens& t) {
    std::string out;
    for (const auto& w : t) out += (out.empty() ? "" : " ") + w;
    return out;
}

double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r); }

// Multiset n-gram overlap counted with a map.
RougeScore oracle_rouge_n(const Tokens& h, const Tokens& r, std::size_t n) {
    std::map<Tokens, int> hc, rc;
    for (std::size_t i = 0; i + n <= h.size(); ++i) ++hc[Tokens(h.begin() + i, h.begin() + i + n)];
    for (std::size_t i = 0; i + n <= r.size(); ++i) ++rc[Tokens(r.begin() + i, r.begin() + i + n)];
    int overlap = 0, htotal = 0, rtotal = 0;
    for (auto& [g, c] : hc) {
        htotal += c;
        auto it = rc.find(g);
        if (it != rc.end()) overlap += std::min(c, it->second);
    }
    for (auto& [g, c] : rc) rtotal += c;
    const double p = htotal ? double(overlap) / htotal : 0.0;
    const double rr = rtotal ? double(overlap) / rtotal : 0.0;
    return {p, rr, f1(p, rr)};
}

// LCS length by plain recursion with memo.
std::size_t oracle_lcs(const Tokens& a, const Tokens& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size() || j == b.size()) return 0;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t v = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
        return memo[key] = v;
    };
    return go(0, 0);
}

Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len) {
    static const Tokens vocab = {"a", "b", "c", "d", "e", "storm"};
    std::uniform_int_distribution<std::size_t> len(0, max_len), w(0, vocab.size() - 1);
    Tokens t(len(rng));
    for (auto& x : t) x = vocab[w(rng)];
    return t;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on punctuation") {
    CHECK(tokenize("The Storm, hit!") == Tokens{"the", "storm", "hit"});
    CHECK(tokenize("U.S.-based aid") == Tokens{"u", "s", "based", "aid"});
    CHECK(tokenize("  3.5 million  ") == Tokens{"3", "5", "million"});
    CHECK(tokenize("The cat sat.") == Tokens{"the", "cat", "sat"});
    CHECK(tokenize("") == Tokens{});
    CHECK(tokenize("...") == Tokens{});
    CHECK(tokenize("caf\xc3\xa9 ole") == Tokens{"caf\xc3\xa9", "ole"});
}

TEST_CASE("ROUGE-1 on a partial match") {
    const auto s = rouge_n("the cat sat", "the cat sat down", 1);
    CHECK(s.precision == doctest::Approx(1.0));
    CHECK(s.recall == doctest::Approx(0.75));
    CHECK(s.f_measure == doctest::Approx(6.0 / 7.0));
    const auto t = rouge_n("the cat", "the cat sat", 1);
    CHECK(t.precision == 1.0);
    CHECK(t.recall == doctest::Approx(2.0 / 3.0));
    CHECK(t.f_measure == doctest::Approx(0.8));
    const auto d = rouge_n("a b", "c d", 1);
    CHECK(d.precision == 0.0);
    CHECK(d.recall == 0.0);
    CHECK(d.f_measure == 0.0);
}

TEST_CASE("ROUGE-2 counts clipped bigrams") {
    // Bigrams: hyp {a b, b a, a b}, ref {a b, b c}; "a b" clipped to 1.
    const auto s = rouge_n("a b a b", "a b c", 2);
    CHECK(s.precision == doctest::Approx(1.0 / 3.0));
    CHECK(s.recall == doctest::Approx(0.5));
    CHECK(rouge_n("a", "a", 2).f_measure == 0.0);
    CHECK_THROWS_AS(rouge_n("a", "a", 3), Error);
}

TEST_CASE("ROUGE-L uses the longest common subsequence") {
    const auto s = rouge_l("a x b", "a b y");
    CHECK(s.precision == doctest::Approx(2.0 / 3.0));
    CHECK(s.recall == doctest::Approx(2.0 / 3.0));
    CHECK(s.f_measure == doctest::Approx(2.0 / 3.0));
    const auto same = rouge_l("the storm hit the coast", "The storm hit the coast.");
    CHECK(same.f_measure == 1.0);
}

TEST_CASE("identical and disjoint texts") {
    const auto all = rouge_all("flood waters rose fast", "flood waters rose fast");
    CHECK(all.rouge1.f_measure == 1.0);
    CHECK(all.rouge2.f_measure == 1.0);
    CHECK(all.rougeL.f_measure == 1.0);
    const auto none = rouge_all("alpha beta", "gamma delta");
    CHECK(none.rouge1.f_measure == 0.0);
    CHECK(none.rougeL.f_measure == 0.0);
    const auto empty = rouge_all("", "something here");
    CHECK(empty.rouge1.precision == 0.0);
    CHECK(empty.rouge1.f_measure == 0.0);
}

TEST_CASE("ROUGE agrees with counting oracles on random token strings") {
    std::mt19937_64 rng(301);
    for (int t = 0; t < 400; ++t) {
        const auto h = random_tokens(rng, 12), r = random_tokens(rng, 12);
        for (std::size_t n : {1u, 2u}) {
            const auto got = rouge_n(join(h), join(r), static_cast<int>(n));
            const auto want = oracle_rouge_n(h, r, n);
            CHECK(got.precision == doctest::Approx(want.precision));
            CHECK(got.recall == doctest::Approx(want.recall));
            CHECK(got.f_measure == doctest::Approx(want.f_measure));
            const auto back = rouge_n(join(r), join(h), static_cast<int>(n));
            CHECK(back.precision == doctest::Approx(got.recall));
            CHECK(back.recall == doctest::Approx(got.precision));
        }
        const double lcs = static_cast<double>(oracle_lcs(h, r));
        const auto l = rouge_l(join(h), join(r));
        CHECK(l.precision == doctest::Approx(h.empty() ? 0.0 : lcs / h.size()));
        CHECK(l.recall == doctest::Approx(r.empty() ? 0.0 : lcs / r.size()));

        // Swapping hypothesis and reference swaps P and R, keeps F.
        const auto swapped = rouge_l(join(r), join(h));
        CHECK(swapped.precision == doctest::Approx(l.recall));
        CHECK(swapped.f_measure == doctest::Approx(l.f_measure));
        for (double v : {l.precision, l.recall, l.f_measure}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("rouge_to_json") {
    const auto j = rouge_to_json({0.5, 0.25, 1.0 / 3.0});
    CHECK(j["p"] == 0.5);
    CHECK(j["r"] == 0.25);
    CHECK(j.contains("f"));
}

TEST_CASE("grid points run alpha slowest and c fastest") {
    GridSpec g{{0.1, 0.2}, {1}, {1}, {2, 3}, {0, 5}};
    const auto pts = g.points();
    REQUIRE(pts.size() == 8);
    CHECK(pts[0] == TuneParams{0.1, 1, 1, 2, 0});
    CHECK(pts[1] == TuneParams{0.1, 1, 1, 2, 5});
    CHECK(pts[2] == TuneParams{0.1, 1, 1, 3, 0});
    CHECK(pts[4] == TuneParams{0.2, 1, 1, 2, 0});
}

TEST_CASE("grid_from_json") {
    const auto g = grid_from_json(nlohmann::json::parse(
        R"({"alpha":[0.3],"lambda1":[0,1],"lambda2":[1],"k":[4],"c":[10]})"));
    CHECK(g.points().size() == 2);
    CHECK_THROWS_AS(grid_from_json(nlohmann::json::parse(R"({"alpha":[0.3]})")), Error);
    CHECK_THROWS_AS(grid_from_json(nlohmann::json::parse("[1]")), Error);
}

TEST_CASE("grid_search scores every point and keeps the first best") {
    GridSpec g{{0.1, 0.2, 0.3}, {1}, {1}, {4}, {10}};
    const std::vector<std::string> refs = {"the storm hit the coast", "aid arrived late"};
    // Point 0.2 reproduces the references; 0.1 and 0.3 return unrelated text.
    auto stub = [&](const TuneParams& p, std::size_t i) -> std::string {
        return p.alpha == 0.2 ? refs[i] : "nothing relevant";
    };
    const auto r = grid_search(g, refs, stub);
    REQUIRE(r.table.size() == 3);
    CHECK(r.best.alpha == 0.2);
    CHECK(r.best_score == doctest::Approx(2.0));
    CHECK(r.table[0].score == 0.0);

    // Equal scores everywhere: earliest point wins.
    const auto flat = grid_search(g, refs, [&](const TuneParams&, std::size_t i) { return refs[i]; });
    CHECK(flat.best.alpha == 0.1);

    const GridSpec one{{0.3}, {1}, {1}, {4}, {10}};
    CHECK(grid_search(one, refs, stub).table.size() == 1);
    CHECK_THROWS_AS(grid_search(one, {}, stub), Error);
}

TEST_CASE("grid_search names the failing point") {
    const GridSpec g{{0.3}, {1}, {1}, {4}, {10}};
    try {
        grid_search(g, {"x"}, [](const TuneParams&, std::size_t) -> std::string {
            throw validation_error("boom");
        });
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("dev item 0") != std::string::npos);
        CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
}
