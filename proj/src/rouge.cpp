#include "evsum/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <nlohmann/json.hpp>

#include "evsum/error.hpp"

namespace evsum {

namespace {

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

RougeScore make_score(double overlap, double hyp_total, double ref_total) {
    RougeScore s;
    s.precision = hyp_total > 0 ? overlap / hyp_total : 0.0;
    s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
    s.f_measure = s.precision + s.recall > 0
                      ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                      : 0.0;
    return s;
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& toks,
                                                             std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                          toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::vector<double> json_values(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
        throw validation_error(std::string("grid '") + key + "' must be a non-empty list");
    }
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw validation_error(std::string("grid '") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

RougeScore rouge_n(std::string_view hypothesis, std::string_view reference, int n) {
    if (n != 1 && n != 2) throw validation_error("ROUGE-N supports n = 1 or 2");
    const auto hyp = ngram_counts(tokenize(hypothesis), static_cast<std::size_t>(n));
    const auto ref = ngram_counts(tokenize(reference), static_cast<std::size_t>(n));
    std::size_t overlap = 0, hyp_total = 0, ref_total = 0;
    for (const auto& [g, c] : hyp) {
        hyp_total += c;
        auto it = ref.find(g);
        if (it != ref.end()) overlap += std::min(c, it->second);
    }
    for (const auto& [g, c] : ref) ref_total += c;
    return make_score(static_cast<double>(overlap), static_cast<double>(hyp_total),
                      static_cast<double>(ref_total));
}

RougeScore rouge_l(std::string_view hypothesis, std::string_view reference) {
    const auto hyp = tokenize(hypothesis);
    const auto ref = tokenize(reference);
    return make_score(static_cast<double>(lcs_length(hyp, ref)), static_cast<double>(hyp.size()),
                      static_cast<double>(ref.size()));
}

RougeTriple rouge_all(std::string_view hypothesis, std::string_view reference) {
    return {rouge_n(hypothesis, reference, 1), rouge_n(hypothesis, reference, 2),
            rouge_l(hypothesis, reference)};
}

nlohmann::json rouge_to_json(const RougeScore& s) {
    return {{"p", s.precision}, {"r", s.recall}, {"f", s.f_measure}};
}

std::vector<TuneParams> GridSpec::points() const {
    std::vector<TuneParams> out;
    for (double a : alpha)
        for (double l1 : lambda1)
            for (double l2 : lambda2)
                for (double kk : k)
                    for (double cc : c) out.push_back({a, l1, l2, kk, cc});
    return out;
}

GridSpec grid_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw validation_error("grid spec must be a JSON object");
    return {json_values(j, "alpha"), json_values(j, "lambda1"), json_values(j, "lambda2"),
            json_values(j, "k"), json_values(j, "c")};
}

GridResult grid_search(const GridSpec& grid, const std::vector<std::string>& references,
                       const DevSummarizer& summarize) {
    if (references.empty()) throw validation_error("development set is empty");
    const auto points = grid.points();
    if (points.empty()) throw validation_error("grid has no points");

    GridResult result;
    bool have = false;
    for (const auto& p : points) {
        double sum = 0.0;
        for (std::size_t i = 0; i < references.size(); ++i) {
            std::string hyp;
            try {
                hyp = summarize(p, i);
            } catch (const Error& e) {
                throw Error(e.kind(), "grid point (alpha=" + std::to_string(p.alpha) +
                                          ", lambda1=" + std::to_string(p.lambda1) +
                                          ", lambda2=" + std::to_string(p.lambda2) +
                                          ", k=" + std::to_string(p.k) + ", c=" + std::to_string(p.c) +
                                          "), dev item " + std::to_string(i) + ": " + e.what());
            }
            sum += rouge_n(hyp, references[i], 2).f_measure + rouge_l(hyp, references[i]).f_measure;
        }
        const double score = sum / static_cast<double>(references.size());
        result.table.push_back({p, score});
        if (!have || score > result.best_score) {
            result.best = p;
            result.best_score = score;
            have = true;
        }
    }
    return result;
}

}  // namespace evsum
