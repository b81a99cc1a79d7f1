#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace evsum {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

/// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so
/// UTF-8 words stay whole. No stemming, no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

/// Clipped n-gram overlap, n in {1, 2}.
RougeScore rouge_n(std::string_view hypothesis, std::string_view reference, int n);

/// Longest common subsequence over the whole token sequence.
RougeScore rouge_l(std::string_view hypothesis, std::string_view reference);

struct RougeTriple {
    RougeScore rouge1;
    RougeScore rouge2;
    RougeScore rougeL;
};

RougeTriple rouge_all(std::string_view hypothesis, std::string_view reference);

nlohmann::json rouge_to_json(const RougeScore& s);

/// One point of the tuning grid.
struct TuneParams {
    double alpha = 0.3;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double k = 4.0;
    double c = 10.0;

    bool operator==(const TuneParams&) const = default;
};

struct GridSpec {
    std::vector<double> alpha;
    std::vector<double> lambda1;
    std::vector<double> lambda2;
    std::vector<double> k;
    std::vector<double> c;

    /// Row-major cartesian product: alpha varies slowest, c fastest.
    std::vector<TuneParams> points() const;
};

GridSpec grid_from_json(const nlohmann::json& j);

struct GridRow {
    TuneParams params;
    double score = 0.0;  // mean of ROUGE-2 F + ROUGE-L F over the dev set
};

struct GridResult {
    TuneParams best;
    double best_score = 0.0;
    std::vector<GridRow> table;  // grid order
};

/// Produces the summary of dev item `index` under `params`.
using DevSummarizer = std::function<std::string(const TuneParams& params, std::size_t index)>;

/// Scores every grid point on the dev set; ties go to the earliest point.
GridResult grid_search(const GridSpec& grid, const std::vector<std::string>& references,
                       const DevSummarizer& summarize);

}  // namespace evsum
