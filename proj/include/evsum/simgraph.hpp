#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace evsum {

class DocumentCluster;

/// Sentence vectors keyed by "cluster_id/doc_index/sent_index". All vectors
/// share one dimension and are finite.
class EmbeddingStore {
public:
    explicit EmbeddingStore(std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(const std::string& key) const { return entries_.count(key) != 0; }

    /// Throws on a duplicate key, wrong length or non-finite component.
    void insert(std::string key, std::vector<float> vec);

    /// Throws if the key is absent.
    const std::vector<float>& at(const std::string& key) const;

    const std::map<std::string, std::vector<float>>& entries() const noexcept { return entries_; }

private:
    std::size_t dim_;
    std::map<std::string, std::vector<float>> entries_;
};

/// SEMB binary format: "SEMB", u8 version 1, u32 dim, u32 count, then per
/// entry u16 key length, key bytes, dim float32 values. Little endian.
EmbeddingStore load_embeddings(const std::filesystem::path& path);
EmbeddingStore parse_embeddings(std::span<const unsigned char> bytes);
std::vector<unsigned char> serialize_embeddings(const EmbeddingStore& store);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

/// Cosine similarity clamped to [0, 1]; 0 when either vector is all-zero.
double sim(std::span<const double> a, std::span<const double> b);
double sim(std::span<const float> a, std::span<const float> b);

/// Dense symmetric n x n matrix with entries in [0, 1].
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;

    /// Validates symmetry (exact) and range. Row-major values.
    SimilarityMatrix(std::size_t n, std::vector<double> values);

    /// Builds from nested rows; throws if not square.
    static SimilarityMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * n_, n_};
    }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

/// Sim over every universe pair, using the upper triangle mirrored.
SimilarityMatrix similarity_matrix(const DocumentCluster& cluster, const EmbeddingStore& store);
SimilarityMatrix similarity_matrix(const std::vector<std::vector<double>>& vectors);

/// Population variance over the strictly-upper-triangle entries. Needs n >= 2.
double pairwise_variance(const SimilarityMatrix& matrix);

std::vector<double> to_double(std::span<const float> v);

}  // namespace evsum
