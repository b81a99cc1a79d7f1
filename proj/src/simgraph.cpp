#include "evsum/simgraph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "evsum/corpus.hpp"
#include "evsum/error.hpp"
#include "evsum/io.hpp"

namespace evsum {

namespace {

constexpr unsigned char kMagic[4] = {'S', 'E', 'M', 'B'};
constexpr std::uint8_t kVersion = 1;

class ByteReader {
public:
    explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    template <class T>
    T little_endian() {
        need(sizeof(T));
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return value;
    }

    float f32() { return std::bit_cast<float>(little_endian<std::uint32_t>()); }

    std::string string(std::size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    std::span<const unsigned char> raw(std::size_t len) {
        need(len);
        auto s = bytes_.subspan(pos_, len);
        pos_ += len;
        return s;
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t len) const {
        if (bytes_.size() - pos_ < len) {
            throw validation_error("embedding file truncated at byte " + std::to_string(pos_));
        }
    }

    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xFF));
    }
}

template <class T>
double cosine_clamped(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw validation_error("sim: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                               std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double x = a[i], y = b[i];
        if (std::isnan(x) || std::isnan(y)) throw validation_error("sim: NaN input");
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    // sqrt(fl(x * x)) == x, so identical vectors score exactly 1.
    double c = dot / std::sqrt(na * nb);
    return std::clamp(c, 0.0, 1.0);
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw validation_error("embedding dimension must be positive");
}

void EmbeddingStore::insert(std::string key, std::vector<float> vec) {
    if (vec.size() != dim_) {
        throw validation_error("embedding '" + key + "' has length " + std::to_string(vec.size()) +
                               ", expected " + std::to_string(dim_));
    }
    if (!std::all_of(vec.begin(), vec.end(), [](float x) { return std::isfinite(x); })) {
        throw validation_error("embedding '" + key + "' has a non-finite component");
    }
    auto [it, inserted] = entries_.emplace(std::move(key), std::move(vec));
    if (!inserted) throw validation_error("duplicate embedding key '" + it->first + "'");
}

const std::vector<float>& EmbeddingStore::at(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw validation_error("missing embedding for key '" + key + "'");
    return it->second;
}

EmbeddingStore parse_embeddings(std::span<const unsigned char> bytes) {
    ByteReader in(bytes);
    auto magic = in.raw(4);
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
        throw validation_error("embedding file: bad magic");
    }
    auto version = in.little_endian<std::uint8_t>();
    if (version != kVersion) {
        throw validation_error("embedding file: unsupported version " + std::to_string(version));
    }
    auto dim = in.little_endian<std::uint32_t>();
    auto count = in.little_endian<std::uint32_t>();
    EmbeddingStore store(dim);
    for (std::uint32_t e = 0; e < count; ++e) {
        auto key_len = in.little_endian<std::uint16_t>();
        auto key = in.string(key_len);
        std::vector<float> vec(dim);
        for (auto& x : vec) x = in.f32();
        store.insert(std::move(key), std::move(vec));
    }
    if (!in.at_end()) throw validation_error("embedding file: trailing bytes after last entry");
    return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    auto text = read_text_file(path);
    return parse_embeddings(
        {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::vector<unsigned char> serialize_embeddings(const EmbeddingStore& store) {
    std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
    out.push_back(kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& [key, vec] : store.entries()) {
        if (key.size() > 0xFFFF) throw validation_error("embedding key too long: '" + key + "'");
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(key.size()));
        out.insert(out.end(), key.begin(), key.end());
        for (float x : vec) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
    }
    return out;
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
    auto bytes = serialize_embeddings(store);
    write_file_atomic(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

double sim(std::span<const double> a, std::span<const double> b) { return cosine_clamped(a, b); }

double sim(std::span<const float> a, std::span<const float> b) { return cosine_clamped(a, b); }

SimilarityMatrix::SimilarityMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
    if (values_.size() != n_ * n_) throw validation_error("similarity matrix is not n x n");
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            double v = (*this)(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw validation_error("similarity entry (" + std::to_string(i) + ", " +
                                       std::to_string(j) + ") outside [0, 1]");
            }
            if (v != (*this)(j, i)) {
                throw validation_error("similarity matrix is not symmetric at (" +
                                       std::to_string(i) + ", " + std::to_string(j) + ")");
            }
        }
    }
}

SimilarityMatrix SimilarityMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<double> flat;
    flat.reserve(rows.size() * rows.size());
    for (const auto& r : rows) {
        if (r.size() != rows.size()) throw validation_error("similarity matrix is not square");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return SimilarityMatrix(rows.size(), std::move(flat));
}

SimilarityMatrix similarity_matrix(const std::vector<std::vector<double>>& vectors) {
    const std::size_t n = vectors.size();
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = sim(std::span<const double>(vectors[i]), std::span<const double>(vectors[j]));
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    return SimilarityMatrix(n, std::move(values));
}

SimilarityMatrix similarity_matrix(const DocumentCluster& cluster, const EmbeddingStore& store) {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(cluster.size());
    for (std::size_t i = 0; i < cluster.size(); ++i) {
        vectors.push_back(to_double(store.at(cluster.embedding_key(i))));
    }
    return similarity_matrix(vectors);
}

double pairwise_variance(const SimilarityMatrix& matrix) {
    const std::size_t n = matrix.size();
    if (n < 2) throw validation_error("pairwise variance needs at least two sentences");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            sum += matrix(i, j);
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = matrix(i, j) - mean;
            sq += d * d;
        }
    }
    return sq / static_cast<double>(count);
}

std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

}  // namespace evsum
