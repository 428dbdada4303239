#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tins/embedding_store.hpp"
#include "tins/kmeans.hpp"

namespace tins {

inline constexpr std::size_t kCodesPerSubspace = 256;

struct IndexConfig {
    std::uint32_t num_clusters = 64;
    std::uint32_t nprobe = 8;
    std::uint32_t num_subspaces = 8;
    std::uint32_t kmeans_iters = 25;
    std::uint64_t seed = 1234;
    bool exact_mode = false;

    /// Throws ConfigError when the config cannot index D-dimensional data.
    void validate(std::uint32_t dimension) const;

    bool operator==(const IndexConfig&) const = default;
};

/// Distance to similarity: s = 1 / (1 + d). Strictly decreasing, in (0, 1].
inline double similarity_from_distance(double distance) { return 1.0 / (1.0 + distance); }

struct ScoredFrame {
    FrameRef frame;
    double score = 0.0;

    bool operator==(const ScoredFrame&) const = default;
};

/// Frames ordered by descending score; equal scores by ascending
/// (video_id, frame_index). Frame refs are unique.
struct RankedList {
    std::vector<ScoredFrame> entries;
    std::uint32_t example = 0;  // given example index k
    std::int32_t offset = 0;    // tracking offset n

    bool operator==(const RankedList&) const = default;
};

/// Canonical ordering used by every ranked list.
bool ranks_before(const ScoredFrame& a, const ScoredFrame& b);

/// 256-way product quantizer over `num_subspaces` equal slices.
class ProductQuantizer {
public:
    ProductQuantizer() = default;
    ProductQuantizer(std::uint32_t dimension, std::uint32_t num_subspaces,
                     std::vector<float> codebooks);

    std::uint32_t dimension() const { return dim_; }
    std::uint32_t num_subspaces() const { return m_; }
    std::uint32_t subspace_dim() const { return m_ == 0 ? 0 : dim_ / m_; }
    /// m x 256 x (D/m), row-major.
    const std::vector<float>& codebooks() const { return codebooks_; }
    std::span<const float> codeword(std::size_t subspace, std::size_t code) const;

    void encode(std::span<const float> v, std::span<std::uint8_t> code) const;
    void decode(std::span<const std::uint8_t> code, std::span<float> out) const;

    /// Per-subspace squared distances from `v` to every codeword: m x 256.
    void distance_table(std::span<const float> v, std::span<float> table) const;

    bool operator==(const ProductQuantizer&) const = default;

private:
    std::uint32_t dim_ = 0;
    std::uint32_t m_ = 0;
    std::vector<float> codebooks_;
};

/// Lloyd's k-means coarse quantizer: `num_clusters` centroids.
KMeansResult train_coarse(MatrixView sample, std::size_t num_clusters, std::size_t iters,
                          std::uint64_t seed);

/// One 256-centroid k-means per subspace, trained on that slice of the
/// residuals. Requires at least 256 samples and m dividing D.
ProductQuantizer train_pq(MatrixView residuals, std::size_t num_subspaces, std::size_t iters,
                          std::uint64_t seed);

/// IVF-PQ index over every face of a dataset (IVFADC layout: PQ encodes the
/// residual to the assigned coarse centroid). Immutable after build.
class Index {
public:
    struct Entry {
        std::uint32_t video = 0;  // position in videos()
        std::uint32_t frame_index = 0;
        std::uint16_t face_index = 0;

        bool operator==(const Entry&) const = default;
    };

    struct InvertedList {
        std::vector<Entry> entries;
        std::vector<std::uint8_t> codes;  // entries.size() x m
        std::vector<float> raw;           // entries.size() x D, exact mode only

        std::size_t size() const { return entries.size(); }
        bool operator==(const InvertedList&) const = default;
    };

    Index() = default;

    static Index build(const Dataset& dataset, const IndexConfig& config);

    const IndexConfig& config() const { return config_; }
    std::uint32_t dimension() const { return dim_; }
    std::size_t size() const;
    const std::vector<std::string>& videos() const { return videos_; }
    const std::vector<float>& coarse_centroids() const { return centroids_; }
    const ProductQuantizer& quantizer() const { return pq_; }
    const std::vector<InvertedList>& lists() const { return lists_; }

    /// Search-time override of the probe count (clamped to [1, C]).
    void set_nprobe(std::uint32_t nprobe);

    /// The `nprobe` nearest coarse clusters, nearest first (ties by id).
    std::vector<std::uint32_t> probe(std::span<const float> query, std::uint32_t nprobe) const;

    RankedList search(std::span<const float> query, std::size_t top_n) const;
    RankedList search(std::span<const float> query, std::size_t top_n,
                      std::uint32_t nprobe) const;

    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static Index load(std::istream& in);
    static Index load(const std::filesystem::path& path);

    bool operator==(const Index&) const = default;

private:
    IndexConfig config_;
    std::uint32_t dim_ = 0;
    std::vector<std::string> videos_;
    std::vector<float> centroids_;
    ProductQuantizer pq_;
    std::vector<InvertedList> lists_;
};

/// Brute-force Euclidean scan over every face; same per-frame max rule and
/// tie-breaking as Index::search.
RankedList exact_search(const Dataset& dataset, std::span<const float> query, std::size_t top_n);

}  // namespace tins
