#include "tins/pq_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "binary_io.hpp"
#include "tins/error.hpp"

namespace tins {

namespace {

constexpr std::uint32_t kIndexFormatVersion = 1;
constexpr std::size_t kCoarseSamplesPerCluster = 256;
constexpr std::size_t kMaxPqTrainingSamples = 65536;

double score_from_sqr(float d2) {
    return similarity_from_distance(static_cast<double>(std::sqrt(d2)));
}

// Deterministic subsample of row indices, returned in ascending order.
std::vector<std::size_t> sample_rows(std::size_t n, std::size_t cap, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= cap) return idx;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<float> gather_rows(MatrixView m, std::span<const std::size_t> rows) {
    std::vector<float> out;
    out.reserve(rows.size() * m.dim);
    for (auto r : rows) {
        auto row = m.row(r);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

void top_n_sort(std::vector<ScoredFrame>& frames, std::size_t top_n) {
    if (frames.size() > top_n) {
        std::partial_sort(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(top_n),
                          frames.end(), ranks_before);
        frames.resize(top_n);
    } else {
        std::sort(frames.begin(), frames.end(), ranks_before);
    }
}

void check_query(std::span<const float> query, std::uint32_t dim, std::size_t top_n) {
    if (top_n == 0) throw ConfigError("top_n must be at least 1");
    if (query.size() != dim) {
        throw DataError("query dimension " + std::to_string(query.size()) +
                        " does not match index dimension " + std::to_string(dim));
    }
}

}  // namespace

bool ranks_before(const ScoredFrame& a, const ScoredFrame& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.frame < b.frame;
}

void IndexConfig::validate(std::uint32_t dimension) const {
    if (num_clusters == 0) throw ConfigError("num_clusters must be at least 1");
    if (nprobe == 0 || nprobe > num_clusters) {
        throw ConfigError("nprobe must lie in [1, num_clusters]");
    }
    if (num_subspaces == 0) throw ConfigError("num_subspaces must be at least 1");
    if (dimension != 0 && dimension % num_subspaces != 0) {
        throw ConfigError("num_subspaces (" + std::to_string(num_subspaces) +
                          ") must divide the dimension (" + std::to_string(dimension) + ")");
    }
    if (kmeans_iters == 0) throw ConfigError("kmeans_iters must be at least 1");
}

// ---------------------------------------------------------------------------
// ProductQuantizer

ProductQuantizer::ProductQuantizer(std::uint32_t dimension, std::uint32_t num_subspaces,
                                   std::vector<float> codebooks)
    : dim_(dimension), m_(num_subspaces), codebooks_(std::move(codebooks)) {
    if (m_ == 0 || dim_ % m_ != 0) throw ConfigError("num_subspaces must divide the dimension");
    if (codebooks_.size() != static_cast<std::size_t>(dim_) * kCodesPerSubspace) {
        throw DataError("codebook size does not match m x 256 x D/m");
    }
}

std::span<const float> ProductQuantizer::codeword(std::size_t subspace, std::size_t code) const {
    const std::size_t dsub = subspace_dim();
    return std::span<const float>(codebooks_).subspan((subspace * kCodesPerSubspace + code) * dsub,
                                                      dsub);
}

void ProductQuantizer::encode(std::span<const float> v, std::span<std::uint8_t> code) const {
    const std::size_t dsub = subspace_dim();
    for (std::size_t j = 0; j < m_; ++j) {
        MatrixView book{std::span<const float>(codebooks_).subspan(
                            j * kCodesPerSubspace * dsub, kCodesPerSubspace * dsub),
                        dsub};
        code[j] = static_cast<std::uint8_t>(nearest_centroid(v.subspan(j * dsub, dsub), book));
    }
}

void ProductQuantizer::decode(std::span<const std::uint8_t> code, std::span<float> out) const {
    const std::size_t dsub = subspace_dim();
    for (std::size_t j = 0; j < m_; ++j) {
        auto cw = codeword(j, code[j]);
        std::copy(cw.begin(), cw.end(), out.begin() + static_cast<std::ptrdiff_t>(j * dsub));
    }
}

void ProductQuantizer::distance_table(std::span<const float> v, std::span<float> table) const {
    const std::size_t dsub = subspace_dim();
    for (std::size_t j = 0; j < m_; ++j) {
        auto slice = v.subspan(j * dsub, dsub);
        for (std::size_t c = 0; c < kCodesPerSubspace; ++c) {
            table[j * kCodesPerSubspace + c] = l2_sqr(slice, codeword(j, c));
        }
    }
}

// ---------------------------------------------------------------------------
// Training

KMeansResult train_coarse(MatrixView sample, std::size_t num_clusters, std::size_t iters,
                          std::uint64_t seed) {
    return kmeans(sample, num_clusters, iters, seed);
}

ProductQuantizer train_pq(MatrixView residuals, std::size_t num_subspaces, std::size_t iters,
                          std::uint64_t seed) {
    const std::size_t dim = residuals.dim;
    if (num_subspaces == 0 || dim % num_subspaces != 0) {
        throw ConfigError("num_subspaces (" + std::to_string(num_subspaces) +
                          ") must divide the dimension (" + std::to_string(dim) + ")");
    }
    const std::size_t n = residuals.rows();
    if (n < kCodesPerSubspace) {
        throw ConfigError("PQ training needs at least 256 samples, got " + std::to_string(n));
    }
    const std::size_t dsub = dim / num_subspaces;
    std::vector<float> codebooks;
    codebooks.reserve(dim * kCodesPerSubspace);
    std::vector<float> slice(n * dsub);
    for (std::size_t j = 0; j < num_subspaces; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            auto row = residuals.row(i).subspan(j * dsub, dsub);
            std::copy(row.begin(), row.end(), slice.begin() + static_cast<std::ptrdiff_t>(i * dsub));
        }
        auto km = kmeans(MatrixView{slice, dsub}, kCodesPerSubspace, iters, mix_seed(seed, j));
        codebooks.insert(codebooks.end(), km.centroids.begin(), km.centroids.end());
    }
    return ProductQuantizer(static_cast<std::uint32_t>(dim),
                            static_cast<std::uint32_t>(num_subspaces), std::move(codebooks));
}

// ---------------------------------------------------------------------------
// Index

std::size_t Index::size() const {
    std::size_t n = 0;
    for (const auto& l : lists_) n += l.size();
    return n;
}

void Index::set_nprobe(std::uint32_t nprobe) {
    config_.nprobe = std::clamp<std::uint32_t>(nprobe, 1, config_.num_clusters);
}

Index Index::build(const Dataset& dataset, const IndexConfig& config) {
    const std::uint32_t dim = dataset.dimension();
    config.validate(dim);

    Index index;
    index.config_ = config;
    index.dim_ = dim;
    const std::size_t C = config.num_clusters;
    const std::size_t m = config.num_subspaces;

    // Faces in canonical (video_id, frame_index, face_index) order.
    std::vector<float> vectors;
    std::vector<Entry> entries;
    vectors.reserve(dataset.face_count() * dim);
    entries.reserve(dataset.face_count());
    for (const auto& f : dataset.frames()) {
        if (f.faces.empty()) continue;
        if (index.videos_.empty() || index.videos_.back() != f.video_id) {
            index.videos_.push_back(f.video_id);
        }
        const auto video = static_cast<std::uint32_t>(index.videos_.size() - 1);
        for (const auto& face : f.faces) {
            entries.push_back({video, f.frame_index, face.face_index});
            vectors.insert(vectors.end(), face.embedding.begin(), face.embedding.end());
        }
    }
    const std::size_t n = entries.size();
    index.lists_.resize(C);

    if (n == 0) {
        if (!config.exact_mode) {
            throw DataError("cannot build an index over a dataset with no faces");
        }
        index.centroids_.assign(C * dim, 0.0F);
        if (dim > 0) {
            index.pq_ = ProductQuantizer(dim, static_cast<std::uint32_t>(m),
                                         std::vector<float>(dim * kCodesPerSubspace, 0.0F));
        }
        return index;
    }

    MatrixView all{vectors, dim};
    {
        const auto rows = sample_rows(n, kCoarseSamplesPerCluster * C, mix_seed(config.seed, 1));
        const auto sample = gather_rows(all, rows);
        index.centroids_ =
            train_coarse(MatrixView{sample, dim}, C, config.kmeans_iters, mix_seed(config.seed, 2))
                .centroids;
    }
    MatrixView centroids{index.centroids_, dim};

    std::vector<std::uint32_t> assignment(n);
    std::vector<float> residuals(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto v = all.row(i);
        assignment[i] = nearest_centroid(v, centroids);
        auto c = centroids.row(assignment[i]);
        for (std::size_t d = 0; d < dim; ++d) residuals[i * dim + d] = v[d] - c[d];
    }

    if (n >= kCodesPerSubspace) {
        const auto rows = sample_rows(n, kMaxPqTrainingSamples, mix_seed(config.seed, 3));
        const auto sample = gather_rows(MatrixView{residuals, dim}, rows);
        index.pq_ = train_pq(MatrixView{sample, dim}, m, config.kmeans_iters,
                             mix_seed(config.seed, 4));
    } else if (config.exact_mode) {
        // Too few faces for 256-way codebooks; exact mode never reads codes.
        index.pq_ = ProductQuantizer(dim, static_cast<std::uint32_t>(m),
                                     std::vector<float>(dim * kCodesPerSubspace, 0.0F));
    } else {
        throw ConfigError("PQ training needs at least 256 faces, dataset has " +
                          std::to_string(n));
    }

    std::vector<std::uint8_t> code(m);
    for (std::size_t i = 0; i < n; ++i) {
        auto& list = index.lists_[assignment[i]];
        list.entries.push_back(entries[i]);
        index.pq_.encode(std::span<const float>(residuals).subspan(i * dim, dim), code);
        list.codes.insert(list.codes.end(), code.begin(), code.end());
        if (config.exact_mode) {
            auto v = all.row(i);
            list.raw.insert(list.raw.end(), v.begin(), v.end());
        }
    }
    return index;
}

std::vector<std::uint32_t> Index::probe(std::span<const float> query, std::uint32_t nprobe) const {
    const std::size_t C = config_.num_clusters;
    MatrixView centroids{centroids_, dim_};
    std::vector<std::pair<float, std::uint32_t>> order(C);
    for (std::size_t c = 0; c < C; ++c) {
        order[c] = {l2_sqr(query, centroids.row(c)), static_cast<std::uint32_t>(c)};
    }
    const std::size_t p = std::clamp<std::size_t>(nprobe, 1, C);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(p), order.end());
    std::vector<std::uint32_t> out(p);
    for (std::size_t i = 0; i < p; ++i) out[i] = order[i].second;
    return out;
}

RankedList Index::search(std::span<const float> query, std::size_t top_n) const {
    return search(query, top_n, config_.nprobe);
}

RankedList Index::search(std::span<const float> query, std::size_t top_n,
                         std::uint32_t nprobe) const {
    check_query(query, dim_, top_n);
    const std::size_t m = pq_.num_subspaces();
    MatrixView centroids{centroids_, dim_};

    std::unordered_map<std::uint64_t, float> best;
    std::vector<float> residual(dim_);
    std::vector<float> table(m * kCodesPerSubspace);

    for (const auto c : probe(query, nprobe)) {
        const auto& list = lists_[c];
        if (list.size() == 0) continue;
        if (!config_.exact_mode) {
            auto centroid = centroids.row(c);
            for (std::size_t d = 0; d < dim_; ++d) residual[d] = query[d] - centroid[d];
            pq_.distance_table(residual, table);
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            float d2;
            if (config_.exact_mode) {
                d2 = l2_sqr(query, std::span<const float>(list.raw).subspan(i * dim_, dim_));
            } else {
                d2 = 0.0F;
                const std::uint8_t* code = list.codes.data() + i * m;
                for (std::size_t j = 0; j < m; ++j) d2 += table[j * kCodesPerSubspace + code[j]];
            }
            const auto& e = list.entries[i];
            const std::uint64_t key = (static_cast<std::uint64_t>(e.video) << 32) | e.frame_index;
            auto [it, inserted] = best.try_emplace(key, d2);
            if (!inserted && d2 < it->second) it->second = d2;
        }
    }

    std::vector<ScoredFrame> frames;
    frames.reserve(best.size());
    for (const auto& [key, d2] : best) {
        frames.push_back({FrameRef{videos_[key >> 32], static_cast<std::uint32_t>(key)},
                          score_from_sqr(d2)});
    }
    top_n_sort(frames, top_n);
    return RankedList{std::move(frames), 0, 0};
}

RankedList exact_search(const Dataset& dataset, std::span<const float> query, std::size_t top_n) {
    if (top_n == 0) throw ConfigError("top_n must be at least 1");
    if (dataset.face_count() == 0) return {};
    check_query(query, dataset.dimension(), top_n);

    std::vector<ScoredFrame> frames;
    for (const auto& f : dataset.frames()) {
        if (f.faces.empty()) continue;
        float best = std::numeric_limits<float>::infinity();
        for (const auto& face : f.faces) best = std::min(best, l2_sqr(query, face.embedding));
        frames.push_back({f.ref(), score_from_sqr(best)});
    }
    top_n_sort(frames, top_n);
    return RankedList{std::move(frames), 0, 0};
}

// ---------------------------------------------------------------------------
// Persistence

void Index::save(std::ostream& out) const {
    using namespace detail;
    const std::size_t m = config_.num_subspaces;
    out.write("TINS", 4);
    write_le(out, kIndexFormatVersion);
    write_le(out, dim_);
    write_le(out, config_.num_clusters);
    write_le(out, config_.num_subspaces);
    write_le(out, static_cast<std::uint8_t>(config_.exact_mode ? 1 : 0));
    write_le(out, config_.seed);
    for (float x : centroids_) write_f32(out, x);
    for (float x : pq_.codebooks()) write_f32(out, x);
    for (const auto& list : lists_) {
        write_le(out, static_cast<std::uint64_t>(list.size()));
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& e = list.entries[i];
            write_string(out, videos_[e.video]);
            write_le(out, e.frame_index);
            write_le(out, e.face_index);
            out.write(reinterpret_cast<const char*>(list.codes.data() + i * m),
                      static_cast<std::streamsize>(m));
            if (config_.exact_mode) {
                for (std::size_t d = 0; d < dim_; ++d) write_f32(out, list.raw[i * dim_ + d]);
            }
        }
    }
}

void Index::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    save(out);
}

Index Index::load(std::istream& in) {
    using namespace detail;
    expect_magic(in, "TINS", "index");
    const auto version = read_le<std::uint32_t>(in);
    if (version != kIndexFormatVersion) {
        throw DataError("unsupported index format version " + std::to_string(version));
    }
    Index index;
    index.dim_ = read_le<std::uint32_t>(in);
    index.config_.num_clusters = read_le<std::uint32_t>(in);
    index.config_.num_subspaces = read_le<std::uint32_t>(in);
    index.config_.exact_mode = read_le<std::uint8_t>(in) != 0;
    index.config_.seed = read_le<std::uint64_t>(in);
    index.config_.nprobe = std::min(IndexConfig{}.nprobe, index.config_.num_clusters);
    index.config_.validate(index.dim_);

    const std::size_t C = index.config_.num_clusters;
    const std::size_t m = index.config_.num_subspaces;
    const std::size_t dim = index.dim_;
    index.centroids_.resize(C * dim);
    for (auto& x : index.centroids_) x = read_f32(in);
    std::vector<float> books(dim * kCodesPerSubspace);
    for (auto& x : books) x = read_f32(in);
    if (dim > 0) {
        index.pq_ = ProductQuantizer(index.dim_, index.config_.num_subspaces, std::move(books));
    }

    // Entries are stored with their video id; rebuild the sorted video table.
    struct RawEntry {
        std::string video;
        Entry entry;
    };
    std::vector<std::vector<RawEntry>> raw_entries(C);
    index.lists_.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        const auto count = read_le<std::uint64_t>(in);
        auto& list = index.lists_[c];
        for (std::uint64_t i = 0; i < count; ++i) {
            RawEntry re;
            re.video = read_string(in);
            re.entry.frame_index = read_le<std::uint32_t>(in);
            re.entry.face_index = read_le<std::uint16_t>(in);
            const auto offset = list.codes.size();
            list.codes.resize(offset + m);
            if (!in.read(reinterpret_cast<char*>(list.codes.data() + offset),
                         static_cast<std::streamsize>(m))) {
                throw DataError("truncated file");
            }
            if (index.config_.exact_mode) {
                for (std::size_t d = 0; d < dim; ++d) list.raw.push_back(read_f32(in));
            }
            raw_entries[c].push_back(std::move(re));
        }
    }
    for (const auto& list : raw_entries) {
        for (const auto& re : list) index.videos_.push_back(re.video);
    }
    std::sort(index.videos_.begin(), index.videos_.end());
    index.videos_.erase(std::unique(index.videos_.begin(), index.videos_.end()),
                        index.videos_.end());
    for (std::size_t c = 0; c < C; ++c) {
        for (const auto& re : raw_entries[c]) {
            Entry e = re.entry;
            e.video = static_cast<std::uint32_t>(
                std::lower_bound(index.videos_.begin(), index.videos_.end(), re.video) -
                index.videos_.begin());
            index.lists_[c].entries.push_back(e);
        }
    }
    return index;
}

Index Index::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return load(in);
}

}  // namespace tins
