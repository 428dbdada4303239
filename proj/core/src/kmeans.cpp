#include "tins/kmeans.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "tins/embedding_store.hpp"
#include "tins/error.hpp"

namespace tins {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint32_t nearest_centroid(std::span<const float> v, MatrixView centroids) {
    std::uint32_t best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const float d = l2_sqr(v, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::uint32_t>(c);
        }
    }
    return best;
}

namespace {

std::vector<float> kmeans_plus_plus(MatrixView points, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.dim;
    std::vector<float> centroids;
    centroids.reserve(k * dim);

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    auto first = points.row(pick(rng));
    centroids.insert(centroids.end(), first.begin(), first.end());

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = l2_sqr(points.row(i), first);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) total += d;
        std::size_t chosen = 0;
        if (total > 0.0) {
            double target = unit(rng) * total;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                target -= d2[i];
                if (target < 0.0 && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
            // Guard against landing on a zero-weight tail through rounding.
            while (d2[chosen] == 0.0 && chosen > 0) --chosen;
        } else {
            chosen = pick(rng);
        }
        auto row = points.row(chosen);
        centroids.insert(centroids.end(), row.begin(), row.end());
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], static_cast<double>(l2_sqr(points.row(i), row)));
        }
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans(MatrixView points, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.dim;
    if (k == 0) throw ConfigError("k-means needs at least one cluster");
    if (max_iters == 0) throw ConfigError("k-means needs at least one iteration");
    if (n < k) {
        throw ConfigError("k-means sample of " + std::to_string(n) +
                          " points is smaller than k = " + std::to_string(k));
    }
    for (float x : points.data) {
        if (!std::isfinite(x)) throw DataError("k-means input contains non-finite values");
    }

    std::mt19937_64 rng(seed);
    KMeansResult result;
    result.centroids = kmeans_plus_plus(points, k, rng);
    result.assignment.assign(n, 0);
    std::vector<float> dist(n);

    const auto assign = [&]() -> std::size_t {
        MatrixView cv{result.centroids, dim};
        std::size_t changes = 0;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = nearest_centroid(points.row(i), cv);
            if (c != result.assignment[i]) ++changes;
            result.assignment[i] = c;
            dist[i] = l2_sqr(points.row(i), cv.row(c));
            inertia += dist[i];
        }
        result.inertia.push_back(inertia);
        return changes;
    };

    assign();
    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    for (std::size_t it = 0; it < max_iters; ++it) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = result.assignment[i];
            ++counts[c];
            auto row = points.row(i);
            for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += row[d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) {
                result.centroids[c * dim + d] =
                    static_cast<float>(sums[c * dim + d] / static_cast<double>(counts[c]));
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            MatrixView cv{result.centroids, dim};
            std::size_t far = 0;
            float far_d = -1.0F;
            for (std::size_t i = 0; i < n; ++i) {
                const float d = l2_sqr(points.row(i), cv.row(result.assignment[i]));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            auto row = points.row(far);
            std::copy(row.begin(), row.end(), result.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
            result.assignment[far] = static_cast<std::uint32_t>(c);
        }
        ++result.iterations;
        if (assign() == 0) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace tins
