#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tins {

/// Row-major flat matrix view: `rows() x dim` floats.
struct MatrixView {
    std::span<const float> data;
    std::size_t dim = 0;

    std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const float> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

struct KMeansResult {
    std::vector<float> centroids;         // k x dim, row-major
    std::vector<std::uint32_t> assignment;  // per input point
    std::vector<double> inertia;          // after each assignment step
    std::size_t iterations = 0;           // Lloyd updates performed
    bool converged = false;
};

/// Lloyd's k-means with k-means++ seeding.
///
/// Runs at most `max_iters` update steps and stops early once an assignment
/// step changes nothing. A cluster left empty by an update is re-seeded at
/// the point farthest from its own centroid. The returned assignment is
/// consistent with the returned centroids.
KMeansResult kmeans(MatrixView points, std::size_t k, std::size_t max_iters, std::uint64_t seed);

/// Index of the nearest row of `centroids` (ties go to the lower index).
std::uint32_t nearest_centroid(std::span<const float> v, MatrixView centroids);

/// Deterministic 64-bit seed mixing (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tins
