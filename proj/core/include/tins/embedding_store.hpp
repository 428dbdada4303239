#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tins {

using Embedding = std::vector<float>;

/// Squared Euclidean distance. Every exact distance in the library goes
/// through this function so that independent code paths agree bit for bit.
inline float l2_sqr(std::span<const float> a, std::span<const float> b);

inline float l2_distance(std::span<const float> a, std::span<const float> b);

/// Scales `v` to unit L2 norm in place. Zero vectors are rejected.
void normalize(std::span<float> v);

struct FrameRef {
    std::string video_id;
    std::uint32_t frame_index = 0;

    auto operator<=>(const FrameRef&) const = default;
    bool operator==(const FrameRef&) const = default;
};

struct FaceDetection {
    std::uint16_t face_index = 0;
    Embedding embedding;
    std::optional<std::string> identity;  // ground truth only

    bool operator==(const FaceDetection&) const = default;
};

struct FrameRecord {
    std::string video_id;
    std::string shot_id;
    std::uint32_t frame_index = 0;
    std::vector<FaceDetection> faces;

    FrameRef ref() const { return {video_id, frame_index}; }
    bool operator==(const FrameRecord&) const = default;
};

struct Shot {
    std::string shot_id;
    std::string video_id;
    std::uint32_t start = 0;  // inclusive
    std::uint32_t end = 0;    // inclusive

    bool contains(std::uint32_t frame_index) const {
        return frame_index >= start && frame_index <= end;
    }
    bool operator==(const Shot&) const = default;
};

/// Immutable video -> shot -> frame -> face hierarchy.
///
/// Frames are kept sorted by (video_id, frame_index) and shots by shot_id,
/// so iteration order is canonical regardless of how the data arrived.
class Dataset {
public:
    Dataset() = default;

    /// Validates and canonicalizes. Shot frame ranges are derived as the
    /// min/max frame_index observed per shot_id. Embeddings are taken as is;
    /// `ingest` is the entry point that normalizes.
    Dataset(std::uint32_t dimension, std::vector<FrameRecord> frames);

    std::uint32_t dimension() const { return dimension_; }
    const std::vector<FrameRecord>& frames() const { return frames_; }
    const std::vector<Shot>& shots() const { return shots_; }
    std::size_t face_count() const { return face_count_; }
    bool empty() const { return frames_.empty(); }

    const FrameRecord* find_frame(const FrameRef& ref) const;
    const FrameRecord& frame(const FrameRef& ref) const;  // throws DataError
    const Shot* find_shot(const std::string& shot_id) const;
    const Shot& shot(const std::string& shot_id) const;  // throws DataError

    /// The shot whose frame range contains `ref`. Throws DataError for
    /// frames not in the dataset.
    const std::string& shot_of(const FrameRef& ref) const;

    bool operator==(const Dataset&) const = default;

private:
    std::uint32_t dimension_ = 0;
    std::vector<FrameRecord> frames_;
    std::vector<Shot> shots_;
    // Per video, indices into shots_ ordered by frame range start.
    std::map<std::string, std::vector<std::size_t>, std::less<>> shots_by_video_;
    std::size_t face_count_ = 0;
};

/// Parses the line-oriented dataset format (one JSON object per line) and
/// L2-normalizes every embedding. `expected_dimension` of 0 infers D from
/// the first face.
Dataset ingest(std::istream& in, std::uint32_t expected_dimension = 0);
Dataset ingest(const std::filesystem::path& path, std::uint32_t expected_dimension = 0);

/// Writes the line-oriented text format read by `ingest`.
void write_dataset_text(const Dataset& dataset, std::ostream& out);
void write_dataset_text(const Dataset& dataset, const std::filesystem::path& path);

/// Binary persistence ("TDSB", little-endian, versioned). Embeddings
/// round-trip bit-exactly.
void save(const Dataset& dataset, std::ostream& out);
void save(const Dataset& dataset, const std::filesystem::path& path);
Dataset load(std::istream& in);
Dataset load(const std::filesystem::path& path);

inline float l2_sqr(std::span<const float> a, std::span<const float> b) {
    float sum = 0.0F;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const float d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

inline float l2_distance(std::span<const float> a, std::span<const float> b) {
    return std::sqrt(l2_sqr(a, b));
}

}  // namespace tins
