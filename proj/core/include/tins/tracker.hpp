#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tins/embedding_store.hpp"

namespace tins {

/// Temporal query expansion parameters. Offsets are rate * [-window, window]
/// in sampled (1 fps) frames; `threshold` is an L2 distance between unit
/// embeddings.
struct TrackConfig {
    std::uint32_t window = 0;
    std::uint32_t rate = 1;
    double threshold = 1.0;

    void validate() const;
};

enum class ExampleSource { given, backward, forward };

const char* to_string(ExampleSource source);

/// Reference to one face in the dataset, as written in query files.
struct ExampleRef {
    std::string video_id;
    std::string shot_id;
    std::uint32_t frame_index = 0;
    std::uint16_t face_index = 0;

    bool operator==(const ExampleRef&) const = default;
};

struct QueryExample {
    std::string video_id;
    std::string shot_id;
    std::uint32_t frame_index = 0;
    std::uint16_t face_index = 0;
    Embedding embedding;
    std::int32_t offset = 0;
    ExampleSource source = ExampleSource::given;

    bool operator==(const QueryExample&) const = default;
};

/// A given example plus the expansions tracking accepted for it, at most one
/// per nonzero offset, in ascending offset order.
struct TrackCue {
    QueryExample original;
    std::vector<QueryExample> expansions;

    std::size_t size() const { return expansions.size() + 1; }
    /// Original first, then expansions.
    std::vector<const QueryExample*> examples() const;
};

/// The 2w+1 offsets rate * j for j = -w..w, ascending.
std::vector<std::int32_t> sample_offsets(std::uint32_t window, std::uint32_t rate);

/// Looks up the referenced face. Throws DataError if the frame, face, or
/// shot does not match the dataset.
QueryExample resolve_example(const Dataset& dataset, const ExampleRef& ref);

/// Expands `original` inside its own shot. For each nonzero offset the
/// face closest to the original embedding is taken if it lies within the
/// threshold; out-of-shot, missing, and face-less frames contribute nothing.
TrackCue track(const Dataset& dataset, const QueryExample& original, const TrackConfig& config);

/// One search topic with its given examples.
struct Topic {
    std::string topic;
    std::vector<ExampleRef> examples;

    bool operator==(const Topic&) const = default;
};

/// Query file: one JSON object per line,
/// {"topic": ..., "examples": [{"video", "shot", "frame", "face_k"}, ...]}.
std::vector<Topic> read_queries(std::istream& in);
std::vector<Topic> read_queries(const std::filesystem::path& path);
void write_queries(const std::vector<Topic>& topics, std::ostream& out);
void write_queries(const std::vector<Topic>& topics, const std::filesystem::path& path);

}  // namespace tins
