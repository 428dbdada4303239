#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tins/embedding_store.hpp"
#include "tins/evaluation.hpp"
#include "tins/tracker.hpp"

namespace tins {

/// Synthetic video corpus parameters. Noise scales are per-component
/// standard deviations, applied before the embedding is renormalized.
struct SynthConfig {
    std::uint64_t seed = 42;
    std::uint32_t dimension = 32;
    std::uint32_t num_identities = 20;
    std::uint32_t num_videos = 8;
    std::uint32_t shots_per_video = 40;
    std::uint32_t frames_per_shot_min = 8;
    std::uint32_t frames_per_shot_max = 30;
    std::uint32_t faces_per_frame_min = 0;
    std::uint32_t faces_per_frame_max = 3;
    double identity_noise = 0.15;
    double drift_per_frame = 0.5;
    // Dimension of each identity's drift subspace; 0 drifts in all D axes.
    std::uint32_t pose_dims = 3;
    double distractor_rate = 0.5;  // chance a cast member is never queried
    std::uint32_t topics = 10;
    std::uint32_t examples_per_topic = 4;

    void validate() const;
};

struct SynthOutput {
    Dataset dataset;
    std::vector<Topic> queries;
    GroundTruth truth;
    std::map<std::string, std::string> topic_identity;  // topic -> identity label
};

/// Deterministic corpus: identity centers on the unit sphere, a cast per
/// shot, per-face Gaussian noise plus a per-(shot, identity) random walk
/// that restarts at every shot. The walk moves inside a low-dimensional
/// subspace owned by the identity (a stand-in for pose and lighting), so
/// different shots of one person drift along the same directions. Each topic's given examples come from
/// distinct videos. Every random draw comes from a stream keyed by
/// (seed, entity), so output does not depend on generation order.
SynthOutput generate(const SynthConfig& config);

/// Writes dataset.jsonl, queries.jsonl and groundtruth.txt into `dir`
/// (created if missing). Returns the three paths in that order.
std::vector<std::filesystem::path> write_synth_output(const SynthOutput& out,
                                                      const std::filesystem::path& dir);

}  // namespace tins
