#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tins/embedding_store.hpp"
#include "tins/pq_index.hpp"

namespace tins {

/// Per-frame scores of one given example after max-pooling its cue.
using FrameScores = std::map<FrameRef, double>;

/// Per-shot scores of one example (or one list, under VoSc_2).
using ShotScores = std::map<std::string, double, std::less<>>;

struct ShotScore {
    std::string shot_id;
    double score = 0.0;

    bool operator==(const ShotScore&) const = default;
};

/// Shots by descending score, ties by ascending shot_id.
struct ShotRanking {
    std::vector<ShotScore> entries;

    std::size_t size() const { return entries.size(); }
    void truncate(std::size_t n) {
        if (entries.size() > n) entries.resize(n);
    }
    bool operator==(const ShotRanking&) const = default;
};

/// Ranked lists produced for one given example: the original's list first,
/// then one per accepted expansion.
struct CueResults {
    std::vector<RankedList> lists;
};

enum class VotingScheme { vosc1, vosc2 };

const char* to_string(VotingScheme scheme);
VotingScheme parse_voting_scheme(std::string_view name);

/// Elementwise max over the lists; a frame absent from a list is skipped.
FrameScores merge_cue(std::span<const RankedList> lists);

FrameScores to_frame_scores(const RankedList& list);

/// Maps frames to their shots, keeping the best frame score per shot.
ShotScores frames_to_shots(const Dataset& dataset, const FrameScores& frame_scores);

/// Sample mean over the K maps; a map missing a shot contributes 0.
/// Contributions are summed in sorted order so the result does not depend
/// on the order of the inputs.
ShotRanking combine_examples(std::span<const ShotScores> per_example);

/// Max-pool each cue, then average the K given examples.
ShotRanking vosc1(const Dataset& dataset, std::span<const CueResults> cues);

/// Average every list, given and tracked alike.
ShotRanking vosc2(const Dataset& dataset, std::span<const CueResults> cues);

ShotRanking fuse(VotingScheme scheme, const Dataset& dataset, std::span<const CueResults> cues);

// ---------------------------------------------------------------------------
// TREC run files: `<topic> Q0 <shot_id> <rank> <score> <run_tag>`

struct TopicRanking {
    std::string topic;
    ShotRanking ranking;

    bool operator==(const TopicRanking&) const = default;
};

struct Run {
    std::string tag;
    std::vector<TopicRanking> topics;

    const ShotRanking* find(std::string_view topic) const;
    bool operator==(const Run&) const = default;
};

void write_run(const Run& run, std::ostream& out);
void write_run(const Run& run, const std::filesystem::path& path);

/// Parses a run file. Entries are ordered by their rank column; topics keep
/// the order of first appearance.
Run read_run(std::istream& in);
Run read_run(const std::filesystem::path& path);

}  // namespace tins
