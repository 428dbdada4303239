#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tins/embedding_store.hpp"
#include "tins/fusion.hpp"

namespace tins {

inline constexpr std::size_t kDefaultCutoff = 300;

enum class GroundTruthProvenance { truth, pooled };

struct GroundTruth {
    std::map<std::string, std::set<std::string>, std::less<>> relevant;
    GroundTruthProvenance provenance = GroundTruthProvenance::truth;

    const std::set<std::string>* find(std::string_view topic) const;
    std::size_t total() const;
    bool operator==(const GroundTruth&) const = default;
};

/// Ground-truth file: one `<topic> <shot_id>` pair per line.
GroundTruth read_ground_truth(std::istream& in);
GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const GroundTruth& gt, std::ostream& out);
void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

/// Non-interpolated AP at a rank cutoff, normalized by |relevant|.
/// Throws DataError if `relevant` is empty.
double average_precision(std::span<const std::string> ranked_shots,
                         const std::set<std::string>& relevant, std::size_t cutoff);
double average_precision(const ShotRanking& ranking, const std::set<std::string>& relevant,
                         std::size_t cutoff);

/// Arithmetic mean. Throws DataError on an empty input.
double mean_ap(std::span<const double> aps);

/// Configuration a report was produced under; unset fields are unknown.
struct RunDescriptor {
    std::optional<std::uint32_t> rate;
    std::optional<std::uint32_t> window;
    std::optional<std::uint32_t> examples;
    std::optional<std::string> voting;
    std::optional<std::uint32_t> nprobe;

    bool operator==(const RunDescriptor&) const = default;
};

struct TopicAP {
    std::string topic;
    double ap = 0.0;

    bool operator==(const TopicAP&) const = default;
};

struct EvalReport {
    std::vector<TopicAP> topics;  // ground-truth topic order
    double map = 0.0;
    RunDescriptor descriptor;
    std::size_t cutoff = kDefaultCutoff;
    std::vector<std::string> warnings;
};

/// Scores every ground-truth topic with a non-empty relevant set; topics
/// missing from the run score 0. Topics without judgments are excluded
/// and reported in `warnings`.
EvalReport evaluate(const Run& run, const GroundTruth& gt, std::size_t cutoff = kDefaultCutoff,
                    RunDescriptor descriptor = {});

/// JSON lines: one {"topic","ap"} record per topic, then a summary record.
void write_report(const EvalReport& report, std::ostream& out);

/// Union over runs of the shots ranked within `depth` that the oracle
/// judges relevant.
GroundTruth pooled_ground_truth(std::span<const Run> runs, const GroundTruth& oracle,
                                const Dataset& dataset, std::size_t depth = kDefaultCutoff);

struct DeltaReport {
    std::vector<TopicAP> per_topic;  // b - a
    double delta_map = 0.0;          // b.map - a.map
    double relative = 0.0;           // delta_map / a.map (0 when a.map == 0)
};

/// Signed differences b - a. Throws DataError if the topic sets differ.
DeltaReport delta_report(const EvalReport& a, const EvalReport& b);

}  // namespace tins
