#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tins/embedding_store.hpp"
#include "tins/evaluation.hpp"
#include "tins/fusion.hpp"
#include "tins/pq_index.hpp"
#include "tins/tracker.hpp"

namespace tins {

struct PipelineConfig {
    TrackConfig track;
    VotingScheme voting = VotingScheme::vosc1;
    std::uint32_t examples = 1;           // given examples used per topic (K)
    std::size_t top_n = kDefaultCutoff;   // shots kept per topic
    std::size_t search_depth = kDefaultCutoff;  // frames returned per search

    void validate() const;
};

/// Memoizes index searches by query face. Searches are deterministic, so a
/// cached list is identical to a fresh one.
class SearchCache {
public:
    explicit SearchCache(const Index& index) : index_(&index) {}

    const RankedList& search(const QueryExample& example, std::size_t depth);

private:
    using Key = std::tuple<std::string, std::uint32_t, std::uint16_t, std::size_t>;
    const Index* index_;
    std::map<Key, RankedList> lists_;
};

/// Tracks the first K given examples, searches every resulting example,
/// and fuses the lists into a shot ranking truncated to `top_n`.
ShotRanking run_topic(const Dataset& dataset, SearchCache& cache, const Topic& topic,
                      const PipelineConfig& config);

Run run_topics(const Dataset& dataset, const Index& index, std::span<const Topic> topics,
               const PipelineConfig& config, std::string tag);
Run run_topics(const Dataset& dataset, SearchCache& cache, std::span<const Topic> topics,
               const PipelineConfig& config, std::string tag);

/// Grid of tracking/voting configurations.
struct SweepSpec {
    std::vector<std::uint32_t> windows{0, 1, 2, 3, 4, 5};
    std::vector<std::uint32_t> rates{1, 2, 5, 20};
    std::vector<std::uint32_t> example_counts{1, 2, 4};
    std::vector<VotingScheme> voting{VotingScheme::vosc1, VotingScheme::vosc2};

    void validate() const;
    std::size_t cells() const {
        return windows.size() * rates.size() * example_counts.size() * voting.size();
    }
};

struct SweepRow {
    std::uint32_t window = 0;
    std::uint32_t rate = 1;
    std::uint32_t examples = 1;
    VotingScheme voting = VotingScheme::vosc1;
    double map = 0.0;
    Run run;
};

/// Evaluates every grid cell, in (window, rate, examples, voting) order,
/// against `gt`. `base` supplies threshold, top_n and search depth.
std::vector<SweepRow> run_sweep(const Dataset& dataset, const Index& index,
                                std::span<const Topic> topics, const GroundTruth& gt,
                                const SweepSpec& spec, const PipelineConfig& base);

/// CSV with header `w,r,k,voting,map`; mAP printed with 6 decimals.
void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);

std::string run_tag(const PipelineConfig& config);

}  // namespace tins
