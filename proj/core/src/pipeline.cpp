#include "tins/pipeline.hpp"

#include <cstdio>
#include <ostream>

#include "tins/error.hpp"

namespace tins {

void PipelineConfig::validate() const {
    track.validate();
    if (examples == 0) throw ConfigError("at least one given example is required");
    if (top_n == 0) throw ConfigError("top_n must be at least 1");
    if (search_depth == 0) throw ConfigError("search depth must be at least 1");
}

const RankedList& SearchCache::search(const QueryExample& example, std::size_t depth) {
    Key key{example.video_id, example.frame_index, example.face_index, depth};
    auto it = lists_.find(key);
    if (it == lists_.end()) {
        it = lists_.emplace(std::move(key), index_->search(example.embedding, depth)).first;
    }
    return it->second;
}

ShotRanking run_topic(const Dataset& dataset, SearchCache& cache, const Topic& topic,
                      const PipelineConfig& config) {
    if (config.examples > topic.examples.size()) {
        throw ConfigError("topic " + topic.topic + " has " +
                          std::to_string(topic.examples.size()) + " given examples, " +
                          std::to_string(config.examples) + " requested");
    }
    std::vector<CueResults> cues;
    cues.reserve(config.examples);
    for (std::uint32_t k = 0; k < config.examples; ++k) {
        const auto original = resolve_example(dataset, topic.examples[k]);
        const auto cue = track(dataset, original, config.track);
        CueResults results;
        for (const auto* example : cue.examples()) {
            RankedList list = cache.search(*example, config.search_depth);
            list.example = k;
            list.offset = example->offset;
            results.lists.push_back(std::move(list));
        }
        cues.push_back(std::move(results));
    }
    auto ranking = fuse(config.voting, dataset, cues);
    ranking.truncate(config.top_n);
    return ranking;
}

Run run_topics(const Dataset& dataset, SearchCache& cache, std::span<const Topic> topics,
               const PipelineConfig& config, std::string tag) {
    config.validate();
    Run run;
    run.tag = std::move(tag);
    for (const auto& topic : topics) {
        run.topics.push_back({topic.topic, run_topic(dataset, cache, topic, config)});
    }
    return run;
}

Run run_topics(const Dataset& dataset, const Index& index, std::span<const Topic> topics,
               const PipelineConfig& config, std::string tag) {
    SearchCache cache(index);
    return run_topics(dataset, cache, topics, config, std::move(tag));
}

void SweepSpec::validate() const {
    if (windows.empty() || rates.empty() || example_counts.empty() || voting.empty()) {
        throw ConfigError("sweep lists must be non-empty");
    }
    for (auto r : rates) {
        if (r < 1) throw ConfigError("rates must be at least 1");
    }
    for (auto k : example_counts) {
        if (k < 1) throw ConfigError("example counts must be at least 1");
    }
}

std::string run_tag(const PipelineConfig& config) {
    return "tins_w" + std::to_string(config.track.window) + "_r" +
           std::to_string(config.track.rate) + "_k" + std::to_string(config.examples) + "_" +
           to_string(config.voting);
}

std::vector<SweepRow> run_sweep(const Dataset& dataset, const Index& index,
                                std::span<const Topic> topics, const GroundTruth& gt,
                                const SweepSpec& spec, const PipelineConfig& base) {
    spec.validate();
    SearchCache cache(index);
    std::vector<SweepRow> rows;
    rows.reserve(spec.cells());
    for (auto w : spec.windows) {
        for (auto r : spec.rates) {
            for (auto k : spec.example_counts) {
                for (auto voting : spec.voting) {
                    PipelineConfig cfg = base;
                    cfg.track.window = w;
                    cfg.track.rate = r;
                    cfg.examples = k;
                    cfg.voting = voting;
                    SweepRow row{w, r, k, voting, 0.0, {}};
                    row.run = run_topics(dataset, cache, topics, cfg, run_tag(cfg));
                    row.map = evaluate(row.run, gt, cfg.top_n).map;
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
    out << "w,r,k,voting,map\n";
    char map[32];
    for (const auto& row : rows) {
        std::snprintf(map, sizeof map, "%.6f", row.map);
        out << row.window << ',' << row.rate << ',' << row.examples << ','
            << to_string(row.voting) << ',' << map << '\n';
    }
}

}  // namespace tins
