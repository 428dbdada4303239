#include "tins/fusion.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tins/error.hpp"

namespace tins {

const char* to_string(VotingScheme scheme) {
    return scheme == VotingScheme::vosc1 ? "vosc1" : "vosc2";
}

VotingScheme parse_voting_scheme(std::string_view name) {
    if (name == "vosc1") return VotingScheme::vosc1;
    if (name == "vosc2") return VotingScheme::vosc2;
    throw ConfigError("unknown voting scheme '" + std::string(name) + "' (expected vosc1|vosc2)");
}

FrameScores to_frame_scores(const RankedList& list) {
    FrameScores out;
    for (const auto& e : list.entries) {
        auto [it, inserted] = out.emplace(e.frame, e.score);
        if (!inserted) it->second = std::max(it->second, e.score);
    }
    return out;
}

FrameScores merge_cue(std::span<const RankedList> lists) {
    if (lists.empty()) throw ConfigError("merge_cue needs at least one ranked list");
    FrameScores out;
    for (const auto& list : lists) {
        for (const auto& e : list.entries) {
            auto [it, inserted] = out.emplace(e.frame, e.score);
            if (!inserted) it->second = std::max(it->second, e.score);
        }
    }
    return out;
}

ShotScores frames_to_shots(const Dataset& dataset, const FrameScores& frame_scores) {
    ShotScores out;
    for (const auto& [frame, score] : frame_scores) {
        const auto& shot = dataset.shot_of(frame);
        auto it = out.find(shot);
        if (it == out.end()) {
            out.emplace(shot, score);
        } else {
            it->second = std::max(it->second, score);
        }
    }
    return out;
}

ShotRanking combine_examples(std::span<const ShotScores> per_example) {
    if (per_example.empty()) throw ConfigError("combine_examples needs at least one input");
    const auto k = static_cast<double>(per_example.size());

    std::map<std::string_view, std::vector<double>> contributions;
    for (const auto& scores : per_example) {
        for (const auto& [shot, s] : scores) contributions[shot].push_back(s);
    }
    ShotRanking ranking;
    ranking.entries.reserve(contributions.size());
    for (auto& [shot, values] : contributions) {
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        ranking.entries.push_back({std::string(shot), sum / k});
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(),
              [](const ShotScore& a, const ShotScore& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.shot_id < b.shot_id;
              });
    return ranking;
}

ShotRanking vosc1(const Dataset& dataset, std::span<const CueResults> cues) {
    if (cues.empty()) throw ConfigError("voting needs at least one given example");
    std::vector<ShotScores> per_example;
    per_example.reserve(cues.size());
    for (const auto& cue : cues) {
        per_example.push_back(frames_to_shots(dataset, merge_cue(cue.lists)));
    }
    return combine_examples(per_example);
}

ShotRanking vosc2(const Dataset& dataset, std::span<const CueResults> cues) {
    std::vector<ShotScores> per_list;
    for (const auto& cue : cues) {
        for (const auto& list : cue.lists) {
            per_list.push_back(frames_to_shots(dataset, to_frame_scores(list)));
        }
    }
    if (per_list.empty()) throw ConfigError("voting needs at least one ranked list");
    return combine_examples(per_list);
}

ShotRanking fuse(VotingScheme scheme, const Dataset& dataset, std::span<const CueResults> cues) {
    return scheme == VotingScheme::vosc1 ? vosc1(dataset, cues) : vosc2(dataset, cues);
}

// ---------------------------------------------------------------------------
// Run files

const ShotRanking* Run::find(std::string_view topic) const {
    for (const auto& t : topics) {
        if (t.topic == topic) return &t.ranking;
    }
    return nullptr;
}

void write_run(const Run& run, std::ostream& out) {
    char score[64];
    for (const auto& t : run.topics) {
        std::size_t rank = 1;
        for (const auto& e : t.ranking.entries) {
            std::snprintf(score, sizeof score, "%.6f", e.score);
            out << t.topic << " Q0 " << e.shot_id << ' ' << rank++ << ' ' << score << ' '
                << run.tag << '\n';
        }
    }
}

void write_run(const Run& run, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_run(run, out);
}

Run read_run(std::istream& in) {
    struct Line {
        std::size_t rank;
        ShotScore entry;
    };
    std::vector<std::pair<std::string, std::vector<Line>>> topics;
    Run run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        std::string topic, q0, shot, tag;
        long long rank = 0;
        double score = 0.0;
        if (!(fields >> topic >> q0 >> shot >> rank >> score >> tag) || q0 != "Q0" || rank < 1) {
            throw DataError("run file line " + std::to_string(line_no) +
                            ": expected '<topic> Q0 <shot_id> <rank> <score> <run_tag>'");
        }
        if (run.tag.empty()) run.tag = tag;
        auto it = std::find_if(topics.begin(), topics.end(),
                               [&](const auto& t) { return t.first == topic; });
        if (it == topics.end()) {
            topics.emplace_back(topic, std::vector<Line>{});
            it = std::prev(topics.end());
        }
        it->second.push_back({static_cast<std::size_t>(rank), {shot, score}});
    }
    for (auto& [topic, lines] : topics) {
        std::stable_sort(lines.begin(), lines.end(),
                         [](const Line& a, const Line& b) { return a.rank < b.rank; });
        TopicRanking tr{topic, {}};
        for (auto& l : lines) tr.ranking.entries.push_back(std::move(l.entry));
        run.topics.push_back(std::move(tr));
    }
    return run;
}

Run read_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run file " + path.string());
    return read_run(in);
}

}  // namespace tins
