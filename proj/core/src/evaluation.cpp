#include "tins/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tins/error.hpp"

namespace tins {

const std::set<std::string>* GroundTruth::find(std::string_view topic) const {
    auto it = relevant.find(topic);
    return it == relevant.end() ? nullptr : &it->second;
}

std::size_t GroundTruth::total() const {
    std::size_t n = 0;
    for (const auto& [topic, shots] : relevant) n += shots.size();
    return n;
}

GroundTruth read_ground_truth(std::istream& in) {
    GroundTruth gt;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        std::string topic, shot, extra;
        if (!(fields >> topic >> shot) || (fields >> extra)) {
            throw DataError("ground-truth line " + std::to_string(line_no) +
                            ": expected '<topic> <shot_id>'");
        }
        gt.relevant[topic].insert(shot);
    }
    return gt;
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ground-truth file " + path.string());
    return read_ground_truth(in);
}

void write_ground_truth(const GroundTruth& gt, std::ostream& out) {
    for (const auto& [topic, shots] : gt.relevant) {
        for (const auto& shot : shots) out << topic << ' ' << shot << '\n';
    }
}

void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_ground_truth(gt, out);
}

double average_precision(std::span<const std::string> ranked_shots,
                         const std::set<std::string>& relevant, std::size_t cutoff) {
    if (relevant.empty()) throw DataError("average precision is undefined without relevant shots");
    if (cutoff == 0) throw ConfigError("cutoff must be at least 1");
    std::set<std::string_view> seen;
    std::size_t hits = 0;
    double sum = 0.0;
    const std::size_t n = std::min(cutoff, ranked_shots.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& shot = ranked_shots[i];
        if (!seen.insert(shot).second) continue;  // a duplicate never counts twice
        if (relevant.count(shot) != 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

double average_precision(const ShotRanking& ranking, const std::set<std::string>& relevant,
                         std::size_t cutoff) {
    std::vector<std::string> shots;
    shots.reserve(std::min(cutoff, ranking.entries.size()));
    for (const auto& e : ranking.entries) {
        if (shots.size() == cutoff) break;
        shots.push_back(e.shot_id);
    }
    return average_precision(shots, relevant, cutoff);
}

double mean_ap(std::span<const double> aps) {
    if (aps.empty()) throw DataError("mAP is undefined over zero topics");
    double sum = 0.0;
    for (double ap : aps) sum += ap;
    return sum / static_cast<double>(aps.size());
}

EvalReport evaluate(const Run& run, const GroundTruth& gt, std::size_t cutoff,
                    RunDescriptor descriptor) {
    EvalReport report;
    report.cutoff = cutoff;
    report.descriptor = std::move(descriptor);
    std::vector<double> aps;
    static const ShotRanking kEmpty;
    for (const auto& [topic, relevant] : gt.relevant) {
        if (relevant.empty()) {
            report.warnings.push_back("topic " + topic + " has no relevant shots; excluded");
            continue;
        }
        const auto* ranking = run.find(topic);
        const double ap = average_precision(ranking ? *ranking : kEmpty, relevant, cutoff);
        report.topics.push_back({topic, ap});
        aps.push_back(ap);
    }
    for (const auto& t : run.topics) {
        if (gt.find(t.topic) == nullptr) {
            report.warnings.push_back("topic " + t.topic + " has no judgments; excluded");
        }
    }
    report.map = mean_ap(aps);
    return report;
}

void write_report(const EvalReport& report, std::ostream& out) {
    for (const auto& t : report.topics) {
        nlohmann::ordered_json j;
        j["topic"] = t.topic;
        j["ap"] = t.ap;
        out << j.dump() << '\n';
    }
    const auto opt = [](const auto& v) -> nlohmann::ordered_json {
        if (v) return *v;
        return nullptr;
    };
    nlohmann::ordered_json s;
    s["map"] = report.map;
    s["r"] = opt(report.descriptor.rate);
    s["w"] = opt(report.descriptor.window);
    s["k"] = opt(report.descriptor.examples);
    s["voting"] = opt(report.descriptor.voting);
    s["nprobe"] = opt(report.descriptor.nprobe);
    s["cutoff"] = report.cutoff;
    s["topics"] = report.topics.size();
    out << s.dump() << '\n';
}

GroundTruth pooled_ground_truth(std::span<const Run> runs, const GroundTruth& oracle,
                                const Dataset& dataset, std::size_t depth) {
    GroundTruth pooled;
    pooled.provenance = GroundTruthProvenance::pooled;
    for (const auto& run : runs) {
        for (const auto& t : run.topics) {
            const auto* relevant = oracle.find(t.topic);
            if (relevant == nullptr) {
                throw DataError("run '" + run.tag + "' has topic " + t.topic +
                                " unknown to the oracle");
            }
            const std::size_t n = std::min(depth, t.ranking.entries.size());
            for (std::size_t i = 0; i < n; ++i) {
                const auto& shot = t.ranking.entries[i].shot_id;
                if (dataset.find_shot(shot) == nullptr) {
                    throw DataError("run '" + run.tag + "' references unknown shot '" + shot + "'");
                }
                if (relevant->count(shot) != 0) pooled.relevant[t.topic].insert(shot);
            }
        }
    }
    return pooled;
}

DeltaReport delta_report(const EvalReport& a, const EvalReport& b) {
    if (a.topics.size() != b.topics.size()) {
        throw DataError("reports cover different topic sets");
    }
    DeltaReport d;
    for (std::size_t i = 0; i < a.topics.size(); ++i) {
        if (a.topics[i].topic != b.topics[i].topic) {
            throw DataError("reports cover different topic sets");
        }
        d.per_topic.push_back({a.topics[i].topic, b.topics[i].ap - a.topics[i].ap});
    }
    d.delta_map = b.map - a.map;
    d.relative = a.map == 0.0 ? 0.0 : d.delta_map / a.map;
    return d;
}

}  // namespace tins
