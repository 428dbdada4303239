#include "tins/tracker.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "tins/error.hpp"

namespace tins {

void TrackConfig::validate() const {
    if (rate < 1) throw ConfigError("tracking rate must be at least 1");
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw ConfigError("tracking threshold must be a positive finite distance");
    }
    const auto reach = static_cast<std::uint64_t>(window) * rate;
    if (reach > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max())) {
        throw ConfigError("window * rate overflows the offset range");
    }
}

const char* to_string(ExampleSource source) {
    switch (source) {
        case ExampleSource::given: return "given";
        case ExampleSource::backward: return "backward";
        case ExampleSource::forward: return "forward";
    }
    return "unknown";
}

std::vector<const QueryExample*> TrackCue::examples() const {
    std::vector<const QueryExample*> out;
    out.reserve(size());
    out.push_back(&original);
    for (const auto& e : expansions) out.push_back(&e);
    return out;
}

std::vector<std::int32_t> sample_offsets(std::uint32_t window, std::uint32_t rate) {
    TrackConfig{window, rate, 1.0}.validate();
    std::vector<std::int32_t> out;
    out.reserve(2 * static_cast<std::size_t>(window) + 1);
    const auto w = static_cast<std::int32_t>(window);
    const auto r = static_cast<std::int32_t>(rate);
    for (std::int32_t j = -w; j <= w; ++j) out.push_back(r * j);
    return out;
}

QueryExample resolve_example(const Dataset& dataset, const ExampleRef& ref) {
    const auto* frame = dataset.find_frame({ref.video_id, ref.frame_index});
    if (frame == nullptr) {
        throw DataError("query example references unknown frame (" + ref.video_id + ", " +
                        std::to_string(ref.frame_index) + ")");
    }
    if (frame->shot_id != ref.shot_id) {
        throw DataError("query example frame (" + ref.video_id + ", " +
                        std::to_string(ref.frame_index) + ") belongs to shot '" +
                        frame->shot_id + "', not '" + ref.shot_id + "'");
    }
    for (const auto& face : frame->faces) {
        if (face.face_index == ref.face_index) {
            return QueryExample{ref.video_id, ref.shot_id, ref.frame_index, ref.face_index,
                                face.embedding, 0, ExampleSource::given};
        }
    }
    throw DataError("query example references unknown face " + std::to_string(ref.face_index) +
                    " in frame (" + ref.video_id + ", " + std::to_string(ref.frame_index) + ")");
}

TrackCue track(const Dataset& dataset, const QueryExample& original, const TrackConfig& config) {
    config.validate();
    // Re-resolving validates that the example exists as described.
    resolve_example(dataset, {original.video_id, original.shot_id, original.frame_index,
                              original.face_index});
    const Shot& shot = dataset.shot(original.shot_id);

    TrackCue cue;
    cue.original = original;
    for (const auto n : sample_offsets(config.window, config.rate)) {
        if (n == 0) continue;
        const std::int64_t target = static_cast<std::int64_t>(original.frame_index) + n;
        if (target < 0 || target > std::numeric_limits<std::uint32_t>::max()) continue;
        const auto target_index = static_cast<std::uint32_t>(target);
        if (!shot.contains(target_index)) continue;
        const auto* frame = dataset.find_frame({original.video_id, target_index});
        if (frame == nullptr || frame->faces.empty()) continue;

        const FaceDetection* best = nullptr;
        float best_d = std::numeric_limits<float>::infinity();
        for (const auto& face : frame->faces) {
            const float d = l2_distance(original.embedding, face.embedding);
            if (d < best_d) {
                best_d = d;
                best = &face;
            }
        }
        if (best == nullptr || static_cast<double>(best_d) > config.threshold) continue;
        cue.expansions.push_back(QueryExample{
            frame->video_id, frame->shot_id, frame->frame_index, best->face_index,
            best->embedding, n, n < 0 ? ExampleSource::backward : ExampleSource::forward});
    }
    return cue;
}

std::vector<Topic> read_queries(std::istream& in) {
    std::vector<Topic> topics;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Topic t;
            t.topic = j.at("topic").get<std::string>();
            for (const auto& je : j.at("examples")) {
                ExampleRef ref;
                ref.video_id = je.at("video").get<std::string>();
                ref.shot_id = je.at("shot").get<std::string>();
                ref.frame_index = je.at("frame").get<std::uint32_t>();
                ref.face_index = je.at("face_k").get<std::uint16_t>();
                t.examples.push_back(std::move(ref));
            }
            topics.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("query file line " + std::to_string(line_no) +
                            ": malformed record: " + e.what());
        }
    }
    return topics;
}

std::vector<Topic> read_queries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open query file " + path.string());
    return read_queries(in);
}

void write_queries(const std::vector<Topic>& topics, std::ostream& out) {
    for (const auto& t : topics) {
        nlohmann::ordered_json j;
        j["topic"] = t.topic;
        auto examples = nlohmann::ordered_json::array();
        for (const auto& e : t.examples) {
            nlohmann::ordered_json je;
            je["video"] = e.video_id;
            je["shot"] = e.shot_id;
            je["frame"] = e.frame_index;
            je["face_k"] = e.face_index;
            examples.push_back(std::move(je));
        }
        j["examples"] = std::move(examples);
        out << j.dump() << '\n';
    }
}

void write_queries(const std::vector<Topic>& topics, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_queries(topics, out);
}

}  // namespace tins
