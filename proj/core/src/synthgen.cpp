#include "tins/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "tins/error.hpp"
#include "tins/kmeans.hpp"

namespace tins {

namespace {

enum Stream : std::uint64_t {
    kIdentityStream = 1,
    kShotStream = 2,
    kWalkStream = 3,
    kFaceNoiseStream = 4,
    kFrameStream = 5,
    kTopicStream = 6,
};

std::mt19937_64 stream(std::uint64_t seed, Stream kind, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
    std::uint64_t s = mix_seed(seed, kind);
    s = mix_seed(s, a);
    s = mix_seed(s, b);
    s = mix_seed(s, c);
    return std::mt19937_64(s);
}

std::string label(const char* prefix, std::uint32_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*u", prefix, width, i);
    return buf;
}

std::string shot_label(std::uint32_t video, std::uint32_t shot) {
    return label("v", video, 2) + label("_s", shot, 3);
}

struct ShotPlan {
    std::uint32_t start = 0;
    std::uint32_t frames = 0;
    std::vector<std::uint32_t> cast;  // identity ids
    // Forced appearance of a queried identity (given example frame).
    std::optional<std::uint32_t> anchor_identity;
    std::uint32_t anchor_frame = 0;  // local frame within the shot
};

std::vector<std::uint32_t> draw_cast(const SynthConfig& cfg, std::mt19937_64& rng) {
    std::vector<std::uint32_t> queried(cfg.topics);
    std::iota(queried.begin(), queried.end(), 0U);
    std::vector<std::uint32_t> distractors(cfg.num_identities - cfg.topics);
    std::iota(distractors.begin(), distractors.end(), cfg.topics);

    std::bernoulli_distribution is_distractor(cfg.distractor_rate);
    std::vector<std::uint32_t> cast;
    for (std::uint32_t slot = 0; slot < cfg.faces_per_frame_max; ++slot) {
        const bool want_distractor = is_distractor(rng);
        auto* pool = want_distractor ? &distractors : &queried;
        if (pool->empty()) pool = want_distractor ? &queried : &distractors;
        if (pool->empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, pool->size() - 1);
        const auto i = pick(rng);
        cast.push_back((*pool)[i]);
        pool->erase(pool->begin() + static_cast<std::ptrdiff_t>(i));
    }
    return cast;
}

std::vector<float> random_unit(std::mt19937_64& rng, std::uint32_t dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(g(rng));
    normalize(v);
    return v;
}

}  // namespace

void SynthConfig::validate() const {
    if (dimension == 0) throw ConfigError("dimension must be positive");
    if (num_identities == 0) throw ConfigError("need at least one identity");
    if (topics == 0) throw ConfigError("need at least one topic");
    if (topics > num_identities) {
        throw ConfigError("topics (" + std::to_string(topics) + ") exceed identities (" +
                          std::to_string(num_identities) + ")");
    }
    if (num_videos == 0 || shots_per_video == 0) {
        throw ConfigError("need at least one video and one shot per video");
    }
    if (frames_per_shot_min == 0 || frames_per_shot_min > frames_per_shot_max) {
        throw ConfigError("frames per shot range must be non-empty and start at 1 or more");
    }
    if (faces_per_frame_min > faces_per_frame_max || faces_per_frame_max == 0) {
        throw ConfigError("faces per frame range must be non-empty with a positive maximum");
    }
    if (faces_per_frame_max > 65535) throw ConfigError("too many faces per frame");
    if (!(identity_noise >= 0.0) || !(drift_per_frame >= 0.0)) {
        throw ConfigError("noise scales must be non-negative");
    }
    if (!(distractor_rate >= 0.0 && distractor_rate <= 1.0)) {
        throw ConfigError("distractor rate must lie in [0, 1]");
    }
    if (pose_dims > dimension) throw ConfigError("pose_dims may not exceed the dimension");
    if (examples_per_topic == 0) throw ConfigError("need at least one example per topic");
    if (examples_per_topic > num_videos) {
        throw ConfigError("examples per topic (" + std::to_string(examples_per_topic) +
                          ") exceed the number of videos (" + std::to_string(num_videos) +
                          "); examples must come from distinct videos");
    }
    if (topics > shots_per_video) {
        throw ConfigError("topics may not exceed shots per video (one anchor shot per topic)");
    }
}

SynthOutput generate(const SynthConfig& cfg) {
    cfg.validate();
    const std::uint32_t dim = cfg.dimension;

    // Identity centers, and per identity an orthonormal basis of the
    // subspace its drift moves in.
    std::vector<std::vector<float>> centers;
    std::vector<std::vector<std::vector<double>>> pose_bases;
    for (std::uint32_t id = 0; id < cfg.num_identities; ++id) {
        auto rng = stream(cfg.seed, kIdentityStream, id);
        centers.push_back(random_unit(rng, dim));
        std::vector<std::vector<double>> basis;
        std::normal_distribution<double> g(0.0, 1.0);
        while (basis.size() < cfg.pose_dims) {
            std::vector<double> b(dim);
            for (auto& x : b) x = g(rng);
            for (const auto& prev : basis) {
                double dot = 0.0;
                for (std::uint32_t d = 0; d < dim; ++d) dot += b[d] * prev[d];
                for (std::uint32_t d = 0; d < dim; ++d) b[d] -= dot * prev[d];
            }
            double norm = 0.0;
            for (double x : b) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-9) continue;
            for (auto& x : b) x /= norm;
            basis.push_back(std::move(b));
        }
        pose_bases.push_back(std::move(basis));
    }

    // Shot layout and casts.
    std::vector<std::vector<ShotPlan>> plans(cfg.num_videos);
    for (std::uint32_t v = 0; v < cfg.num_videos; ++v) {
        std::uint32_t start = 0;
        for (std::uint32_t s = 0; s < cfg.shots_per_video; ++s) {
            auto rng = stream(cfg.seed, kShotStream, v, s);
            std::uniform_int_distribution<std::uint32_t> frames(cfg.frames_per_shot_min,
                                                                cfg.frames_per_shot_max);
            ShotPlan plan;
            plan.start = start;
            plan.frames = frames(rng);
            plan.cast = draw_cast(cfg, rng);
            start += plan.frames;
            plans[v].push_back(std::move(plan));
        }
    }

    // Anchor each topic's given examples in distinct videos.
    SynthOutput out;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> anchors(cfg.topics);
    for (std::uint32_t t = 0; t < cfg.topics; ++t) {
        auto rng = stream(cfg.seed, kTopicStream, t);
        std::vector<std::uint32_t> videos(cfg.num_videos);
        std::iota(videos.begin(), videos.end(), 0U);
        std::shuffle(videos.begin(), videos.end(), rng);
        videos.resize(cfg.examples_per_topic);
        for (const auto v : videos) {
            std::vector<std::uint32_t> free_shots;
            for (std::uint32_t s = 0; s < cfg.shots_per_video; ++s) {
                if (!plans[v][s].anchor_identity) free_shots.push_back(s);
            }
            std::uniform_int_distribution<std::size_t> pick(0, free_shots.size() - 1);
            const auto s = free_shots[pick(rng)];
            auto& plan = plans[v][s];
            if (std::find(plan.cast.begin(), plan.cast.end(), t) == plan.cast.end()) {
                plan.cast.front() = t;
            }
            std::uniform_int_distribution<std::uint32_t> frame(0, plan.frames - 1);
            plan.anchor_identity = t;
            plan.anchor_frame = frame(rng);
            anchors[t].emplace_back(v, s);
        }
    }

    // Distributions are local to each stream: normal_distribution caches
    // draws, and sharing one would couple otherwise independent streams.
    std::vector<FrameRecord> frames;
    for (std::uint32_t v = 0; v < cfg.num_videos; ++v) {
        const auto video_id = label("v", v, 2);
        for (std::uint32_t s = 0; s < cfg.shots_per_video; ++s) {
            const auto& plan = plans[v][s];
            const auto shot_id = shot_label(v, s);

            // Per-(shot, identity) random walk, zero at the shot's first frame.
            std::map<std::uint32_t, std::vector<std::vector<double>>> walks;
            for (const auto id : plan.cast) {
                auto rng = stream(cfg.seed, kWalkStream, v, s, id);
                std::normal_distribution<double> unit_normal(0.0, 1.0);
                std::vector<std::vector<double>> walk(plan.frames, std::vector<double>(dim, 0.0));
                const auto& basis = pose_bases[id];
                for (std::uint32_t f = 1; f < plan.frames; ++f) {
                    walk[f] = walk[f - 1];
                    if (basis.empty()) {
                        for (std::uint32_t d = 0; d < dim; ++d) {
                            walk[f][d] += cfg.drift_per_frame * unit_normal(rng);
                        }
                        continue;
                    }
                    for (const auto& axis : basis) {
                        const double step = cfg.drift_per_frame * unit_normal(rng);
                        for (std::uint32_t d = 0; d < dim; ++d) walk[f][d] += step * axis[d];
                    }
                }
                walks.emplace(id, std::move(walk));
            }

            for (std::uint32_t f = 0; f < plan.frames; ++f) {
                const std::uint32_t frame_index = plan.start + f;
                auto rng = stream(cfg.seed, kFrameStream, v, frame_index);
                std::uniform_int_distribution<std::uint32_t> count(cfg.faces_per_frame_min,
                                                                   cfg.faces_per_frame_max);
                std::uint32_t k = count(rng);
                std::vector<std::uint32_t> order = plan.cast;
                std::shuffle(order.begin(), order.end(), rng);

                if (plan.anchor_identity && f == plan.anchor_frame) {
                    k = std::max<std::uint32_t>(k, 1);
                    const auto it = std::find(order.begin(), order.end(), *plan.anchor_identity);
                    if (static_cast<std::uint32_t>(it - order.begin()) >= k) {
                        std::iter_swap(order.begin(), it);
                    }
                }
                k = std::min<std::uint32_t>(k, static_cast<std::uint32_t>(order.size()));

                FrameRecord rec{video_id, shot_id, frame_index, {}};
                for (std::uint32_t slot = 0; slot < k; ++slot) {
                    const auto id = order[slot];
                    auto noise = stream(cfg.seed, kFaceNoiseStream, v, frame_index, slot);
                    std::normal_distribution<double> unit_normal(0.0, 1.0);
                    Embedding e(dim);
                    const auto& walk = walks.at(id)[f];
                    for (std::uint32_t d = 0; d < dim; ++d) {
                        e[d] = static_cast<float>(centers[id][d] +
                                                  cfg.identity_noise * unit_normal(noise) +
                                                  walk[d]);
                    }
                    normalize(e);
                    rec.faces.push_back({static_cast<std::uint16_t>(slot), std::move(e),
                                         label("p", id, 2)});
                }
                frames.push_back(std::move(rec));
            }
        }
    }
    out.dataset = Dataset(dim, std::move(frames));

    // Ground truth: every shot showing the identity at least once.
    std::vector<std::string> topic_names;
    for (std::uint32_t t = 0; t < cfg.topics; ++t) {
        topic_names.push_back(label("T", t, 2));
        out.topic_identity[topic_names.back()] = label("p", t, 2);
    }
    for (const auto& f : out.dataset.frames()) {
        for (const auto& face : f.faces) {
            for (std::uint32_t t = 0; t < cfg.topics; ++t) {
                if (face.identity == out.topic_identity[topic_names[t]]) {
                    out.truth.relevant[topic_names[t]].insert(f.shot_id);
                }
            }
        }
    }

    for (std::uint32_t t = 0; t < cfg.topics; ++t) {
        Topic topic{topic_names[t], {}};
        const auto identity = label("p", t, 2);
        for (const auto& [v, s] : anchors[t]) {
            const auto& plan = plans[v][s];
            const auto& frame =
                out.dataset.frame({label("v", v, 2), plan.start + plan.anchor_frame});
            const auto face = std::find_if(frame.faces.begin(), frame.faces.end(),
                                           [&](const FaceDetection& fd) {
                                               return fd.identity == identity;
                                           });
            topic.examples.push_back(
                {frame.video_id, frame.shot_id, frame.frame_index, face->face_index});
        }
        out.queries.push_back(std::move(topic));
    }
    return out;
}

std::vector<std::filesystem::path> write_synth_output(const SynthOutput& out,
                                                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto dataset = dir / "dataset.jsonl";
    const auto queries = dir / "queries.jsonl";
    const auto gt = dir / "groundtruth.txt";
    write_dataset_text(out.dataset, dataset);
    write_queries(out.queries, queries);
    write_ground_truth(out.truth, gt);
    return {dataset, queries, gt};
}

}  // namespace tins
