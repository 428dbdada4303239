#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tins/embedding_store.hpp"

namespace tins::testing {

inline Embedding random_unit(std::mt19937_64& rng, std::uint32_t dim) {
    std::normal_distribution<float> g(0.0F, 1.0F);
    Embedding v(dim);
    for (auto& x : v) x = g(rng);
    normalize(v);
    return v;
}

/// Unstructured random dataset: `videos` videos of consecutive frames,
/// shots of `frames_per_shot` frames, 0..max_faces random unit faces each.
inline Dataset random_dataset(std::uint64_t seed, std::uint32_t dim, std::uint32_t videos,
                              std::uint32_t frames_per_video, std::uint32_t frames_per_shot,
                              std::uint32_t max_faces) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> faces(0, max_faces);
    std::vector<FrameRecord> frames;
    for (std::uint32_t v = 0; v < videos; ++v) {
        const auto video = "vid" + std::to_string(v);
        for (std::uint32_t f = 0; f < frames_per_video; ++f) {
            FrameRecord rec{video, video + "_shot" + std::to_string(f / frames_per_shot), f, {}};
            const auto n = faces(rng);
            for (std::uint32_t k = 0; k < n; ++k) {
                rec.faces.push_back({static_cast<std::uint16_t>(k), random_unit(rng, dim), {}});
            }
            frames.push_back(std::move(rec));
        }
    }
    return Dataset(dim, std::move(frames));
}

inline FrameRecord frame(std::string video, std::string shot, std::uint32_t index,
                         std::vector<Embedding> faces = {}) {
    FrameRecord rec{std::move(video), std::move(shot), index, {}};
    for (std::size_t k = 0; k < faces.size(); ++k) {
        rec.faces.push_back({static_cast<std::uint16_t>(k), std::move(faces[k]), {}});
    }
    return rec;
}

}  // namespace tins::testing
