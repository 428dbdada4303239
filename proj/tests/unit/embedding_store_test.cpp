#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"
#include "tins/embedding_store.hpp"
#include "tins/error.hpp"
#include "tins/synthgen.hpp"

using namespace tins;
using tins::testing::frame;

namespace {

double norm(const Embedding& e) {
    double s = 0;
    for (float x : e) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

std::string save_bytes(const Dataset& d) {
    std::ostringstream out;
    save(d, out);
    return out.str();
}

}  // namespace

TEST(Ingest, MinimalTwoShotFile) {
    std::istringstream in(
        R"({"video":"a","shot":"a1","frame":0,"faces":[{"k":0,"emb":[1,2,3,4],"id":"p"}]})"
        "\n"
        R"({"video":"a","shot":"a2","frame":1,"faces":[{"k":0,"emb":[0,0,0,2]}]})"
        "\n");
    const auto d = ingest(in);
    EXPECT_EQ(d.dimension(), 4u);
    EXPECT_EQ(d.frames().size(), 2u);
    EXPECT_EQ(d.shots().size(), 2u);
    EXPECT_EQ(d.frames()[0].faces[0].identity, "p");
    EXPECT_FALSE(d.frames()[1].faces[0].identity.has_value());
    for (const auto& f : d.frames()) {
        for (const auto& face : f.faces) EXPECT_NEAR(norm(face.embedding), 1.0, 1e-6);
    }
}

TEST(Ingest, FrameWithoutFacesIsKept) {
    std::istringstream in(
        R"({"video":"a","shot":"s","frame":0,"faces":[]})"
        "\n"
        R"({"video":"a","shot":"s","frame":1,"faces":[{"k":0,"emb":[1,0]}]})");
    const auto d = ingest(in);
    ASSERT_EQ(d.frames().size(), 2u);
    EXPECT_TRUE(d.frames()[0].faces.empty());
    EXPECT_EQ(d.face_count(), 1u);
}

TEST(Ingest, ShotRangesAreObservedMinMax) {
    std::istringstream in(
        R"({"video":"a","shot":"s","frame":7,"faces":[]})"
        "\n"
        R"({"video":"a","shot":"s","frame":3,"faces":[]})"
        "\n"
        R"({"video":"a","shot":"t","frame":9,"faces":[]})");
    const auto d = ingest(in, 2);
    const auto& s = d.shot("s");
    EXPECT_EQ(s.start, 3u);
    EXPECT_EQ(s.end, 7u);
}

TEST(Ingest, ErrorsNameTheLine) {
    std::istringstream in(
        R"({"video":"a","shot":"s","frame":0,"faces":[]})"
        "\n"
        R"({"video":"a","shot":"s","frame":1,"faces":[{"k":0,"emb":[1,0)"
        "\n");
    try {
        ingest(in, 2);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(Ingest, RejectsInvalidData) {
    const auto fails = [](const std::string& text) {
        std::istringstream in(text);
        EXPECT_THROW(ingest(in), DataError) << text;
    };
    // dimension mismatch
    fails(R"({"video":"a","shot":"s","frame":0,"faces":[{"k":0,"emb":[1,0]}]})"
          "\n"
          R"({"video":"a","shot":"s","frame":1,"faces":[{"k":0,"emb":[1,0,0]}]})");
    // duplicate (video, frame)
    fails(R"({"video":"a","shot":"s","frame":0,"faces":[]})"
          "\n"
          R"({"video":"a","shot":"s","frame":0,"faces":[]})");
    // shot id used by two videos
    fails(R"({"video":"a","shot":"s","frame":0,"faces":[]})"
          "\n"
          R"({"video":"b","shot":"s","frame":1,"faces":[]})");
    // missing field
    fails(R"({"video":"a","frame":0,"faces":[]})");
    // zero vector cannot be normalized
    fails(R"({"video":"a","shot":"s","frame":0,"faces":[{"k":0,"emb":[0,0]}]})");
    // interleaved shots overlap
    fails(R"({"video":"a","shot":"s","frame":0,"faces":[]})"
          "\n"
          R"({"video":"a","shot":"t","frame":1,"faces":[]})"
          "\n"
          R"({"video":"a","shot":"s","frame":2,"faces":[]})");
}

TEST(Ingest, NormalizedInputIsStable) {
    std::mt19937_64 rng(3);
    std::vector<FrameRecord> frames;
    for (std::uint32_t i = 0; i < 50; ++i) {
        frames.push_back(frame("v", "s", i, {tins::testing::random_unit(rng, 16)}));
    }
    const Dataset d(16, frames);
    std::stringstream text;
    write_dataset_text(d, text);
    const auto again = ingest(text);
    for (std::size_t i = 0; i < d.frames().size(); ++i) {
        const auto& a = d.frames()[i].faces[0].embedding;
        const auto& b = again.frames()[i].faces[0].embedding;
        for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-6);
    }
}

TEST(Ingest, SynthOutputRoundTripsThroughTextFormat) {
    const auto synth = generate(SynthConfig{});
    std::stringstream text;
    write_dataset_text(synth.dataset, text);
    const auto d = ingest(text);
    const auto& expected = synth.dataset;
    ASSERT_EQ(d.dimension(), expected.dimension());
    ASSERT_EQ(d.frames().size(), expected.frames().size());
    EXPECT_EQ(d.shots(), expected.shots());
    for (std::size_t i = 0; i < d.frames().size(); ++i) {
        const auto& a = d.frames()[i];
        const auto& b = expected.frames()[i];
        ASSERT_EQ(a.video_id, b.video_id);
        ASSERT_EQ(a.shot_id, b.shot_id);
        ASSERT_EQ(a.frame_index, b.frame_index);
        ASSERT_EQ(a.faces.size(), b.faces.size());
        for (std::size_t k = 0; k < a.faces.size(); ++k) {
            ASSERT_EQ(a.faces[k].face_index, b.faces[k].face_index);
            ASSERT_EQ(a.faces[k].identity, b.faces[k].identity);
            for (std::size_t j = 0; j < a.faces[k].embedding.size(); ++j) {
                ASSERT_NEAR(a.faces[k].embedding[j], b.faces[k].embedding[j], 1e-6);
            }
        }
    }
}

TEST(ShotOf, ContainmentAndBoundary) {
    std::vector<FrameRecord> frames;
    for (std::uint32_t i = 0; i < 10; ++i) frames.push_back(frame("v", "first", i));
    for (std::uint32_t i = 10; i < 15; ++i) frames.push_back(frame("v", "second", i));
    const Dataset d(4, frames);
    EXPECT_EQ(d.shot_of({"v", 5}), "first");
    EXPECT_EQ(d.shot_of({"v", 9}), "first");
    EXPECT_EQ(d.shot_of({"v", 10}), "second");
    EXPECT_EQ(d.shot_of({"v", 14}), "second");
    EXPECT_THROW(d.shot_of({"v", 15}), DataError);
    EXPECT_THROW(d.shot_of({"w", 0}), DataError);
}

TEST(ShotOf, AgreesWithStoredShotOnSynthData) {
    const auto d = generate(SynthConfig{}).dataset;
    for (const auto& f : d.frames()) {
        ASSERT_EQ(d.shot_of(f.ref()), f.shot_id);
        ASSERT_EQ(d.shot_of(f.ref()), d.shot_of(f.ref()));
    }
}

TEST(Dataset, ShotsPartitionEachVideo) {
    const auto d = generate(SynthConfig{}).dataset;
    std::map<std::string, std::size_t> frames_per_shot;
    for (const auto& f : d.frames()) {
        std::size_t containing = 0;
        for (const auto& s : d.shots()) {
            if (s.video_id == f.video_id && s.contains(f.frame_index)) ++containing;
        }
        ASSERT_EQ(containing, 1u);
        ++frames_per_shot[f.shot_id];
    }
    EXPECT_EQ(frames_per_shot.size(), d.shots().size());
}

TEST(Persistence, EmptyAndSingleFrameRoundTrip) {
    const Dataset empty;
    std::stringstream a(save_bytes(empty));
    EXPECT_EQ(load(a), empty);

    std::vector<FrameRecord> one{frame("v", "s", 3, {{0.6F, 0.8F}})};
    one[0].faces[0].identity = "p7";
    const Dataset single(2, one);
    std::stringstream b(save_bytes(single));
    EXPECT_EQ(load(b), single);
}

TEST(Persistence, SynthDatasetIsBitExactAndStable) {
    const auto d = generate(SynthConfig{}).dataset;
    const auto bytes = save_bytes(d);
    EXPECT_EQ(bytes, save_bytes(d));
    std::stringstream in(bytes);
    const auto loaded = load(in);
    EXPECT_EQ(loaded, d);
    EXPECT_EQ(save_bytes(loaded), bytes);
}

TEST(Persistence, RejectsBadHeaderVersionAndTruncation) {
    const auto bytes = save_bytes(generate(SynthConfig{.num_videos = 1, .shots_per_video = 10,
                                                       .topics = 1, .examples_per_topic = 1})
                                      .dataset);
    {
        std::stringstream in("XXXX" + bytes.substr(4));
        EXPECT_THROW(load(in), DataError);
    }
    {
        auto patched = bytes;
        patched[4] = 9;  // version
        std::stringstream in(patched);
        EXPECT_THROW(load(in), DataError);
    }
    {
        std::stringstream in(bytes.substr(0, bytes.size() / 2));
        EXPECT_THROW(load(in), DataError);
    }
}
