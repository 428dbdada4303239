#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "tins/error.hpp"
#include "tins/fusion.hpp"

using namespace tins;
using tins::testing::frame;

namespace {

constexpr int kCases = 1000;

// Two videos, shots of 5 frames, 20 frames each.
Dataset grid_dataset() {
    std::vector<FrameRecord> frames;
    for (const std::string v : {"a", "b"}) {
        for (std::uint32_t i = 0; i < 20; ++i) {
            frames.push_back(frame(v, v + std::to_string(i / 5), i));
        }
    }
    return Dataset(2, std::move(frames));
}

RankedList list_of(std::vector<ScoredFrame> entries) {
    std::sort(entries.begin(), entries.end(), ranks_before);
    return RankedList{std::move(entries), 0, 0};
}

RankedList random_list(std::mt19937_64& rng, const Dataset& d) {
    std::uniform_real_distribution<double> score(0.01, 1.0);
    std::bernoulli_distribution keep(0.4);
    std::vector<ScoredFrame> entries;
    for (const auto& f : d.frames()) {
        if (keep(rng)) entries.push_back({f.ref(), score(rng)});
    }
    return list_of(std::move(entries));
}

ShotScores random_shot_scores(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::bernoulli_distribution keep(0.5);
    ShotScores out;
    for (int s = 0; s < 12; ++s) {
        if (keep(rng)) out.emplace("shot" + std::to_string(s), score(rng));
    }
    return out;
}

// Straightforward reference for the per-example average with zero fill.
std::map<std::string, double> mean_oracle(const std::vector<ShotScores>& maps) {
    std::map<std::string, double> sums;
    for (const auto& m : maps) {
        for (const auto& [shot, s] : m) sums[shot] += s;
    }
    for (auto& [shot, s] : sums) s /= static_cast<double>(maps.size());
    return sums;
}

bool sorted_canonically(const ShotRanking& r) {
    for (std::size_t i = 1; i < r.entries.size(); ++i) {
        const auto& a = r.entries[i - 1];
        const auto& b = r.entries[i];
        if (a.score < b.score || (a.score == b.score && a.shot_id >= b.shot_id)) return false;
    }
    return true;
}

std::vector<std::string> order_of(const ShotRanking& r) {
    std::vector<std::string> out;
    for (const auto& e : r.entries) out.push_back(e.shot_id);
    return out;
}

}  // namespace

TEST(MergeCue, MaxPoolsAcrossLists) {
    const RankedList a = list_of({{{"a", 0}, 0.9}, {{"a", 1}, 0.2}});
    const RankedList b = list_of({{{"a", 1}, 0.6}, {{"b", 3}, 0.4}});
    const std::vector<RankedList> lists{a, b};
    const auto merged = merge_cue(lists);
    EXPECT_EQ(merged, (FrameScores{{{"a", 0}, 0.9}, {{"a", 1}, 0.6}, {{"b", 3}, 0.4}}));
    EXPECT_THROW(merge_cue(std::span<const RankedList>{}), ConfigError);
}

TEST(MergeCue, Properties) {
    const auto d = grid_dataset();
    std::mt19937_64 rng(101);
    for (int c = 0; c < kCases; ++c) {
        const auto a = random_list(rng, d);
        const auto b = random_list(rng, d);
        const std::vector<RankedList> one{a}, twice{a, a}, ab{a, b}, ba{b, a};
        // idempotence
        ASSERT_EQ(merge_cue(twice), merge_cue(one));
        ASSERT_EQ(merge_cue(one), to_frame_scores(a));
        // commutativity
        ASSERT_EQ(merge_cue(ab), merge_cue(ba));
        // monotonicity: adding a list never lowers or drops a frame score
        const auto before = merge_cue(one);
        const auto after = merge_cue(ab);
        for (const auto& [f, s] : before) {
            ASSERT_TRUE(after.contains(f));
            ASSERT_GE(after.at(f), s);
        }
        // monotonicity: raising one input score never lowers any output
        if (!b.entries.empty()) {
            auto raised = b;
            std::uniform_int_distribution<std::size_t> pick(0, raised.entries.size() - 1);
            auto& e = raised.entries[pick(rng)];
            e.score = std::min(1.0, e.score + 0.3);
            const std::vector<RankedList> a_raised{a, raised};
            const auto higher = merge_cue(a_raised);
            for (const auto& [f, s] : after) ASSERT_GE(higher.at(f), s);
        }
        // every frame came from some input; scores stay in (0, 1]
        for (const auto& [f, s] : after) {
            ASSERT_GT(s, 0.0);
            ASSERT_LE(s, 1.0);
        }
    }
}

TEST(FramesToShots, KeepsBestFramePerShot) {
    const auto d = grid_dataset();
    const FrameScores fs{{{"a", 0}, 0.3}, {{"a", 4}, 0.8}, {{"a", 5}, 0.1}, {{"b", 19}, 0.5}};
    const auto shots = frames_to_shots(d, fs);
    EXPECT_EQ(shots, (ShotScores{{"a0", 0.8}, {"a1", 0.1}, {"b3", 0.5}}));
}

TEST(FramesToShots, MatchesOracle) {
    const auto d = grid_dataset();
    std::mt19937_64 rng(7);
    for (int c = 0; c < kCases; ++c) {
        const auto fs = to_frame_scores(random_list(rng, d));
        std::map<std::string, double> expected;
        for (const auto& [f, s] : fs) {
            const auto shot = f.video_id + std::to_string(f.frame_index / 5);
            expected[shot] = std::max(expected[shot], s);
        }
        const auto got = frames_to_shots(d, fs);
        ASSERT_EQ(got.size(), expected.size());
        for (const auto& [shot, s] : expected) ASSERT_EQ(got.at(shot), s);
    }
}

TEST(CombineExamples, SingleExampleKeepsScores) {
    const std::vector<ShotScores> one{{{"x", 0.4}, {"y", 0.9}}};
    const auto r = combine_examples(one);
    EXPECT_EQ(r.entries, (std::vector<ShotScore>{{"y", 0.9}, {"x", 0.4}}));
}

TEST(CombineExamples, ZeroFillsMissingShots) {
    const std::vector<ShotScores> two{{{"x", 0.8}}, {{"x", 0.4}, {"y", 0.6}}};
    const auto r = combine_examples(two);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r.entries[0].shot_id, "x");
    EXPECT_NEAR(r.entries[0].score, 0.6, 1e-12);
    EXPECT_EQ(r.entries[1].shot_id, "y");
    EXPECT_NEAR(r.entries[1].score, 0.3, 1e-12);
}

TEST(CombineExamples, TiesBreakByShotId) {
    const std::vector<ShotScores> one{{{"b", 0.5}, {"a", 0.5}, {"c", 0.7}}};
    EXPECT_EQ(order_of(combine_examples(one)), (std::vector<std::string>{"c", "a", "b"}));
}

TEST(CombineExamples, Properties) {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> count(1, 6);
    std::uniform_int_distribution<int> exponent(-6, 3);
    std::uniform_real_distribution<double> factor(0.05, 20.0);
    for (int c = 0; c < kCases; ++c) {
        std::vector<ShotScores> maps(static_cast<std::size_t>(count(rng)));
        for (auto& m : maps) m = random_shot_scores(rng);
        const auto base = combine_examples(maps);
        ASSERT_TRUE(sorted_canonically(base));

        // matches the reference mean with zero fill
        const auto oracle = mean_oracle(maps);
        ASSERT_EQ(base.size(), oracle.size());
        for (const auto& e : base.entries) ASSERT_NEAR(e.score, oracle.at(e.shot_id), 1e-12);

        // permutation invariance, exact
        auto shuffled = maps;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        ASSERT_EQ(combine_examples(shuffled), base);

        // a power-of-two scale is exact in floating point, so the order
        // must survive unchanged
        const double p = std::ldexp(1.0, exponent(rng));
        auto scaled = maps;
        for (auto& m : scaled) {
            for (auto& [shot, s] : m) s *= p;
        }
        ASSERT_EQ(order_of(combine_examples(scaled)), order_of(base));

        // arbitrary positive scale: pairs separated by more than rounding
        // noise keep their relative order
        const double f = factor(rng);
        scaled = maps;
        for (auto& m : scaled) {
            for (auto& [shot, s] : m) s *= f;
        }
        const auto rescaled = combine_examples(scaled);
        std::map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < rescaled.size(); ++i) pos[rescaled.entries[i].shot_id] = i;
        for (std::size_t i = 0; i < base.size(); ++i) {
            for (std::size_t j = i + 1; j < base.size(); ++j) {
                if (base.entries[i].score - base.entries[j].score > 1e-9) {
                    ASSERT_LT(pos[base.entries[i].shot_id], pos[base.entries[j].shot_id]);
                }
            }
        }

        // shot-level scores stay in [0, 1]
        for (const auto& e : base.entries) {
            ASSERT_GE(e.score, 0.0);
            ASSERT_LE(e.score, 1.0);
        }
    }
}

TEST(Voting, SchemesDifferOnlyWhenTracking) {
    const auto d = grid_dataset();
    CueResults cue;
    cue.lists.push_back(list_of({{{"a", 0}, 0.9}}));
    cue.lists.push_back(list_of({{{"a", 1}, 0.5}}));
    const std::vector<CueResults> cues{cue};
    const auto r1 = vosc1(d, cues);
    const auto r2 = vosc2(d, cues);
    ASSERT_EQ(r1.size(), 1u);
    ASSERT_EQ(r2.size(), 1u);
    EXPECT_DOUBLE_EQ(r1.entries[0].score, 0.9);
    EXPECT_DOUBLE_EQ(r2.entries[0].score, 0.7);
}

TEST(Voting, IdenticalWithoutTracking) {
    const auto d = grid_dataset();
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> count(1, 5);
    for (int c = 0; c < kCases; ++c) {
        std::vector<CueResults> cues(static_cast<std::size_t>(count(rng)));
        for (auto& cue : cues) cue.lists.push_back(random_list(rng, d));
        ASSERT_EQ(vosc1(d, cues), vosc2(d, cues));
        ASSERT_EQ(fuse(VotingScheme::vosc2, d, cues), vosc1(d, cues));
    }
}

TEST(Voting, Vosc1MatchesOracle) {
    const auto d = grid_dataset();
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> count(1, 4);
    for (int c = 0; c < 200; ++c) {
        std::vector<CueResults> cues(static_cast<std::size_t>(count(rng)));
        std::vector<ShotScores> per_example;
        for (auto& cue : cues) {
            const auto n = count(rng);
            std::map<std::string, double> best;
            for (int l = 0; l < n; ++l) {
                cue.lists.push_back(random_list(rng, d));
                for (const auto& e : cue.lists.back().entries) {
                    const auto shot = e.frame.video_id + std::to_string(e.frame.frame_index / 5);
                    best[shot] = std::max(best[shot], e.score);
                }
            }
            per_example.emplace_back(best.begin(), best.end());
        }
        const auto expected = mean_oracle(per_example);
        const auto got = vosc1(d, cues);
        ASSERT_EQ(got.size(), expected.size());
        for (const auto& e : got.entries) ASSERT_NEAR(e.score, expected.at(e.shot_id), 1e-12);
    }
}

TEST(Voting, ParseSchemeNames) {
    EXPECT_EQ(parse_voting_scheme("vosc1"), VotingScheme::vosc1);
    EXPECT_EQ(parse_voting_scheme("vosc2"), VotingScheme::vosc2);
    EXPECT_STREQ(to_string(VotingScheme::vosc2), "vosc2");
    EXPECT_THROW(parse_voting_scheme("max"), ConfigError);
}

TEST(RunFile, WriteAndReadBack) {
    tins::Run run{"tag", {{"T1", {{{"s2", 0.75}, {"s1", 0.5}}}}, {"T2", {{{"s9", 1.0}}}}}};
    std::stringstream io;
    write_run(run, io);
    EXPECT_EQ(io.str(),
              "T1 Q0 s2 1 0.750000 tag\n"
              "T1 Q0 s1 2 0.500000 tag\n"
              "T2 Q0 s9 1 1.000000 tag\n");
    EXPECT_EQ(read_run(io), run);
}

TEST(RunFile, ReadOrdersByRankAndRejectsMalformedLines) {
    std::istringstream shuffled("T Q0 b 2 0.1 x\nT Q0 a 1 0.9 x\n");
    const auto run = read_run(shuffled);
    ASSERT_EQ(run.topics.size(), 1u);
    EXPECT_EQ(order_of(run.topics[0].ranking), (std::vector<std::string>{"a", "b"}));
    for (const char* bad : {"T Q0 a 1 0.5\n", "T Q1 a 1 0.5 x\n", "T Q0 a 0 0.5 x\n",
                            "T Q0 a one 0.5 x\n"}) {
        std::istringstream in(bad);
        EXPECT_THROW(read_run(in), DataError) << bad;
    }
}
