// tins: tracked instance search over face-embedding datasets.
//
//   tins synth  -o DIR                       synthetic dataset, queries, ground truth
//   tins build  --dataset F -o INDEX         IVF-PQ index file
//   tins run    --dataset F --queries Q ...  TREC run file
//   tins eval   --run R --gt G               per-topic AP and mAP (JSON lines)
//   tins sweep  --dataset F --queries Q --gt G -o CSV
//
// Exit codes: 0 success, 1 usage/configuration error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tins/embedding_store.hpp"
#include "tins/error.hpp"
#include "tins/evaluation.hpp"
#include "tins/pipeline.hpp"
#include "tins/pq_index.hpp"
#include "tins/synthgen.hpp"
#include "tins/tracker.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct IndexFlags {
    std::string index_path;  // load instead of building when set
    tins::IndexConfig config;
    bool nprobe_set = false;

    void add(CLI::App* cmd, bool allow_load) {
        if (allow_load) {
            cmd->add_option("--index", index_path, "Prebuilt index file (skips building)");
        }
        cmd->add_option("--clusters", config.num_clusters, "Coarse clusters C")
            ->capture_default_str();
        cmd->add_option("--nprobe", config.nprobe, "Clusters probed per query")
            ->capture_default_str()
            ->each([this](const std::string&) { nprobe_set = true; });
        cmd->add_option("--subspaces", config.num_subspaces, "PQ subspaces m")
            ->capture_default_str();
        cmd->add_option("--kmeans-iters", config.kmeans_iters, "Lloyd iterations")
            ->capture_default_str();
        cmd->add_option("--seed", config.seed, "Training seed")->capture_default_str();
        cmd->add_flag("--exact", config.exact_mode, "Store raw embeddings; exact scoring");
    }

    tins::Index obtain(const tins::Dataset& dataset) const {
        tins::Index index = index_path.empty() ? tins::Index::build(dataset, config)
                                               : tins::Index::load(fs::path(index_path));
        if (index.dimension() != dataset.dimension() && dataset.face_count() > 0) {
            throw tins::DataError("index dimension does not match the dataset");
        }
        if (!index_path.empty() && nprobe_set) {
            if (config.nprobe == 0 || config.nprobe > index.config().num_clusters) {
                throw tins::ConfigError("nprobe must lie in [1, num_clusters]");
            }
        }
        if (index_path.empty() || nprobe_set) index.set_nprobe(config.nprobe);
        return index;
    }
};

struct PipelineFlags {
    tins::PipelineConfig config;
    std::string voting = "vosc1";

    void add(CLI::App* cmd, bool grid) {
        if (!grid) {
            cmd->add_option("--window", config.track.window, "Tracking half-window w")
                ->capture_default_str();
            cmd->add_option("--rate", config.track.rate, "Tracking rate r (frames per step)")
                ->capture_default_str();
            cmd->add_option("--voting", voting, "vosc1 | vosc2")->capture_default_str();
            cmd->add_option("--examples", config.examples, "Given examples per topic K")
                ->capture_default_str();
        }
        cmd->add_option("--threshold", config.track.threshold, "Tracking distance threshold")
            ->capture_default_str();
        cmd->add_option("--topn", config.top_n, "Shots kept per topic")->capture_default_str();
        cmd->add_option("--depth", config.search_depth, "Frames returned per search")
            ->capture_default_str();
    }

    tins::PipelineConfig resolve() const {
        auto cfg = config;
        cfg.voting = tins::parse_voting_scheme(voting);
        cfg.validate();
        return cfg;
    }
};

template <typename Fn>
void write_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw tins::DataError("cannot write " + path);
    fn(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tracked instance search: IVF-PQ retrieval, tracking expansion, voting, mAP"};
    app.require_subcommand(1);

    // synth
    tins::SynthConfig synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("-o,--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
    synth_cmd->add_option("--dim", synth.dimension)->capture_default_str();
    synth_cmd->add_option("--identities", synth.num_identities)->capture_default_str();
    synth_cmd->add_option("--videos", synth.num_videos)->capture_default_str();
    synth_cmd->add_option("--shots", synth.shots_per_video, "Shots per video")
        ->capture_default_str();
    synth_cmd->add_option("--frames-min", synth.frames_per_shot_min)->capture_default_str();
    synth_cmd->add_option("--frames-max", synth.frames_per_shot_max)->capture_default_str();
    synth_cmd->add_option("--faces-min", synth.faces_per_frame_min)->capture_default_str();
    synth_cmd->add_option("--faces-max", synth.faces_per_frame_max)->capture_default_str();
    synth_cmd->add_option("--identity-noise", synth.identity_noise)->capture_default_str();
    synth_cmd->add_option("--drift", synth.drift_per_frame)->capture_default_str();
    synth_cmd->add_option("--pose-dims", synth.pose_dims, "Drift subspace dimension (0 = all)")
        ->capture_default_str();
    synth_cmd->add_option("--distractor-rate", synth.distractor_rate)->capture_default_str();
    synth_cmd->add_option("--topics", synth.topics)->capture_default_str();
    synth_cmd->add_option("--examples", synth.examples_per_topic, "Given examples per topic")
        ->capture_default_str();

    // build
    std::string build_dataset, build_out;
    IndexFlags build_index;
    auto* build_cmd = app.add_subcommand("build", "Build an IVF-PQ index");
    build_cmd->add_option("--dataset", build_dataset)->required();
    build_cmd->add_option("-o,--out", build_out, "Index file")->required();
    build_index.add(build_cmd, false);

    // run
    std::string run_dataset, run_queries, run_out, run_tag;
    IndexFlags run_index;
    PipelineFlags run_pipeline;
    auto* run_cmd = app.add_subcommand("run", "Track, search and fuse; write a TREC run");
    run_cmd->add_option("--dataset", run_dataset)->required();
    run_cmd->add_option("--queries", run_queries)->required();
    run_cmd->add_option("-o,--out", run_out, "Run file (default stdout)");
    run_cmd->add_option("--tag", run_tag, "Run tag (default derived from flags)");
    run_index.add(run_cmd, true);
    run_pipeline.add(run_cmd, false);

    // eval
    std::string eval_run, eval_gt, eval_out, eval_voting;
    std::size_t eval_cutoff = tins::kDefaultCutoff;
    std::optional<std::uint32_t> eval_w, eval_r, eval_k, eval_nprobe;
    auto* eval_cmd = app.add_subcommand("eval", "Average precision and mAP of a run");
    eval_cmd->add_option("--run", eval_run)->required();
    eval_cmd->add_option("--gt", eval_gt)->required();
    eval_cmd->add_option("--cutoff", eval_cutoff)->capture_default_str();
    eval_cmd->add_option("-o,--out", eval_out, "Report file (default stdout)");
    eval_cmd->add_option("--window", eval_w, "Recorded in the report");
    eval_cmd->add_option("--rate", eval_r, "Recorded in the report");
    eval_cmd->add_option("--examples", eval_k, "Recorded in the report");
    eval_cmd->add_option("--voting", eval_voting, "Recorded in the report");
    eval_cmd->add_option("--nprobe", eval_nprobe, "Recorded in the report");

    // sweep
    std::string sweep_dataset, sweep_queries, sweep_gt, sweep_out, sweep_pooled, sweep_runs;
    IndexFlags sweep_index;
    PipelineFlags sweep_pipeline;
    tins::SweepSpec spec;
    std::vector<std::string> sweep_voting{"vosc1", "vosc2"};
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a (w, r, K, voting) grid to CSV");
    sweep_cmd->add_option("--dataset", sweep_dataset)->required();
    sweep_cmd->add_option("--queries", sweep_queries)->required();
    sweep_cmd->add_option("--gt", sweep_gt)->required();
    sweep_cmd->add_option("-o,--out", sweep_out, "CSV file (default stdout)");
    sweep_cmd->add_option("--windows", spec.windows)->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--rates", spec.rates)->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--example-counts", spec.example_counts)
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->add_option("--voting", sweep_voting)->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--pooled-gt", sweep_pooled,
                          "Write ground truth pooled from every run's top-N");
    sweep_cmd->add_option("--runs-dir", sweep_runs, "Also write every run file here");
    sweep_index.add(sweep_cmd, true);
    sweep_pipeline.add(sweep_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*synth_cmd) {
            const auto out = tins::generate(synth);
            const auto paths = tins::write_synth_output(out, synth_out);
            for (const auto& p : paths) std::cerr << "wrote " << p.string() << '\n';
        } else if (*build_cmd) {
            const auto dataset = tins::ingest(fs::path(build_dataset));
            const auto index = tins::Index::build(dataset, build_index.config);
            const fs::path p(build_out);
            if (p.has_parent_path()) fs::create_directories(p.parent_path());
            index.save(p);
            std::cerr << "indexed " << index.size() << " faces into "
                      << index.config().num_clusters << " lists\n";
        } else if (*run_cmd) {
            const auto cfg = run_pipeline.resolve();
            const auto dataset = tins::ingest(fs::path(run_dataset));
            const auto topics = tins::read_queries(fs::path(run_queries));
            const auto index = run_index.obtain(dataset);
            const auto run = tins::run_topics(dataset, index, topics, cfg,
                                              run_tag.empty() ? tins::run_tag(cfg) : run_tag);
            write_output(run_out, [&](std::ostream& os) { tins::write_run(run, os); });
        } else if (*eval_cmd) {
            const auto run = tins::read_run(fs::path(eval_run));
            const auto gt = tins::read_ground_truth(fs::path(eval_gt));
            tins::RunDescriptor desc{eval_r, eval_w, eval_k,
                                     eval_voting.empty() ? std::nullopt
                                                         : std::optional<std::string>(eval_voting),
                                     eval_nprobe};
            const auto report = tins::evaluate(run, gt, eval_cutoff, desc);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
            write_output(eval_out, [&](std::ostream& os) { tins::write_report(report, os); });
        } else if (*sweep_cmd) {
            spec.voting.clear();
            for (const auto& v : sweep_voting) spec.voting.push_back(tins::parse_voting_scheme(v));
            const auto base = sweep_pipeline.resolve();
            const auto dataset = tins::ingest(fs::path(sweep_dataset));
            const auto topics = tins::read_queries(fs::path(sweep_queries));
            const auto gt = tins::read_ground_truth(fs::path(sweep_gt));
            const auto index = sweep_index.obtain(dataset);
            const auto rows = tins::run_sweep(dataset, index, topics, gt, spec, base);
            write_output(sweep_out, [&](std::ostream& os) { tins::write_sweep_csv(rows, os); });
            if (!sweep_runs.empty()) {
                fs::create_directories(sweep_runs);
                for (const auto& row : rows) {
                    tins::write_run(row.run, fs::path(sweep_runs) / (row.run.tag + ".run"));
                }
            }
            if (!sweep_pooled.empty()) {
                std::vector<tins::Run> runs;
                runs.reserve(rows.size());
                for (const auto& row : rows) runs.push_back(row.run);
                const auto pooled = tins::pooled_ground_truth(runs, gt, dataset, base.top_n);
                write_output(sweep_pooled,
                             [&](std::ostream& os) { tins::write_ground_truth(pooled, os); });
            }
        }
    } catch (const tins::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kUsageError;
    } catch (const tins::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    }
    return 0;
}
