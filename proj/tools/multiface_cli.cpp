#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "multiface/config.hpp"
#include "multiface/embeddings.hpp"
#include "multiface/errors.hpp"
#include "multiface/evaluation.hpp"
#include "multiface/pairs.hpp"
#include "multiface/synthetic.hpp"
#include "multiface/training.hpp"

namespace fs = std::filesystem;
using namespace multiface;

namespace {

int fail(std::string_view code, std::string_view message) {
    std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
    return 1;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw FormatError("write_failed", "cannot write " + path.string());
}

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
    RunConfig cfg = load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const TrainResult result = train_run(cfg);
    nlohmann::json summary{{"run_dir", result.run_dir},
                           {"steps", cfg.total_steps},
                           {"final_eval_accuracy", result.final_accuracy}};
    if (!result.rows.empty()) summary["final_train_loss"] = result.rows.back().train_loss;
    std::cout << summary.dump() << '\n';
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
    const SyntheticIdentitySpec spec = load_synthetic_spec(spec_path);
    const SyntheticDataset ds = synth_identity_dataset(spec);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    dump_embeddings(train_split_table(ds), (dir / "train.mfe").string());
    dump_embeddings(eval_split_table(ds), (dir / "eval.mfe").string());
    save_pairs(ds.eval_pairs, (dir / "eval_pairs.txt").string());
    std::cout << nlohmann::json{{"out", out_dir},
                                {"train_samples", ds.train_count()},
                                {"eval_samples", ds.eval_count()},
                                {"pairs", ds.eval_pairs.size()}}
                     .dump()
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-head embedding training, evaluation and sphere-capacity tools"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "Train a network from a JSON run config");
    std::string config_path, train_out;
    std::optional<std::uint64_t> seed;
    train->add_option("--config", config_path, "Run config (JSON)")->required();
    train->add_option("--seed", seed, "Override the config seed");
    train->add_option("--out", train_out, "Override the output directory");

    auto* eval = app.add_subcommand("eval", "Evaluate an embedding dump");
    std::string metric, mode = "group-cosine";
    EvalRequest request;
    std::optional<std::size_t> groups;
    eval->add_option("metric", metric, "verify | tar | rank1 | angles")
        ->required()
        ->check(CLI::IsMember({"verify", "tar", "tar@far", "rank1", "angles"}));
    eval->add_option("--embeddings", request.embeddings_path, "MFE1 embedding file")->required();
    eval->add_option("--pairs", request.pairs_path, "Pairs file (index_a index_b label)");
    eval->add_option("--far", request.far, "False accept rate for tar");
    eval->add_option("--mode", mode, "raw-dot | group-cosine");
    eval->add_option("--gallery", request.gallery_path, "Gallery MFE1 file for rank1");
    eval->add_option("--groups", groups, "Expected group count N");
    eval->add_option("--histogram", request.histogram_path, "Angle histogram CSV for angles");
    std::string report_path;
    eval->add_option("--report", report_path, "Also write the JSON report here");

    auto* cap = app.add_subcommand("capacity", "Upper bound on well-separated points on the unit sphere");
    std::size_t dim = 0;
    double theta = 0.0;
    std::string cap_mode = "paper", cap_out = "capacity_report.json";
    cap->add_option("--dim", dim, "Embedding dimension n")->required();
    cap->add_option("--theta", theta, "Minimum angle in radians")->required();
    cap->add_option("--mode", cap_mode, "paper | exact-cap");
    cap->add_option("--out", cap_out, "Report file");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic identity dataset");
    std::string spec_path, synth_out;
    synth->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*train) return run_train(config_path, seed, train_out);
        if (*eval) {
            request.metric = parse_eval_metric(metric);
            request.mode = parse_similarity_mode(mode);
            request.groups = groups;
            const std::string report = eval_run(request);
            if (!report_path.empty()) write_text(report_path, report);
            std::cout << report;
            return 0;
        }
        if (*cap) {
            const std::string report = capacity_report(dim, theta, parse_cap_mode(cap_mode));
            if (!cap_out.empty()) write_text(cap_out, report);
            std::cout << report;
            return 0;
        }
        if (*synth) return run_synth(spec_path, synth_out);
    } catch (const Error& e) {
        return fail(e.code(), e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
