#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "multiface/checkpoint.hpp"
#include "multiface/config.hpp"
#include "multiface/embeddings.hpp"
#include "multiface/errors.hpp"
#include "multiface/evaluation.hpp"
#include "multiface/pairs.hpp"
#include "multiface/synthetic.hpp"
#include "multiface/training.hpp"
#include "oracles.hpp"

using namespace multiface;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("multiface_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::string config_error(const std::string& text) {
    try {
        RunConfig cfg = parse_run_config(text);
        cfg.validate();
    } catch (const Error& e) {
        return std::string(e.code()) + ": " + e.what();
    }
    return "";
}

// A small synthetic MLP run; `steps` and `out` vary per test.
json synthetic_config(std::uint64_t steps, const fs::path& out) {
    return {{"dataset", "synthetic"},
            {"synthetic", {{"identities", 8}, {"samples_per_identity", 12}, {"input_dim", 16}, {"seed", 3},
                           {"eval_per_identity", 4}, {"pairs_per_kind", 30}}},
            {"network", "mlp"},
            {"mlp_hidden", {32}},
            {"loss", "mlml"},
            {"head_loss", "softmax"},
            {"groups", 4},
            {"embedding_dim", 16},
            {"batch_size", 16},
            {"total_steps", steps},
            {"base_lr", 0.05},
            {"milestones", json::array()},
            {"dropout", 0.0},
            {"eval_every", 5},
            {"seed", 7},
            {"output_dir", out.string()}};
}

TrainResult run_json(const json& doc) {
    RunConfig cfg = parse_run_config(doc.dump());
    return train_run(cfg);
}

}  // namespace

TEST_CASE("config parsing is strict") {
    const fs::path out = scratch_dir("cfg");
    const json good = synthetic_config(10, out);
    CHECK(config_error(good.dump()).empty());

    json unknown = good;
    unknown["learning_rate"] = 0.1;
    CHECK(config_error(unknown.dump()).find("learning_rate") != std::string::npos);

    json unseeded = good;
    unseeded.erase("seed");
    CHECK(config_error(unseeded.dump()).find("seed") != std::string::npos);

    json indivisible = good;
    indivisible["groups"] = 3;
    CHECK(config_error(indivisible.dump()).rfind("groups_do_not_divide", 0) == 0);

    json wrong_type = good;
    wrong_type["batch_size"] = "16";
    CHECK(config_error(wrong_type.dump()).find("batch_size") != std::string::npos);

    json bad_layer = good;
    bad_layer["network"] = {{"input_shape", {16}}, {"layers", {{{"type", "conv3d"}}}}};
    CHECK(config_error(bad_layer.dump()).find("conv3d") != std::string::npos);

    json bad_dropout = good;
    bad_dropout["dropout"] = 1.0;
    CHECK_FALSE(config_error(bad_dropout.dump()).empty());

    json unordered = good;
    unordered["milestones"] = {{{"step", 5}}, {{"step", 3}}};
    CHECK_FALSE(config_error(unordered.dump()).empty());

    CHECK_FALSE(config_error("{not json").empty());
    CHECK_FALSE(config_error("[]").empty());
}

TEST_CASE("config round-trips through its JSON form") {
    RunConfig cfg = parse_run_config(synthetic_config(10, scratch_dir("cfg_rt")).dump());
    const std::string text = run_config_to_json(cfg);
    RunConfig again = parse_run_config(text);
    CHECK(run_config_to_json(again) == text);

    const RunConfig preset = mnist_preset("data/mnist-5k", 4, 1, 3000);
    CHECK(preset.head_count() == 4);
    CHECK(preset.batch_size == 128);
    CHECK(preset.embedding_dim == 32);
    REQUIRE(preset.milestones.size() == 2);
    CHECK(preset.milestones[0].step == 1800);
    CHECK(preset.milestones[1].step == 2550);
    CHECK(mnist_preset("data/mnist-5k", 0, 1, 3000).head_count() == 1);
}

TEST_CASE("synthetic identity dataset") {
    SyntheticIdentitySpec spec;  // 16 identities x 20 samples
    const SyntheticDataset ds = synth_identity_dataset(spec);
    CHECK(ds.total_count() == 320);
    CHECK(ds.eval_count() == 16 * spec.eval_per_identity);
    std::size_t pos = 0, neg = 0;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Pair& p : ds.eval_pairs) {
        CHECK((ds.eval_labels[p.a] == ds.eval_labels[p.b]) == p.same);
        (p.same ? pos : neg) += 1;
        seen.insert({p.a, p.b});
    }
    CHECK(pos == spec.pairs_per_kind);
    CHECK(neg == spec.pairs_per_kind);
    CHECK(seen.size() == ds.eval_pairs.size());

    const SyntheticDataset again = synth_identity_dataset(spec);
    CHECK(encode_embeddings(eval_split_table(again)) == encode_embeddings(eval_split_table(ds)));
    CHECK(encode_embeddings(train_split_table(again)) == encode_embeddings(train_split_table(ds)));
    CHECK(again.eval_pairs == ds.eval_pairs);

    SyntheticIdentitySpec other = spec;
    other.seed = 2;
    CHECK(encode_embeddings(eval_split_table(synth_identity_dataset(other))) !=
          encode_embeddings(eval_split_table(ds)));

    SyntheticIdentitySpec tiny = spec;
    tiny.samples_per_identity = 1;
    tiny.eval_per_identity = 1;
    CHECK_THROWS_AS(synth_identity_dataset(tiny), ValueError);
    SyntheticIdentitySpec lonely = spec;
    lonely.identities = 1;
    CHECK_THROWS(synth_identity_dataset(lonely));
}

TEST_CASE("near-noiseless synthetic data verifies perfectly") {
    SyntheticIdentitySpec spec;
    spec.noise_scale = 1e-6;
    const SyntheticDataset ds = synth_identity_dataset(spec);
    const EmbeddingTable t = eval_split_table(ds, 4);
    const auto scores = pair_scores(t, ds.eval_pairs, SimilarityMode::group_cosine);
    std::vector<bool> same;
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        same.push_back(ds.eval_pairs[i].same);
        (ds.eval_pairs[i].same ? pos : neg).push_back(scores[i]);
    }
    CHECK(verification_accuracy(scores, same).accuracy == 1.0);
    CHECK(tar_at_far(pos, neg, 0.0) == 1.0);
    const auto [gallery, probes] = split_first_per_identity(t);
    CHECK(rank1_identification(probes, gallery, SimilarityMode::group_cosine) == 1.0);
}

TEST_CASE("zero-step run writes a header and the initial checkpoint") {
    const fs::path out = scratch_dir("zero");
    const TrainResult r = run_json(synthetic_config(0, out));
    CHECK(r.rows.empty());
    const auto lines = lines_of(slurp(out / "metrics.csv"));
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].rfind("step,lr,train_loss,", 0) == 0);
    const auto params = load_checkpoint((out / "checkpoint.mfck").string());
    CHECK_FALSE(params.empty());
    CHECK(params.back().name.rfind("head3", 0) == 0);
    for (const char* f : {"config.json", "head_grads.csv", "embeddings_eval.mfe", "eval_pairs.txt"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
}

TEST_CASE("metrics schema follows the head count") {
    CHECK(metrics_columns(4).size() == 3 + 4 + 4 + 1);
    const auto cols = metrics_columns(4);
    CHECK(cols[3] == "head0_loss");
    CHECK(cols[7] == "head0_grad");
    CHECK(cols.back() == "eval_accuracy");
    CHECK(metrics_columns(1).size() == 6);

    const fs::path out = scratch_dir("schema");
    const TrainResult r = run_json(synthetic_config(12, out));
    const auto lines = lines_of(slurp(out / "metrics.csv"));
    REQUIRE(lines.size() == 4);  // header + steps 5, 10, 12
    for (const auto& line : lines) CHECK(std::count(line.begin(), line.end(), ',') == 11);
    CHECK(lines[3].rfind("12,", 0) == 0);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].head_losses.size() == 4);
    CHECK(r.step_head_grads.size() == 12);
    double sum = 0.0;
    for (double v : r.rows[2].head_losses) sum += v;
    CHECK(std::abs(sum - r.rows[2].train_loss) <= 1e-12);
}

TEST_CASE("identical config and seed reproduce every artifact byte") {
    const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    run_json(synthetic_config(20, a));
    run_json(synthetic_config(20, b));
    for (const char* f : {"metrics.csv", "head_grads.csv", "checkpoint.mfck", "embeddings_eval.mfe"}) {
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    }
    json other = synthetic_config(20, scratch_dir("det_c"));
    other["seed"] = 8;
    run_json(other);
    CHECK(slurp(a / "metrics.csv") != slurp(fs::path(other["output_dir"].get<std::string>()) / "metrics.csv"));
}

TEST_CASE("synthetic training learns") {
    const fs::path out = scratch_dir("learn");
    json doc = synthetic_config(150, out);
    const TrainResult r = run_json(doc);
    CHECK(r.rows.back().train_loss < r.rows.front().train_loss);
    CHECK(r.final_accuracy >= 0.9);
}

TEST_CASE("training rejects bad inputs before step 0") {
    const fs::path out = scratch_dir("reject");
    json doc = synthetic_config(5, out / "run");
    doc["dataset"] = "mnist";
    doc["network"] = "lenet";
    doc["train_images"] = (out / "missing").string();
    doc["train_labels"] = (out / "missing").string();
    doc["test_images"] = (out / "missing").string();
    doc["test_labels"] = (out / "missing").string();
    doc["embedding_dim"] = 16;
    CHECK_THROWS(run_json(doc));
    CHECK_FALSE(fs::exists(out / "run" / "metrics.csv"));
}

TEST_CASE("eval_run reports") {
    const fs::path dir = scratch_dir("eval");
    SyntheticIdentitySpec spec;
    spec.noise_scale = 0.01;
    const SyntheticDataset ds = synth_identity_dataset(spec);
    const EmbeddingTable t = eval_split_table(ds, 4);
    dump_embeddings(t, (dir / "e.mfe").string());
    save_pairs(ds.eval_pairs, (dir / "p.txt").string());

    EvalRequest req;
    req.embeddings_path = (dir / "e.mfe").string();
    req.pairs_path = (dir / "p.txt").string();
    CHECK(json::parse(eval_run(req))["accuracy"] == 1.0);

    req.metric = EvalMetric::tar;
    req.far = 1.0;
    CHECK(json::parse(eval_run(req))["tar"] == 1.0);

    req.metric = EvalMetric::angles;
    req.histogram_path = (dir / "h.csv").string();
    const json angles = json::parse(eval_run(req));
    CHECK(angles["positive_count"] == spec.pairs_per_kind);
    const auto hist = lines_of(slurp(dir / "h.csv"));
    CHECK(hist.size() == kAngleBins + 1);
    CHECK(hist[0] == "bin_start_deg,positive_count,negative_count");

    req.metric = EvalMetric::verify;
    req.groups = 2;
    CHECK_THROWS_AS(eval_run(req), ShapeError);
    req.groups.reset();

    save_pairs({{0, 100000, true}}, (dir / "far.txt").string());
    req.pairs_path = (dir / "far.txt").string();
    try {
        eval_run(req);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "pair_out_of_range");
    }
    req.pairs_path.clear();
    try {
        eval_run(req);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "missing_pairs");
    }
    CHECK(parse_eval_metric("tar@far") == EvalMetric::tar);
}

TEST_CASE("eval_run rank1 matches the brute-force oracle") {
    const fs::path dir = scratch_dir("rank1");
    std::mt19937_64 rng(21);
    const EmbeddingTable gallery = oracle::random_table(50, 16, 4, 12, rng);
    EmbeddingTable probes = oracle::random_table(20, 16, 4, 12, rng);
    for (auto& l : probes.labels) l = gallery.labels[rng() % gallery.count];
    dump_embeddings(gallery, (dir / "g.mfe").string());
    dump_embeddings(probes, (dir / "p.mfe").string());
    // The files hold f32 values, so the oracle sees the reloaded tables.
    const EmbeddingTable g32 = load_embeddings((dir / "g.mfe").string());
    const EmbeddingTable p32 = load_embeddings((dir / "p.mfe").string());

    EvalRequest req;
    req.metric = EvalMetric::rank1;
    req.embeddings_path = (dir / "p.mfe").string();
    req.gallery_path = (dir / "g.mfe").string();
    for (SimilarityMode mode : {SimilarityMode::group_cosine, SimilarityMode::raw_dot}) {
        req.mode = mode;
        CHECK(json::parse(eval_run(req))["rank1"].get<double>() == oracle::rank1(p32, g32, mode));
    }
}

TEST_CASE("capacity_report") {
    const json two = json::parse(capacity_report(2, 3.14159265358979323846, CapMode::paper));
    CHECK(two["log10_S_n"].get<double>() == doctest::Approx(0.7982).epsilon(1e-4));
    CHECK(two["mode"] == "paper");
    const json big = json::parse(capacity_report(128, 3.14159265358979323846 / 3, CapMode::paper));
    CHECK(big.contains("paper_reference"));
    CHECK(std::abs(big["log10_m_star"].get<double>() + big["log10_cap"].get<double>() -
                   big["log10_S_n"].get<double>()) <= 1e-9);
    const json a = json::parse(capacity_report(3, 1.0, CapMode::paper));
    const json b = json::parse(capacity_report(3, 1.0, CapMode::exact_cap));
    CHECK(a["log10_m_star"] != b["log10_m_star"]);
}
