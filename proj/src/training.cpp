#include "multiface/training.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "multiface/checkpoint.hpp"
#include "multiface/embeddings.hpp"
#include "multiface/errors.hpp"
#include "multiface/mnist.hpp"
#include "multiface/multihead.hpp"
#include "multiface/network.hpp"
#include "multiface/ops.hpp"
#include "multiface/pairs.hpp"

namespace multiface {

namespace fs = std::filesystem;

std::vector<std::string> metrics_columns(std::size_t heads) {
    std::vector<std::string> cols{"step", "lr", "train_loss"};
    for (std::size_t n = 0; n < heads; ++n) cols.push_back("head" + std::to_string(n) + "_loss");
    for (std::size_t n = 0; n < heads; ++n) cols.push_back("head" + std::to_string(n) + "_grad");
    cols.push_back("eval_accuracy");
    return cols;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
    return out + "\n";
}

// Inputs already normalized, one flattened sample per row.
struct Split {
    std::vector<double> inputs;
    std::vector<int> labels;
    std::size_t sample_size = 0;

    std::size_t count() const { return labels.size(); }
};

struct RunData {
    Split train;
    Split eval;
    std::size_t classes = 0;
    std::size_t image_side = 0;  // non-zero for MNIST
    PairSet eval_pairs;
};

constexpr double kPixelCenter = 127.5;
constexpr double kPixelScale = 128.0;

Split mnist_split(const MnistDataset& ds) {
    Split s;
    s.sample_size = ds.rows * ds.cols;
    s.inputs.reserve(ds.pixels.size());
    for (std::uint8_t p : ds.pixels) s.inputs.push_back((p - kPixelCenter) / kPixelScale);
    s.labels.assign(ds.labels.begin(), ds.labels.end());
    return s;
}

RunData load_data(const RunConfig& cfg) {
    RunData data;
    if (cfg.dataset == DatasetKind::mnist) {
        const MnistDataset train = load_mnist_idx(cfg.train_images, cfg.train_labels);
        const MnistDataset test = load_mnist_idx(cfg.test_images, cfg.test_labels);
        if (train.rows != 28 || train.cols != 28 || test.rows != 28 || test.cols != 28) {
            throw FormatError("bad_dimensions", "MNIST images must be 28x28");
        }
        data.train = mnist_split(train);
        data.eval = mnist_split(test);
        data.classes = 10;
        data.image_side = 28;
        std::mt19937_64 pair_rng(kMnistPairSeed);
        const std::vector<std::uint32_t> labels(test.labels.begin(), test.labels.end());
        data.eval_pairs = make_balanced_pairs(labels, kMnistPairsPerKind, pair_rng);
    } else {
        const SyntheticDataset ds = synth_identity_dataset(cfg.synthetic);
        data.train.inputs = ds.train_inputs;
        data.train.labels.assign(ds.train_labels.begin(), ds.train_labels.end());
        data.train.sample_size = ds.input_dim;
        data.eval.inputs = ds.eval_inputs;
        data.eval.labels.assign(ds.eval_labels.begin(), ds.eval_labels.end());
        data.eval.sample_size = ds.input_dim;
        data.classes = cfg.synthetic.identities;
        data.eval_pairs = ds.eval_pairs;
    }
    if (data.train.count() < cfg.batch_size) {
        throw ValueError("bad_config", "config field 'batch_size': " + std::to_string(cfg.batch_size) +
                                           " exceeds the " + std::to_string(data.train.count()) +
                                           " training samples");
    }
    if (data.eval.count() == 0) throw ValueError("empty_eval_split", "the eval split has no samples");
    return data;
}

// Draws batches from seeded epoch permutations; a tail shorter than the
// batch is skipped.
class BatchSampler {
public:
    BatchSampler(std::size_t count, std::size_t batch, std::mt19937_64& rng)
        : order_(count), batch_(batch), rng_(rng) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        pos_ = count;
    }

    std::span<const std::size_t> next() {
        if (pos_ + batch_ > order_.size()) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            pos_ = 0;
        }
        pos_ += batch_;
        return {order_.data() + pos_ - batch_, batch_};
    }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_;
    std::size_t pos_;
    std::mt19937_64& rng_;
};

Shape batch_shape(const NetworkSpec& net, std::size_t batch) {
    Shape s{batch};
    s.insert(s.end(), net.input_shape.begin(), net.input_shape.end());
    return s;
}

// Copies a batch, translating each MNIST digit by up to `shift` pixels with
// background fill.
std::vector<double> gather_batch(const Split& split, std::span<const std::size_t> rows, std::size_t image_side,
                                 std::size_t shift, std::mt19937_64& rng) {
    const std::size_t sz = split.sample_size;
    std::vector<double> out(rows.size() * sz);
    if (shift == 0) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::copy_n(split.inputs.begin() + static_cast<std::ptrdiff_t>(rows[i] * sz), sz, out.begin() + static_cast<std::ptrdiff_t>(i * sz));
        }
        return out;
    }
    const double background = -kPixelCenter / kPixelScale;
    const int k = static_cast<int>(shift);
    const int side = static_cast<int>(image_side);
    std::uniform_int_distribution<int> offset(-k, k);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int dy = offset(rng);
        const int dx = offset(rng);
        const double* src = split.inputs.data() + rows[i] * sz;
        double* dst = out.data() + i * sz;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const int sy = y - dy, sx = x - dx;
                const bool inside = sy >= 0 && sy < side && sx >= 0 && sx < side;
                dst[y * side + x] = inside ? src[sy * side + sx] : background;
            }
        }
    }
    return out;
}

constexpr std::size_t kEvalChunk = 500;

std::vector<double> embed_all(const Network& net, const Split& split) {
    NoGradGuard no_grad;
    std::vector<double> out;
    out.reserve(split.count() * net.spec().embedding_dim);
    for (std::size_t begin = 0; begin < split.count(); begin += kEvalChunk) {
        const std::size_t n = std::min(kEvalChunk, split.count() - begin);
        std::vector<double> values(split.inputs.begin() + static_cast<std::ptrdiff_t>(begin * split.sample_size),
                                   split.inputs.begin() + static_cast<std::ptrdiff_t>((begin + n) * split.sample_size));
        const Tensor emb = net.forward(Tensor(batch_shape(net.spec(), n), std::move(values)));
        out.insert(out.end(), emb.data().begin(), emb.data().end());
    }
    return out;
}

// Classification accuracy through the first head's cosine argmax.
double first_head_accuracy(const std::vector<double>& embeddings, const Split& split, const MultiHead& mh,
                           const GroupSpec& spec) {
    NoGradGuard no_grad;
    const std::size_t count = split.count();
    const Tensor emb({count, spec.dim}, embeddings);
    const Tensor first = ops::slice_columns(emb, 0, spec.group_dim());
    const Tensor cos = ops::matmul_nt(ops::l2_normalize(first), ops::l2_normalize(mh.heads[0].weight));
    const std::size_t classes = cos.dim(1);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto row = cos.data().subspan(i * classes, classes);
        const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        correct += static_cast<int>(best) == split.labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(count);
}

// The step loop frees and reallocates the same large buffers every step;
// keeping them on the heap instead of fresh mmaps avoids page-fault churn.
void tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id)};
    return std::mt19937_64(seq);
}

class OutFile {
public:
    explicit OutFile(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw FormatError("write_failed", "cannot open " + path.string() + " for writing");
    }
    void write(const std::string& text) {
        out_ << text;
        out_.flush();
        if (!out_) throw FormatError("write_failed", "write to " + path_.string() + " failed");
    }

private:
    fs::path path_;
    std::ofstream out_;
};

}  // namespace

std::string format_metrics_row(const MetricsRow& row) {
    std::vector<std::string> parts{std::to_string(row.step), fmt(row.lr), fmt(row.train_loss)};
    for (double v : row.head_losses) parts.push_back(fmt(v));
    for (double v : row.head_grads) parts.push_back(fmt(v));
    parts.push_back(fmt(row.eval_accuracy));
    return join(parts);
}

TrainResult train_run(const RunConfig& cfg) {
    RunConfig resolved = cfg;
    if (resolved.network.layers.empty()) resolved.resolve_network();
    resolved.validate();
    const RunData data = load_data(resolved);
    tune_allocator();

    const fs::path dir(resolved.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FormatError("write_failed", "cannot create " + dir.string() + ": " + ec.message());

    std::mt19937_64 init_rng = stream(resolved.seed, 1);
    std::mt19937_64 data_rng = stream(resolved.seed, 2);
    std::mt19937_64 dropout_rng = stream(resolved.seed, 3);

    Network net(resolved.network, init_rng);
    const GroupSpec spec = resolved.group_spec();
    const HeadLoss head_loss = resolved.loss == LossKind::softmax ? HeadLoss::softmax
                               : resolved.loss == LossKind::lml   ? HeadLoss::large_margin
                                                                  : resolved.head_loss;
    const MarginConfig margin = head_loss == HeadLoss::large_margin ? resolved.margin_config() : MarginConfig{};
    MultiHead mh = MultiHead::create(data.classes, spec, head_loss, margin, init_rng);

    std::vector<NamedParameter> named = net.parameters();
    for (std::size_t n = 0; n < mh.heads.size(); ++n) {
        const std::string prefix = "head" + std::to_string(n);
        named.push_back({prefix + ".weight", mh.heads[n].weight});
        if (mh.heads[n].bias) named.push_back({prefix + ".bias", *mh.heads[n].bias});
    }
    std::vector<Tensor> params;
    for (const auto& p : named) params.push_back(p.value);
    OptimizerState opt(params, resolved.momentum, resolved.weight_decay, resolved.milestones);

    OutFile(dir / "config.json").write(run_config_to_json(resolved));
    save_pairs(data.eval_pairs, (dir / "eval_pairs.txt").string());
    OutFile metrics(dir / "metrics.csv");
    OutFile grads_csv(dir / "head_grads.csv");
    metrics.write(join(metrics_columns(spec.groups)));
    {
        std::vector<std::string> cols{"step"};
        for (std::size_t n = 0; n < spec.groups; ++n) cols.push_back("head" + std::to_string(n) + "_grad");
        grads_csv.write(join(cols));
    }

    TrainResult result;
    result.run_dir = dir.string();
    result.eval_pairs = data.eval_pairs;
    BatchSampler sampler(data.train.count(), resolved.batch_size, data_rng);
    const std::size_t shift = resolved.dataset == DatasetKind::mnist ? resolved.augment_shift : 0;
    const Shape shape = batch_shape(resolved.network, resolved.batch_size);

    for (std::uint64_t step = 0; step < resolved.total_steps; ++step) {
        const double lr = lr_at_step(step, resolved.base_lr, resolved.milestones);
        const auto rows = sampler.next();
        std::vector<int> labels;
        labels.reserve(rows.size());
        for (std::size_t r : rows) labels.push_back(data.train.labels[r]);
        const Tensor x(shape, gather_batch(data.train, rows, data.image_side, shift, data_rng));

        for (Tensor& p : params) p.zero_grad();
        const Tensor emb = net.forward(x, true, dropout_rng);
        const MultiHeadLoss loss = mlml_loss(emb, labels, mh, spec);
        if (!std::isfinite(loss.total.item())) {
            throw NumericError("non_finite_loss", "training loss became non-finite at step " + std::to_string(step));
        }
        loss.total.backward();
        std::vector<double> head_grads = head_gradient_stats(mh);
        sgd_step(params, opt, lr);

        {
            std::vector<std::string> parts{std::to_string(step + 1)};
            for (double g : head_grads) parts.push_back(fmt(g));
            grads_csv.write(join(parts));
        }
        result.step_head_grads.push_back(head_grads);

        if ((step + 1) % resolved.eval_every == 0 || step + 1 == resolved.total_steps) {
            MetricsRow row;
            row.step = step + 1;
            row.lr = lr;
            row.train_loss = loss.total.item();
            row.head_losses = loss.per_head;
            row.head_grads = std::move(head_grads);
            row.eval_accuracy = first_head_accuracy(embed_all(net, data.eval), data.eval, mh, spec);
            metrics.write(format_metrics_row(row));
            result.rows.push_back(std::move(row));
        }
    }

    save_checkpoint((dir / "checkpoint.mfck").string(), named);

    const std::vector<double> eval_emb = embed_all(net, data.eval);
    result.final_accuracy = first_head_accuracy(eval_emb, data.eval, mh, spec);
    EmbeddingTable& table = result.eval_embeddings;
    table.count = data.eval.count();
    table.dim = spec.dim;
    table.groups = spec.groups;
    table.values = eval_emb;
    table.labels.assign(data.eval.labels.begin(), data.eval.labels.end());
    dump_embeddings(table, (dir / "embeddings_eval.mfe").string());
    return result;
}

}  // namespace multiface
