#include "multiface/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "multiface/errors.hpp"

namespace multiface {

using nlohmann::json;

std::string_view to_string(DatasetKind kind) { return kind == DatasetKind::mnist ? "mnist" : "synthetic"; }

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::softmax: return "softmax";
        case LossKind::lml: return "lml";
        case LossKind::mlml: return "mlml";
    }
    return "?";
}

std::string_view to_string(HeadLoss kind) { return kind == HeadLoss::softmax ? "softmax" : "large-margin"; }

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw ValueError("bad_config", "config field '" + field + "': " + why);
}

// Walks one JSON object, handing out typed fields and rejecting leftovers.
class Fields {
public:
    Fields(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) bad(prefix_.empty() ? "<root>" : prefix_, "expected an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) bad(name(key), "expected a string");
            out = v.get<std::string>();
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) bad(name(key), "expected true or false");
            out = v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
                bad(name(key), "expected a non-negative integer");
            }
            out = v.get<T>();
        } else {
            if (!v.is_number()) bad(name(key), "expected a number");
            out = v.get<T>();
        }
    }

    std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    void finish() const {
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.count(key)) bad(name(key), "unknown key");
        }
    }

private:
    const json& obj_;
    std::string prefix_;
    std::set<std::string> seen_;
};

json parse_text(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError("bad_json", std::string("cannot parse JSON: ") + e.what());
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("file_not_found", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t get_size(const json& v, const std::string& field) {
    if (!v.is_number_unsigned()) bad(field, "expected a non-negative integer");
    return v.get<std::size_t>();
}

LayerSpec parse_layer(const json& v, const std::string& field) {
    Fields f(v, field);
    std::string type;
    f.get("type", type);
    LayerSpec layer;
    if (type == "conv2d") {
        Conv2dLayer c;
        f.get("out_channels", c.out_channels);
        f.get("kernel", c.kernel);
        f.get("stride", c.stride);
        layer = c;
    } else if (type == "maxpool") {
        MaxPoolLayer m;
        f.get("kernel", m.kernel);
        layer = m;
    } else if (type == "linear") {
        LinearLayer l;
        f.get("out_dim", l.out_dim);
        layer = l;
    } else if (type == "relu") {
        layer = ReluLayer{};
    } else if (type == "dropout") {
        DropoutLayer d;
        f.get("rate", d.rate);
        layer = d;
    } else if (type == "flatten") {
        layer = FlattenLayer{};
    } else {
        bad(field + ".type", "unknown layer type '" + type + "'");
    }
    f.finish();
    return layer;
}

json layer_to_json(const LayerSpec& layer) {
    return std::visit(
        [](const auto& l) -> json {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Conv2dLayer>)
                return {{"type", "conv2d"}, {"out_channels", l.out_channels}, {"kernel", l.kernel}, {"stride", l.stride}};
            else if constexpr (std::is_same_v<L, MaxPoolLayer>)
                return {{"type", "maxpool"}, {"kernel", l.kernel}};
            else if constexpr (std::is_same_v<L, LinearLayer>)
                return {{"type", "linear"}, {"out_dim", l.out_dim}};
            else if constexpr (std::is_same_v<L, DropoutLayer>)
                return {{"type", "dropout"}, {"rate", l.rate}};
            else if constexpr (std::is_same_v<L, ReluLayer>)
                return {{"type", "relu"}};
            else
                return {{"type", "flatten"}};
        },
        layer);
}

SyntheticIdentitySpec parse_synthetic(const json& v, const std::string& prefix) {
    SyntheticIdentitySpec s;
    Fields f(v, prefix);
    f.get("identities", s.identities);
    f.get("samples_per_identity", s.samples_per_identity);
    f.get("input_dim", s.input_dim);
    f.get("center_dispersion", s.center_dispersion);
    f.get("noise_scale", s.noise_scale);
    f.get("seed", s.seed);
    f.get("eval_per_identity", s.eval_per_identity);
    f.get("pairs_per_kind", s.pairs_per_kind);
    f.finish();
    return s;
}

json synthetic_to_json(const SyntheticIdentitySpec& s) {
    return {{"identities", s.identities},
            {"samples_per_identity", s.samples_per_identity},
            {"input_dim", s.input_dim},
            {"center_dispersion", s.center_dispersion},
            {"noise_scale", s.noise_scale},
            {"seed", s.seed},
            {"eval_per_identity", s.eval_per_identity},
            {"pairs_per_kind", s.pairs_per_kind}};
}

void check_finite(double v, const std::string& field) {
    if (!std::isfinite(v)) bad(field, "must be finite");
}

}  // namespace

MarginConfig RunConfig::margin_config() const { return preset_config(margin_preset, scale, margin); }

void RunConfig::resolve_network() {
    if (network_name == "lenet") {
        network = lenet_spec(embedding_dim, dropout);
    } else if (network_name == "mlp") {
        const std::size_t in = dataset == DatasetKind::mnist ? 28 * 28 : synthetic.input_dim;
        network = mlp_spec(in, mlp_hidden, embedding_dim);
        if (dropout > 0.0) {
            network.layers.insert(network.layers.end() - 1, DropoutLayer{dropout});
        }
    } else if (network_name != "custom") {
        bad("network", "expected \"lenet\", \"mlp\" or a layer object, got \"" + network_name + "\"");
    }
}

void RunConfig::validate() const {
    if (dataset == DatasetKind::mnist) {
        for (auto [field, path] : {std::pair{"train_images", &train_images}, {"train_labels", &train_labels},
                                   {"test_images", &test_images}, {"test_labels", &test_labels}}) {
            if (path->empty()) bad(field, "required for the mnist dataset");
        }
        if (augment_shift >= 28) bad("augment_shift", "must be below the image size 28");
    } else {
        try {
            synthetic.validate();
        } catch (const Error& e) {
            bad("synthetic", e.what());
        }
        if (augment_shift != 0) bad("augment_shift", "only applies to the mnist dataset");
    }
    if (embedding_dim == 0) bad("embedding_dim", "must be >= 1");
    if (groups == 0) bad("groups", "must be >= 1");
    if (loss == LossKind::mlml && embedding_dim % groups != 0) {
        throw ValueError("groups_do_not_divide", "config field 'groups': " + std::to_string(groups) +
                                                     " does not divide embedding_dim " +
                                                     std::to_string(embedding_dim));
    }
    try {
        margin_config().validate();
    } catch (const Error& e) {
        bad("margin_preset", e.what());
    }
    if (batch_size == 0) bad("batch_size", "must be >= 1");
    if (eval_every == 0) bad("eval_every", "must be >= 1");
    check_finite(base_lr, "base_lr");
    if (!(base_lr > 0.0)) bad("base_lr", "must be > 0");
    try {
        validate_milestones(milestones);
    } catch (const Error& e) {
        bad("milestones", e.what());
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) bad("momentum", "must be in [0, 1)");
    check_finite(weight_decay, "weight_decay");
    if (!(weight_decay >= 0.0)) bad("weight_decay", "must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout", "must be in [0, 1)");
    if (output_dir.empty()) bad("output_dir", "must not be empty");

    try {
        network.validate();
    } catch (const Error& e) {
        bad("network", e.what());
    }
    if (network.embedding_dim != embedding_dim) {
        bad("network", "network output " + std::to_string(network.embedding_dim) + " != embedding_dim " +
                           std::to_string(embedding_dim));
    }
    const std::size_t in = numel(network.input_shape);
    const std::size_t want = dataset == DatasetKind::mnist ? 28 * 28 : synthetic.input_dim;
    if (in != want) {
        bad("network", "input " + shape_string(network.input_shape) + " does not hold " + std::to_string(want) +
                           " input values");
    }
}

RunConfig parse_run_config(std::string_view json_text) {
    const json doc = parse_text(json_text);
    Fields f(doc, "");
    RunConfig cfg;

    std::string s;
    if (f.has("dataset")) {
        f.get("dataset", s);
        if (s == "mnist") cfg.dataset = DatasetKind::mnist;
        else if (s == "synthetic") cfg.dataset = DatasetKind::synthetic;
        else bad("dataset", "expected \"mnist\" or \"synthetic\", got \"" + s + "\"");
    }
    f.get("train_images", cfg.train_images);
    f.get("train_labels", cfg.train_labels);
    f.get("test_images", cfg.test_images);
    f.get("test_labels", cfg.test_labels);
    if (f.has("synthetic")) cfg.synthetic = parse_synthetic(f.raw("synthetic"), "synthetic");

    if (f.has("loss")) {
        f.get("loss", s);
        if (s == "softmax") cfg.loss = LossKind::softmax;
        else if (s == "lml") cfg.loss = LossKind::lml;
        else if (s == "mlml") cfg.loss = LossKind::mlml;
        else bad("loss", "expected \"softmax\", \"lml\" or \"mlml\", got \"" + s + "\"");
    }
    if (f.has("head_loss")) {
        f.get("head_loss", s);
        if (s == "softmax") cfg.head_loss = HeadLoss::softmax;
        else if (s == "large-margin") cfg.head_loss = HeadLoss::large_margin;
        else bad("head_loss", "expected \"softmax\" or \"large-margin\", got \"" + s + "\"");
    }
    f.get("margin_preset", cfg.margin_preset);
    f.get("scale", cfg.scale);
    f.get("margin", cfg.margin);
    f.get("groups", cfg.groups);
    f.get("embedding_dim", cfg.embedding_dim);
    f.get("batch_size", cfg.batch_size);
    f.get("total_steps", cfg.total_steps);
    f.get("base_lr", cfg.base_lr);
    if (f.has("milestones")) {
        const json& ms = f.raw("milestones");
        if (!ms.is_array()) bad("milestones", "expected an array");
        cfg.milestones.clear();
        for (std::size_t i = 0; i < ms.size(); ++i) {
            Milestone m;
            Fields mf(ms[i], "milestones[" + std::to_string(i) + "]");
            if (!mf.has("step")) bad(mf.name("step"), "required");
            mf.get("step", m.step);
            mf.get("divisor", m.divisor);
            mf.finish();
            cfg.milestones.push_back(m);
        }
    }
    f.get("momentum", cfg.momentum);
    f.get("weight_decay", cfg.weight_decay);
    if (!f.has("seed")) bad("seed", "required (runs are never seeded from entropy)");
    f.get("seed", cfg.seed);
    f.get("eval_every", cfg.eval_every);
    f.get("augment_shift", cfg.augment_shift);
    f.get("dropout", cfg.dropout);
    f.get("output_dir", cfg.output_dir);
    if (f.has("mlp_hidden")) {
        const json& h = f.raw("mlp_hidden");
        if (!h.is_array()) bad("mlp_hidden", "expected an array");
        cfg.mlp_hidden.clear();
        for (const json& v : h) cfg.mlp_hidden.push_back(get_size(v, "mlp_hidden"));
    }

    if (f.has("network")) {
        const json& net = f.raw("network");
        if (net.is_string()) {
            cfg.network_name = net.get<std::string>();
        } else {
            Fields nf(net, "network");
            cfg.network_name = "custom";
            if (!nf.has("input_shape") || !nf.has("layers")) bad("network", "needs input_shape and layers");
            const json& shape = nf.raw("input_shape");
            const json& layers = nf.raw("layers");
            if (!shape.is_array() || !layers.is_array()) bad("network", "input_shape and layers must be arrays");
            for (const json& d : shape) cfg.network.input_shape.push_back(get_size(d, "network.input_shape"));
            for (std::size_t i = 0; i < layers.size(); ++i) {
                cfg.network.layers.push_back(parse_layer(layers[i], "network.layers[" + std::to_string(i) + "]"));
            }
            nf.finish();
            cfg.network.embedding_dim = cfg.embedding_dim;
        }
    }
    f.finish();
    cfg.resolve_network();
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_text(path)); }

std::string run_config_to_json(const RunConfig& cfg) {
    json doc;
    doc["dataset"] = to_string(cfg.dataset);
    if (cfg.dataset == DatasetKind::mnist) {
        doc["train_images"] = cfg.train_images;
        doc["train_labels"] = cfg.train_labels;
        doc["test_images"] = cfg.test_images;
        doc["test_labels"] = cfg.test_labels;
    } else {
        doc["synthetic"] = synthetic_to_json(cfg.synthetic);
    }
    if (cfg.network_name == "custom") {
        json layers = json::array();
        for (const auto& l : cfg.network.layers) layers.push_back(layer_to_json(l));
        doc["network"] = {{"input_shape", cfg.network.input_shape}, {"layers", layers}};
    } else {
        doc["network"] = cfg.network_name;
        if (cfg.network_name == "mlp") doc["mlp_hidden"] = cfg.mlp_hidden;
    }
    doc["loss"] = to_string(cfg.loss);
    doc["head_loss"] = to_string(cfg.head_loss);
    doc["margin_preset"] = cfg.margin_preset;
    doc["scale"] = cfg.scale;
    doc["margin"] = cfg.margin;
    doc["groups"] = cfg.groups;
    doc["embedding_dim"] = cfg.embedding_dim;
    doc["batch_size"] = cfg.batch_size;
    doc["total_steps"] = cfg.total_steps;
    doc["base_lr"] = cfg.base_lr;
    json ms = json::array();
    for (const Milestone& m : cfg.milestones) ms.push_back({{"step", m.step}, {"divisor", m.divisor}});
    doc["milestones"] = ms;
    doc["momentum"] = cfg.momentum;
    doc["weight_decay"] = cfg.weight_decay;
    doc["seed"] = cfg.seed;
    doc["eval_every"] = cfg.eval_every;
    doc["augment_shift"] = cfg.augment_shift;
    doc["dropout"] = cfg.dropout;
    doc["output_dir"] = cfg.output_dir;
    return doc.dump(2) + "\n";
}

SyntheticIdentitySpec parse_synthetic_spec(std::string_view json_text) {
    SyntheticIdentitySpec spec = parse_synthetic(parse_text(json_text), "");
    spec.validate();
    return spec;
}

SyntheticIdentitySpec load_synthetic_spec(const std::string& path) { return parse_synthetic_spec(read_text(path)); }

RunConfig mnist_preset(const std::string& data_dir, std::size_t groups, std::uint64_t seed,
                       std::uint64_t total_steps) {
    RunConfig cfg;
    cfg.dataset = DatasetKind::mnist;
    cfg.train_images = data_dir + "/train-images-idx3-ubyte";
    cfg.train_labels = data_dir + "/train-labels-idx1-ubyte";
    cfg.test_images = data_dir + "/t10k-images-idx3-ubyte";
    cfg.test_labels = data_dir + "/t10k-labels-idx1-ubyte";
    cfg.network_name = "lenet";
    cfg.embedding_dim = 32;
    cfg.dropout = 0.4;
    if (groups == 0) {
        cfg.loss = LossKind::softmax;
        cfg.groups = 1;
    } else {
        cfg.loss = LossKind::mlml;
        cfg.head_loss = HeadLoss::softmax;
        cfg.groups = groups;
    }
    cfg.batch_size = 128;
    cfg.total_steps = total_steps;
    cfg.base_lr = 0.02;
    cfg.milestones = {{total_steps * 60 / 100, 10.0}, {total_steps * 85 / 100, 10.0}};
    cfg.seed = seed;
    cfg.eval_every = 25;
    cfg.augment_shift = 2;
    cfg.output_dir = "runs/mnist";
    cfg.resolve_network();
    cfg.validate();
    return cfg;
}

}  // namespace multiface
