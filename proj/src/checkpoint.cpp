#include "multiface/checkpoint.hpp"

#include <algorithm>
#include <limits>

#include "binary_io.hpp"

namespace multiface {

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedParameter> params) {
    binio::Writer w;
    w.bytes("MFCK", 4);
    w.le<std::uint16_t>(kCheckpointVersion);
    for (const auto& p : params) {
        if (p.name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw ValueError("parameter name too long: " + p.name.substr(0, 32));
        }
        if (p.value.rank() > std::numeric_limits<std::uint8_t>::max()) throw ValueError("parameter rank too large");
        w.le<std::uint16_t>(static_cast<std::uint16_t>(p.name.size()));
        w.bytes(p.name.data(), p.name.size());
        w.le<std::uint8_t>(static_cast<std::uint8_t>(p.value.rank()));
        for (std::size_t d : p.value.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
        for (double v : p.value.data()) w.le<double>(v);
    }
    return w.buffer();
}

std::vector<NamedParameter> decode_checkpoint(std::span<const std::uint8_t> bytes) {
    binio::Reader r(bytes, "truncated");
    auto magic = r.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), "MFCK")) throw FormatError("wrong_magic", "not an MFCK checkpoint");
    const auto version = r.le<std::uint16_t>("version");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported_version", "checkpoint version " + std::to_string(version));
    }
    std::vector<NamedParameter> out;
    while (r.remaining() > 0) {
        const auto name_len = r.le<std::uint16_t>("name length");
        auto name_bytes = r.take(name_len, "name");
        std::string name(name_bytes.begin(), name_bytes.end());
        const auto rank = r.le<std::uint8_t>("rank");
        Shape shape;
        for (std::uint8_t i = 0; i < rank; ++i) shape.push_back(r.le<std::uint32_t>("dims"));
        const std::size_t count = numel(shape);
        r.need(count * 8, "parameter data");
        std::vector<double> values(count);
        for (double& v : values) v = r.le<double>("parameter data");
        out.push_back({std::move(name), Tensor(std::move(shape), std::move(values), true)});
    }
    return out;
}

void save_checkpoint(const std::string& path, std::span<const NamedParameter> params) {
    binio::write_file(path, encode_checkpoint(params));
}

std::vector<NamedParameter> load_checkpoint(const std::string& path) {
    return decode_checkpoint(binio::read_file(path));
}

void restore_parameters(std::span<NamedParameter> into, std::span<const NamedParameter> from) {
    if (into.size() != from.size()) {
        throw ShapeError("checkpoint has " + std::to_string(from.size()) + " parameters, expected " +
                         std::to_string(into.size()));
    }
    for (std::size_t i = 0; i < into.size(); ++i) {
        if (into[i].name != from[i].name || into[i].value.shape() != from[i].value.shape()) {
            throw ShapeError("checkpoint parameter " + from[i].name + shape_string(from[i].value.shape()) +
                             " does not match " + into[i].name + shape_string(into[i].value.shape()));
        }
        std::ranges::copy(from[i].value.data(), into[i].value.mutable_data().begin());
    }
}

}  // namespace multiface
