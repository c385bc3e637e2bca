#include "multiface/embeddings.hpp"

#include <algorithm>

#include "binary_io.hpp"

namespace multiface {

std::vector<std::uint8_t> encode_embeddings(const EmbeddingTable& table) {
    table.validate();
    binio::Writer w;
    w.bytes("MFE1", 4);
    w.le<std::uint16_t>(kEmbeddingVersion);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(table.count));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(table.dim));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(table.groups));
    for (double v : table.values) w.le<float>(static_cast<float>(v));
    for (std::uint32_t l : table.labels) w.le<std::uint32_t>(l);
    return w.buffer();
}

EmbeddingTable decode_embeddings(std::span<const std::uint8_t> bytes) {
    binio::Reader r(bytes, "truncated");
    auto magic = r.take(4, "header");
    if (!std::equal(magic.begin(), magic.end(), "MFE1")) throw FormatError("wrong_magic", "not an MFE1 embedding file");
    const auto version = r.le<std::uint16_t>("header");
    if (version != kEmbeddingVersion) {
        throw FormatError("unsupported_version", "embedding file version " + std::to_string(version));
    }
    EmbeddingTable t;
    t.count = r.le<std::uint32_t>("header");
    t.dim = r.le<std::uint32_t>("header");
    t.groups = r.le<std::uint32_t>("header");
    if (t.groups == 0 || (t.dim > 0 && t.dim % t.groups != 0)) {
        throw FormatError("groups_do_not_divide", "embedding file: N=" + std::to_string(t.groups) +
                                                      " does not divide d=" + std::to_string(t.dim));
    }
    const std::size_t values = t.count * t.dim;
    r.need(values * 4 + t.count * 4, "embedding body");
    t.values.resize(values);
    for (double& v : t.values) v = static_cast<double>(r.le<float>("values"));
    t.labels.resize(t.count);
    for (auto& l : t.labels) l = r.le<std::uint32_t>("labels");
    if (r.remaining() != 0) {
        throw FormatError("trailing_data", "embedding file: " + std::to_string(r.remaining()) + " unexpected bytes");
    }
    return t;
}

void dump_embeddings(const EmbeddingTable& table, const std::string& path) {
    binio::write_file(path, encode_embeddings(table));
}

EmbeddingTable load_embeddings(const std::string& path) { return decode_embeddings(binio::read_file(path)); }

}  // namespace multiface
