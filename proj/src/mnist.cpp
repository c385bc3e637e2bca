#include "multiface/mnist.hpp"

#include <algorithm>
#include <sstream>

#include "binary_io.hpp"

namespace multiface {

namespace {

std::string hex(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

}  // namespace

MnistDataset parse_mnist_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
    binio::Reader img(images, "truncated_header");
    const auto img_magic = img.be<std::uint32_t>("images header");
    if (img_magic != kIdxImagesMagic) {
        throw FormatError("wrong_magic", "images file: wrong magic " + hex(img_magic) + ", expected " +
                                             hex(kIdxImagesMagic));
    }
    MnistDataset ds;
    ds.count = img.be<std::uint32_t>("images header");
    ds.rows = img.be<std::uint32_t>("images header");
    ds.cols = img.be<std::uint32_t>("images header");
    if (ds.rows == 0 || ds.cols == 0) {
        throw FormatError("bad_dimensions", "images file: zero image dimension " + std::to_string(ds.rows) + "x" +
                                                std::to_string(ds.cols));
    }
    const std::size_t need = ds.count * ds.rows * ds.cols;
    if (img.remaining() < need) {
        throw FormatError("truncated_data", "images file: " + std::to_string(ds.count) + " images of " +
                                                std::to_string(ds.rows) + "x" + std::to_string(ds.cols) + " need " +
                                                std::to_string(need) + " pixel bytes, found " +
                                                std::to_string(img.remaining()));
    }
    if (img.remaining() > need) {
        throw FormatError("trailing_data", "images file: " + std::to_string(img.remaining() - need) +
                                               " bytes after the declared pixels");
    }
    auto px = img.take(need, "pixels");
    ds.pixels.assign(px.begin(), px.end());

    binio::Reader lab(labels, "truncated_header");
    const auto lab_magic = lab.be<std::uint32_t>("labels header");
    if (lab_magic != kIdxLabelsMagic) {
        throw FormatError("wrong_magic", "labels file: wrong magic " + hex(lab_magic) + ", expected " +
                                             hex(kIdxLabelsMagic));
    }
    const std::size_t label_count = lab.be<std::uint32_t>("labels header");
    if (label_count != ds.count) {
        throw FormatError("count_mismatch", "images file has " + std::to_string(ds.count) + " entries, labels file " +
                                                std::to_string(label_count));
    }
    if (lab.remaining() < label_count) {
        throw FormatError("truncated_data", "labels file: need " + std::to_string(label_count) + " bytes, found " +
                                                std::to_string(lab.remaining()));
    }
    if (lab.remaining() > label_count) {
        throw FormatError("trailing_data", "labels file: " + std::to_string(lab.remaining() - label_count) +
                                               " bytes after the declared labels");
    }
    auto lb = lab.take(label_count, "labels");
    ds.labels.assign(lb.begin(), lb.end());
    if (auto it = std::ranges::find_if(ds.labels, [](std::uint8_t v) { return v > 9; }); it != ds.labels.end()) {
        throw FormatError("label_out_of_range", "label " + std::to_string(*it) + " at index " +
                                                    std::to_string(it - ds.labels.begin()) + " outside 0-9");
    }
    return ds;
}

MnistDataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    const auto images = binio::read_file(images_path);
    const auto labels = binio::read_file(labels_path);
    return parse_mnist_idx(images, labels);
}

std::vector<std::uint8_t> encode_idx_images(std::size_t count, std::size_t rows, std::size_t cols,
                                            std::span<const std::uint8_t> pixels) {
    std::vector<std::uint8_t> out;
    auto be32 = [&](std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
    };
    be32(kIdxImagesMagic);
    be32(static_cast<std::uint32_t>(count));
    be32(static_cast<std::uint32_t>(rows));
    be32(static_cast<std::uint32_t>(cols));
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
    std::vector<std::uint8_t> out;
    auto be32 = [&](std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
    };
    be32(kIdxLabelsMagic);
    be32(static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

}  // namespace multiface
