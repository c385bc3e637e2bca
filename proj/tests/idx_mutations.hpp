#pragma once

// Corrupted variants of a small valid IDX image/label pair, each paired with
// the error code the loader must report.

#include <cstdint>
#include <string>
#include <vector>

#include "multiface/mnist.hpp"

namespace multiface::testing {

struct IdxMutation {
    std::string name;
    std::vector<std::uint8_t> images;
    std::vector<std::uint8_t> labels;
    std::string expected_code;
};

inline void put_be32(std::vector<std::uint8_t>& bytes, std::size_t offset, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes[offset + i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
}

/// Three 4x3 images with labels 0, 1, 2.
inline std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> small_idx() {
    std::vector<std::uint8_t> pixels(3 * 4 * 3);
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>(i * 7);
    const std::vector<std::uint8_t> labels{0, 1, 2};
    return {encode_idx_images(3, 4, 3, pixels), encode_idx_labels(labels)};
}

inline std::vector<IdxMutation> idx_header_mutations() {
    const auto [images, labels] = small_idx();
    std::vector<IdxMutation> out;
    auto add = [&](std::string name, std::vector<std::uint8_t> img, std::vector<std::uint8_t> lab, std::string code) {
        out.push_back({std::move(name), std::move(img), std::move(lab), std::move(code)});
    };
    {
        auto img = images;
        put_be32(img, 0, 0x00000801);
        add("images magic swapped for the labels magic", img, labels, "wrong_magic");
    }
    add("header cut to 10 bytes", {images.begin(), images.begin() + 10}, labels, "truncated_header");
    {
        auto img = images;
        put_be32(img, 8, 0);
        add("zero row count", img, labels, "bad_dimensions");
    }
    {
        auto img = images;
        put_be32(img, 4, 4);
        add("image count inflated past the data", img, labels, "truncated_data");
    }
    {
        auto img = images;
        put_be32(img, 4, 2);
        add("image count deflated below the data", img, labels, "trailing_data");
    }
    {
        auto lab = labels;
        put_be32(lab, 4, 2);
        lab.pop_back();
        add("label count disagrees with image count", images, lab, "count_mismatch");
    }
    return out;
}

}  // namespace multiface::testing
