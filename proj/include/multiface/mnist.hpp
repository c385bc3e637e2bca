#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace multiface {

/// Images and labels from a pair of IDX files (big-endian headers):
///   images: u32 0x00000803, u32 count, u32 rows, u32 cols, count*rows*cols u8
///   labels: u32 0x00000801, u32 count, count u8
///
/// Error codes: wrong_magic, truncated_header, truncated_data, trailing_data,
/// bad_dimensions, count_mismatch, label_out_of_range.
struct MnistDataset {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<std::uint8_t> labels;

    std::span<const std::uint8_t> image(std::size_t i) const { return {pixels.data() + i * rows * cols, rows * cols}; }
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

MnistDataset parse_mnist_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);
MnistDataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

std::vector<std::uint8_t> encode_idx_images(std::size_t count, std::size_t rows, std::size_t cols,
                                            std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

}  // namespace multiface
