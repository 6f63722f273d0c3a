#pragma once

#include "imet/nn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imet::data {

enum class Split { train, val, test };

std::string_view to_string(Split split) noexcept;
Split split_from_string(std::string_view name);

/// One labeled split of single-channel images.
///
/// Pixels are kept as the archive's 8-bit values. Once normalized, every
/// image accessor yields value / 255 in [0, 1]; the raw grid stays
/// recoverable as round(255 * normalized).
class ImageDataset {
public:
    ImageDataset() = default;
    ImageDataset(std::vector<std::uint8_t> pixels, std::vector<int> labels, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t n_classes, Split split);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t n_classes() const noexcept { return n_classes_; }
    Split split() const noexcept { return split_; }
    bool normalized() const noexcept { return normalized_; }

    std::span<const int> labels() const noexcept { return labels_; }
    int label(std::size_t i) const { return labels_.at(i); }
    std::span<const std::uint8_t> raw_pixels() const noexcept { return pixels_; }

    /// Pixel value as the model sees it (raw, or raw/255 once normalized).
    double pixel(std::size_t image, std::size_t y, std::size_t x, std::size_t c = 0) const;

    /// Image `i` as a [C, H, W] tensor.
    nn::Tensor image(std::size_t i) const;

    /// Images at `indices`, in that order; labels and metadata carried over.
    ImageDataset subset(std::span<const std::size_t> indices) const;

    friend ImageDataset normalize(const ImageDataset& dataset);

private:
    std::vector<std::uint8_t> pixels_; // N x H x W x C
    std::vector<int> labels_;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 1;
    std::size_t n_classes_ = 0;
    Split split_ = Split::train;
    bool normalized_ = false;
};

/// Loads one split of a MedMNIST-style archive holding train/val/test
/// images and labels. The class count is taken from the largest label
/// across all three splits.
ImageDataset load_dataset(const std::filesystem::path& path, Split split);

struct DatasetSplits {
    ImageDataset train;
    ImageDataset val;
    ImageDataset test;
};

/// All three splits from a single archive read.
DatasetSplits load_splits(const std::filesystem::path& path);

/// Divides every pixel by 255. Throws a state error if already normalized.
ImageDataset normalize(const ImageDataset& dataset);

std::vector<std::size_t> class_histogram(const ImageDataset& dataset);
std::string histogram_csv(const ImageDataset& dataset);

/// Writes the six-key archive layout for the three given splits.
void write_dataset_archive(const std::filesystem::path& path, const ImageDataset& train, const ImageDataset& val,
                           const ImageDataset& test, bool compress = true);

} // namespace imet::data
