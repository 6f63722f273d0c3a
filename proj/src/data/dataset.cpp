#include "imet/data/dataset.hpp"

#include "imet/common/error.hpp"
#include "imet/data/npz.hpp"

#include <algorithm>

namespace imet::data {

std::string_view to_string(Split split) noexcept {
    switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "unknown";
}

Split split_from_string(std::string_view name) {
    for (auto split : {Split::train, Split::val, Split::test}) {
        if (to_string(split) == name) {
            return split;
        }
    }
    fail(ErrorKind::invalid_config, "unknown split '" + std::string(name) + "'");
}

ImageDataset::ImageDataset(std::vector<std::uint8_t> pixels, std::vector<int> labels, std::size_t height,
                           std::size_t width, std::size_t channels, std::size_t n_classes, Split split)
    : pixels_(std::move(pixels)), labels_(std::move(labels)), height_(height), width_(width), channels_(channels),
      n_classes_(n_classes), split_(split) {
    if (channels_ != 1) {
        fail(ErrorKind::invalid_shape, "only single-channel images are supported, got " + std::to_string(channels_) +
                                           " channels");
    }
    if (height_ == 0 || width_ == 0) {
        fail(ErrorKind::invalid_shape, "image dimensions must be positive");
    }
    if (pixels_.size() != labels_.size() * height_ * width_ * channels_) {
        fail(ErrorKind::inconsistent_archive, std::to_string(labels_.size()) + " labels do not match " +
                                                  std::to_string(pixels_.size()) + " pixel values");
    }
    for (int label : labels_) {
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes_) {
            fail(ErrorKind::invalid_label, "label " + std::to_string(label) + " outside [0, " +
                                               std::to_string(n_classes_) + ")");
        }
    }
}

double ImageDataset::pixel(std::size_t image, std::size_t y, std::size_t x, std::size_t c) const {
    const double raw = pixels_.at(((image * height_ + y) * width_ + x) * channels_ + c);
    return normalized_ ? raw / 255.0 : raw;
}

nn::Tensor ImageDataset::image(std::size_t i) const {
    if (i >= size()) {
        fail(ErrorKind::invalid_input, "image index " + std::to_string(i) + " outside dataset of " +
                                           std::to_string(size()));
    }
    nn::Tensor out({channels_, height_, width_});
    const std::uint8_t* src = pixels_.data() + i * height_ * width_ * channels_;
    for (std::size_t y = 0; y < height_; ++y) {
        for (std::size_t x = 0; x < width_; ++x) {
            for (std::size_t c = 0; c < channels_; ++c) {
                const double raw = src[(y * width_ + x) * channels_ + c];
                out.at(c, y, x) = normalized_ ? raw / 255.0 : raw;
            }
        }
    }
    return out;
}

ImageDataset ImageDataset::subset(std::span<const std::size_t> indices) const {
    const std::size_t stride = height_ * width_ * channels_;
    std::vector<std::uint8_t> pixels;
    pixels.reserve(indices.size() * stride);
    std::vector<int> labels;
    labels.reserve(indices.size());
    for (auto i : indices) {
        if (i >= size()) {
            fail(ErrorKind::invalid_input, "subset index " + std::to_string(i) + " out of range");
        }
        pixels.insert(pixels.end(), pixels_.begin() + static_cast<std::ptrdiff_t>(i * stride),
                      pixels_.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
        labels.push_back(labels_[i]);
    }
    ImageDataset out(std::move(pixels), std::move(labels), height_, width_, channels_, n_classes_, split_);
    out.normalized_ = normalized_;
    return out;
}

ImageDataset normalize(const ImageDataset& dataset) {
    if (dataset.normalized_) {
        fail(ErrorKind::state, "dataset split '" + std::string(to_string(dataset.split_)) + "' is already normalized");
    }
    ImageDataset out = dataset;
    out.normalized_ = true;
    return out;
}

namespace {

const NpyArray& require(const std::map<std::string, NpyArray>& arrays, const std::string& key,
                        const std::filesystem::path& path) {
    const auto it = arrays.find(key);
    if (it == arrays.end()) {
        fail(ErrorKind::malformed_archive, path.string() + " lacks required array '" + key + "'");
    }
    return it->second;
}

std::vector<int> flatten_labels(const NpyArray& labels, const std::string& key) {
    if (labels.shape.empty() || labels.shape.size() > 2 || (labels.shape.size() == 2 && labels.shape[1] != 1)) {
        fail(ErrorKind::malformed_archive, key + " must have shape N or N x 1");
    }
    std::vector<int> out;
    for (auto v : labels.to_integers()) {
        if (v < 0 || v > 1'000'000) {
            fail(ErrorKind::invalid_label, key + " holds invalid label " + std::to_string(v));
        }
        out.push_back(static_cast<int>(v));
    }
    return out;
}

} // namespace

namespace {

ImageDataset split_from_arrays(const std::map<std::string, NpyArray>& arrays, const std::filesystem::path& path,
                               Split split) {
    int max_label = -1;
    for (auto s : {Split::train, Split::val, Split::test}) {
        const std::string prefix(to_string(s));
        require(arrays, prefix + "_images", path);
        const auto labels = flatten_labels(require(arrays, prefix + "_labels", path), prefix + "_labels");
        for (int l : labels) {
            max_label = std::max(max_label, l);
        }
    }

    const std::string prefix(to_string(split));
    const NpyArray& images = require(arrays, prefix + "_images", path);
    auto labels = flatten_labels(require(arrays, prefix + "_labels", path), prefix + "_labels");

    if (images.dtype != "|u1") {
        fail(ErrorKind::malformed_archive, prefix + "_images must be 8-bit unsigned, got '" + images.dtype + "'");
    }
    std::size_t channels = 1;
    if (images.shape.size() == 4) {
        channels = images.shape[3];
    } else if (images.shape.size() != 3) {
        fail(ErrorKind::malformed_archive, prefix + "_images must be N x H x W or N x H x W x C");
    }
    if (channels != 1) {
        fail(ErrorKind::invalid_shape, prefix + "_images has " + std::to_string(channels) +
                                           " channels; only grayscale archives are supported");
    }
    if (images.shape[0] != labels.size()) {
        fail(ErrorKind::inconsistent_archive, prefix + "_images holds " + std::to_string(images.shape[0]) +
                                                  " images but " + prefix + "_labels holds " +
                                                  std::to_string(labels.size()));
    }
    std::vector<std::uint8_t> pixels(images.bytes.size());
    std::transform(images.bytes.begin(), images.bytes.end(), pixels.begin(),
                   [](std::byte b) { return std::to_integer<std::uint8_t>(b); });
    return ImageDataset(std::move(pixels), std::move(labels), images.shape[1], images.shape[2], channels,
                        static_cast<std::size_t>(max_label + 1), split);
}

} // namespace

ImageDataset load_dataset(const std::filesystem::path& path, Split split) {
    return split_from_arrays(read_npz(path), path, split);
}

DatasetSplits load_splits(const std::filesystem::path& path) {
    const auto arrays = read_npz(path);
    return {split_from_arrays(arrays, path, Split::train), split_from_arrays(arrays, path, Split::val),
            split_from_arrays(arrays, path, Split::test)};
}

std::vector<std::size_t> class_histogram(const ImageDataset& dataset) {
    std::vector<std::size_t> counts(dataset.n_classes(), 0);
    for (int label : dataset.labels()) {
        ++counts.at(static_cast<std::size_t>(label));
    }
    return counts;
}

std::string histogram_csv(const ImageDataset& dataset) {
    std::string out = "split,class,count\n";
    const auto counts = class_histogram(dataset);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        out += std::string(to_string(dataset.split())) + "," + std::to_string(k) + "," + std::to_string(counts[k]) +
               "\n";
    }
    return out;
}

void write_dataset_archive(const std::filesystem::path& path, const ImageDataset& train, const ImageDataset& val,
                           const ImageDataset& test, bool compress) {
    std::map<std::string, NpyArray> arrays;
    for (const ImageDataset* d : {&train, &val, &test}) {
        const std::string prefix(to_string(d->split()));
        arrays.emplace(prefix + "_images", NpyArray::from_u8({d->size(), d->height(), d->width()}, d->raw_pixels()));
        std::vector<std::int64_t> labels(d->labels().begin(), d->labels().end());
        arrays.emplace(prefix + "_labels", NpyArray::from_i64({d->size(), 1}, labels));
    }
    write_npz(path, arrays, compress);
}

} // namespace imet::data
