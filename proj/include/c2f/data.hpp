#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "c2f/trainer.hpp"

namespace c2f {

// Raw byte-level image set as read from disk, before scaling/padding.
struct RawImages {
    int count = 0;
    int rows = 0;
    int cols = 0;
    int channels = 1;
    std::vector<uint8_t> pixels;  // count * rows * cols * channels, (H, W, C)
    std::vector<int> labels;
};

// IDX pair (big-endian headers, magic 2051 for images / 2049 for labels).
RawImages read_idx_pair(const std::string& images_path, const std::string& labels_path);
void write_idx_pair(const RawImages& data, const std::string& images_path,
                    const std::string& labels_path);

// MNIST layout under `root`: train-images-idx3-ubyte, train-labels-idx1-ubyte,
// and optionally t10k-*; whatever is present is concatenated.
RawImages read_mnist_root(const std::string& root);

// CIFAR-10 binary batches (1 label byte + 3072 pixel bytes per record,
// R plane then G then B). Reads data_batch_*.bin and test_batch.bin under root.
RawImages read_cifar10_root(const std::string& root);
RawImages read_cifar10_file(const std::string& path);

// Raw bytes -> training tensors: pixels scaled to [0,1] and spatial dims
// zero-padded (centered) up to `pad_to` when smaller.
template <typename T>
Dataset<T> to_dataset(const RawImages& raw, int num_classes, int pad_to = 32) {
    Dataset<T> ds;
    ds.num_classes = num_classes;
    int H = std::max(raw.rows, pad_to);
    int W = std::max(raw.cols, pad_to);
    int off_y = (H - raw.rows) / 2;
    int off_x = (W - raw.cols) / 2;
    size_t image_bytes =
        static_cast<size_t>(raw.rows) * raw.cols * raw.channels;
    for (int n = 0; n < raw.count; ++n) {
        TensorT<T> img({H, W, raw.channels});
        const uint8_t* src = raw.pixels.data() + static_cast<size_t>(n) * image_bytes;
        for (int y = 0; y < raw.rows; ++y)
            for (int x = 0; x < raw.cols; ++x)
                for (int c = 0; c < raw.channels; ++c)
                    img.at3(y + off_y, x + off_x, c) = static_cast<T>(
                        src[(static_cast<size_t>(y) * raw.cols + x) * raw.channels + c] /
                        255.0);
        ds.inputs.push_back(std::move(img));
    }
    ds.labels = raw.labels;
    ds.validate();
    return ds;
}

template <typename T>
Dataset<T> load_mnist(const std::string& root) {
    return to_dataset<T>(read_mnist_root(root), 10);
}

template <typename T>
Dataset<T> load_cifar10(const std::string& root) {
    return to_dataset<T>(read_cifar10_root(root), 10);
}

// Deterministic, class-stratified partition of [0, n) by the given ratio.
// Each split's class histogram stays within one example of exact
// proportionality. Falls back to a plain shuffled split (with a warning
// recorded) when some class is too small to stratify.
struct SplitIndices {
    std::array<std::vector<size_t>, 3> parts;  // train, val, test
    bool stratified = true;
    std::string warning;
};

SplitIndices split_indices(const std::vector<int>& labels, int num_classes,
                           const std::array<double, 3>& ratio, uint64_t seed);

template <typename T>
Dataset<T> take(const Dataset<T>& ds, const std::vector<size_t>& idx, SplitTag tag) {
    Dataset<T> out;
    out.num_classes = ds.num_classes;
    out.tag = tag;
    for (size_t i : idx) {
        out.inputs.push_back(ds.inputs[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

template <typename T>
struct SplitDatasets {
    Dataset<T> train, val, test;
    bool stratified = true;
    std::string warning;
};

template <typename T>
SplitDatasets<T> split_dataset(const Dataset<T>& ds, const std::array<double, 3>& ratio,
                               uint64_t seed) {
    SplitIndices idx = split_indices(ds.labels, ds.num_classes, ratio, seed);
    SplitDatasets<T> out;
    out.train = take(ds, idx.parts[0], SplitTag::train);
    out.val = take(ds, idx.parts[1], SplitTag::val);
    out.test = take(ds, idx.parts[2], SplitTag::test);
    out.stratified = idx.stratified;
    out.warning = idx.warning;
    return out;
}

// Deterministic stratified subsample of `want` examples (used to carve desk
// subsets out of a full dataset before splitting).
std::vector<size_t> stratified_subsample(const std::vector<int>& labels, int num_classes,
                                         size_t want, uint64_t seed);

// PGM (P5, grayscale) / PPM (P6, RGB) reader for single-image inference.
RawImages read_pnm_image(const std::string& path);

} // namespace c2f
