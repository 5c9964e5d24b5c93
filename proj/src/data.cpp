#include "c2f/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "c2f/rng.hpp"

namespace c2f {

namespace {

uint32_t get_u32_be(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        fail("idx file " + path + ": truncated");
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

void put_u32_be(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

constexpr uint32_t kIdxImagesMagic = 2051;
constexpr uint32_t kIdxLabelsMagic = 2049;

} // namespace

RawImages read_idx_pair(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) fail("idx file: cannot open " + images_path);
    uint32_t magic = get_u32_be(img, images_path);
    if (magic != kIdxImagesMagic)
        fail("idx file " + images_path + ": magic-number mismatch: got " +
             std::to_string(magic) + ", expected 2051");
    RawImages data;
    data.count = static_cast<int>(get_u32_be(img, images_path));
    data.rows = static_cast<int>(get_u32_be(img, images_path));
    data.cols = static_cast<int>(get_u32_be(img, images_path));
    data.channels = 1;
    size_t total = static_cast<size_t>(data.count) * data.rows * data.cols;
    data.pixels.resize(total);
    if (!img.read(reinterpret_cast<char*>(data.pixels.data()),
                  static_cast<std::streamsize>(total)))
        fail("idx file " + images_path + ": truncated pixel data");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) fail("idx file: cannot open " + labels_path);
    magic = get_u32_be(lab, labels_path);
    if (magic != kIdxLabelsMagic)
        fail("idx file " + labels_path + ": magic-number mismatch: got " +
             std::to_string(magic) + ", expected 2049");
    int label_count = static_cast<int>(get_u32_be(lab, labels_path));
    if (label_count != data.count)
        fail("idx files: count mismatch: " + std::to_string(data.count) + " images in " +
             images_path + " vs " + std::to_string(label_count) + " labels in " + labels_path);
    std::vector<uint8_t> raw(static_cast<size_t>(label_count));
    if (!lab.read(reinterpret_cast<char*>(raw.data()), label_count))
        fail("idx file " + labels_path + ": truncated label data");
    data.labels.assign(raw.begin(), raw.end());
    return data;
}

void write_idx_pair(const RawImages& data, const std::string& images_path,
                    const std::string& labels_path) {
    if (data.channels != 1) fail("write_idx_pair: IDX images are single-channel");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) fail("idx file: cannot open " + images_path + " for writing");
    put_u32_be(img, kIdxImagesMagic);
    put_u32_be(img, static_cast<uint32_t>(data.count));
    put_u32_be(img, static_cast<uint32_t>(data.rows));
    put_u32_be(img, static_cast<uint32_t>(data.cols));
    img.write(reinterpret_cast<const char*>(data.pixels.data()),
              static_cast<std::streamsize>(data.pixels.size()));
    if (!img) fail("idx file: write failed for " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) fail("idx file: cannot open " + labels_path + " for writing");
    put_u32_be(lab, kIdxLabelsMagic);
    put_u32_be(lab, static_cast<uint32_t>(data.count));
    for (int l : data.labels) {
        uint8_t b = static_cast<uint8_t>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!lab) fail("idx file: write failed for " + labels_path);
}

namespace {

void append(RawImages& into, const RawImages& more) {
    if (into.count == 0) {
        into = more;
        return;
    }
    if (into.rows != more.rows || into.cols != more.cols || into.channels != more.channels)
        fail("dataset: image geometry differs between files");
    into.count += more.count;
    into.pixels.insert(into.pixels.end(), more.pixels.begin(), more.pixels.end());
    into.labels.insert(into.labels.end(), more.labels.begin(), more.labels.end());
}

} // namespace

RawImages read_mnist_root(const std::string& root) {
    namespace fs = std::filesystem;
    RawImages all;
    bool found = false;
    const std::pair<const char*, const char*> sets[] = {
        {"train-images-idx3-ubyte", "train-labels-idx1-ubyte"},
        {"t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"},
    };
    for (const auto& [imgs, labs] : sets) {
        fs::path ip = fs::path(root) / imgs;
        fs::path lp = fs::path(root) / labs;
        if (fs::exists(ip) && fs::exists(lp)) {
            append(all, read_idx_pair(ip.string(), lp.string()));
            found = true;
        }
    }
    if (!found)
        fail("mnist: no IDX files found under " + root +
             " (expected train-images-idx3-ubyte / train-labels-idx1-ubyte)");
    return all;
}

RawImages read_cifar10_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cifar10: cannot open " + path);
    in.seekg(0, std::ios::end);
    auto bytes = static_cast<size_t>(in.tellg());
    in.seekg(0);
    constexpr size_t kRecord = 1 + 3 * 1024;
    if (bytes == 0 || bytes % kRecord != 0)
        fail("cifar10 " + path + ": size " + std::to_string(bytes) +
             " is not a multiple of the 3073-byte record");
    size_t count = bytes / kRecord;
    RawImages data;
    data.count = static_cast<int>(count);
    data.rows = 32;
    data.cols = 32;
    data.channels = 3;
    data.pixels.resize(count * 32 * 32 * 3);
    data.labels.resize(count);
    std::vector<uint8_t> rec(kRecord);
    for (size_t n = 0; n < count; ++n) {
        if (!in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(kRecord)))
            fail("cifar10 " + path + ": truncated record " + std::to_string(n));
        if (rec[0] > 9)
            fail("cifar10 " + path + ": label " + std::to_string(rec[0]) + " out of range");
        data.labels[n] = rec[0];
        // planes R,G,B -> interleaved (H, W, C)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                for (int c = 0; c < 3; ++c)
                    data.pixels[((n * 32 + y) * 32 + x) * 3 + static_cast<size_t>(c)] =
                        rec[1 + static_cast<size_t>(c) * 1024 + static_cast<size_t>(y) * 32 + x];
    }
    return data;
}

RawImages read_cifar10_root(const std::string& root) {
    namespace fs = std::filesystem;
    RawImages all;
    bool found = false;
    std::vector<std::string> names;
    for (int i = 1; i <= 5; ++i) names.push_back("data_batch_" + std::to_string(i) + ".bin");
    names.push_back("test_batch.bin");
    for (const auto& name : names) {
        fs::path p = fs::path(root) / name;
        if (fs::exists(p)) {
            append(all, read_cifar10_file(p.string()));
            found = true;
        }
    }
    if (!found) fail("cifar10: no batch files found under " + root);
    return all;
}

SplitIndices split_indices(const std::vector<int>& labels, int num_classes,
                           const std::array<double, 3>& ratio, uint64_t seed) {
    double total_ratio = ratio[0] + ratio[1] + ratio[2];
    if (total_ratio <= 0 || ratio[0] < 0 || ratio[1] < 0 || ratio[2] < 0)
        fail("split: ratio parts must be non-negative with positive sum");
    size_t n = labels.size();

    std::vector<std::vector<size_t>> by_class(static_cast<size_t>(num_classes));
    for (size_t i = 0; i < n; ++i) {
        int l = labels[i];
        if (l < 0 || l >= num_classes) fail("split: label out of range");
        by_class[static_cast<size_t>(l)].push_back(i);
    }

    SplitIndices out;
    size_t nonzero_parts = 0;
    for (double r : ratio)
        if (r > 0) ++nonzero_parts;
    bool too_small = false;
    for (const auto& cls : by_class)
        if (!cls.empty() && cls.size() < nonzero_parts) too_small = true;

    if (too_small) {
        // plain shuffled split
        out.stratified = false;
        out.warning = "dataset too small for class stratification; plain split used";
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        Rng rng(mix_seed(seed, 0x511, 0));
        rng.shuffle(idx);
        size_t n0 = static_cast<size_t>(std::llround(ratio[0] / total_ratio * n));
        size_t n1 = static_cast<size_t>(std::llround((ratio[0] + ratio[1]) / total_ratio * n));
        n1 = std::max(n1, n0);
        out.parts[0].assign(idx.begin(), idx.begin() + static_cast<long>(n0));
        out.parts[1].assign(idx.begin() + static_cast<long>(n0), idx.begin() + static_cast<long>(n1));
        out.parts[2].assign(idx.begin() + static_cast<long>(n1), idx.end());
        return out;
    }

    Rng rng(mix_seed(seed, 0x511, 1));
    for (auto& cls : by_class) {
        rng.shuffle(cls);
        size_t m = cls.size();
        // floor allocation + largest remainder, deterministic tie order 0,1,2
        size_t counts[3];
        double rem[3];
        size_t used = 0;
        for (int p = 0; p < 3; ++p) {
            double exact = ratio[static_cast<size_t>(p)] / total_ratio * static_cast<double>(m);
            counts[p] = static_cast<size_t>(exact);
            rem[p] = exact - static_cast<double>(counts[p]);
            used += counts[p];
        }
        while (used < m) {
            int best = 0;
            for (int p = 1; p < 3; ++p)
                if (rem[p] > rem[best]) best = p;
            counts[best]++;
            rem[best] = -1;
            ++used;
        }
        size_t pos = 0;
        for (int p = 0; p < 3; ++p)
            for (size_t k = 0; k < counts[p]; ++k)
                out.parts[static_cast<size_t>(p)].push_back(cls[pos++]);
    }
    // keep intra-split order deterministic but not class-sorted
    Rng order_rng(mix_seed(seed, 0x511, 2));
    for (auto& part : out.parts) order_rng.shuffle(part);
    return out;
}

std::vector<size_t> stratified_subsample(const std::vector<int>& labels, int num_classes,
                                         size_t want, uint64_t seed) {
    if (want > labels.size())
        fail("subsample: requested " + std::to_string(want) + " examples, dataset has " +
             std::to_string(labels.size()));
    std::vector<std::vector<size_t>> by_class(static_cast<size_t>(num_classes));
    for (size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<size_t>(labels[i])].push_back(i);
    Rng rng(mix_seed(seed, 0x5ab, 0));
    for (auto& cls : by_class) rng.shuffle(cls);

    std::vector<size_t> picked;
    picked.reserve(want);
    std::vector<size_t> cursor(static_cast<size_t>(num_classes), 0);
    int c = 0;
    while (picked.size() < want) {
        bool any = false;
        for (int tries = 0; tries < num_classes && picked.size() < want; ++tries) {
            auto& cls = by_class[static_cast<size_t>(c)];
            auto& cur = cursor[static_cast<size_t>(c)];
            if (cur < cls.size()) {
                picked.push_back(cls[cur++]);
                any = true;
            }
            c = (c + 1) % num_classes;
        }
        if (!any) break;
    }
    Rng order_rng(mix_seed(seed, 0x5ab, 1));
    order_rng.shuffle(picked);
    return picked;
}

RawImages read_pnm_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("image: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6")
        fail("image " + path + ": unsupported format '" + magic + "' (want P5 pgm or P6 ppm)");
    auto next_int = [&]() {
        // skip whitespace and # comments
        for (;;) {
            int ch = in.peek();
            if (ch == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(ch)) {
                in.get();
            } else {
                break;
            }
        }
        int v;
        if (!(in >> v)) fail("image " + path + ": malformed header");
        return v;
    };
    int w = next_int();
    int h = next_int();
    int maxval = next_int();
    if (maxval != 255) fail("image " + path + ": only maxval 255 supported");
    in.get();  // single whitespace before binary data
    RawImages img;
    img.count = 1;
    img.rows = h;
    img.cols = w;
    img.channels = magic == "P5" ? 1 : 3;
    size_t total = static_cast<size_t>(h) * w * img.channels;
    img.pixels.resize(total);
    if (!in.read(reinterpret_cast<char*>(img.pixels.data()),
                 static_cast<std::streamsize>(total)))
        fail("image " + path + ": truncated pixel data");
    img.labels = {0};
    return img;
}

} // namespace c2f
