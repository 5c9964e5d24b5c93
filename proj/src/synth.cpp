#include "c2f/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "c2f/rng.hpp"

namespace c2f {

namespace {

// 5x7 bitmap font, one row string per scanline.
const char* const kGlyphs[10][7] = {
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},  // 0
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},  // 1
    {"01110", "10001", "00001", "00110", "01000", "10000", "11111"},  // 2
    {"01110", "10001", "00001", "00110", "00001", "10001", "01110"},  // 3
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},  // 4
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},  // 5
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},  // 6
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},  // 7
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},  // 8
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"},  // 9
};

// Box-Muller from two uniforms; one value per call is enough here.
double gaussian(Rng& rng) {
    double u1 = std::max(rng.next_f64(), 1e-12);
    double u2 = rng.next_f64();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace

RawImages make_synth_digits(const SynthConfig& cfg) {
    constexpr int kSize = 28;
    constexpr int kScale = 3;  // glyph rendered 15x21
    RawImages out;
    out.count = cfg.count;
    out.rows = kSize;
    out.cols = kSize;
    out.channels = 1;
    out.pixels.assign(static_cast<size_t>(cfg.count) * kSize * kSize, 0);
    out.labels.resize(static_cast<size_t>(cfg.count));

    for (int n = 0; n < cfg.count; ++n) {
        Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(n), 0xd1));
        int label = static_cast<int>(rng.next_int(0, 9));
        out.labels[static_cast<size_t>(n)] = label;

        int base_x = (kSize - 5 * kScale) / 2 +
                     static_cast<int>(rng.next_int(-cfg.max_jitter, cfg.max_jitter));
        int base_y = (kSize - 7 * kScale) / 2 +
                     static_cast<int>(rng.next_int(-cfg.max_jitter, cfg.max_jitter));
        double intensity = rng.next_range(0.6, 1.0);
        double noise = rng.next_range(cfg.noise_low, cfg.noise_high);

        uint8_t* img = out.pixels.data() + static_cast<size_t>(n) * kSize * kSize;
        for (int gy = 0; gy < 7; ++gy)
            for (int gx = 0; gx < 5; ++gx) {
                if (kGlyphs[label][gy][gx] != '1') continue;
                for (int sy = 0; sy < kScale; ++sy)
                    for (int sx = 0; sx < kScale; ++sx) {
                        int y = base_y + gy * kScale + sy;
                        int x = base_x + gx * kScale + sx;
                        if (y < 0 || y >= kSize || x < 0 || x >= kSize) continue;
                        img[y * kSize + x] = static_cast<uint8_t>(
                            std::clamp(intensity * 255.0, 0.0, 255.0));
                    }
            }
        for (int p = 0; p < kSize * kSize; ++p) {
            double v = img[p] / 255.0 + noise * gaussian(rng);
            img[p] = static_cast<uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0);
        }
    }
    return out;
}

void write_synth_digit_corpus(const std::string& root, const SynthConfig& cfg) {
    std::filesystem::create_directories(root);
    RawImages data = make_synth_digits(cfg);
    write_idx_pair(data, (std::filesystem::path(root) / "train-images-idx3-ubyte").string(),
                   (std::filesystem::path(root) / "train-labels-idx1-ubyte").string());
}

} // namespace c2f
