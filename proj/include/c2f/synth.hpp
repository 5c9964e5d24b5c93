#pragma once

#include <cstdint>
#include <string>

#include "c2f/data.hpp"

namespace c2f {

// Procedurally rendered digit corpus in MNIST geometry (28x28 grayscale,
// labels 0..9). Digits come from a 5x7 glyph font scaled up and perturbed
// with position jitter, intensity variation, and per-image Gaussian noise,
// so example hardness varies the way a cascade cares about. Deterministic
// given the seed.
struct SynthConfig {
    int count = 1000;
    uint64_t seed = 7;
    double noise_low = 0.02;   // per-image noise stddev range, in [0,1] pixel units
    double noise_high = 0.35;
    int max_jitter = 3;        // +- pixels of position jitter
};

RawImages make_synth_digits(const SynthConfig& cfg);

// Renders the corpus and writes it as a standard IDX pair
// (<root>/train-images-idx3-ubyte etc.), so the normal MNIST loader path
// consumes it unchanged.
void write_synth_digit_corpus(const std::string& root, const SynthConfig& cfg);

} // namespace c2f
