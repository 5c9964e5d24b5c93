// Writes a deterministic synthetic digit corpus (IDX format, MNIST geometry)
// for running the pipeline without downloading a dataset.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "c2f/synth.hpp"

int main(int argc, char** argv) {
    std::string out_dir = "synth_data";
    c2f::SynthConfig cfg;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--out" && i + 1 < argc) out_dir = argv[++i];
        else if (a == "--count" && i + 1 < argc) cfg.count = std::atoi(argv[++i]);
        else if (a == "--seed" && i + 1 < argc) cfg.seed = std::strtoull(argv[++i], nullptr, 10);
        else {
            std::printf("usage: c2f_synth [--out DIR] [--count N] [--seed S]\n");
            return a == "--help" ? 0 : 1;
        }
    }
    try {
        c2f::write_synth_digit_corpus(out_dir, cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::printf("wrote %d images to %s (IDX pair)\n", cfg.count, out_dir.c_str());
    return 0;
}
