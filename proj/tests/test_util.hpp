#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>

#include "c2f/model.hpp"
#include "c2f/rng.hpp"
#include "c2f/tensor.hpp"

namespace c2f::test {

inline Tensor random_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t(shape);
    for (auto& v : t.data) v = rng.next_range(lo, hi);
    return t;
}

// Fresh empty directory under the system temp root; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("c2f_" + tag + "_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline C2FArchitecture tiny_arch_3level(int input_channels = 1) {
    std::string json = R"({
        "input_shape": [8, 8, )" + std::to_string(input_channels) + R"(],
        "num_classes": 4,
        "levels": [
            {"conv_layers": 1, "filters": 3, "extra_pools": 1, "classifier_hidden": [8]},
            {"conv_layers": 1, "filters": 4, "extra_pools": 0, "classifier_hidden": [8]},
            {"conv_layers": 1, "filters": 5, "extra_pools": 0, "classifier_hidden": [8]}
        ]})";
    return C2FArchitecture::from_json_text(json);
}

inline C2FArchitecture net_a_like_arch() {
    return C2FArchitecture::from_json_text(R"({
        "input_shape": [32, 32, 3],
        "num_classes": 10,
        "levels": [
            {"conv_layers": 2, "filters": 64, "extra_pools": 2, "classifier_hidden": [256]},
            {"conv_layers": 2, "filters": 128, "extra_pools": 1, "classifier_hidden": [256]},
            {"conv_layers": 2, "filters": 192, "extra_pools": 0, "classifier_hidden": [256]}
        ]})");
}

} // namespace c2f::test
