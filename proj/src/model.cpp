#include "c2f/model.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"

namespace c2f {

void C2FArchitecture::build_plan() {
    if (levels.empty()) fail("architecture: needs at least one level");
    if (num_classes < 2) fail("architecture: num_classes must be >= 2");
    if (input_shape.size() != 3 || input_shape[0] < 1 || input_shape[1] < 1 || input_shape[2] < 1)
        fail("architecture: input_shape must be (H, W, C) with positive dims");

    transformer.assign(levels.size(), {});
    classifier.assign(levels.size(), {});
    feature_shape.clear();
    classifier_flat_dim.assign(levels.size(), 0);
    warnings.clear();

    std::vector<int> cur = input_shape;
    feature_shape.push_back(cur);
    for (size_t l = 0; l < levels.size(); ++l) {
        const LevelConfig& lc = levels[l];
        if (lc.conv_layers < 1)
            fail("architecture: level " + std::to_string(l + 1) + ": conv_layers must be >= 1");
        if (lc.filters < 1)
            fail("architecture: level " + std::to_string(l + 1) + ": filters must be >= 1");
        if (lc.extra_pools < 0)
            fail("architecture: level " + std::to_string(l + 1) + ": extra_pools must be >= 0");
        if (lc.extra_pools > 0 && l + 1 == levels.size())
            fail("architecture: level " + std::to_string(l + 1) +
                 ": extra_pools are only permitted on non-final levels");

        auto& tblock = transformer[l];
        for (int j = 0; j < lc.conv_layers; ++j) {
            tblock.push_back(LayerSpec::conv3x3(cur[2], lc.filters));
            cur = output_shape(tblock.back(), cur);
            tblock.push_back(LayerSpec::relu());
        }
        tblock.push_back(LayerSpec::maxpool2x2());
        cur = output_shape(tblock.back(), cur);  // throws on odd dims
        feature_shape.push_back(cur);

        auto& cblock = classifier[l];
        std::vector<int> cshape = cur;
        for (int j = 0; j < lc.extra_pools; ++j) {
            cblock.push_back(LayerSpec::maxpool2x2());
            cshape = output_shape(cblock.back(), cshape);
        }
        cblock.push_back(LayerSpec::flatten());
        cshape = output_shape(cblock.back(), cshape);
        classifier_flat_dim[l] = cshape[0];
        for (int h : lc.classifier_hidden) {
            if (h < 1) fail("architecture: classifier_hidden entries must be positive");
            cblock.push_back(LayerSpec::dense(cshape[0], h));
            cshape = output_shape(cblock.back(), cshape);
            cblock.push_back(LayerSpec::relu());
        }
        cblock.push_back(LayerSpec::dense(cshape[0], num_classes));
        cshape = output_shape(cblock.back(), cshape);
        cblock.push_back(LayerSpec::softmax());
        cshape = output_shape(cblock.back(), cshape);
    }

    // Flag classifier blocks whose flatten dimension dwarfs the finest one;
    // those are the levels the extra-pool rule exists for.
    int finest_flat = classifier_flat_dim.back();
    for (size_t l = 0; l + 1 < levels.size(); ++l)
        if (classifier_flat_dim[l] > 2 * finest_flat)
            warnings.push_back("level " + std::to_string(l + 1) + " classifier input dim " +
                               std::to_string(classifier_flat_dim[l]) + " exceeds 2x finest (" +
                               std::to_string(finest_flat) +
                               "); consider more extra_pools");
}

C2FArchitecture C2FArchitecture::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("architecture config: invalid JSON: ") + e.what());
    }
    C2FArchitecture arch;
    try {
        arch.input_shape = j.at("input_shape").get<std::vector<int>>();
        arch.num_classes = j.at("num_classes").get<int>();
        for (const auto& jl : j.at("levels")) {
            LevelConfig lc;
            lc.conv_layers = jl.at("conv_layers").get<int>();
            lc.filters = jl.at("filters").get<int>();
            lc.extra_pools = jl.value("extra_pools", 0);
            if (jl.contains("classifier_hidden"))
                lc.classifier_hidden = jl.at("classifier_hidden").get<std::vector<int>>();
            arch.levels.push_back(lc);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("architecture config: ") + e.what());
    }
    arch.build_plan();
    return arch;
}

C2FArchitecture C2FArchitecture::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("architecture config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string C2FArchitecture::to_json_text() const {
    nlohmann::json j;
    j["input_shape"] = input_shape;
    j["num_classes"] = num_classes;
    j["levels"] = nlohmann::json::array();
    for (const auto& l : levels) {
        nlohmann::json jl;
        jl["conv_layers"] = l.conv_layers;
        jl["filters"] = l.filters;
        jl["extra_pools"] = l.extra_pools;
        jl["classifier_hidden"] = l.classifier_hidden;
        j["levels"].push_back(jl);
    }
    return j.dump(2);
}

// ---- weight file I/O ----------------------------------------------------

namespace {

using binio::get_u32;
using binio::get_u64;
using binio::put_u32;
using binio::put_u64;

constexpr char kMagic[4] = {'C', '2', 'F', 'W'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagF32 = 1u;

} // namespace

void write_weight_file(const std::string& path, const std::vector<NamedTensor>& tensors,
                       bool as_f32) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("weight file: cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, as_f32 ? kFlagF32 : 0);
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put_u32(out, static_cast<uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_u32(out, static_cast<uint32_t>(t.dims.size()));
        for (int d : t.dims) put_u32(out, static_cast<uint32_t>(d));
        if (as_f32) {
            for (double v : t.values)
                put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
        } else {
            for (double v : t.values)
                put_u64(out, std::bit_cast<uint64_t>(v));
        }
    }
    if (!out) fail("weight file: write failed for " + path);
}

WeightFileContents read_weight_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("weight file: cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4)) fail("weight file " + path + ": truncated");
    if (std::memcmp(magic, kMagic, 4) != 0)
        fail("weight file " + path + ": magic/version mismatch: not a C2FW file");
    uint32_t version = get_u32(in, path);
    if (version != kVersion)
        fail("weight file " + path + ": magic/version mismatch: unsupported version " +
             std::to_string(version));
    uint32_t flags = get_u32(in, path);
    WeightFileContents file;
    file.f32_payload = (flags & kFlagF32) != 0;
    uint32_t count = get_u32(in, path);
    file.tensors.resize(count);
    for (auto& t : file.tensors) {
        uint32_t name_len = get_u32(in, path);
        t.name.resize(name_len);
        if (!in.read(t.name.data(), name_len)) fail("weight file " + path + ": truncated");
        uint32_t rank = get_u32(in, path);
        size_t total = 1;
        t.dims.resize(rank);
        for (auto& d : t.dims) {
            d = static_cast<int>(get_u32(in, path));
            if (d <= 0) fail("weight file " + path + ": bad dimension in " + t.name);
            total *= static_cast<size_t>(d);
        }
        t.values.resize(total);
        if (file.f32_payload) {
            for (auto& v : t.values)
                v = static_cast<double>(std::bit_cast<float>(get_u32(in, path)));
        } else {
            for (auto& v : t.values)
                v = std::bit_cast<double>(get_u64(in, path));
        }
    }
    return file;
}

} // namespace c2f
