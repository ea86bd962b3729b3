#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "skintact/collect.hpp"
#include "skintact/errors.hpp"
#include "skintact/localizer.hpp"
#include "skintact/semicone.hpp"
#include "skintact/skinsim.hpp"

namespace skintact {

// Everything a reproducible run needs, in one flat document. Command-line
// flags override individual keys.
struct RunConfig {
    std::string mesh_path = "semicone_mesh.txt";
    std::string out_dir = ".";
    std::uint64_t seed = 42;

    SemiconeSpec fixture{};  // also defines the chart the sensor grid lives on
    SkinConfig skin{};
    double sigma_read = 2.5;

    std::string strategy = "random";  // random | even
    int n = 100;
    int frames = 50;
    double finger_sigma = 5.0;

    TrainConfig train{};
    double surface_spacing = 1.0;
    double dense_spacing = 2.0;

    std::vector<int> sizes{20, 50, 80, 100};
    int validation_size = 20;
    int replicates = 5;
    bool nested = true;
};

inline SamplingStrategy parse_strategy(const std::string& s) {
    if (s == "random" || s == "random_edge") return SamplingStrategy::random_edge;
    if (s == "even" || s == "even_spacing") return SamplingStrategy::even_spacing;
    throw std::invalid_argument("unknown strategy '" + s + "' (expected random|even)");
}

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        int v;
        if (!(is >> v)) throw std::invalid_argument("bad integer list entry '" + item + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace detail

// Flat `key = value` lines, `#` comments. Unknown keys are rejected so typos
// cannot silently fall back to defaults.
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);

    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        auto eq = line.find('=');
        std::string key, value;
        if (eq != std::string::npos) {
            key = line.substr(0, eq);
            value = line.substr(eq + 1);
        } else {
            key = line;
        }
        auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
        };
        trim(key);
        trim(value);
        if (key.empty()) continue;

        const std::string at = path + ":" + std::to_string(line_no);
        if (eq == std::string::npos)
            throw std::invalid_argument(at + ": expected key = value");
        auto as_double = [&] {
            std::istringstream is(value);
            double v;
            if (!(is >> v)) throw std::invalid_argument(at + ": bad number '" + value + "'");
            return v;
        };
        auto as_int = [&] {
            std::istringstream is(value);
            int v;
            if (!(is >> v)) throw std::invalid_argument(at + ": bad integer '" + value + "'");
            return v;
        };
        auto as_u64 = [&] {
            std::istringstream is(value);
            std::uint64_t v;
            if (!(is >> v)) throw std::invalid_argument(at + ": bad seed '" + value + "'");
            return v;
        };

        if (key == "mesh") cfg.mesh_path = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "seed") cfg.seed = as_u64();
        else if (key == "width") cfg.fixture.width = as_double();
        else if (key == "depth") cfg.fixture.depth = as_double();
        else if (key == "height") cfg.fixture.height = as_double();
        else if (key == "taper") cfg.fixture.taper = as_double();
        else if (key == "segments_u") cfg.fixture.segments_u = as_int();
        else if (key == "segments_v") cfg.fixture.segments_v = as_int();
        else if (key == "baseline_min") cfg.skin.baseline_min = as_double();
        else if (key == "baseline_max") cfg.skin.baseline_max = as_double();
        else if (key == "sensitivity_min") cfg.skin.sensitivity_min = as_double();
        else if (key == "sensitivity_max") cfg.skin.sensitivity_max = as_double();
        else if (key == "kernel_sigma") cfg.skin.kernel_sigma = as_double();
        else if (key == "sigma_read") cfg.sigma_read = as_double();
        else if (key == "strategy") cfg.strategy = value;
        else if (key == "n") cfg.n = as_int();
        else if (key == "frames") cfg.frames = as_int();
        else if (key == "finger_sigma") cfg.finger_sigma = as_double();
        else if (key == "learning_rate") cfg.train.learning_rate = as_double();
        else if (key == "epochs") cfg.train.epochs = as_int();
        else if (key == "init_scale") cfg.train.init_scale = as_double();
        else if (key == "activation") {
            if (value == "relu") cfg.train.activation = Activation::relu;
            else if (value == "tanh") cfg.train.activation = Activation::tanh_;
            else throw std::invalid_argument(at + ": unknown activation '" + value + "'");
        }
        else if (key == "surface_spacing") cfg.surface_spacing = as_double();
        else if (key == "dense_spacing") cfg.dense_spacing = as_double();
        else if (key == "sizes") cfg.sizes = detail::parse_int_list(value);
        else if (key == "validation_size") cfg.validation_size = as_int();
        else if (key == "replicates") cfg.replicates = as_int();
        else if (key == "nested") cfg.nested = (value == "true" || value == "1");
        else throw std::invalid_argument(at + ": unknown config key '" + key + "'");
    }
    return cfg;
}

}  // namespace skintact
