#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "lbpforest/cascade.hpp"
#include "lbpforest/errors.hpp"
#include "lbpforest/image.hpp"
#include "lbpforest/parallel.hpp"

namespace lbpf {

/// Every knob a pipeline run depends on. Serialized into caches, models,
/// and reports so each artifact records how it was produced.
struct RunConfig {
    ColorSpace color_space = ColorSpace::hsv;
    std::size_t n_trees = 64;
    std::size_t k = 3;           // folds for cross-fitted augmentation
    std::size_t patience = 2;
    std::size_t max_layers = 12;
    std::uint64_t seed = 0;
    std::string aggregate = "frame"; // or "mean"
    bool gsm = false;
    std::string protocol = "holdout"; // or "kfold5"
    std::size_t gsm_max_patches = 12000; // per-window training cap; 0 = unlimited
    unsigned workers = 0;        // 0 = all available cores; never serialized:
                                 // artifacts must not depend on the machine

    void validate() const {
        if (n_trees == 0) throw bad_input("n_trees must be positive");
        if (k < 2) throw bad_input("k must be at least 2");
        if (patience < 1) throw bad_input("patience must be at least 1");
        if (max_layers < 1) throw bad_input("max_layers must be at least 1");
        if (aggregate != "frame" && aggregate != "mean")
            throw bad_input("aggregate must be 'frame' or 'mean'");
        if (protocol != "holdout" && protocol != "kfold5")
            throw bad_input("protocol must be 'holdout' or 'kfold5'");
    }

    unsigned effective_workers() const { return workers == 0 ? default_workers() : workers; }

    CascadeConfig cascade_config() const {
        CascadeConfig cfg;
        cfg.n_trees = n_trees;
        cfg.k = k;
        cfg.patience = patience;
        cfg.max_layers = max_layers;
        cfg.seed = seed;
        cfg.workers = effective_workers();
        return cfg;
    }
};

inline nlohmann::json to_json(const RunConfig& c) {
    return nlohmann::json{{"color_space", to_string(c.color_space)},
                          {"n_trees", c.n_trees},
                          {"k", c.k},
                          {"patience", c.patience},
                          {"max_layers", c.max_layers},
                          {"seed", c.seed},
                          {"aggregate", c.aggregate},
                          {"gsm", c.gsm},
                          {"protocol", c.protocol},
                          {"gsm_max_patches", c.gsm_max_patches}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    try {
        RunConfig c;
        c.color_space = color_space_from_string(j.at("color_space").get<std::string>());
        c.n_trees = j.at("n_trees").get<std::size_t>();
        c.k = j.at("k").get<std::size_t>();
        c.patience = j.at("patience").get<std::size_t>();
        c.max_layers = j.at("max_layers").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.aggregate = j.at("aggregate").get<std::string>();
        c.gsm = j.at("gsm").get<bool>();
        c.protocol = j.at("protocol").get<std::string>();
        c.gsm_max_patches = j.value("gsm_max_patches", std::size_t{12000});
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw bad_input(std::string("malformed run config: ") + e.what());
    }
}

inline std::string run_config_text(const RunConfig& c) { return to_json(c).dump(2); }

} // namespace lbpf
