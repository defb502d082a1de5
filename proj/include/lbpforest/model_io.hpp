#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbpforest/cascade.hpp"
#include "lbpforest/errors.hpp"
#include "lbpforest/features.hpp"
#include "lbpforest/forest.hpp"

namespace lbpf {

namespace detail {

inline void write_text_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw bad_input("cannot write: " + file.string());
    out << text;
    if (!out) throw bad_input("failed writing: " + file.string());
}

inline nlohmann::json parse_json_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw bad_input("cannot open: " + file.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw bad_input(file.string() + ": " + e.what());
    }
}

} // namespace detail

/// Forest schema: {"kind","seed","n_features","options","trees":[{"nodes":
/// [...]}]}; internal nodes are {"f","t","l","r"}, leaves {"p":[p0,p1]}.
/// Doubles survive the round trip exactly (shortest-repr printing).
inline nlohmann::json forest_to_json(const Forest& forest) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            if (n.is_leaf())
                nodes.push_back({{"p", {n.dist[0], n.dist[1]}}});
            else
                nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left},
                                 {"r", n.right}});
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    return nlohmann::json{{"kind", to_string(forest.kind)},
                          {"seed", forest.seed},
                          {"n_features", forest.n_features},
                          {"options",
                           {{"min_leaf", forest.options.min_leaf},
                            {"max_depth", forest.options.max_depth}}},
                          {"trees", std::move(trees)}};
}

inline Forest forest_from_json(const nlohmann::json& j) {
    try {
        Forest forest;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "random")
            forest.kind = ForestKind::random;
        else if (kind == "completely_random")
            forest.kind = ForestKind::completely_random;
        else
            throw bad_input("unknown forest kind '" + kind + "'");
        forest.seed = j.at("seed").get<std::uint64_t>();
        forest.n_features = j.at("n_features").get<std::size_t>();
        forest.options.min_leaf = j.at("options").at("min_leaf").get<std::size_t>();
        forest.options.max_depth = j.at("options").at("max_depth").get<std::size_t>();

        for (const auto& jt : j.at("trees")) {
            Tree tree;
            const auto& jn = jt.at("nodes");
            for (const auto& node : jn) {
                TreeNode n;
                if (node.contains("p")) {
                    n.dist[0] = node.at("p").at(0).get<double>();
                    n.dist[1] = node.at("p").at(1).get<double>();
                } else {
                    n.feature = node.at("f").get<std::int32_t>();
                    n.threshold = node.at("t").get<double>();
                    n.left = node.at("l").get<std::int32_t>();
                    n.right = node.at("r").get<std::int32_t>();
                    if (n.feature < 0 || std::size_t(n.feature) >= forest.n_features)
                        throw bad_input("forest node feature out of range");
                    if (n.left <= 0 || n.right <= 0 || std::size_t(n.left) >= jn.size() ||
                        std::size_t(n.right) >= jn.size())
                        throw bad_input("forest node child out of range");
                }
                tree.nodes.push_back(n);
            }
            if (tree.nodes.empty()) throw bad_input("forest tree has no nodes");
            forest.trees.push_back(std::move(tree));
        }
        if (forest.trees.empty()) throw bad_input("forest has no trees");
        return forest;
    } catch (const nlohmann::json::exception& e) {
        throw bad_input(std::string("malformed forest file: ") + e.what());
    }
}

inline void save_forest(const Forest& forest, const std::filesystem::path& file) {
    detail::write_text_file(file, forest_to_json(forest).dump(1) + "\n");
}

inline Forest load_forest(const std::filesystem::path& file) {
    return forest_from_json(detail::parse_json_file(file));
}

namespace detail {

inline nlohmann::json cascade_config_to_json(const CascadeConfig& c) {
    return {{"n_rf", c.n_rf},         {"n_crf", c.n_crf},
            {"n_trees", c.n_trees},   {"k", c.k},
            {"patience", c.patience}, {"max_layers", c.max_layers},
            {"seed", c.seed},
            {"tree_options",
             {{"min_leaf", c.tree_options.min_leaf}, {"max_depth", c.tree_options.max_depth}}}};
}

inline CascadeConfig cascade_config_from_json(const nlohmann::json& j) {
    CascadeConfig c;
    c.n_rf = j.at("n_rf").get<std::size_t>();
    c.n_crf = j.at("n_crf").get<std::size_t>();
    c.n_trees = j.at("n_trees").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.max_layers = j.at("max_layers").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.tree_options.min_leaf = j.at("tree_options").at("min_leaf").get<std::size_t>();
    c.tree_options.max_depth = j.at("tree_options").at("max_depth").get<std::size_t>();
    return c;
}

} // namespace detail

/// Writes `dir/cascade.json` plus one forest file per layer forest under
/// `dir/forests/`. `run_config` and `inputs_hash` are provenance: the full
/// run settings and a content hash of the training inputs.
inline void save_cascade(const CascadeModel& model, const std::filesystem::path& dir,
                         const nlohmann::json& run_config, std::uint64_t inputs_hash) {
    if (model.layers.empty() || model.best_layer == 0)
        throw bad_input("refusing to save an untrained cascade");
    std::filesystem::create_directories(dir / "forests");

    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        nlohmann::json files = nlohmann::json::array();
        for (std::size_t f = 0; f < model.layers[l].forests.size(); ++f) {
            const std::string rel =
                "forests/l" + std::to_string(l + 1) + "_f" + std::to_string(f) + ".json";
            save_forest(model.layers[l].forests[f], dir / rel);
            files.push_back(rel);
        }
        layers.push_back(
            {{"scale_index", model.layers[l].scale_index}, {"forests", std::move(files)}});
    }

    const nlohmann::json j{{"format_version", 1},
                           {"run_config", run_config},
                           {"inputs_hash", inputs_hash},
                           {"cascade_config", detail::cascade_config_to_json(model.config)},
                           {"scale_dims", model.scale_dims},
                           {"best_layer", model.best_layer},
                           {"layers", std::move(layers)}};
    detail::write_text_file(dir / "cascade.json", j.dump(2) + "\n");
}

struct LoadedCascade {
    CascadeModel model;
    nlohmann::json run_config;
    std::uint64_t inputs_hash = 0;
};

inline LoadedCascade load_cascade(const std::filesystem::path& dir) {
    const nlohmann::json j = detail::parse_json_file(dir / "cascade.json");
    try {
        if (j.at("format_version").get<int>() != 1)
            throw bad_input("unsupported cascade format version");
        LoadedCascade out;
        out.run_config = j.at("run_config");
        out.inputs_hash = j.at("inputs_hash").get<std::uint64_t>();
        out.model.config = detail::cascade_config_from_json(j.at("cascade_config"));
        const auto dims = j.at("scale_dims");
        for (int s = 0; s < 3; ++s)
            out.model.scale_dims[std::size_t(s)] = dims.at(std::size_t(s)).get<std::size_t>();
        out.model.best_layer = j.at("best_layer").get<std::size_t>();

        for (const auto& jl : j.at("layers")) {
            CascadeLayer layer;
            layer.scale_index = jl.at("scale_index").get<int>();
            if (layer.scale_index < 1 || layer.scale_index > 3)
                throw bad_input("cascade layer scale index out of range");
            for (const auto& rel : jl.at("forests"))
                layer.forests.push_back(load_forest(dir / rel.get<std::string>()));
            out.model.layers.push_back(std::move(layer));
        }
        if (out.model.layers.empty()) throw bad_input("cascade file lists no layers");
        if (out.model.best_layer < 1 || out.model.best_layer > out.model.layers.size())
            throw bad_input("cascade best_layer out of range");
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw bad_input(std::string("malformed cascade file: ") + e.what());
    }
}

/// Grained-scanning scanner: `dir/gsm.json` plus per-window forest pairs.
inline void save_gsm(const GsmModel& model, const std::filesystem::path& dir) {
    const auto& specs = gsm_window_specs();
    if (model.forests.size() != specs.size())
        throw bad_input("refusing to save an incomplete scanning model");
    std::filesystem::create_directories(dir);

    nlohmann::json windows = nlohmann::json::array();
    for (std::size_t w = 0; w < specs.size(); ++w) {
        const std::string base = "w" + std::to_string(specs[w].window);
        save_forest(model.forests[w].rf, dir / (base + "_rf.json"));
        save_forest(model.forests[w].crf, dir / (base + "_crf.json"));
        windows.push_back({{"window", specs[w].window},
                           {"stride", specs[w].stride},
                           {"rf", base + "_rf.json"},
                           {"crf", base + "_crf.json"}});
    }
    const nlohmann::json j{{"format_version", 1},
                           {"n_trees", model.n_trees},
                           {"seed", model.seed},
                           {"windows", std::move(windows)}};
    detail::write_text_file(dir / "gsm.json", j.dump(2) + "\n");
}

inline GsmModel load_gsm(const std::filesystem::path& dir) {
    const nlohmann::json j = detail::parse_json_file(dir / "gsm.json");
    try {
        if (j.at("format_version").get<int>() != 1)
            throw bad_input("unsupported scanning-model format version");
        GsmModel model;
        model.n_trees = j.at("n_trees").get<std::size_t>();
        model.seed = j.at("seed").get<std::uint64_t>();
        const auto& specs = gsm_window_specs();
        const auto& windows = j.at("windows");
        if (windows.size() != specs.size())
            throw bad_input("scanning model must list all three windows");
        for (std::size_t w = 0; w < specs.size(); ++w) {
            const auto& jw = windows.at(w);
            if (jw.at("window").get<int>() != specs[w].window)
                throw bad_input("scanning model window order mismatch");
            GsmForests gf;
            gf.window = specs[w].window;
            gf.rf = load_forest(dir / jw.at("rf").get<std::string>());
            gf.crf = load_forest(dir / jw.at("crf").get<std::string>());
            model.forests.push_back(std::move(gf));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw bad_input(std::string("malformed scanning-model file: ") + e.what());
    }
}

} // namespace lbpf
