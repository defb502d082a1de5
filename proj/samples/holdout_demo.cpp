// End-to-end round trip on a generated dataset: extract multi-scale texture
// features, grow a forest cascade on fold 0, score fold 1, print the report.
//
//   holdout_demo [per_class] [seed]
//
// Small by default so it finishes in seconds; bump per_class for a sturdier
// error estimate.

#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "lbpforest/pipeline.hpp"
#include "lbpforest/synth.hpp"

int main(int argc, char** argv) {
    const int per_class = argc > 1 ? std::atoi(argv[1]) : 16;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 9;

    const auto dir = std::filesystem::temp_directory_path() / "lbpforest_holdout_demo";
    const auto manifest = lbpf::generate_synth_dataset(dir, std::size_t(per_class), seed);
    std::printf("dataset: %zu frames under %s\n", manifest.size(), dir.c_str());

    lbpf::RunConfig config;
    config.n_trees = 16;
    config.max_layers = 3;
    config.seed = seed;

    const auto hash = lbpf::manifest_file_hash(dir / "manifest.csv");
    const auto cache = lbpf::extract_features(manifest, config, hash);
    std::printf("features: %zu / %zu / %zu per frame\n", cache.scales[0].cols,
                cache.scales[1].cols, cache.scales[2].cols);

    const auto run = lbpf::run_holdout(cache, manifest, config);
    std::printf("cascade: %zu layers, best %zu\n", run.trained.model.layers.size(),
                run.trained.model.best_layer);
    std::fputs(lbpf::format_report_text(run.report).c_str(), stdout);
    return 0;
}
