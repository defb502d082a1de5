// Command-line front end: synth | extract | train | eval | score.
// Exit codes: 0 success, 2 bad input, 3 degenerate data.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lbpforest/model_io.hpp"
#include "lbpforest/pipeline.hpp"
#include "lbpforest/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct CliState {
    lbpf::RunConfig config;
    std::string color_space = "hsv";
};

/// Run settings shared by every command. Declared on the root app; the
/// subcommands fall through to it, so flags work in either position.
void add_run_options(CLI::App& app, CliState& s) {
    app.add_option("--color-space", s.color_space, "Working color space: rgb, hsv, or ycbcr")
        ->capture_default_str();
    app.add_option("--trees", s.config.n_trees, "Trees per forest")->capture_default_str();
    app.add_option("--folds", s.config.k, "Folds for cross-fitted augmentation")
        ->capture_default_str();
    app.add_option("--patience", s.config.patience,
                   "Layers without validation improvement before the cascade stops")
        ->capture_default_str();
    app.add_option("--max-layers", s.config.max_layers, "Hard cap on cascade depth")
        ->capture_default_str();
    app.add_option("--seed", s.config.seed, "Master RNG seed")->capture_default_str();
    app.add_option("--aggregate", s.config.aggregate, "Score aggregation: frame or mean")
        ->capture_default_str();
    app.add_flag("--gsm", s.config.gsm, "Include the grained-scanning baseline");
    app.add_option("--protocol", s.config.protocol, "Evaluation protocol: holdout or kfold5")
        ->capture_default_str();
    app.add_option("--gsm-max-patches", s.config.gsm_max_patches,
                   "Training patch cap per scanning window (0 = unlimited)")
        ->capture_default_str();
    app.add_option("--workers", s.config.workers, "Worker threads (0 = all cores)")
        ->capture_default_str();
}

lbpf::RunConfig resolve(CliState& s) {
    s.config.color_space = lbpf::color_space_from_string(s.color_space);
    s.config.validate();
    return s.config;
}

/// Loads a cache and checks it actually describes the given manifest.
lbpf::FeatureCache load_matching_cache(const fs::path& cache_file, const fs::path& manifest_file,
                                       const lbpf::DatasetManifest& manifest,
                                       const lbpf::RunConfig& config) {
    lbpf::FeatureCache cache = lbpf::load_feature_cache(cache_file);
    if (cache.size() != manifest.size())
        throw lbpf::bad_input("cache holds " + std::to_string(cache.size()) +
                              " rows but the manifest lists " + std::to_string(manifest.size()));
    if (cache.manifest_hash != lbpf::manifest_file_hash(manifest_file))
        throw lbpf::bad_input("cache was extracted from a different manifest: " +
                              cache_file.string());
    if (cache.space != config.color_space)
        throw lbpf::bad_input(std::string("cache is in ") + to_string(cache.space) +
                              " but --color-space is " + to_string(config.color_space));
    return cache;
}

void write_report_files(const lbpf::EvalReport& report, const lbpf::RunConfig& config,
                        std::uint64_t inputs_hash, const fs::path& dir,
                        const std::string& stem) {
    fs::create_directories(dir);
    lbpf::detail::write_text_file(dir / (stem + ".json"),
                                  report_to_json(report, config, inputs_hash).dump(2) + "\n");
    lbpf::detail::write_text_file(dir / (stem + ".txt"), lbpf::format_report_text(report));
    char line[160];
    std::snprintf(line, sizeof(line), "%s: EER %.3f%%  HTER %.3f%%  -> %s\n", stem.c_str(),
                  100.0 * report.eer, 100.0 * report.hter, (dir / (stem + ".json")).c_str());
    std::cout << line;
}

void cmd_synth(const lbpf::RunConfig& config, const fs::path& out_dir, std::size_t per_class) {
    const lbpf::DatasetManifest m =
        lbpf::generate_synth_dataset(out_dir, per_class, config.seed);
    std::cout << "wrote " << m.size() << " images and " << (out_dir / "manifest.csv").string()
              << "\n";
}

void cmd_extract(const lbpf::RunConfig& config, const fs::path& manifest_file,
                 const fs::path& out_cache) {
    const lbpf::DatasetManifest manifest = lbpf::load_manifest(manifest_file);
    const lbpf::FeatureCache cache =
        extract_features(manifest, config, lbpf::manifest_file_hash(manifest_file));
    save_feature_cache(cache, out_cache);
    std::cout << "wrote features for " << cache.size() << " images to " << out_cache.string()
              << " (scale lengths " << cache.scales[0].cols << "/" << cache.scales[1].cols
              << "/" << cache.scales[2].cols << ")\n";
}

void cmd_train(const lbpf::RunConfig& config, const fs::path& cache_file,
               const fs::path& manifest_file, const fs::path& model_dir) {
    const lbpf::DatasetManifest manifest = lbpf::load_manifest(manifest_file);
    const lbpf::FeatureCache cache =
        load_matching_cache(cache_file, manifest_file, manifest, config);

    const auto rows = rows_with_fold(manifest, 0); // training half (all rows if unfolded)
    const lbpf::TrainedCascade trained = train_cascade_on_rows(cache, manifest, rows, config);
    save_cascade(trained.model, model_dir, to_json(config), cache.manifest_hash);
    std::cout << "cascade: " << trained.model.layers.size() << " layers grown, best layer "
              << trained.model.best_layer << " (" << trained.report.stop_reason
              << "), saved to " << model_dir.string() << "\n";

    if (config.gsm) {
        const lbpf::GsmPipelineModel gsm = train_gsm_pipeline(manifest, rows, config);
        save_gsm(gsm.scanner, model_dir / "gsm");
        save_cascade(gsm.cascade, model_dir / "gsm", to_json(config), cache.manifest_hash);
        std::cout << "scanning baseline saved to " << (model_dir / "gsm").string() << "\n";
    }
}

lbpf::GsmPipelineModel load_gsm_pipeline(const fs::path& model_dir) {
    lbpf::GsmPipelineModel gsm;
    gsm.scanner = lbpf::load_gsm(model_dir / "gsm");
    gsm.cascade = lbpf::load_cascade(model_dir / "gsm").model;
    return gsm;
}

void cmd_eval(const lbpf::RunConfig& config, const fs::path& model_dir,
              const fs::path& cache_file, const fs::path& manifest_file,
              const fs::path& out_dir) {
    const lbpf::DatasetManifest manifest = lbpf::load_manifest(manifest_file);
    const lbpf::FeatureCache cache =
        load_matching_cache(cache_file, manifest_file, manifest, config);

    if (config.protocol == "kfold5") {
        if (config.gsm)
            throw lbpf::bad_input("--gsm evaluation supports the holdout protocol only");
        const lbpf::EvalReport report = run_kfold5(cache, manifest, config);
        write_report_files(report, config, cache.manifest_hash, out_dir, "report");
        return;
    }

    if (model_dir.empty())
        throw lbpf::bad_input("--model is required for holdout evaluation");
    const lbpf::LoadedCascade loaded = lbpf::load_cascade(model_dir);
    if (loaded.inputs_hash != cache.manifest_hash)
        std::cerr << "note: model was trained on different inputs"
                     " (cross-dataset evaluation)\n";

    const auto rows = rows_with_fold(manifest, 1); // evaluation half
    const auto scores =
        score_rows(loaded.model, cache, manifest, rows, config.effective_workers());
    const lbpf::EvalReport report = evaluate_scores(scores, config.aggregate);
    write_report_files(report, config, cache.manifest_hash, out_dir, "report");

    if (config.gsm) {
        const lbpf::GsmPipelineModel gsm = load_gsm_pipeline(model_dir);
        const auto gsm_scores = score_gsm_rows(gsm, manifest, rows, config.color_space,
                                               config.effective_workers());
        const lbpf::EvalReport gsm_report = evaluate_scores(gsm_scores, config.aggregate);
        write_report_files(gsm_report, config, cache.manifest_hash, out_dir, "report_gsm");
    }
}

void cmd_score(const lbpf::RunConfig& config, const fs::path& model_dir,
               const fs::path& image_file) {
    const lbpf::LoadedCascade loaded = lbpf::load_cascade(model_dir);
    // the model's own settings decide how the probe image is represented
    const lbpf::RunConfig model_config = lbpf::run_config_from_json(loaded.run_config);
    const lbpf::Image img = lbpf::load_input_image(image_file, model_config.color_space);

    double score = 0.0;
    if (config.gsm) {
        const lbpf::GsmPipelineModel gsm = load_gsm_pipeline(model_dir);
        const auto& specs = lbpf::gsm_window_specs();
        std::array<std::vector<float>, 3> reps;
        for (std::size_t w = 0; w < specs.size(); ++w)
            reps[w] = gsm_representation(img, gsm.scanner.forests[w], specs[w].window,
                                         specs[w].stride);
        score = predict_score(gsm.cascade, {reps[0], reps[1], reps[2]});
    } else {
        const auto vecs = lbpf::extract_all_scales(img);
        score = predict_score(loaded.model, {vecs[0], vecs[1], vecs[2]});
    }
    std::cout << nlohmann::json(score).dump() << "\n"; // shortest exact form
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Face anti-spoofing toolkit: multi-scale color texture features"
                 " classified by a deep-forest cascade"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Settings file, one key = value per line (flags win)");

    CliState state;
    add_run_options(app, state);

    fs::path synth_dir;
    std::size_t per_class = 200;
    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
    synth->fallthrough();
    synth->add_option("out_dir", synth_dir, "Dataset directory to create")->required();
    synth->add_option("--per-class", per_class, "Images per class")->capture_default_str();

    fs::path extract_manifest, extract_out;
    CLI::App* extract =
        app.add_subcommand("extract", "Extract multi-scale features into a cache file");
    extract->fallthrough();
    extract->add_option("manifest", extract_manifest, "Dataset manifest CSV")
        ->required()
        ->check(CLI::ExistingFile);
    extract->add_option("cache", extract_out, "Feature cache file to write")->required();

    fs::path train_cache, train_manifest, train_model;
    CLI::App* train = app.add_subcommand("train", "Train the cascade on cached features");
    train->fallthrough();
    train->add_option("cache", train_cache, "Feature cache from `extract`")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("manifest", train_manifest, "Dataset manifest CSV")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("model", train_model, "Model directory to write")->required();

    fs::path eval_model, eval_cache, eval_manifest, eval_out = ".";
    CLI::App* eval = app.add_subcommand("eval", "Evaluate and write EER/HTER reports");
    eval->fallthrough();
    eval->add_option("manifest", eval_manifest, "Dataset manifest CSV")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--cache", eval_cache, "Feature cache from `extract`")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--model", eval_model, "Model directory (holdout protocol)");
    eval->add_option("--out", eval_out, "Report directory")->capture_default_str();

    fs::path score_model, score_image;
    CLI::App* score =
        app.add_subcommand("score", "Print one image's spoof probability to stdout");
    score->fallthrough();
    score->add_option("image", score_image, "Image file to score")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("--model", score_model, "Model directory")->required();

    try {
        app.parse(argc, argv);
        const lbpf::RunConfig config = resolve(state);
        if (synth->parsed()) cmd_synth(config, synth_dir, per_class);
        if (extract->parsed()) cmd_extract(config, extract_manifest, extract_out);
        if (train->parsed()) cmd_train(config, train_cache, train_manifest, train_model);
        if (eval->parsed()) cmd_eval(config, eval_model, eval_cache, eval_manifest, eval_out);
        if (score->parsed()) cmd_score(config, score_model, score_image);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const lbpf::degenerate_data& e) {
        std::cerr << "error (degenerate data): " << e.what() << "\n";
        return 3;
    } catch (const lbpf::bad_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
