// Prints the texture representation of one image: per-scale code maps for
// the first channel and the concatenated feature lengths.
//
//   inspect_features [image.png]
//
// Without an argument a synthetic frame is generated on the fly.

#include <cstdio>
#include <filesystem>
#include <numeric>

#include "lbpforest/features.hpp"
#include "lbpforest/image_io.hpp"
#include "lbpforest/synth.hpp"

int main(int argc, char** argv) {
    std::filesystem::path path;
    if (argc > 1) {
        path = argv[1];
    } else {
        const auto dir = std::filesystem::temp_directory_path() / "lbpforest_inspect";
        const auto manifest = lbpf::generate_synth_dataset(dir, 1, 1);
        path = manifest.resolve(0);
        std::printf("no image given; generated %s\n", path.c_str());
    }
    const lbpf::Image img =
        lbpf::convert_color_space(lbpf::load_image(path), lbpf::ColorSpace::hsv);

    for (int s = 0; s < 3; ++s) {
        const auto id = static_cast<lbpf::ScaleId>(s);
        const auto spec = lbpf::scale_spec(id);
        const lbpf::LbpConfig cfg(spec.neighbors, spec.radius);
        const auto cm = lbpf::lbp_codes(img.planes[0], img.width, img.height, cfg);

        std::size_t valid = 0;
        std::size_t catch_all = 0;
        for (int y = 0; y < cm.height; ++y)
            for (int x = 0; x < cm.width; ++x) {
                if (!cm.is_valid(x, y)) continue;
                ++valid;
                if (cm.code(x, y) == cfg.map.uniform_count()) ++catch_all;
            }

        const auto features = lbpf::extract_scale(img, id);
        const float mass = std::accumulate(features.begin(), features.end(), 0.0f);
        std::printf("scale %d (P=%2d R=%d): %zu codes, %4.1f%% non-uniform, "
                    "%zu features, total mass %.1f\n",
                    s + 1, spec.neighbors, spec.radius, valid,
                    100.0 * double(catch_all) / double(valid), features.size(), double(mass));
    }
    return 0;
}
