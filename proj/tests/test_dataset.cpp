#include <cmath>
#include <filesystem>
#include <set>

#include "avdiff/dataset.hpp"
#include "avdiff/pipeline.hpp"
#include "avdiff/embedder.hpp"
#include "doctest.h"

using namespace avdiff;

namespace {
std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

DatasetConfig tiny_config() {
    DatasetConfig cfg;
    cfg.resolution = 32;
    cfg.frames = 4;
    cfg.n_splats = 250;
    cfg.actions = {"walk"};
    cfg.scenes = {"park", "beach"};
    cfg.appearances = {"man_white_shirt"};
    cfg.cameras = {"static"};
    cfg.samples_per_combo = 2;
    cfg.split_ratio = 0.75f;
    cfg.seed = 11;
    return cfg;
}
}  // namespace

TEST_CASE("synth_scene is deterministic and shaped as requested") {
    auto [spec_a, img_a] = synth_scene("park", 32, 32, 5);
    auto [spec_b, img_b] = synth_scene("park", 32, 32, 5);
    REQUIRE(img_a.shape() == Shape{32, 32, 3});
    for (std::size_t i = 0; i < img_a.size(); ++i) CHECK(img_a.data()[i] == img_b.data()[i]);
    auto [spec_c, img_c] = synth_scene("park", 32, 32, 6);
    bool differs = false;
    for (std::size_t i = 0; i < img_a.size() && !differs; ++i) {
        if (img_a.data()[i] != img_c.data()[i]) differs = true;
    }
    CHECK(differs);
    CHECK_THROWS_AS(synth_scene("volcano", 32, 32, 1), ConfigError);
}

TEST_CASE("beach tint warms white") {
    SceneSpec beach = scene_from_id("beach", 0);
    Vec3 tinted = apply_tint(beach, {1.0f, 1.0f, 1.0f});
    CHECK(tinted.x >= tinted.z);
    CHECK(tinted.x > 0.9f);
}

TEST_CASE("tints keep colors inside the unit cube") {
    for (const auto& id : known_scenes()) {
        SceneSpec s = scene_from_id(id, 0);
        for (Vec3 c : {Vec3{0, 0, 0}, Vec3{1, 1, 1}, Vec3{1, 0, 1}, Vec3{0.2f, 0.9f, 0.4f}}) {
            Vec3 t = apply_tint(s, c);
            for (float v : {t.x, t.y, t.z}) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.0f);
            }
        }
    }
}

TEST_CASE("caption template and vocabulary containment") {
    CHECK(caption("park", {"man_white_shirt", "woman_yellow_dress"}, "latin_dance") ==
          "a man in a white shirt and a woman in a yellow dress dancing in a park");
    CHECK(caption("beach", {"man_blue_suit"}, "walk") == "a man in a blue suit walking on a beach");

    // Same inputs, same string; different scenes differ in the scene token.
    CHECK(caption("park", {"man_white_shirt"}, "jump") ==
          caption("park", {"man_white_shirt"}, "jump"));
    CHECK(caption("park", {"man_white_shirt"}, "jump") !=
          caption("street", {"man_white_shirt"}, "jump"));

    EmbedVocab vocab;
    for (const auto& scene : known_scenes()) {
        for (const auto& app : known_appearances()) {
            for (const auto& action : known_actions()) {
                for (const auto& tok : tokenize(caption(scene, {app.id}, action))) {
                    CHECK(vocab.token_id(tok) >= 0);
                }
            }
        }
    }
    CHECK_THROWS_AS(caption("park", {"nobody"}, "walk"), ConfigError);
}

TEST_CASE("make_sample composites the avatar over the tinted background") {
    BodyTemplate tpl = make_humanoid_template();
    DatasetConfig cfg = tiny_config();
    SampleDescriptor d;
    d.index = 0;
    d.action = "squat";
    d.scene = "park";
    d.camera = "static";
    d.appearance_ids = {"woman_yellow_dress"};
    d.seed = 77;
    DataSample sample = build_one_sample(tpl, cfg, d);

    REQUIRE(sample.video.shape() == sample.avatar.shape());
    REQUIRE(sample.video.shape() == Shape{4, 32, 32, 3});

    // Rebuild the tinted background for comparison.
    auto [scene, background] = synth_scene("park", 32, 32, derive_seed(77, 100));
    Tensor tinted = background.clone();
    apply_tint(scene, tinted);

    int fg = 0, bg = 0;
    for (int f = 0; f < 4; ++f) {
        for (int p = 0; p < 32 * 32; ++p) {
            const std::size_t px = (static_cast<std::size_t>(f) * 32 * 32 + p) * 3;
            const float va = sample.avatar.data()[px] + sample.avatar.data()[px + 1] +
                             sample.avatar.data()[px + 2];
            const float diff = std::abs(sample.video.data()[px] - tinted.data()[p * 3]) +
                               std::abs(sample.video.data()[px + 1] - tinted.data()[p * 3 + 1]) +
                               std::abs(sample.video.data()[px + 2] - tinted.data()[p * 3 + 2]);
            if (va > 1e-5f) {
                // Avatar-covered pixels differ from the pure tinted background.
                CHECK(diff > 1e-7f);
                ++fg;
            } else {
                // The avatar is the only foreground.
                CHECK(diff < 1e-5f);
                ++bg;
            }
        }
    }
    CHECK(fg > 100);
    CHECK(bg > 1000);
}

TEST_CASE("avatar centroid stays frame-aligned between V and V_a") {
    BodyTemplate tpl = make_humanoid_template();
    DatasetConfig cfg = tiny_config();
    cfg.resolution = 48;
    SampleDescriptor d;
    d.index = 0;
    d.action = "walk";
    d.scene = "street";
    d.camera = "orbit:90";
    d.appearance_ids = {"man_blue_suit"};
    d.seed = 5;
    DataSample sample = build_one_sample(tpl, cfg, d);

    auto [scene, background] = synth_scene("street", 48, 48, derive_seed(5, 100));
    Tensor tinted = background.clone();
    apply_tint(scene, tinted);

    for (int f = 0; f < 4; ++f) {
        double ax = 0, ay = 0, an = 0, vx = 0, vy = 0, vn = 0;
        for (int i = 0; i < 48; ++i) {
            for (int j = 0; j < 48; ++j) {
                const std::size_t px =
                    ((static_cast<std::size_t>(f) * 48 + i) * 48 + j) * 3;
                const float va = sample.avatar.data()[px] + sample.avatar.data()[px + 1] +
                                 sample.avatar.data()[px + 2];
                if (va > 1e-4f) {
                    ax += j;
                    ay += i;
                    an += 1;
                }
                const std::size_t bp = (static_cast<std::size_t>(i) * 48 + j) * 3;
                const float diff =
                    std::abs(sample.video.data()[px] - tinted.data()[bp]) +
                    std::abs(sample.video.data()[px + 1] - tinted.data()[bp + 1]) +
                    std::abs(sample.video.data()[px + 2] - tinted.data()[bp + 2]);
                if (diff > 1e-4f) {
                    vx += j;
                    vy += i;
                    vn += 1;
                }
            }
        }
        REQUIRE(an > 0);
        REQUIRE(vn > 0);
        CHECK(std::abs(ax / an - vx / vn) <= 1.0);
        CHECK(std::abs(ay / an - vy / vn) <= 1.0);
    }
}

TEST_CASE("build_dataset writes the expected layout and split") {
    auto dir = fresh_dir("avdiff_dataset_test");
    DatasetConfig cfg = tiny_config();  // 2 scenes x 2 reps = 4 samples, split 0.75
    auto manifest = build_dataset(cfg, dir);
    REQUIRE(manifest.size() == 4);
    int train = 0, test = 0;
    for (const auto& e : manifest) {
        (e.split == "train" ? train : test) += 1;
        CHECK(std::filesystem::exists(dir / e.rel_path / "video.amgt"));
        CHECK(std::filesystem::exists(dir / e.rel_path / "avatar.amgt"));
        CHECK(std::filesystem::exists(dir / e.rel_path / "caption.txt"));
        CHECK(std::filesystem::exists(dir / e.rel_path / "meta.txt"));
    }
    CHECK(train == 3);
    CHECK(test == 1);

    auto loaded = load_manifest(dir);
    REQUIRE(loaded.size() == 4);
    CHECK(loaded[3].split == "test");

    StoredSample s = load_sample(dir / manifest[0].rel_path);
    CHECK(s.video.shape() == Shape{4, 32, 32, 3});
    CHECK(!s.caption.empty());
    CHECK(s.meta.at("scene") == "park");
}

TEST_CASE("split arithmetic floors the train count") {
    DatasetConfig cfg = tiny_config();
    cfg.scenes = {"park"};
    cfg.samples_per_combo = 64;
    cfg.split_ratio = 0.95f;
    // floor(64 * 0.95) = 60 train, 4 test.
    auto descriptors = enumerate_samples(cfg);
    REQUIRE(descriptors.size() == 64);
    const int n_train = static_cast<int>(std::floor(0.95f * 64.0f));
    CHECK(n_train == 60);
}

TEST_CASE("rebuilding with the same seed is byte-identical") {
    auto dir_a = fresh_dir("avdiff_dataset_det_a");
    auto dir_b = fresh_dir("avdiff_dataset_det_b");
    DatasetConfig cfg = tiny_config();
    cfg.scenes = {"beach"};
    cfg.samples_per_combo = 1;
    build_dataset(cfg, dir_a);
    build_dataset(cfg, dir_b);
    for (const char* name : {"sample_00000/video.amgt", "sample_00000/avatar.amgt",
                             "sample_00000/caption.txt", "sample_00000/meta.txt",
                             "manifest.tsv"}) {
        CHECK(read_file_bytes(dir_a / name) == read_file_bytes(dir_b / name));
    }
}

TEST_CASE("config parsing validates keys and values") {
    std::map<std::string, std::string> kv{
        {"resolution", "32"}, {"frames", "8"},           {"seed", "3"},
        {"actions", "walk,jump"}, {"scenes", "park"},    {"appearances", "man_white_shirt"},
        {"cameras", "static,orbit:180"},
    };
    DatasetConfig cfg = dataset_config_from_map(kv);
    CHECK(cfg.actions.size() == 2);
    CHECK(cfg.combos() == 4);

    auto broken = kv;
    broken.erase("seed");
    CHECK_THROWS_AS(dataset_config_from_map(broken), ConfigError);
    broken = kv;
    broken["resolution"] = "33";
    CHECK_THROWS_AS(dataset_config_from_map(broken), ConfigError);
    broken = kv;
    broken["actions"] = "fly";
    CHECK_THROWS_AS(dataset_config_from_map(broken), ConfigError);
    broken = kv;
    broken["appearances"] = "a+b+c";
    CHECK_THROWS_AS(dataset_config_from_map(broken), ConfigError);
}

TEST_CASE("two actors render as two disjoint silhouettes") {
    BodyTemplate tpl = make_humanoid_template();
    ConditionRequest req;
    req.action = "squat";
    req.appearance_ids = {"man_white_shirt", "woman_yellow_dress"};
    req.camera = "static";
    req.frames = 2;
    req.resolution = 64;
    req.n_splats = 500;
    req.seed = 9;
    ConditionBundle bundle = make_condition(tpl, req);

    // Connected components of the non-black mask in frame 0 (4-neighbour).
    const int H = 64, W = 64;
    std::vector<int> label(H * W, 0);
    auto occupied = [&](int i, int j) {
        const float* p = bundle.avatar.rgb.data() + (static_cast<std::size_t>(i) * W + j) * 3;
        return p[0] + p[1] + p[2] > 0.05f;  // visibly non-black
    };
    int components = 0;
    std::vector<std::pair<int, int>> stack;
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            if (!occupied(i, j) || label[i * W + j]) continue;
            ++components;
            stack.push_back({i, j});
            label[i * W + j] = components;
            while (!stack.empty()) {
                auto [ci, cj] = stack.back();
                stack.pop_back();
                const int di[4] = {1, -1, 0, 0};
                    const int dj[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int ni = ci + di[k], nj = cj + dj[k];
                    if (ni < 0 || ni >= H || nj < 0 || nj >= W) continue;
                    if (!occupied(ni, nj) || label[ni * W + nj]) continue;
                    label[ni * W + nj] = components;
                    stack.push_back({ni, nj});
                }
            }
        }
    }
    CHECK(components == 2);
}
