#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avdiff/body.hpp"
#include "avdiff/camera.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/motion.hpp"
#include "avdiff/render.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/scene.hpp"
#include "avdiff/splats.hpp"
#include "avdiff/tensor_io.hpp"
#include "avdiff/vocab.hpp"

namespace avdiff {

// One training triple: real-proxy video V, caption y_s, avatar rendering V_a.
struct DataSample {
    Tensor video;    // [f,h,w,3]
    std::string caption;
    Tensor avatar;   // [f,h,w,3], black background
    std::map<std::string, std::string> meta;
};

struct AvatarVideo {
    Tensor rgb;    // [f,h,w,3]
    Tensor alpha;  // [f,h,w]
};

// Renders every actor's splats through the per-frame cameras.
inline AvatarVideo render_avatar_video(const BodyTemplate& tpl,
                                       const std::vector<AvatarSplats>& actor_splats,
                                       const PoseSequence& motion,
                                       const std::vector<Camera>& cams) {
    if (static_cast<int>(cams.size()) != motion.frame_count()) {
        throw ContractError("camera count does not match motion frame count");
    }
    if (static_cast<int>(actor_splats.size()) != motion.actor_count()) {
        throw ContractError("splat set count does not match actor count");
    }
    const int F = motion.frame_count();
    const int H = cams[0].height, W = cams[0].width;
    AvatarVideo out{Tensor(Shape{F, H, W, 3}), Tensor(Shape{F, H, W})};
    for (int f = 0; f < F; ++f) {
        std::vector<WorldSplat> world;
        for (int a = 0; a < motion.actor_count(); ++a) {
            const ActorFrame& af = motion.frames[f][a];
            const auto centers = skin_splats(actor_splats[a], tpl, af.params,
                                             af.root_translation);
            const auto ws = make_world_splats(actor_splats[a], centers);
            world.insert(world.end(), ws.begin(), ws.end());
        }
        RenderResult r = render_frame(world, cams[f]);
        std::copy_n(r.rgb.data(), r.rgb.size(),
                    out.rgb.data() + static_cast<std::size_t>(f) * r.rgb.size());
        std::copy_n(r.alpha.data(), r.alpha.size(),
                    out.alpha.data() + static_cast<std::size_t>(f) * r.alpha.size());
    }
    return out;
}

// Scene framing target: cameras aim at the scene center at body height, like
// a tripod, so actor placement shows up as layout variation in the frame.
inline Vec3 scene_center(const BodyTemplate& tpl) {
    const std::array<float, kShapeCoeffs> zero_beta{};
    return joint_rest_positions(tpl, zero_beta)[kPelvis];
}

// Mean pelvis position over the whole sequence.
inline Vec3 motion_centroid(const BodyTemplate& tpl, const PoseSequence& motion) {
    const Vec3 pelvis = scene_center(tpl);
    Vec3 acc{};
    int n = 0;
    for (const auto& frame : motion.frames) {
        for (const auto& actor : frame) {
            acc += pelvis + actor.root_translation;
            ++n;
        }
    }
    if (n == 0) throw ContractError("motion has no frames");
    return acc * (1.0f / static_cast<float>(n));
}

// V = tint(avatar over background by accumulated alpha); V_a stays on black.
inline DataSample make_sample(const BodyTemplate& tpl,
                              const std::vector<AvatarSplats>& actor_splats,
                              const PoseSequence& motion, const SceneSpec& scene,
                              const Tensor& background, const std::vector<Camera>& cams,
                              const std::vector<std::string>& appearance_ids) {
    AvatarVideo av = render_avatar_video(tpl, actor_splats, motion, cams);
    const int F = av.rgb.dim(0), H = av.rgb.dim(1), W = av.rgb.dim(2);
    if (background.shape() != Shape{H, W, 3}) {
        throw ContractError("background resolution does not match the cameras");
    }
    DataSample sample;
    sample.avatar = av.rgb;
    sample.video = Tensor(Shape{F, H, W, 3});
    for (int f = 0; f < F; ++f) {
        for (int p = 0; p < H * W; ++p) {
            const std::size_t px = static_cast<std::size_t>(f) * H * W + p;
            const float a = av.alpha.data()[px];
            Vec3 c{av.rgb.data()[px * 3 + 0] + (1.0f - a) * background.data()[p * 3 + 0],
                   av.rgb.data()[px * 3 + 1] + (1.0f - a) * background.data()[p * 3 + 1],
                   av.rgb.data()[px * 3 + 2] + (1.0f - a) * background.data()[p * 3 + 2]};
            c = apply_tint(scene, c);
            sample.video.data()[px * 3 + 0] = c.x;
            sample.video.data()[px * 3 + 1] = c.y;
            sample.video.data()[px * 3 + 2] = c.z;
        }
    }
    sample.caption = caption(scene.id, appearance_ids, motion.action);
    sample.meta["action"] = motion.action;
    sample.meta["scene"] = scene.id;
    std::string apps;
    for (std::size_t i = 0; i < appearance_ids.size(); ++i) {
        if (i) apps += "+";
        apps += appearance_ids[i];
    }
    sample.meta["appearances"] = apps;
    sample.meta["actors"] = std::to_string(motion.actor_count());
    sample.meta["fps"] = std::to_string(motion.fps);
    sample.meta["seed"] = std::to_string(motion.seed);
    return sample;
}

// ---------------------------------------------------------------------------
// Dataset builder.

struct DatasetConfig {
    int resolution = 32;
    int frames = 16;
    int n_splats = 700;
    float focal_scale = 1.1f;  // focal = focal_scale * resolution
    std::vector<std::string> actions = {"walk"};
    std::vector<std::string> scenes = {"park"};
    std::vector<std::string> appearances = {"man_white_shirt"};  // "+"-joined ids per entry
    std::vector<std::string> cameras = {"static"};
    int samples_per_combo = 1;
    float split_ratio = 0.95f;
    std::uint64_t seed = 0;

    int combos() const {
        return static_cast<int>(actions.size() * scenes.size() * appearances.size() *
                                cameras.size());
    }
    int total_samples() const { return combos() * samples_per_combo; }
};

inline std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline DatasetConfig dataset_config_from_map(const std::map<std::string, std::string>& kv) {
    DatasetConfig cfg;
    auto require = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError(std::string("missing config key: ") + key);
        return it->second;
    };
    try {
        cfg.resolution = std::stoi(require("resolution"));
        cfg.frames = std::stoi(require("frames"));
        cfg.seed = std::stoull(require("seed"));
        cfg.actions = split_list(require("actions"), ',');
        cfg.scenes = split_list(require("scenes"), ',');
        cfg.appearances = split_list(require("appearances"), ',');
        cfg.cameras = split_list(require("cameras"), ',');
        if (kv.count("samples_per_combo")) {
            cfg.samples_per_combo = std::stoi(kv.at("samples_per_combo"));
        }
        if (kv.count("split_ratio")) cfg.split_ratio = std::stof(kv.at("split_ratio"));
        if (kv.count("n_splats")) cfg.n_splats = std::stoi(kv.at("n_splats"));
        if (kv.count("focal_scale")) cfg.focal_scale = std::stof(kv.at("focal_scale"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    if (cfg.resolution < 8 || cfg.resolution % 2 != 0) {
        throw ConfigError("resolution must be even and >= 8");
    }
    if (cfg.frames < 2) throw ConfigError("frames must be >= 2");
    if (cfg.split_ratio <= 0.0f || cfg.split_ratio > 1.0f) {
        throw ConfigError("split_ratio must be in (0, 1]");
    }
    if (cfg.actions.empty() || cfg.scenes.empty() || cfg.appearances.empty() ||
        cfg.cameras.empty()) {
        throw ConfigError("actions/scenes/appearances/cameras must be non-empty");
    }
    for (const auto& a : cfg.actions) {
        if (!is_known_action(a)) throw ConfigError("unknown action: " + a);
    }
    for (const auto& s : cfg.scenes) scene_from_id(s, 0);
    for (const auto& entry : cfg.appearances) {
        const auto ids = split_list(entry, '+');
        if (ids.empty() || ids.size() > 2) {
            throw ConfigError("appearance entries support 1 or 2 '+'-joined ids: " + entry);
        }
        for (const auto& id : ids) appearance_from_id(id);
    }
    for (const auto& c : cfg.cameras) parse_trajectory_spec(c);
    return cfg;
}

inline DatasetConfig load_dataset_config(const std::filesystem::path& path) {
    return dataset_config_from_map(read_meta_file(path));
}

struct ManifestEntry {
    int index;
    std::string rel_path;
    std::string split;  // "train" or "test"
};

// Deterministic sample enumeration: cameras vary fastest, then appearances,
// scenes, actions, then the repeat index.
struct SampleDescriptor {
    int index;
    std::string action, scene, camera;
    std::vector<std::string> appearance_ids;
    std::uint64_t seed;
};

inline std::vector<SampleDescriptor> enumerate_samples(const DatasetConfig& cfg) {
    std::vector<SampleDescriptor> out;
    int index = 0;
    for (int rep = 0; rep < cfg.samples_per_combo; ++rep) {
        for (const auto& action : cfg.actions) {
            for (const auto& scene : cfg.scenes) {
                for (const auto& appearance : cfg.appearances) {
                    for (const auto& camera : cfg.cameras) {
                        SampleDescriptor d;
                        d.index = index;
                        d.action = action;
                        d.scene = scene;
                        d.camera = camera;
                        d.appearance_ids = split_list(appearance, '+');
                        d.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
                        out.push_back(d);
                        ++index;
                    }
                }
            }
        }
    }
    return out;
}

inline DataSample build_one_sample(const BodyTemplate& tpl, const DatasetConfig& cfg,
                                   const SampleDescriptor& d) {
    const int actors = static_cast<int>(d.appearance_ids.size());
    PoseSequence motion = generate_motion(d.action, cfg.frames, actors, d.seed);
    std::vector<AvatarSplats> splats;
    for (int a = 0; a < actors; ++a) {
        splats.push_back(bind_splats(tpl, appearance_from_id(d.appearance_ids[a]), cfg.n_splats,
                                     derive_seed(d.seed, 1 + a)));
    }
    auto [scene, background] =
        synth_scene(d.scene, cfg.resolution, cfg.resolution, derive_seed(d.seed, 100));
    TrajectorySpec traj = parse_trajectory_spec(d.camera);
    const auto cams = camera_trajectory(traj, scene_center(tpl), cfg.frames,
                                        cfg.focal_scale * cfg.resolution, cfg.resolution,
                                        cfg.resolution);
    DataSample sample = make_sample(tpl, splats, motion, scene, background, cams,
                                    d.appearance_ids);
    sample.meta["camera"] = d.camera;
    sample.meta["index"] = std::to_string(d.index);
    return sample;
}

inline std::string sample_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%05d", index);
    return buf;
}

inline void write_meta_file(const std::map<std::string, std::string>& meta,
                            const std::filesystem::path& path) {
    std::string text;
    for (const auto& [k, v] : meta) text += k + "=" + v + "\n";
    write_file_bytes(path, text);
}

// Writes sample_%05d/{video.amgt, avatar.amgt, caption.txt, meta.txt} plus a
// manifest of "index<TAB>relative-path<TAB>split" lines. The first
// floor(n * split_ratio) samples are train, the rest test.
inline std::vector<ManifestEntry> build_dataset(const DatasetConfig& cfg,
                                                const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create dataset directory: " + out_dir.string());

    const BodyTemplate tpl = make_humanoid_template();
    const auto descriptors = enumerate_samples(cfg);
    const int n = static_cast<int>(descriptors.size());
    const int n_train = static_cast<int>(std::floor(cfg.split_ratio * static_cast<float>(n)));

    std::vector<ManifestEntry> manifest;
    for (const SampleDescriptor& d : descriptors) {
        DataSample sample = build_one_sample(tpl, cfg, d);
        const std::string name = sample_dir_name(d.index);
        const auto dir = out_dir / name;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create sample directory: " + dir.string());
        save_amgt(sample.video, dir / "video.amgt");
        save_amgt(sample.avatar, dir / "avatar.amgt");
        write_file_bytes(dir / "caption.txt", sample.caption + "\n");
        write_meta_file(sample.meta, dir / "meta.txt");
        manifest.push_back({d.index, name, d.index < n_train ? "train" : "test"});
    }

    std::string lines;
    for (const ManifestEntry& e : manifest) {
        lines += std::to_string(e.index) + "\t" + e.rel_path + "\t" + e.split + "\n";
    }
    write_file_bytes(out_dir / "manifest.tsv", lines);
    return manifest;
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& dataset_dir) {
    const std::string bytes = read_file_bytes(dataset_dir / "manifest.tsv");
    std::vector<ManifestEntry> out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string::npos) end = bytes.size();
        const std::string line = bytes.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        const auto cols = split_list(line, '\t');
        if (cols.size() != 3) throw IoError("bad manifest line: " + line);
        out.push_back({std::stoi(cols[0]), cols[1], cols[2]});
    }
    return out;
}

// Loads one stored sample (video, avatar, caption).
struct StoredSample {
    Tensor video;
    Tensor avatar;
    std::string caption;
    std::map<std::string, std::string> meta;
};

inline StoredSample load_sample(const std::filesystem::path& sample_dir) {
    StoredSample s;
    s.video = load_amgt(sample_dir / "video.amgt");
    s.avatar = load_amgt(sample_dir / "avatar.amgt");
    std::string cap = read_file_bytes(sample_dir / "caption.txt");
    while (!cap.empty() && (cap.back() == '\n' || cap.back() == '\r')) cap.pop_back();
    s.caption = cap;
    s.meta = read_meta_file(sample_dir / "meta.txt");
    return s;
}

}  // namespace avdiff
