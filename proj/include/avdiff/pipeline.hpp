#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avdiff/body.hpp"
#include "avdiff/camera.hpp"
#include "avdiff/dataset.hpp"
#include "avdiff/motion.hpp"
#include "avdiff/splats.hpp"
#include "avdiff/vocab.hpp"

namespace avdiff {

// Inference-side condition synthesis: text-identified actors and action to
// motion, splat avatars, scripted cameras, and the black-background condition
// video.
struct ConditionRequest {
    std::string action = "walk";
    std::string scene = "park";
    std::vector<std::string> appearance_ids = {"man_white_shirt"};
    std::string camera = "static";
    int frames = 16;
    int resolution = 32;
    float focal_scale = 1.1f;
    int n_splats = 700;
    std::uint64_t seed = 0;
};

struct ConditionBundle {
    PoseSequence motion;
    std::vector<Camera> cams;
    AvatarVideo avatar;
    std::string caption;
};

inline ConditionBundle make_condition(const BodyTemplate& tpl, const ConditionRequest& req) {
    if (req.appearance_ids.empty() || req.appearance_ids.size() > 2) {
        throw ConfigError("sampling supports 1 or 2 appearance ids");
    }
    ConditionBundle bundle;
    bundle.motion = generate_motion(req.action, req.frames,
                                    static_cast<int>(req.appearance_ids.size()), req.seed);
    std::vector<AvatarSplats> splats;
    for (std::size_t a = 0; a < req.appearance_ids.size(); ++a) {
        splats.push_back(bind_splats(tpl, appearance_from_id(req.appearance_ids[a]),
                                     req.n_splats, derive_seed(req.seed, 1 + a)));
    }
    const TrajectorySpec traj = parse_trajectory_spec(req.camera);
    bundle.cams = camera_trajectory(traj, scene_center(tpl), req.frames,
                                    req.focal_scale * req.resolution, req.resolution,
                                    req.resolution);
    bundle.avatar = render_avatar_video(tpl, splats, bundle.motion, bundle.cams);
    bundle.caption = caption(req.scene, req.appearance_ids, req.action);
    return bundle;
}

}  // namespace avdiff
