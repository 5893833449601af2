#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avdiff/body.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/geom.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/tensor_io.hpp"

namespace avdiff {

struct ActorFrame {
    BodyParams params = BodyParams::rest();
    Vec3 root_translation{};
};

struct PoseSequence {
    std::vector<std::vector<ActorFrame>> frames;  // frames[f][actor]
    float fps = 8.0f;
    std::string action;
    std::uint64_t seed = 0;

    int frame_count() const { return static_cast<int>(frames.size()); }
    int actor_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].size()); }

    void validate() const {
        for (const auto& f : frames) {
            if (static_cast<int>(f.size()) != actor_count()) {
                throw ContractError("pose sequence frames carry differing actor counts");
            }
        }
    }
};

inline const std::vector<std::string>& known_actions() {
    static const std::vector<std::string> actions = {"walk",  "jump", "wave",       "box",
                                                     "squat", "spin", "latin_dance"};
    return actions;
}

inline bool is_known_action(const std::string& a) {
    for (const auto& k : known_actions()) {
        if (k == a) return true;
    }
    return false;
}

namespace detail {

// Frames per motion cycle at the default 8 fps: a two-second loop.
inline constexpr int kFramesPerCycle = 16;

struct MotionStyle {
    float amp = 1.0f;        // secondary-joint amplitude jitter
    float arm_phase = 0.0f;  // secondary-oscillation phase offset
};

// Analytic root height offset curves; the jump curve has exactly one interior
// local maximum per cycle.
inline float root_height_offset(const std::string& action, float u) {
    const float two_pi = 2.0f * 3.14159265358979f;
    if (action == "jump") return 0.30f * std::max(0.0f, std::sin(two_pi * u));
    if (action == "squat") return -0.22f * (0.5f - 0.5f * std::cos(two_pi * u));
    if (action == "walk") return 0.05f * std::sin(two_pi * 2.0f * u);
    if (action == "latin_dance") return 0.04f * std::sin(two_pi * 2.0f * u);
    return 0.0f;
}

// The template rests in a T pose; actions hold the arms near the body and
// compose their own swings on top of that hang. For the left arm (+x) a
// negative z rotation lowers it; the right arm mirrors.
inline constexpr float kArmHang = 1.45f;

inline void pose_action_frame(const std::string& action, float u, float travel_time,
                              const MotionStyle& style, BodyParams& p, Vec3& root) {
    const float two_pi = 2.0f * 3.14159265358979f;
    const Vec3 ax{1.0f, 0.0f, 0.0f};
    const Vec3 ay{0.0f, 1.0f, 0.0f};
    const Vec3 az{0.0f, 0.0f, 1.0f};
    const float s = std::sin(two_pi * u);
    const float c = std::cos(two_pi * u);
    const float a = style.amp;
    const Mat3 hang_l = axis_angle(az, -kArmHang);
    const Mat3 hang_r = axis_angle(az, kArmHang);
    p.set_rotation(kLShoulder, hang_l);
    p.set_rotation(kRShoulder, hang_r);

    root = {0.0f, root_height_offset(action, u), 0.0f};

    if (action == "walk") {
        const float swing = 0.32f * s;
        p.set_rotation(kLHip, axis_angle(ax, swing));
        p.set_rotation(kRHip, axis_angle(ax, -swing));
        p.set_rotation(kLKnee, axis_angle(ax, 0.26f * std::max(0.0f, -s)));
        p.set_rotation(kRKnee, axis_angle(ax, 0.26f * std::max(0.0f, s)));
        const float arm = 0.45f * a * std::sin(two_pi * u + style.arm_phase);
        p.set_rotation(kLShoulder, axis_angle(ax, -arm) * hang_l);
        p.set_rotation(kRShoulder, axis_angle(ax, arm) * hang_r);
        root.z += 0.08f * s;
        // Walking travels laterally through the scene, centered on the clip.
        root.x += 0.30f * travel_time;
    } else if (action == "jump") {
        const float crouch = 0.6f * std::max(0.0f, -s);
        p.set_rotation(kLHip, axis_angle(ax, -crouch));
        p.set_rotation(kRHip, axis_angle(ax, -crouch));
        p.set_rotation(kLKnee, axis_angle(ax, 1.6f * crouch));
        p.set_rotation(kRKnee, axis_angle(ax, 1.6f * crouch));
        // Arms rise toward horizontal during flight.
        const float raise = std::min(1.0f, 1.1f * a * std::max(0.0f, s));
        p.set_rotation(kLShoulder, axis_angle(az, -kArmHang + kArmHang * raise));
        p.set_rotation(kRShoulder, axis_angle(az, kArmHang - kArmHang * raise));
    } else if (action == "wave") {
        p.set_rotation(kRShoulder, axis_angle(az, -1.9f));
        p.set_rotation(kRElbow, axis_angle(az, -0.5f + 0.45f * a *
                                                    std::sin(two_pi * 2.0f * u +
                                                             style.arm_phase)));
        p.set_rotation(kHead, axis_angle(az, 0.08f * s));
    } else if (action == "box") {
        const float punch_l = std::max(0.0f, s);
        const float punch_r = std::max(0.0f, -s);
        // Guard stance: forearms up; the punching arm drives forward.
        p.set_rotation(kLShoulder, axis_angle(ax, -1.2f * a * punch_l) * hang_l);
        p.set_rotation(kRShoulder, axis_angle(ax, -1.2f * a * punch_r) * hang_r);
        p.set_rotation(kLElbow, axis_angle(az, 1.5f * (1.0f - punch_l)));
        p.set_rotation(kRElbow, axis_angle(az, -1.5f * (1.0f - punch_r)));
        p.set_rotation(kSpine2, axis_angle(ay, 0.25f * s));
        p.set_rotation(kLKnee, axis_angle(ax, 0.25f));
        p.set_rotation(kRKnee, axis_angle(ax, 0.25f));
    } else if (action == "squat") {
        const float bend = 0.5f - 0.5f * c;
        p.set_rotation(kLHip, axis_angle(ax, -1.0f * bend));
        p.set_rotation(kRHip, axis_angle(ax, -1.0f * bend));
        p.set_rotation(kLKnee, axis_angle(ax, 1.9f * bend));
        p.set_rotation(kRKnee, axis_angle(ax, 1.9f * bend));
        // Hanging arms swing forward for balance on the way down.
        p.set_rotation(kLShoulder, axis_angle(ax, -1.1f * a * bend) * hang_l);
        p.set_rotation(kRShoulder, axis_angle(ax, -1.1f * a * bend) * hang_r);
        // Lateral weight shift keeps the root moving through the turn points.
        root.x += 0.13f * std::sin(two_pi * u);
    } else if (action == "spin") {
        p.set_rotation(kPelvis, axis_angle(ay, two_pi * u));
        p.set_rotation(kLShoulder, axis_angle(az, -kArmHang + 0.5f * a));
        p.set_rotation(kRShoulder, axis_angle(az, kArmHang - 0.5f * a));
    } else if (action == "latin_dance") {
        p.set_rotation(kPelvis, axis_angle(az, 0.22f * s) * axis_angle(ay, 0.3f * std::sin(two_pi * u + 0.7f)));
        p.set_rotation(kSpine2, axis_angle(az, -0.18f * s));
        p.set_rotation(kLShoulder, axis_angle(az, -0.55f + 0.35f * a * s));
        p.set_rotation(kRShoulder, axis_angle(az, 0.55f + 0.35f * a * s));
        p.set_rotation(kLElbow, axis_angle(az, 0.55f * c));
        p.set_rotation(kRElbow, axis_angle(az, -0.55f * c));
        p.set_rotation(kLHip, axis_angle(az, -0.12f * s));
        p.set_rotation(kRHip, axis_angle(az, -0.12f * s));
        root.x += 0.10f * s + 0.22f * travel_time;
    }
}

// Mirrors a pose across the x=0 plane: swap left/right joints and conjugate
// each rotation by diag(-1,1,1).
inline BodyParams mirror_params(const BodyParams& in) {
    BodyParams out = in;
    auto mirror6d = [](const float* src, float* dst) {
        // col0' = (c0.x, -c0.y, -c0.z), col1' = (-c1.x, c1.y, c1.z)
        dst[0] = src[0];
        dst[1] = -src[1];
        dst[2] = -src[2];
        dst[3] = -src[3];
        dst[4] = src[4];
        dst[5] = src[5];
    };
    std::array<int, kNumJoints> target{};
    for (int j = 0; j < kNumJoints; ++j) target[j] = j;
    for (const auto& pair : kMirrorPairs) {
        target[pair[0]] = pair[1];
        target[pair[1]] = pair[0];
    }
    for (int j = 0; j < kNumJoints; ++j) {
        mirror6d(in.pose.data() + j * 6, out.pose.data() + target[j] * 6);
    }
    return out;
}

}  // namespace detail

// Deterministic analytic motion. Two actors face each other mirrored about
// the x=0 plane with a fixed lateral offset.
inline PoseSequence generate_motion(const std::string& action, int n_frames, int n_actors,
                                    std::uint64_t seed) {
    if (!is_known_action(action)) throw ConfigError("unknown action: " + action);
    if (n_actors != 1 && n_actors != 2) throw ConfigError("n_actors must be 1 or 2");
    if (n_frames < 1) throw ConfigError("n_frames must be positive");

    Rng rng(derive_seed(seed, 0x6d6f74696fULL));
    detail::MotionStyle style;
    style.amp = rng.uniform(0.9f, 1.1f);
    style.arm_phase = rng.uniform(0.0f, 0.6f);
    // Scene placement varies per seed; cameras frame the scene, not the
    // actor, so equally captioned clips differ in layout.
    const float formation_offset = rng.uniform(-0.4f, 0.4f);

    const float lateral = 0.45f;
    PoseSequence seq;
    seq.fps = 8.0f;
    seq.action = action;
    seq.seed = seed;
    seq.frames.resize(n_frames);
    for (int f = 0; f < n_frames; ++f) {
        const float u = static_cast<float>(f % detail::kFramesPerCycle) /
                        static_cast<float>(detail::kFramesPerCycle);
        const float travel_time =
            (static_cast<float>(f) - 0.5f * static_cast<float>(n_frames - 1)) / seq.fps;
        BodyParams base = BodyParams::rest();
        Vec3 root{};
        detail::pose_action_frame(action, u, travel_time, style, base, root);
        auto& actors = seq.frames[f];
        if (n_actors == 1) {
            actors.push_back({base, root + Vec3{formation_offset, 0.0f, 0.0f}});
        } else {
            BodyParams mirrored = detail::mirror_params(base);
            Vec3 root_m{-root.x, root.y, root.z};
            actors.push_back({base, root + Vec3{formation_offset - lateral, 0.0f, 0.0f}});
            actors.push_back({mirrored, root_m + Vec3{formation_offset + lateral, 0.0f, 0.0f}});
        }
    }
    seq.validate();
    return seq;
}

// ---------------------------------------------------------------------------
// Serialization: an AMGT archive (pose/root/beta/psi tensors) plus a sidecar
// meta.txt of key=value lines.

inline void save_pose_sequence(const PoseSequence& seq, const std::filesystem::path& dir) {
    seq.validate();
    std::filesystem::create_directories(dir);
    const int F = seq.frame_count();
    const int A = seq.actor_count();
    Tensor pose(Shape{F, A, kNumJoints, 6});
    Tensor root(Shape{F, A, 3});
    Tensor beta(Shape{std::max(A, 1), kShapeCoeffs});
    Tensor psi(Shape{std::max(A, 1), kExprCoeffs});
    for (int f = 0; f < F; ++f) {
        for (int a = 0; a < A; ++a) {
            const ActorFrame& af = seq.frames[f][a];
            std::copy(af.params.pose.begin(), af.params.pose.end(),
                      pose.data() + (static_cast<std::size_t>(f) * A + a) * kNumJoints * 6);
            float* r = root.data() + (static_cast<std::size_t>(f) * A + a) * 3;
            r[0] = af.root_translation.x;
            r[1] = af.root_translation.y;
            r[2] = af.root_translation.z;
            if (f == 0) {
                std::copy(af.params.beta.begin(), af.params.beta.end(),
                          beta.data() + static_cast<std::size_t>(a) * kShapeCoeffs);
                std::copy(af.params.psi.begin(), af.params.psi.end(),
                          psi.data() + static_cast<std::size_t>(a) * kExprCoeffs);
            }
        }
    }
    TensorArchive archive;
    archive.emplace_back("pose", pose);
    archive.emplace_back("root", root);
    archive.emplace_back("beta", beta);
    archive.emplace_back("psi", psi);
    save_archive(archive, dir / "motion.amgt");

    std::string meta;
    meta += "fps=" + std::to_string(seq.fps) + "\n";
    meta += "actors=" + std::to_string(A) + "\n";
    meta += "action=" + seq.action + "\n";
    meta += "seed=" + std::to_string(seq.seed) + "\n";
    write_file_bytes(dir / "meta.txt", meta);
}

inline std::map<std::string, std::string> read_meta_file(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    std::string bytes = read_file_bytes(path);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string::npos) end = bytes.size();
        std::string line = bytes.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw IoError("bad key=value line: " + line);
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

inline PoseSequence load_pose_sequence(const std::filesystem::path& dir) {
    TensorArchive archive = load_archive(dir / "motion.amgt");
    const Tensor& pose = archive_get(archive, "pose");
    const Tensor& root = archive_get(archive, "root");
    const Tensor& beta = archive_get(archive, "beta");
    const Tensor& psi = archive_get(archive, "psi");
    if (pose.rank() != 4 || pose.dim(2) != kNumJoints || pose.dim(3) != 6) {
        throw IoError("motion archive: bad pose tensor shape");
    }
    const int F = pose.dim(0), A = pose.dim(1);
    auto meta = read_meta_file(dir / "meta.txt");

    PoseSequence seq;
    seq.fps = std::stof(meta.at("fps"));
    seq.action = meta.at("action");
    seq.seed = std::stoull(meta.at("seed"));
    seq.frames.resize(F);
    for (int f = 0; f < F; ++f) {
        for (int a = 0; a < A; ++a) {
            ActorFrame af;
            const float* p = pose.data() + (static_cast<std::size_t>(f) * A + a) * kNumJoints * 6;
            std::copy(p, p + kNumJoints * 6, af.params.pose.begin());
            const float* b = beta.data() + static_cast<std::size_t>(a) * kShapeCoeffs;
            std::copy(b, b + kShapeCoeffs, af.params.beta.begin());
            const float* e = psi.data() + static_cast<std::size_t>(a) * kExprCoeffs;
            std::copy(e, e + kExprCoeffs, af.params.psi.begin());
            const float* r = root.data() + (static_cast<std::size_t>(f) * A + a) * 3;
            af.root_translation = {r[0], r[1], r[2]};
            seq.frames[f].push_back(af);
        }
    }
    seq.validate();
    return seq;
}

}  // namespace avdiff
