// Command-line front end: synthetic data generation, two-stage training,
// avatar-conditioned sampling, condition rendering, and evaluation.
//
// Exit codes: 0 success, 1 usage/config, 2 I/O, 3 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avdiff/checkpoint.hpp"
#include "avdiff/codec.hpp"
#include "avdiff/config.hpp"
#include "avdiff/dataset.hpp"
#include "avdiff/ddim.hpp"
#include "avdiff/embedder.hpp"
#include "avdiff/metrics.hpp"
#include "avdiff/pipeline.hpp"
#include "avdiff/render.hpp"
#include "avdiff/train.hpp"

namespace fs = std::filesystem;
using namespace avdiff;

namespace {

RunConfig base_config(const std::string& config_path) {
    RunConfig cfg;
    if (!config_path.empty()) apply_run_config_map(cfg, read_meta_file(config_path));
    return cfg;
}

void clamp_unit(Tensor& video) {
    for (float& v : video.values()) v = std::clamp(v, 0.0f, 1.0f);
}

void write_video_ppms(const Tensor& video, const fs::path& dir, const std::string& stem) {
    fs::create_directories(dir);
    for (int f = 0; f < video.dim(0); ++f) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_f%02d.ppm", stem.c_str(), f);
        write_ppm(video_frame(video, f), dir / name);
    }
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
    DatasetConfig cfg = load_dataset_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    auto manifest = build_dataset(cfg, out_dir);
    int train = 0, test = 0;
    for (const auto& e : manifest) (e.split == "train" ? train : test) += 1;
    std::printf("wrote %zu samples to %s (%d train, %d test)\n", manifest.size(),
                out_dir.c_str(), train, test);
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& stage,
              const std::string& config_path, const std::string& out_dir,
              const std::string& base_ckpt, std::uint64_t seed, int steps_override) {
    RunConfig cfg = base_config(config_path);
    cfg.seed = seed;
    if (steps_override >= 0) cfg.steps = steps_override;
    cfg.validate();

    const EmbedVocab vocab;
    const NoiseSchedule sched = default_schedule(cfg.T);
    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "train_log.txt", std::ios::trunc);
    if (!log) throw IoError("cannot open training log in " + out_dir);

    TrainConfig tc;
    tc.steps = cfg.steps;
    tc.batch_size = cfg.batch_size;
    tc.lr = cfg.lr;
    tc.null_drop = cfg.null_drop;
    tc.seed = cfg.seed;

    TrainingState st;
    st.step = cfg.steps;
    st.T = cfg.T;
    st.net_cfg = cfg.net_config();
    st.lora_rank = cfg.lora_rank;
    st.lora_scale = cfg.lora_scale;

    if (stage == "base") {
        auto items = load_train_items(data_dir, "train", false, vocab);
        DenoiserNet net = make_denoiser(cfg.net_config(), cfg.seed);
        TrainResult r = train_loop(net, items, sched, tc, &log);
        st.stage = "base";
        save_checkpoint(net, st, out_dir);
        std::printf("stage base: %d steps, eval loss %.4f -> %.4f\n", r.steps_run,
                    r.eval_before, r.eval_after);
        return 0;
    }
    if (stage != "conditional") throw ConfigError("stage must be 'base' or 'conditional'");
    if (base_ckpt.empty()) throw ConfigError("conditional training needs --base-ckpt");

    LoadedCheckpoint base = load_checkpoint(base_ckpt);
    if (base.state.stage != "base") throw ConfigError("--base-ckpt must be a stage-one checkpoint");
    auto items = load_train_items(data_dir, "train", true, vocab);
    DenoiserNet net = to_conditional(base.net, cfg.lora_rank, cfg.lora_scale, cfg.seed);

    // Step-0 sanity: the conditional net must reproduce the frozen base
    // bit-for-bit before any update.
    {
        Rng check_rng(derive_seed(cfg.seed, 0xc0dec));
        const TrainItem& item = items.front();
        Tensor z_t = sample_noise_like(item.z, check_rng);
        Graph g1, g2;
        Tensor a = base.net.forward(g1, z_t, 1, item.text);
        Tensor b = net.forward(g2, z_t, 1, item.text, &*item.z_a);
        bool equal = a.values() == b.values();
        log << "init_equivalence=" << (equal ? "pass" : "fail") << "\n";
        if (!equal) throw ContractError("stage-two init does not match the frozen base");
    }

    TrainResult r = train_loop(net, items, sched, tc, &log);
    st.stage = "conditional";
    st.T = base.state.T;
    st.net_cfg = base.state.net_cfg;
    st.base_ckpt = fs::absolute(base_ckpt).string();
    st.base_hash = checkpoint_weights_hash(base_ckpt);
    save_checkpoint(net, st, out_dir);
    std::printf("stage conditional: %d steps, eval loss %.4f -> %.4f\n", r.steps_run,
                r.eval_before, r.eval_after);
    return 0;
}

int cmd_sample(const std::string& ckpt_dir, const std::string& base_ckpt,
               const std::string& scene, const std::vector<std::string>& appearance_ids,
               const std::string& action, const std::string& camera, int frames, int resolution,
               float guidance, int ddim_steps, std::uint64_t seed, const std::string& out_dir,
               std::string name, bool write_ppm_frames, const std::string& config_path) {
    RunConfig cfg = base_config(config_path);
    if (frames > 0) cfg.frames = frames;
    if (resolution > 0) cfg.resolution = resolution;
    if (guidance >= 0.0f) cfg.guidance = guidance;
    if (ddim_steps > 0) cfg.ddim_steps = ddim_steps;
    cfg.seed = seed;

    LoadedCheckpoint ckpt = load_checkpoint(ckpt_dir, base_ckpt);
    const NoiseSchedule sched = schedule_from_state(ckpt.state);
    if (cfg.ddim_steps < 1 || cfg.ddim_steps > sched.T || sched.T % cfg.ddim_steps != 0) {
        throw ConfigError("ddim steps must evenly divide the checkpoint's T");
    }

    const BodyTemplate tpl = make_humanoid_template();
    ConditionRequest req;
    req.action = action;
    req.scene = scene;
    req.appearance_ids = appearance_ids;
    req.camera = camera;
    req.frames = cfg.frames;
    req.resolution = cfg.resolution;
    req.focal_scale = cfg.focal_scale;
    req.n_splats = cfg.n_splats;
    req.seed = seed;
    ConditionBundle cond = make_condition(tpl, req);

    const EmbedVocab vocab;
    Tensor text = vocab.text_embedding(cond.caption);

    SampleRequest sreq;
    sreq.frames = cfg.frames;
    sreq.height = cfg.resolution;
    sreq.width = cfg.resolution;
    sreq.guidance = cfg.guidance;
    sreq.ddim_steps = cfg.ddim_steps;
    sreq.seed = seed;

    Tensor video;
    if (ckpt.net.conditional) {
        Tensor z_a = to_channel_first(patch_encode(cond.avatar.rgb));
        video = ddim_sample(ckpt.net, sched, sreq, text, &z_a);
    } else {
        video = ddim_sample(ckpt.net, sched, sreq, text, nullptr);
    }
    clamp_unit(video);

    if (name.empty()) {
        name = action + "_" + scene + "_" + std::to_string(seed);
    }
    const fs::path out(out_dir);
    fs::create_directories(out / "gen");
    fs::create_directories(out / "cond");
    fs::create_directories(out / "captions");
    save_amgt(video, out / "gen" / (name + ".amgt"));
    save_amgt(cond.avatar.rgb, out / "cond" / (name + ".amgt"));
    write_file_bytes(out / "captions" / (name + ".txt"), cond.caption + "\n");
    if (write_ppm_frames) {
        write_video_ppms(video, out / "frames", name + "_gen");
        write_video_ppms(cond.avatar.rgb, out / "frames", name + "_cond");
    }
    std::printf("sampled %s: %d frames at %dx%d, guidance %.2f\n", name.c_str(), cfg.frames,
                cfg.resolution, cfg.resolution, cfg.guidance);
    return 0;
}

int cmd_render(const std::string& scene, const std::vector<std::string>& appearance_ids,
               const std::string& action, const std::string& camera, int frames, int resolution,
               std::uint64_t seed, const std::string& out_dir, std::string name,
               bool write_ppm_frames, const std::string& config_path) {
    RunConfig cfg = base_config(config_path);
    if (frames > 0) cfg.frames = frames;
    if (resolution > 0) cfg.resolution = resolution;

    const BodyTemplate tpl = make_humanoid_template();
    ConditionRequest req;
    req.action = action;
    req.scene = scene;
    req.appearance_ids = appearance_ids;
    req.camera = camera;
    req.frames = cfg.frames;
    req.resolution = cfg.resolution;
    req.focal_scale = cfg.focal_scale;
    req.n_splats = cfg.n_splats;
    req.seed = seed;
    ConditionBundle cond = make_condition(tpl, req);

    if (name.empty()) name = action + "_" + camera + "_" + std::to_string(seed);
    std::replace(name.begin(), name.end(), ':', '-');
    std::replace(name.begin(), name.end(), '.', '_');
    const fs::path out(out_dir);
    fs::create_directories(out);
    save_amgt(cond.avatar.rgb, out / (name + ".amgt"));
    write_file_bytes(out / (name + ".caption.txt"), cond.caption + "\n");
    if (write_ppm_frames) write_video_ppms(cond.avatar.rgb, out / "frames", name);
    std::printf("rendered %s: %d frames at %dx%d\n", name.c_str(), cfg.frames, cfg.resolution,
                cfg.resolution);
    return 0;
}

std::set<std::string> amgt_names(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".amgt") names.insert(entry.path().stem().string());
    }
    return names;
}

int cmd_eval(const std::string& generated_dir, const std::string& condition_dir,
             const std::string& captions_dir, const std::string& report_path, int stride,
             int window) {
    const auto gen_names = amgt_names(generated_dir);
    const auto cond_names = amgt_names(condition_dir);
    if (gen_names.empty()) throw IoError("no .amgt videos in " + generated_dir);
    if (gen_names != cond_names) {
        std::string msg = "sample sets differ;";
        for (const auto& n : gen_names) {
            if (!cond_names.count(n)) msg += " missing-condition:" + n;
        }
        for (const auto& n : cond_names) {
            if (!gen_names.count(n)) msg += " missing-generated:" + n;
        }
        throw IoError(msg);
    }

    const EmbedVocab vocab;
    std::string report;
    double clip_sum = 0.0, motion_sum = 0.0;
    for (const auto& name : gen_names) {
        Tensor gen = load_amgt(fs::path(generated_dir) / (name + ".amgt"));
        Tensor cond = load_amgt(fs::path(condition_dir) / (name + ".amgt"));
        std::string cap = read_file_bytes(fs::path(captions_dir) / (name + ".txt"));
        while (!cap.empty() && (cap.back() == '\n' || cap.back() == '\r')) cap.pop_back();

        const double clip = clip_style_video_score(gen, cap, vocab);
        // Only tracklets that move in every frame can reach the perfect-
        // agreement identity, so the report is built on those.
        auto gen_tracks = filter_strictly_moving(extract_tracklets(gen, stride, window), 0.5);
        auto cond_tracks = filter_strictly_moving(extract_tracklets(cond, stride, window), 0.5);
        double motion;
        if (gen_tracks.empty() && cond_tracks.empty()) {
            motion = 100.0;  // both videos are static
        } else if (gen_tracks.empty() || cond_tracks.empty()) {
            motion = 0.0;
        } else {
            motion = motion_fidelity(cond_tracks, gen_tracks);
        }
        char line[256];
        std::snprintf(line, sizeof(line), "%s\t%.4f\t%.4f\n", name.c_str(), clip, motion);
        report += line;
        clip_sum += clip;
        motion_sum += motion;
    }
    char mean_line[256];
    std::snprintf(mean_line, sizeof(mean_line), "mean\t%.4f\t%.4f\n",
                  clip_sum / gen_names.size(), motion_sum / gen_names.size());
    report += mean_line;
    write_file_bytes(report_path, report);
    std::fputs(report.c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"avatar-conditioned latent video diffusion, desk scale"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, stage = "base", base_ckpt, ckpt_dir;
    std::string scene = "park", action = "walk", camera = "static", name;
    std::vector<std::string> appearances = {"man_white_shirt"};
    std::string generated_dir, condition_dir, captions_dir, report_path = "eval_report.txt";
    std::uint64_t seed = 0;
    int frames = -1, resolution = -1, ddim_steps = -1, steps = -1;
    float guidance = -1.0f;
    int stride = 4, window = 3;
    bool ppm = false;

    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("gen-data", "synthesize a paired training dataset");
    gen->add_option("--config", config_path, "dataset config (key=value lines)")->required();
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->add_option("--seed", gen_seed, "override the config's master seed");

    auto* train = app.add_subcommand("train", "train the base or conditional stage");
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--stage", stage, "base or conditional")->required();
    train->add_option("--config", config_path, "run config (key=value lines)");
    train->add_option("--out", out_dir, "checkpoint output directory")->required();
    train->add_option("--base-ckpt", base_ckpt, "stage-one checkpoint (conditional stage)");
    train->add_option("--seed", seed, "training seed")->required();
    train->add_option("--steps", steps, "override step count");

    auto* sample = app.add_subcommand("sample", "condition and sample the diffusion model");
    sample->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
    sample->add_option("--base-ckpt", base_ckpt, "override base checkpoint location");
    sample->add_option("--scene", scene, "scene id for the caption");
    sample->add_option("--appearance", appearances, "actor appearance id(s)");
    sample->add_option("--action", action, "motion action");
    sample->add_option("--camera", camera, "trajectory spec, e.g. orbit:360");
    sample->add_option("--frames", frames, "frame count");
    sample->add_option("--resolution", resolution, "square resolution");
    sample->add_option("--guidance", guidance, "classifier-free guidance weight");
    sample->add_option("--ddim-steps", ddim_steps, "DDIM step count");
    sample->add_option("--seed", seed, "sampling seed")->required();
    sample->add_option("--out", out_dir, "output directory")->required();
    sample->add_option("--name", name, "sample name");
    sample->add_option("--config", config_path, "run config file");
    sample->add_flag("--ppm", ppm, "also write PPM frames");

    auto* render = app.add_subcommand("render", "render the avatar condition video only");
    render->add_option("--scene", scene, "scene id for the caption");
    render->add_option("--appearance", appearances, "actor appearance id(s)");
    render->add_option("--action", action, "motion action");
    render->add_option("--camera", camera, "trajectory spec");
    render->add_option("--frames", frames, "frame count");
    render->add_option("--resolution", resolution, "square resolution");
    render->add_option("--seed", seed, "seed")->required();
    render->add_option("--out", out_dir, "output directory")->required();
    render->add_option("--name", name, "output name");
    render->add_option("--config", config_path, "run config file");
    render->add_flag("--ppm", ppm, "also write PPM frames");

    auto* eval = app.add_subcommand("eval", "score generated videos against conditions");
    eval->add_option("--generated", generated_dir, "directory of generated .amgt videos")
        ->required();
    eval->add_option("--condition", condition_dir, "directory of condition .amgt videos")
        ->required();
    eval->add_option("--captions", captions_dir, "directory of <name>.txt captions")->required();
    eval->add_option("--report", report_path, "report output path");
    eval->add_option("--stride", stride, "tracker grid stride");
    eval->add_option("--window", window, "tracker patch/search half-size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_dir, gen_seed);
        if (train->parsed()) {
            return cmd_train(data_dir, stage, config_path, out_dir, base_ckpt, seed, steps);
        }
        if (sample->parsed()) {
            return cmd_sample(ckpt_dir, base_ckpt, scene, appearances, action, camera, frames,
                              resolution, guidance, ddim_steps, seed, out_dir, name, ppm,
                              config_path);
        }
        if (render->parsed()) {
            return cmd_render(scene, appearances, action, camera, frames, resolution, seed,
                              out_dir, name, ppm, config_path);
        }
        if (eval->parsed()) {
            return cmd_eval(generated_dir, condition_dir, captions_dir, report_path, stride,
                            window);
        }
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
