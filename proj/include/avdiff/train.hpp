#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "avdiff/codec.hpp"
#include "avdiff/dataset.hpp"
#include "avdiff/denoiser.hpp"
#include "avdiff/embedder.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/graph.hpp"
#include "avdiff/optim.hpp"
#include "avdiff/schedule.hpp"

namespace avdiff {

// One training datum: encoded latents (channel-first) plus the caption
// embedding. z_a is present only for conditional training.
struct TrainItem {
    Tensor z;                    // [f, C_lat, h', w']
    Tensor text;                 // [kEmbedDim]
    std::optional<Tensor> z_a;   // [f, C_lat, h', w']
};

struct NoisedItem {
    const TrainItem* src = nullptr;
    int t = 0;
    Tensor eps;
    Tensor z_t;
    bool use_null_text = false;
};

// Draws (t, eps) per item, forms z_t by the forward process, and decides the
// classifier-free text drop. The avatar condition is never dropped.
inline std::vector<NoisedItem> make_noised_batch(const std::vector<const TrainItem*>& batch,
                                                 const NoiseSchedule& sched, Rng& rng,
                                                 float null_drop_prob) {
    if (batch.empty()) throw ContractError("training batch is empty");
    std::vector<NoisedItem> out;
    out.reserve(batch.size());
    for (const TrainItem* item : batch) {
        NoisedItem n;
        n.src = item;
        n.t = rng.uniform_int(1, sched.T);
        n.eps = sample_noise_like(item->z, rng);
        n.z_t = q_sample(item->z, n.t, n.eps, sched);
        n.use_null_text = null_drop_prob > 0.0f && rng.uniform() < null_drop_prob;
        out.push_back(std::move(n));
    }
    return out;
}

using EpsForward = std::function<Tensor(Graph&, const NoisedItem&)>;

// Mean over the batch of ||eps - eps_hat||^2 (itself a per-element mean).
inline Tensor batch_loss(Graph& g, const std::vector<NoisedItem>& items,
                         const EpsForward& forward) {
    Tensor total;
    bool first = true;
    for (const NoisedItem& item : items) {
        Tensor eps_hat = forward(g, item);
        Tensor item_loss = g.mse(eps_hat, item.eps);
        total = first ? item_loss : g.add(total, item_loss);
        first = false;
    }
    return g.scale(total, 1.0f / static_cast<float>(items.size()));
}

inline EpsForward net_forward(const DenoiserNet& net) {
    return [&net](Graph& g, const NoisedItem& item) {
        const Tensor& text = item.use_null_text ? net.null_text : item.src->text;
        const Tensor* z_a = nullptr;
        if (net.conditional) {
            if (!item.src->z_a) throw ContractError("conditional training item lacks z_a");
            z_a = &*item.src->z_a;
        }
        return net.forward(g, item.z_t, item.t, text, z_a);
    };
}

// The training objective: noise-prediction MSE with the text embedding, and
// for conditional nets the avatar latent, fed to the denoiser.
inline Tensor training_loss(Graph& g, const DenoiserNet& net,
                            const std::vector<const TrainItem*>& batch,
                            const NoiseSchedule& sched, Rng& rng, float null_drop_prob) {
    const auto items = make_noised_batch(batch, sched, rng, null_drop_prob);
    return batch_loss(g, items, net_forward(net));
}

// Deterministic evaluation: a fixed stratified bank of (t, eps) pairs,
// captions never dropped. Comparable across training steps.
inline double eval_loss(const DenoiserNet& net, const std::vector<TrainItem>& data,
                        const NoiseSchedule& sched, int bank_size, std::uint64_t bank_seed) {
    if (data.empty()) throw ContractError("eval needs data");
    double total = 0.0;
    int count = 0;
    for (const TrainItem& item : data) {
        for (int k = 0; k < bank_size; ++k) {
            const int t = 1 + (k * sched.T) / bank_size;
            Rng rng(derive_seed(bank_seed, (static_cast<std::uint64_t>(count) << 20) + k));
            NoisedItem n;
            n.src = &item;
            n.t = t;
            n.eps = sample_noise_like(item.z, rng);
            n.z_t = q_sample(item.z, t, n.eps, sched);
            Graph g;
            Tensor loss = batch_loss(g, {n}, net_forward(net));
            total += loss.item();
            ++count;
        }
    }
    return total / count;
}

struct TrainConfig {
    int steps = 1000;
    int batch_size = 4;
    float lr = 1e-3f;
    float null_drop = 0.1f;
    int log_every = 25;
    std::uint64_t seed = 0;
    int eval_bank = 8;
};

struct TrainResult {
    std::vector<std::pair<int, float>> loss_log;  // (step, loss)
    double eval_before = 0.0;
    double eval_after = 0.0;
    int steps_run = 0;
};

// Sequential optimizer loop. Stops early when `stop_eval_ratio` is set and
// the deterministic eval loss falls below ratio * eval_before.
inline TrainResult train_loop(DenoiserNet& net, const std::vector<TrainItem>& data,
                              const NoiseSchedule& sched, const TrainConfig& cfg,
                              std::ostream* log = nullptr,
                              std::optional<double> stop_eval_ratio = std::nullopt,
                              int eval_every = 250) {
    if (data.empty()) throw ContractError("training needs data");
    TrainResult result;
    result.eval_before = eval_loss(net, data, sched, cfg.eval_bank, derive_seed(cfg.seed, 0xe7a1));
    Adam opt(AdamConfig{.lr = cfg.lr});
    auto params = net.trainable_params();
    Rng rng(derive_seed(cfg.seed, 0x7247ULL));
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<const TrainItem*> batch;
        for (int b = 0; b < cfg.batch_size; ++b) {
            batch.push_back(&data[rng.uniform_int(0, static_cast<int>(data.size()) - 1)]);
        }
        net.zero_grads();
        Graph g;
        Tensor loss = training_loss(g, net, batch, sched, rng, cfg.null_drop);
        g.backward(loss);
        net.apply_freeze_mask();
        opt.step(params);
        result.steps_run = step + 1;
        if (log && (step % cfg.log_every == 0 || step + 1 == cfg.steps)) {
            char line[64];
            std::snprintf(line, sizeof(line), "step=%d loss=%.6f\n", step, loss.item());
            (*log) << line;
        }
        result.loss_log.emplace_back(step, loss.item());
        if (stop_eval_ratio && (step + 1) % eval_every == 0) {
            const double e =
                eval_loss(net, data, sched, cfg.eval_bank, derive_seed(cfg.seed, 0xe7a1));
            if (e <= *stop_eval_ratio * result.eval_before) break;
        }
    }
    result.eval_after = eval_loss(net, data, sched, cfg.eval_bank, derive_seed(cfg.seed, 0xe7a1));
    return result;
}

// Encodes stored samples into training items for the given split.
inline std::vector<TrainItem> load_train_items(const std::filesystem::path& dataset_dir,
                                               const std::string& split, bool with_condition,
                                               const EmbedVocab& vocab) {
    std::vector<TrainItem> items;
    for (const ManifestEntry& e : load_manifest(dataset_dir)) {
        if (e.split != split) continue;
        StoredSample s = load_sample(dataset_dir / e.rel_path);
        TrainItem item;
        item.z = to_channel_first(patch_encode(s.video));
        item.text = vocab.text_embedding(s.caption);
        if (with_condition) item.z_a = to_channel_first(patch_encode(s.avatar));
        items.push_back(std::move(item));
    }
    if (items.empty()) {
        throw IoError("no samples with split '" + split + "' in " + dataset_dir.string());
    }
    return items;
}

}  // namespace avdiff
