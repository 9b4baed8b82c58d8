#pragma once

#include <string>
#include <vector>

#include "pavd/schedule.hpp"
#include "pavd/synthetic.hpp"
#include "pavd/toy_denoiser.hpp"

namespace pavd {

enum class LevelMode { ProgressivePerturbed, Uniform };

std::string to_string(LevelMode m);
LevelMode level_mode_from_string(const std::string& s);

struct TrainConfig {
    std::int64_t steps = 2000;
    int batch = 32;
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int chunk = 5;       // C; clip lengths are C, 2C, ..., max_clip
    int max_clip = 30;   // S
    LevelMode level_mode = LevelMode::ProgressivePerturbed;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 500;
    std::int64_t val_every = 100;
    int val_batch = 64;

    VarianceKind variance_kind = VarianceKind::LinearBeta;
    double max_level = 1.0;
    ToyDenoiserConfig model;

    void validate() const;
    std::vector<int> clip_lengths() const;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;

    static AdamState zeros_like(const ToyDenoiserParams& params);
};

void adam_update(ToyDenoiserParams& params, AdamState& adam, const ToyGradients& grads,
                 const TrainConfig& config);

/// Progressive chunked ladder over clip_len frames at a uniformly random
/// intra-period offset, then the shared random shift; or one shared uniform
/// level in [0, T) for the uniform arm.
FrameNoiseVector sample_training_levels(const TrainConfig& config, int clip_len,
                                        const SamplingSchedule& schedule, Rng& rng);

/// Forward-diffuses the batch at freshly sampled levels, accumulates exact
/// gradients of the mean eps-MSE, applies one Adam update. Returns the
/// pre-update loss.
double train_step(ToyDenoiserParams& params, AdamState& adam,
                  const std::vector<LatentSequence>& batch, const TrainConfig& config,
                  const VarianceSchedule& vs, const SamplingSchedule& schedule, Rng& rng);

struct TrainMetricsRow {
    std::int64_t step = 0;
    double train_loss = 0.0;
    double val_loss_low = 0.0;
    double val_loss_mid = 0.0;
    double val_loss_high = 0.0;
};

struct TrainResult {
    ToyDenoiserParams params;
    std::vector<TrainMetricsRow> metrics;
};

/// Validation eps-MSE at fixed uniform levels inside a band, on held-out clips.
double validation_mse(const Denoiser& denoiser, const std::vector<LatentSequence>& clips,
                      const std::vector<double>& band_levels, const VarianceSchedule& vs,
                      std::uint64_t noise_seed);

/// Low/mid/high band centres used by the metrics log.
std::vector<double> band_levels(double max_level, int band);  // band 0,1,2

/// Full loop: batches drawn from the dataset, periodic banded validation,
/// checkpoints at the configured cadence. Writes metrics.csv and
/// checkpoint.{bin,json} (+ optimizer/rng sidecar) under out_dir; resumable.
TrainResult train_run(const TrainConfig& config, const Dataset& dataset, const std::string& out_dir,
                      bool resume = false);

}  // namespace pavd
