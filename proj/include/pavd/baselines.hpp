#pragma once

#include "pavd/denoiser.hpp"
#include "pavd/latent.hpp"
#include "pavd/schedule.hpp"

namespace pavd {

enum class ReplacementMethod { WithNoise, WithoutNoise, Independent };

std::string to_string(ReplacementMethod m);
ReplacementMethod replacement_method_from_string(const std::string& s);

/// Uniform-level autoregressive baselines: each outer clip denoises a full
/// window over the whole sampling grid, while the leading condition frames
/// are overwritten (clean, or re-noised to the current level) every step.
struct ReplacementConfig {
    int window_len = 30;   // F
    int condition_len = 5; // E; 0 for the independent control
    ReplacementMethod method = ReplacementMethod::WithoutNoise;
    int steps = 30;        // S
    double eta = 0.0;
    std::uint64_t seed = 0;
    int dim = 1;
    int clips = 1;         // outer iterations k

    void validate() const;
    int stride() const { return window_len - condition_len; }
    /// Output length: seed frames plus k * (F - E).
    std::int64_t total_frames(std::int64_t seed_len) const {
        return seed_len + static_cast<std::int64_t>(clips) * stride();
    }
};

/// Clean condition latents sit verbatim at the window front at every step.
LatentSequence generate_replacement_without_noise(const ReplacementConfig& config,
                                                  const Denoiser& denoiser, const VarianceSchedule& vs,
                                                  const SamplingSchedule& schedule,
                                                  const LatentSequence& seed_clip);

/// Condition latents re-noised to the current level with fresh noise each step.
LatentSequence generate_replacement_with_noise(const ReplacementConfig& config,
                                               const Denoiser& denoiser, const VarianceSchedule& vs,
                                               const SamplingSchedule& schedule,
                                               const LatentSequence& seed_clip);

/// Unconditioned full-window generations, concatenated.
LatentSequence generate_independent_clips(const ReplacementConfig& config, const Denoiser& denoiser,
                                          const VarianceSchedule& vs, const SamplingSchedule& schedule);

}  // namespace pavd
