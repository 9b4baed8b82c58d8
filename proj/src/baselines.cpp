#include "pavd/baselines.hpp"

#include <stdexcept>
#include <string>

#include "pavd/diffusion.hpp"

namespace pavd {

std::string to_string(ReplacementMethod m) {
    switch (m) {
        case ReplacementMethod::WithNoise: return "rw";
        case ReplacementMethod::WithoutNoise: return "rn";
        case ReplacementMethod::Independent: return "independent";
    }
    throw std::invalid_argument("unknown ReplacementMethod");
}

ReplacementMethod replacement_method_from_string(const std::string& s) {
    if (s == "rw") return ReplacementMethod::WithNoise;
    if (s == "rn") return ReplacementMethod::WithoutNoise;
    if (s == "independent") return ReplacementMethod::Independent;
    throw std::invalid_argument("unknown replacement method '" + s + "' (expected rw, rn, or independent)");
}

void ReplacementConfig::validate() const {
    if (window_len < 1 || steps < 1) throw std::invalid_argument("ReplacementConfig: window and steps must be >= 1");
    if (dim < 1) throw std::invalid_argument("ReplacementConfig: dim must be >= 1");
    if (clips < 1) throw std::invalid_argument("ReplacementConfig: clips must be >= 1");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("ReplacementConfig: eta must lie in [0, 1]");
    if (method == ReplacementMethod::Independent) {
        if (condition_len != 0)
            throw std::invalid_argument("ReplacementConfig: the independent control requires E = 0");
    } else if (condition_len < 1 || condition_len >= window_len) {
        throw std::invalid_argument("ReplacementConfig: condition length E must satisfy 0 < E < F");
    }
}

namespace {

/// One uniform-level DDIM pass over a fresh window. The condition hook runs
/// before every denoising step with the grid index about to be denoised, and
/// once more at index 0 after the loop.
template <typename ConditionHook>
LatentSequence run_uniform_clip(const ReplacementConfig& config, const Denoiser& denoiser,
                                const VarianceSchedule& vs, const SamplingSchedule& schedule,
                                Rng& rng, ConditionHook&& condition) {
    LatentSequence window = sample_standard_normal(config.window_len, config.dim, rng);
    for (int i = schedule.steps; i >= 1; --i) {
        condition(window, i);
        FrameNoiseVector from = make_uniform_levels(config.window_len, 1, schedule.level(i));
        FrameNoiseVector to = make_uniform_levels(config.window_len, 1, schedule.level(i - 1));
        LatentSequence eps_hat = denoiser.predict_eps(window, from, vs);
        window = ddim_step(window, eps_hat, from, to, vs, config.eta, config.eta > 0.0 ? &rng : nullptr);
    }
    condition(window, 0);
    return window;
}

/// WithoutNoise steps see levels {0 x E, tau_i x rest}: the model is told the
/// condition frames are clean, matching the masked-pretraining setup.
template <typename ConditionHook>
LatentSequence run_mixed_clip(const ReplacementConfig& config, const Denoiser& denoiser,
                              const VarianceSchedule& vs, const SamplingSchedule& schedule,
                              Rng& rng, ConditionHook&& condition) {
    LatentSequence window = sample_standard_normal(config.window_len, config.dim, rng);
    const int e = config.condition_len;
    for (int i = schedule.steps; i >= 1; --i) {
        condition(window, i);
        FrameNoiseVector from = make_uniform_levels(config.window_len, 1, schedule.level(i));
        FrameNoiseVector to = make_uniform_levels(config.window_len, 1, schedule.level(i - 1));
        for (int f = 0; f < e; ++f) from.levels[f] = to.levels[f] = 0.0;
        from.mode = to.mode = FrameNoiseVector::Mode::Progressive;
        LatentSequence eps_hat = denoiser.predict_eps(window, from, vs);
        window = ddim_step(window, eps_hat, from, to, vs, config.eta, config.eta > 0.0 ? &rng : nullptr);
    }
    condition(window, 0);
    return window;
}

LatentSequence run_replacement(const ReplacementConfig& config, const Denoiser& denoiser,
                               const VarianceSchedule& vs, const SamplingSchedule& schedule,
                               const LatentSequence& seed_clip) {
    config.validate();
    if (seed_clip.frames < config.condition_len)
        throw std::invalid_argument("replacement: seed clip shorter than condition length E");
    if (seed_clip.dim != config.dim) throw std::invalid_argument("replacement: seed clip dim mismatch");
    const int e = config.condition_len;
    const bool with_noise = config.method == ReplacementMethod::WithNoise;

    Rng rng = Rng::child_of(config.seed, 0x626173);
    LatentSequence output = seed_clip;
    LatentSequence condition = seed_clip.slice(seed_clip.frames - e, e);

    for (int clip = 0; clip < config.clips; ++clip) {
        auto hook = [&](LatentSequence& window, int grid_index) {
            if (with_noise && grid_index > 0) {
                FrameNoiseVector level = make_uniform_levels(e, 1, schedule.level(grid_index));
                NoiseTensor noise = sample_standard_normal(e, config.dim, rng);
                LatentSequence noised = forward_diffuse(condition, level, noise, vs);
                std::copy(noised.data.begin(), noised.data.end(), window.data.begin());
            } else {
                std::copy(condition.data.begin(), condition.data.end(), window.data.begin());
            }
        };
        LatentSequence window =
            with_noise ? run_uniform_clip(config, denoiser, vs, schedule, rng, hook)
                       : run_mixed_clip(config, denoiser, vs, schedule, rng, hook);
        LatentSequence fresh = window.slice(e, config.stride());
        output.append_frames(fresh);
        condition = window.slice(config.window_len - e, e);
    }
    return output;
}

}  // namespace

LatentSequence generate_replacement_without_noise(const ReplacementConfig& config,
                                                  const Denoiser& denoiser, const VarianceSchedule& vs,
                                                  const SamplingSchedule& schedule,
                                                  const LatentSequence& seed_clip) {
    if (config.method != ReplacementMethod::WithoutNoise)
        throw std::invalid_argument("generate_replacement_without_noise: config method mismatch");
    return run_replacement(config, denoiser, vs, schedule, seed_clip);
}

LatentSequence generate_replacement_with_noise(const ReplacementConfig& config,
                                               const Denoiser& denoiser, const VarianceSchedule& vs,
                                               const SamplingSchedule& schedule,
                                               const LatentSequence& seed_clip) {
    if (config.method != ReplacementMethod::WithNoise)
        throw std::invalid_argument("generate_replacement_with_noise: config method mismatch");
    return run_replacement(config, denoiser, vs, schedule, seed_clip);
}

LatentSequence generate_independent_clips(const ReplacementConfig& config, const Denoiser& denoiser,
                                          const VarianceSchedule& vs, const SamplingSchedule& schedule) {
    config.validate();
    if (config.method != ReplacementMethod::Independent)
        throw std::invalid_argument("generate_independent_clips: config method mismatch");

    Rng rng = Rng::child_of(config.seed, 0x626173);
    LatentSequence output;
    output.dim = config.dim;
    for (int clip = 0; clip < config.clips; ++clip) {
        auto no_condition = [](LatentSequence&, int) {};
        output.append_frames(run_uniform_clip(config, denoiser, vs, schedule, rng, no_condition));
    }
    return output;
}

}  // namespace pavd
