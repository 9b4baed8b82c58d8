#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "pavd/denoiser.hpp"
#include "pavd/diffusion.hpp"
#include "pavd/latent.hpp"
#include "pavd/schedule.hpp"

namespace pavd {

struct GenerationConfig {
    int steps = 30;                  // S; also the noisy span of the window (F = S)
    int chunk = 5;                   // C
    double eta = 0.0;
    std::int64_t total_frames = 0;   // frames to emit over the whole run
    bool keep_clean_chunk = true;    // retain the freshest clean chunk in the window
    bool enable_init = true;         // grow from a single noisy chunk
    bool enable_termination = false; // drain the window at the end
    std::uint64_t seed = 0;
    int dim = 1;

    void validate() const;
    int steady_chunks() const { return steps / chunk; }
    int window_len() const { return steps + (keep_clean_chunk ? chunk : 0); }
    /// Frames emitted by a full drain.
    std::int64_t drain_frames() const { return enable_termination ? window_len() : 0; }
};

enum class Phase { Initializing, Steady, Terminating, Done };

/// The live attention window of Algorithm-style progressive generation:
/// chunked frames at ladder noise levels, shifted by one chunk every C steps.
class WindowState {
public:
    using EmitSink = std::function<void(const LatentSequence& frames, std::int64_t period)>;

    /// Forward-diffuses the given clean window to the progressive input
    /// pattern; with keep_clean_chunk the first chunk stays clean.
    static WindowState from_video(const LatentSequence& x0, const GenerationConfig& config,
                                  const VarianceSchedule& vs, const SamplingSchedule& schedule);

    /// One fresh chunk at level T; the window grows at period boundaries
    /// until it reaches steady shape.
    static WindowState from_noise(const GenerationConfig& config, const VarianceSchedule& vs,
                                  const SamplingSchedule& schedule);

    /// One reverse step over the whole window: every noisy frame moves down
    /// one grid index, clean frames pass through.
    void sample_step(const Denoiser& denoiser);

    /// Steady-phase boundary: the drained chunk is retired (emitted, or kept
    /// clean while the previous clean chunk is emitted) and a fresh noisy
    /// chunk is appended.
    void shift_window();

    /// Phase-appropriate boundary action (grow / shift / drain).
    void process_boundary();

    /// Runs C sample steps and the boundary action.
    void run_period(const Denoiser& denoiser);

    void begin_termination();

    /// Drains the window to Done. Requires termination enabled.
    void run_termination(const Denoiser& denoiser);

    // observers
    Phase phase() const { return phase_; }
    int steps_in_period() const { return steps_in_period_; }
    int intra_period_offset() const { return steps_in_period_ % config_.chunk; }
    bool at_period_boundary() const { return steps_in_period_ == config_.chunk; }
    std::int64_t period_index() const { return period_; }
    int noisy_chunk_count() const;
    bool has_clean_prefix() const { return has_clean_prefix_; }
    std::int64_t window_frame_count() const;
    LatentSequence window_frames() const;
    FrameNoiseVector window_levels() const;
    std::vector<int> chunk_grid_indices() const;

    std::int64_t frames_created() const { return frames_created_; }
    std::int64_t frames_emitted() const { return frames_emitted_; }
    const GenerationConfig& config() const { return config_; }

    /// Emitted frames in temporal order (when collection is enabled).
    LatentSequence emitted() const;
    /// Creation order of every emitted chunk; strictly increasing by construction.
    const std::vector<std::int64_t>& emitted_birth_orders() const { return emitted_births_; }

    void set_emit_sink(EmitSink sink) { sink_ = std::move(sink); }
    void set_collect_emitted(bool collect) { collect_emitted_ = collect; }

private:
    struct Chunk {
        LatentSequence frames;
        int grid_index = 0;          // noisy chunks only
        std::int64_t birth_order = 0;
    };

    WindowState(const GenerationConfig& config, const VarianceSchedule& vs,
                const SamplingSchedule& schedule);

    Chunk fresh_chunk();
    void emit_chunk(Chunk&& chunk);
    void retire_oldest_noisy(bool append_fresh);

    GenerationConfig config_;
    VarianceSchedule vs_;
    SamplingSchedule schedule_;
    Rng rng_;

    std::deque<Chunk> noisy_;
    std::optional<Chunk> clean_prefix_;
    bool has_clean_prefix_ = false;

    Phase phase_ = Phase::Initializing;
    int steps_in_period_ = 0;
    std::int64_t period_ = 0;

    std::int64_t frames_created_ = 0;
    std::int64_t frames_emitted_ = 0;
    std::int64_t next_birth_ = 0;

    bool collect_emitted_ = true;
    std::vector<LatentSequence> emitted_chunks_;
    std::vector<std::int64_t> emitted_births_;
    EmitSink sink_;
};

/// Full progressive autoregressive run: init (from video or noise), enough
/// steady periods to reach config.total_frames, optional termination drain.
/// Returns the emitted frames in temporal order.
LatentSequence generate(const GenerationConfig& config, const Denoiser& denoiser,
                        const VarianceSchedule& vs, const SamplingSchedule& schedule,
                        const LatentSequence* init_video = nullptr,
                        WindowState::EmitSink sink = nullptr);

}  // namespace pavd
