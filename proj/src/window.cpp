#include "pavd/window.hpp"

#include <stdexcept>
#include <string>

namespace pavd {

void GenerationConfig::validate() const {
    if (steps < 1 || chunk < 1) throw std::invalid_argument("GenerationConfig: steps and chunk must be >= 1");
    if (steps % chunk != 0)
        throw std::invalid_argument("GenerationConfig: steps S = " + std::to_string(steps) +
                                    " must be divisible by chunk C = " + std::to_string(chunk));
    if (total_frames < 0 || total_frames % chunk != 0)
        throw std::invalid_argument("GenerationConfig: total frames must be a non-negative multiple of chunk C");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("GenerationConfig: eta must lie in [0, 1]");
    if (dim < 1) throw std::invalid_argument("GenerationConfig: dim must be >= 1");
    if (enable_termination && total_frames < drain_frames())
        throw std::invalid_argument("GenerationConfig: total frames " + std::to_string(total_frames) +
                                    " below the " + std::to_string(drain_frames()) +
                                    " frames the termination drain emits");
}

WindowState::WindowState(const GenerationConfig& config, const VarianceSchedule& vs,
                         const SamplingSchedule& schedule)
    : config_(config), vs_(vs), schedule_(schedule), rng_(Rng::child_of(config.seed, 0x77696e)) {
    config_.validate();
    if (schedule_.steps != config_.steps)
        throw std::invalid_argument("WindowState: sampling schedule has S = " + std::to_string(schedule_.steps) +
                                    " but config expects " + std::to_string(config_.steps));
}

WindowState WindowState::from_video(const LatentSequence& x0, const GenerationConfig& config,
                                    const VarianceSchedule& vs, const SamplingSchedule& schedule) {
    WindowState state(config, vs, schedule);
    const int chunk = config.chunk;
    if (x0.frames != config.window_len())
        throw std::invalid_argument("WindowState::from_video: got " + std::to_string(x0.frames) +
                                    " frames, window needs " + std::to_string(config.window_len()));
    if (x0.dim != config.dim) throw std::invalid_argument("WindowState::from_video: dim mismatch");

    std::int64_t offset = 0;
    if (config.keep_clean_chunk) {
        Chunk clean;
        clean.frames = x0.slice(0, chunk);
        clean.birth_order = state.next_birth_++;
        state.clean_prefix_ = std::move(clean);
        state.has_clean_prefix_ = true;
        offset = chunk;
    }
    const int k = config.steady_chunks();
    FrameNoiseVector ladder = progressive_input_levels(schedule, k, chunk, 0);
    for (int j = 0; j < k; ++j) {
        Chunk c;
        c.frames = x0.slice(offset + static_cast<std::int64_t>(j) * chunk, chunk);
        c.grid_index = (j + 1) * chunk;
        c.birth_order = state.next_birth_++;
        NoiseTensor noise = sample_standard_normal(chunk, config.dim, state.rng_);
        FrameNoiseVector chunk_levels = make_uniform_levels(chunk, chunk, ladder.chunk_level(j));
        c.frames = forward_diffuse(c.frames, chunk_levels, noise, vs);
        state.noisy_.push_back(std::move(c));
    }
    state.frames_created_ = x0.frames;
    state.phase_ = Phase::Steady;
    return state;
}

WindowState WindowState::from_noise(const GenerationConfig& config, const VarianceSchedule& vs,
                                    const SamplingSchedule& schedule) {
    if (!config.enable_init)
        throw std::invalid_argument("WindowState::from_noise: init stage disabled in config");
    WindowState state(config, vs, schedule);
    state.noisy_.push_back(state.fresh_chunk());
    state.phase_ = config.steady_chunks() == 1 && !config.keep_clean_chunk ? Phase::Steady
                                                                           : Phase::Initializing;
    return state;
}

WindowState::Chunk WindowState::fresh_chunk() {
    Chunk c;
    c.frames = sample_standard_normal(config_.chunk, config_.dim, rng_);
    c.grid_index = schedule_.steps;
    c.birth_order = next_birth_++;
    frames_created_ += config_.chunk;
    return c;
}

int WindowState::noisy_chunk_count() const { return static_cast<int>(noisy_.size()); }

std::int64_t WindowState::window_frame_count() const {
    return static_cast<std::int64_t>(noisy_.size()) * config_.chunk +
           (has_clean_prefix_ ? config_.chunk : 0);
}

LatentSequence WindowState::window_frames() const {
    LatentSequence out;
    out.dim = config_.dim;
    if (has_clean_prefix_) out.append_frames(clean_prefix_->frames);
    for (const auto& c : noisy_) out.append_frames(c.frames);
    return out;
}

FrameNoiseVector WindowState::window_levels() const {
    FrameNoiseVector v;
    v.chunk_size = config_.chunk;
    v.mode = FrameNoiseVector::Mode::Progressive;
    if (has_clean_prefix_)
        v.levels.insert(v.levels.end(), config_.chunk, 0.0);
    for (const auto& c : noisy_)
        v.levels.insert(v.levels.end(), config_.chunk, schedule_.level(c.grid_index));
    return v;
}

std::vector<int> WindowState::chunk_grid_indices() const {
    std::vector<int> idx;
    if (has_clean_prefix_) idx.push_back(0);
    for (const auto& c : noisy_) idx.push_back(c.grid_index);
    return idx;
}

void WindowState::sample_step(const Denoiser& denoiser) {
    if (phase_ == Phase::Done) throw std::logic_error("sample_step: generation already done");
    if (at_period_boundary()) throw std::logic_error("sample_step: period boundary pending");
    if (noisy_.empty()) throw std::logic_error("sample_step: no noisy frames in the window");

    LatentSequence frames = window_frames();
    FrameNoiseVector from = window_levels();
    FrameNoiseVector to = from;
    std::size_t offset = has_clean_prefix_ ? static_cast<std::size_t>(config_.chunk) : 0;
    for (std::size_t j = 0; j < noisy_.size(); ++j) {
        double level = schedule_.level(noisy_[j].grid_index - 1);
        for (int f = 0; f < config_.chunk; ++f) to.levels[offset + j * config_.chunk + f] = level;
    }

    LatentSequence eps_hat = denoiser.predict_eps(frames, from, vs_);
    LatentSequence next = ddim_step(frames, eps_hat, from, to, vs_, config_.eta,
                                    config_.eta > 0.0 ? &rng_ : nullptr);

    std::int64_t frame_offset = has_clean_prefix_ ? config_.chunk : 0;
    for (std::size_t j = 0; j < noisy_.size(); ++j) {
        noisy_[j].frames = next.slice(frame_offset + static_cast<std::int64_t>(j) * config_.chunk,
                                      config_.chunk);
        noisy_[j].grid_index -= 1;
    }
    ++steps_in_period_;
}

void WindowState::emit_chunk(Chunk&& chunk) {
    frames_emitted_ += chunk.frames.frames;
    if (sink_) sink_(chunk.frames, period_);
    emitted_births_.push_back(chunk.birth_order);
    if (collect_emitted_) emitted_chunks_.push_back(std::move(chunk.frames));
}

void WindowState::retire_oldest_noisy(bool append_fresh) {
    if (noisy_.empty() || noisy_.front().grid_index != 0)
        throw std::logic_error("retire_oldest_noisy: oldest chunk has not reached level 0");
    Chunk drained = std::move(noisy_.front());
    noisy_.pop_front();
    if (config_.keep_clean_chunk) {
        if (has_clean_prefix_) emit_chunk(std::move(*clean_prefix_));
        clean_prefix_ = std::move(drained);
        has_clean_prefix_ = true;
    } else {
        emit_chunk(std::move(drained));
    }
    if (append_fresh) noisy_.push_back(fresh_chunk());
}

void WindowState::shift_window() {
    if (phase_ != Phase::Steady) throw std::logic_error("shift_window: only valid in the steady phase");
    if (!at_period_boundary()) throw std::logic_error("shift_window: not at a period boundary");
    retire_oldest_noisy(/*append_fresh=*/true);
    steps_in_period_ = 0;
    ++period_;
}

void WindowState::process_boundary() {
    if (!at_period_boundary()) throw std::logic_error("process_boundary: not at a period boundary");
    switch (phase_) {
        case Phase::Initializing: {
            if (noisy_chunk_count() < config_.steady_chunks()) {
                noisy_.push_back(fresh_chunk());
                if (!config_.keep_clean_chunk && noisy_chunk_count() == config_.steady_chunks())
                    phase_ = Phase::Steady;
            } else {
                // keep-clean windows mint their clean chunk from the first
                // fully denoised chunk; nothing is emitted here.
                retire_oldest_noisy(/*append_fresh=*/true);
                phase_ = Phase::Steady;
            }
            steps_in_period_ = 0;
            ++period_;
            return;
        }
        case Phase::Steady:
            shift_window();
            return;
        case Phase::Terminating: {
            retire_oldest_noisy(/*append_fresh=*/false);
            if (noisy_.empty()) {
                if (has_clean_prefix_) {
                    emit_chunk(std::move(*clean_prefix_));
                    clean_prefix_.reset();
                    has_clean_prefix_ = false;
                }
                phase_ = Phase::Done;
            }
            steps_in_period_ = 0;
            ++period_;
            return;
        }
        case Phase::Done:
            throw std::logic_error("process_boundary: generation already done");
    }
}

void WindowState::run_period(const Denoiser& denoiser) {
    for (int i = 0; i < config_.chunk; ++i) sample_step(denoiser);
    process_boundary();
}

void WindowState::begin_termination() {
    if (!config_.enable_termination)
        throw std::logic_error("begin_termination: termination disabled in config");
    if (phase_ != Phase::Steady && phase_ != Phase::Initializing)
        throw std::logic_error("begin_termination: invalid phase");
    phase_ = Phase::Terminating;
}

void WindowState::run_termination(const Denoiser& denoiser) {
    begin_termination();
    while (phase_ != Phase::Done) run_period(denoiser);
}

LatentSequence WindowState::emitted() const {
    LatentSequence out;
    out.dim = config_.dim;
    for (const auto& c : emitted_chunks_) out.append_frames(c);
    return out;
}

LatentSequence generate(const GenerationConfig& config, const Denoiser& denoiser,
                        const VarianceSchedule& vs, const SamplingSchedule& schedule,
                        const LatentSequence* init_video, WindowState::EmitSink sink) {
    config.validate();
    if (config.enable_init == (init_video != nullptr))
        throw std::invalid_argument("generate: provide an init video exactly when the init stage is disabled");

    std::int64_t steady_frames = config.total_frames - config.drain_frames();
    if (steady_frames < 0 || steady_frames % config.chunk != 0)
        throw std::invalid_argument("generate: total frames incompatible with chunk size and drain");
    std::int64_t steady_periods = steady_frames / config.chunk;

    WindowState state = init_video ? WindowState::from_video(*init_video, config, vs, schedule)
                                   : WindowState::from_noise(config, vs, schedule);
    if (sink) state.set_emit_sink(std::move(sink));

    while (state.phase() == Phase::Initializing) state.run_period(denoiser);
    for (std::int64_t p = 0; p < steady_periods; ++p) state.run_period(denoiser);
    if (config.enable_termination) state.run_termination(denoiser);
    return state.emitted();
}

}  // namespace pavd
