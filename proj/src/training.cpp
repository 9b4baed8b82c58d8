#include "pavd/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pavd/diffusion.hpp"

namespace pavd {

std::string to_string(LevelMode m) {
    return m == LevelMode::ProgressivePerturbed ? "progressive-perturbed" : "uniform";
}

LevelMode level_mode_from_string(const std::string& s) {
    if (s == "progressive-perturbed") return LevelMode::ProgressivePerturbed;
    if (s == "uniform") return LevelMode::Uniform;
    throw std::invalid_argument("unknown level mode '" + s + "'");
}

void TrainConfig::validate() const {
    if (steps < 1 || batch < 1) throw std::invalid_argument("TrainConfig: steps and batch must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (chunk < 1 || max_clip < chunk || max_clip % chunk != 0)
        throw std::invalid_argument("TrainConfig: clip lengths must be positive multiples of chunk");
    if (val_every < 1 || checkpoint_every < 1)
        throw std::invalid_argument("TrainConfig: cadences must be >= 1");
    if (model.max_frames < max_clip)
        throw std::invalid_argument("TrainConfig: model max_frames below max clip length");
}

std::vector<int> TrainConfig::clip_lengths() const {
    std::vector<int> lens;
    for (int len = chunk; len <= max_clip; len += chunk) lens.push_back(len);
    return lens;
}

AdamState AdamState::zeros_like(const ToyDenoiserParams& params) {
    AdamState s;
    s.m.reserve(params.tensors.size());
    s.v.reserve(params.tensors.size());
    for (const auto& t : params.tensors) {
        s.m.emplace_back(t.v.size(), 0.0);
        s.v.emplace_back(t.v.size(), 0.0);
    }
    return s;
}

void adam_update(ToyDenoiserParams& params, AdamState& adam, const ToyGradients& grads,
                 const TrainConfig& config) {
    adam.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));
    for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        auto& p = params.tensors[t].v;
        const auto& g = grads.tensors[t].v;
        auto& m = adam.m[t];
        auto& v = adam.v[t];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            p[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
}

FrameNoiseVector sample_training_levels(const TrainConfig& config, int clip_len,
                                        const SamplingSchedule& schedule, Rng& rng) {
    if (clip_len < config.chunk || clip_len > config.max_clip || clip_len % config.chunk != 0)
        throw std::invalid_argument("sample_training_levels: clip length " + std::to_string(clip_len) +
                                    " not in the configured set");

    const double t_max = schedule.max_level;
    if (config.level_mode == LevelMode::Uniform) {
        double level = rng.uniform01() * t_max;
        return make_uniform_levels(clip_len, config.chunk, level);
    }

    // Contiguous run of ladder rungs at a random anchor, so short clips see
    // the same levels the init and termination phases do.
    const int chunk = config.chunk;
    const int k = clip_len / chunk;
    const int total_rungs = schedule.steps / chunk;
    int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(chunk)));
    int base = k < total_rungs ? static_cast<int>(rng.below(static_cast<std::uint64_t>(total_rungs - k + 1)))
                               : 0;

    FrameNoiseVector v;
    v.chunk_size = chunk;
    v.mode = FrameNoiseVector::Mode::Progressive;
    v.levels.reserve(clip_len);
    for (int j = 0; j < k; ++j) {
        double level = schedule.level((j + 1 + base) * chunk - r);
        v.levels.insert(v.levels.end(), chunk, level);
    }
    if (k >= 2) v = perturb_training_levels(v, t_max, rng);
    return v;
}

double train_step(ToyDenoiserParams& params, AdamState& adam,
                  const std::vector<LatentSequence>& batch, const TrainConfig& config,
                  const VarianceSchedule& vs, const SamplingSchedule& schedule, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    const int clip_len = static_cast<int>(batch[0].frames);
    for (const auto& item : batch)
        if (item.frames != clip_len || item.dim != config.model.dim)
            throw std::invalid_argument("train_step: inconsistent batch shapes");

    FrameNoiseVector levels = sample_training_levels(config, clip_len, schedule, rng);

    ToyGradients grads = ToyDenoiserParams::zeros(params.config);
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& x0 : batch) {
        NoiseTensor noise = sample_standard_normal(x0.frames, x0.dim, rng);
        LatentSequence xt = forward_diffuse(x0, levels, noise, vs);
        ToyBackwardResult back = toy_backward(params, xt, levels, noise, vs);
        loss += back.loss * inv_b;
        for (std::size_t t = 0; t < grads.tensors.size(); ++t)
            for (std::size_t i = 0; i < grads.tensors[t].v.size(); ++i)
                grads.tensors[t].v[i] += back.grads.tensors[t].v[i] * inv_b;
    }

    if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "train_step: non-finite loss at adam step " << adam.step + 1 << "; levels = [";
        for (double t : levels.levels) os << t << " ";
        double lo = batch[0].data[0], hi = batch[0].data[0];
        for (const auto& item : batch)
            for (double x : item.data) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        os << "], batch value range [" << lo << ", " << hi << "]";
        throw std::runtime_error(os.str());
    }

    adam_update(params, adam, grads, config);
    return loss;
}

std::vector<double> band_levels(double max_level, int band) {
    switch (band) {
        case 0: return {0.1 * max_level, 0.2 * max_level, 0.3 * max_level};
        case 1: return {0.4 * max_level, 0.5 * max_level, 0.6 * max_level};
        case 2: return {0.7 * max_level, 0.8 * max_level, 0.9 * max_level};
        default: throw std::invalid_argument("band_levels: band must be 0, 1, or 2");
    }
}

double validation_mse(const Denoiser& denoiser, const std::vector<LatentSequence>& clips,
                      const std::vector<double>& levels_to_probe, const VarianceSchedule& vs,
                      std::uint64_t noise_seed) {
    if (clips.empty()) throw std::invalid_argument("validation_mse: no clips");
    double acc = 0.0;
    std::int64_t count = 0;
    for (std::size_t li = 0; li < levels_to_probe.size(); ++li) {
        Rng noise_rng = Rng::child_of(noise_seed, li);
        for (const auto& x0 : clips) {
            FrameNoiseVector levels =
                make_uniform_levels(static_cast<int>(x0.frames), 1, levels_to_probe[li]);
            NoiseTensor noise = sample_standard_normal(x0.frames, x0.dim, noise_rng);
            LatentSequence xt = forward_diffuse(x0, levels, noise, vs);
            LatentSequence eps_hat = denoiser.predict_eps(xt, levels, vs);
            acc += mse_eps_loss(eps_hat, noise);
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

namespace {

std::vector<LatentSequence> draw_batch(const Dataset& dataset, int batch, int clip_len, Rng& rng) {
    std::vector<LatentSequence> out;
    out.reserve(batch);
    for (int b = 0; b < batch; ++b) {
        const auto& seq = dataset.sequences[rng.below(dataset.sequences.size())];
        if (seq.frames < clip_len)
            throw std::invalid_argument("draw_batch: dataset sequences shorter than clip length");
        std::int64_t offset = static_cast<std::int64_t>(rng.below(seq.frames - clip_len + 1));
        out.push_back(seq.slice(offset, clip_len));
    }
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<TrainMetricsRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("train_run: cannot write " + path);
    os << "step,trainLoss,valLossLow,valLossMid,valLossHigh\n";
    os.precision(12);
    for (const auto& r : rows)
        os << r.step << "," << r.train_loss << "," << r.val_loss_low << "," << r.val_loss_mid << ","
           << r.val_loss_high << "\n";
}

struct TrainState {
    ToyDenoiserParams params;
    AdamState adam;
    Rng rng{0};
    std::int64_t step = 0;
    std::vector<TrainMetricsRow> metrics;
};

void save_train_state(const TrainState& state, const std::string& out_dir) {
    save_toy_params(state.params, out_dir + "/checkpoint");

    std::ofstream bin(out_dir + "/optimizer.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw std::runtime_error("train_run: cannot write optimizer state");
    for (const auto& m : state.adam.m)
        bin.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    for (const auto& v : state.adam.v)
        bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));

    nlohmann::json j;
    j["step"] = state.step;
    j["adam_step"] = state.adam.step;
    j["rng_state"] = state.rng.save_state();
    std::ofstream js(out_dir + "/train_state.json", std::ios::trunc);
    js << j.dump(2) << "\n";

    write_metrics_csv(out_dir + "/metrics.csv", state.metrics);
}

void load_train_state(TrainState& state, const std::string& out_dir) {
    state.params = load_toy_params(out_dir + "/checkpoint");
    state.adam = AdamState::zeros_like(state.params);

    std::ifstream bin(out_dir + "/optimizer.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("train_run: cannot read optimizer state");
    for (auto& m : state.adam.m)
        bin.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    for (auto& v : state.adam.v)
        bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("train_run: optimizer state truncated");

    std::ifstream js(out_dir + "/train_state.json");
    nlohmann::json j = nlohmann::json::parse(js);
    state.step = j.at("step").get<std::int64_t>();
    state.adam.step = j.at("adam_step").get<std::int64_t>();
    state.rng.restore_state(j.at("rng_state").get<std::string>());

    std::ifstream csv(out_dir + "/metrics.csv");
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        TrainMetricsRow row;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream is(line);
        is >> row.step >> row.train_loss >> row.val_loss_low >> row.val_loss_mid >> row.val_loss_high;
        state.metrics.push_back(row);
    }
}

}  // namespace

TrainResult train_run(const TrainConfig& config, const Dataset& dataset, const std::string& out_dir,
                      bool resume) {
    config.validate();
    if (dataset.sequences.empty()) throw std::invalid_argument("train_run: empty dataset");
    std::filesystem::create_directories(out_dir);

    const ScheduleSpec schedule_spec{config.variance_kind, config.max_level, config.max_clip, {}};
    VarianceSchedule vs = schedule_spec.make_variance();
    SamplingSchedule schedule = schedule_spec.make_sampling();

    TrainState state;
    if (resume) {
        load_train_state(state, out_dir);
    } else {
        state.rng = Rng(config.seed);
        state.params = ToyDenoiserParams::random_init(config.model, state.rng);
        state.adam = AdamState::zeros_like(state.params);
    }

    // Deterministic held-out clips; training batches never see this stream.
    Rng val_rng = Rng::child_of(config.seed, 0x76616c);
    std::vector<LatentSequence> val_clips = draw_batch(dataset, config.val_batch, config.max_clip, val_rng);

    const auto lens = config.clip_lengths();
    double last_loss = 0.0;
    while (state.step < config.steps) {
        int clip_len = lens[state.rng.below(lens.size())];
        std::vector<LatentSequence> batch = draw_batch(dataset, config.batch, clip_len, state.rng);
        last_loss = train_step(state.params, state.adam, batch, config, vs, schedule, state.rng);
        state.step += 1;

        if (state.step % config.val_every == 0) {
            ToyDenoiser model(state.params);
            TrainMetricsRow row;
            row.step = state.step;
            row.train_loss = last_loss;
            row.val_loss_low =
                validation_mse(model, val_clips, band_levels(config.max_level, 0), vs, config.seed ^ 0xA);
            row.val_loss_mid =
                validation_mse(model, val_clips, band_levels(config.max_level, 1), vs, config.seed ^ 0xB);
            row.val_loss_high =
                validation_mse(model, val_clips, band_levels(config.max_level, 2), vs, config.seed ^ 0xC);
            state.metrics.push_back(row);
        }
        if (state.step % config.checkpoint_every == 0) save_train_state(state, out_dir);
    }

    save_train_state(state, out_dir);
    TrainResult result;
    result.params = std::move(state.params);
    result.metrics = std::move(state.metrics);
    return result;
}

}  // namespace pavd
