#include "pavd/run_io.hpp"

#include <chrono>
#include <filesystem>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pavd/toy_denoiser.hpp"

namespace pavd {

FrameLogWriter::FrameLogWriter(const std::string& path, int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("FrameLogWriter: dim must be >= 1");
    os_.open(path, std::ios::binary | std::ios::trunc);
    if (!os_) throw std::runtime_error("FrameLogWriter: cannot open " + path);
}

void FrameLogWriter::append(const LatentSequence& frames, std::int64_t period) {
    if (frames.dim != dim_) throw std::invalid_argument("FrameLogWriter: dim mismatch");
    for (std::int64_t f = 0; f < frames.frames; ++f) {
        std::int64_t idx = next_index_++;
        os_.write(reinterpret_cast<const char*>(&period), sizeof(period));
        os_.write(reinterpret_cast<const char*>(&idx), sizeof(idx));
        os_.write(reinterpret_cast<const char*>(frames.frame(f).data()),
                  static_cast<std::streamsize>(dim_ * sizeof(double)));
    }
    if (!os_) throw std::runtime_error("FrameLogWriter: write failed");
}

FrameLog read_frame_log(const std::string& path, int dim) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_frame_log: cannot open " + path);
    is.seekg(0, std::ios::end);
    std::int64_t bytes = is.tellg();
    is.seekg(0);
    const std::int64_t record = 16 + static_cast<std::int64_t>(dim) * 8;
    if (bytes % record != 0)
        throw std::runtime_error("read_frame_log: size " + std::to_string(bytes) +
                                 " is not a multiple of the record size for dim " + std::to_string(dim));
    const std::int64_t count = bytes / record;

    FrameLog log;
    log.periods.resize(count);
    log.indices.resize(count);
    log.frames = count > 0 ? LatentSequence(count, dim) : LatentSequence();
    log.frames.dim = dim;
    for (std::int64_t i = 0; i < count; ++i) {
        is.read(reinterpret_cast<char*>(&log.periods[i]), 8);
        is.read(reinterpret_cast<char*>(&log.indices[i]), 8);
        is.read(reinterpret_cast<char*>(log.frames.frame(i).data()),
                static_cast<std::streamsize>(dim * 8));
    }
    if (!is) throw std::runtime_error("read_frame_log: truncated file " + path);
    return log;
}

std::string to_string(SampleMethod m) {
    switch (m) {
        case SampleMethod::Pa: return "pa";
        case SampleMethod::Rw: return "rw";
        case SampleMethod::Rn: return "rn";
        case SampleMethod::Independent: return "independent";
    }
    throw std::invalid_argument("unknown SampleMethod");
}

SampleMethod sample_method_from_string(const std::string& s) {
    if (s == "pa") return SampleMethod::Pa;
    if (s == "rw") return SampleMethod::Rw;
    if (s == "rn") return SampleMethod::Rn;
    if (s == "independent") return SampleMethod::Independent;
    throw std::invalid_argument("unknown method '" + s + "' (expected pa, rw, rn, or independent)");
}

std::unique_ptr<Denoiser> DenoiserSpec::build(int dim, int max_window) const {
    if (type == "ar1-analytic") return std::make_unique<Ar1AnalyticDenoiser>(rho, sigma);
    if (type == "zero") return std::make_unique<ZeroDenoiser>();
    if (type == "toy") {
        if (checkpoint.empty()) throw std::invalid_argument("denoiser: toy type needs a checkpoint path");
        ToyDenoiserParams params = load_toy_params(checkpoint);
        if (params.config.dim != dim)
            throw std::invalid_argument("denoiser: checkpoint dim " + std::to_string(params.config.dim) +
                                        " != run dim " + std::to_string(dim));
        if (params.config.max_frames < max_window)
            throw std::invalid_argument("denoiser: checkpoint max_frames below the window length");
        return std::make_unique<ToyDenoiser>(std::move(params));
    }
    if (type == "bump-gp") {
        SequenceSpec spec = bump;
        spec.generator = Generator::MovingBump;
        spec.dim = dim;
        spec.length = std::max<std::int64_t>(spec.length, max_window);
        double mean = bump_mean_level(spec);
        return std::make_unique<StationaryGpDenoiser>(
            dim,
            [spec](int window_len) { return bump_window_covariance(spec, window_len); },
            [mean, dim](int window_len) {
                return Eigen::VectorXd::Constant(static_cast<std::int64_t>(window_len) * dim, mean);
            });
    }
    throw std::invalid_argument("unknown denoiser type '" + type +
                                "' (expected ar1-analytic, toy, zero, or bump-gp)");
}

void SampleSpec::validate() const {
    if (chunk < 1) throw std::invalid_argument("SampleSpec: chunk must be >= 1");
    if (dim < 1) throw std::invalid_argument("SampleSpec: dim must be >= 1");
    if (total_frames < 1) throw std::invalid_argument("SampleSpec: total frames must be >= 1");
    if (method == SampleMethod::Pa) {
        if (schedule.steps % chunk != 0)
            throw std::invalid_argument("SampleSpec: steps S must be divisible by chunk C");
        if (total_frames % chunk != 0)
            throw std::invalid_argument("SampleSpec: total frames must be a multiple of chunk C");
    }
}

std::string SampleSpec::to_json_string() const {
    nlohmann::json j;
    j["method"] = pavd::to_string(method);
    j["schedule"] = nlohmann::json::parse(schedule.to_json_string());
    j["chunk"] = chunk;
    j["total_frames"] = total_frames;
    j["keep_clean"] = keep_clean;
    j["terminate"] = terminate;
    j["eta"] = eta;
    j["seed"] = seed;
    j["dim"] = dim;
    j["init_video"] = init_video;
    j["condition_len"] = condition_len;
    j["window_len"] = window_len;
    nlohmann::json d;
    d["type"] = denoiser.type;
    d["rho"] = denoiser.rho;
    d["sigma"] = denoiser.sigma;
    d["checkpoint"] = denoiser.checkpoint;
    d["bump"] = {{"width", denoiser.bump.bump_width},
                 {"velocity", denoiser.bump.bump_velocity},
                 {"amplitude", denoiser.bump.bump_amplitude},
                 {"noise", denoiser.bump.bump_noise}};
    j["denoiser"] = d;
    return j.dump(2);
}

SampleSpec SampleSpec::from_json_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SampleSpec spec;
    spec.method = sample_method_from_string(j.at("method").get<std::string>());
    spec.schedule = ScheduleSpec::from_json_string(j.at("schedule").dump());
    spec.chunk = j.at("chunk").get<int>();
    spec.total_frames = j.at("total_frames").get<std::int64_t>();
    spec.keep_clean = j.at("keep_clean").get<bool>();
    spec.terminate = j.at("terminate").get<bool>();
    spec.eta = j.at("eta").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.dim = j.at("dim").get<int>();
    spec.init_video = j.value("init_video", std::string());
    spec.condition_len = j.value("condition_len", 5);
    spec.window_len = j.value("window_len", 0);
    if (j.contains("denoiser")) {
        const auto& d = j["denoiser"];
        spec.denoiser.type = d.value("type", std::string("ar1-analytic"));
        spec.denoiser.rho = d.value("rho", 0.9);
        spec.denoiser.sigma = d.value("sigma", 1.0);
        spec.denoiser.checkpoint = d.value("checkpoint", std::string());
        if (d.contains("bump")) {
            const auto& b = d["bump"];
            spec.denoiser.bump.generator = Generator::MovingBump;
            spec.denoiser.bump.bump_width = b.value("width", 2.0);
            spec.denoiser.bump.bump_velocity = b.value("velocity", 0.5);
            spec.denoiser.bump.bump_amplitude = b.value("amplitude", 1.0);
            spec.denoiser.bump.bump_noise = b.value("noise", 0.0);
        }
    }
    return spec;
}

namespace {

LatentSequence load_init_window(const std::string& path, std::int64_t frames, int dim) {
    Dataset dataset = read_dataset(path);
    if (dataset.sequences.empty()) throw std::runtime_error("init video: dataset " + path + " is empty");
    const LatentSequence& seq = dataset.sequences.front();
    if (seq.dim != dim)
        throw std::runtime_error("init video: dataset dim " + std::to_string(seq.dim) + " != run dim " +
                                 std::to_string(dim));
    if (seq.frames < frames)
        throw std::runtime_error("init video: need " + std::to_string(frames) + " frames, dataset has " +
                                 std::to_string(seq.frames));
    return seq.slice(0, frames);
}

}  // namespace

RunResult run_sample(const SampleSpec& spec, const std::string& run_dir) {
    spec.validate();
    std::filesystem::create_directories(run_dir);

    VarianceSchedule vs = spec.schedule.make_variance();
    SamplingSchedule schedule = spec.schedule.make_sampling();

    RunResult result;
    result.run_dir = run_dir;

    const int baseline_window = spec.window_len > 0 ? spec.window_len : schedule.steps;
    const int pa_window = schedule.steps + (spec.keep_clean ? spec.chunk : 0);
    const int max_window = std::max(baseline_window, pa_window);
    std::unique_ptr<Denoiser> denoiser = spec.denoiser.build(spec.dim, max_window);

    FrameLogWriter log(run_dir + "/frames.bin", spec.dim);

    if (spec.method == SampleMethod::Pa) {
        GenerationConfig config;
        config.steps = schedule.steps;
        config.chunk = spec.chunk;
        config.eta = spec.eta;
        config.total_frames = spec.total_frames;
        config.keep_clean_chunk = spec.keep_clean;
        config.enable_init = spec.init_video.empty();
        config.enable_termination = spec.terminate;
        config.seed = spec.seed;
        config.dim = spec.dim;
        config.validate();

        std::optional<LatentSequence> init;
        if (!spec.init_video.empty())
            init = load_init_window(spec.init_video, config.window_len(), spec.dim);
        result.emitted = generate(config, *denoiser, vs, schedule, init ? &*init : nullptr,
                                  [&log](const LatentSequence& frames, std::int64_t period) {
                                      log.append(frames, period);
                                  });
    } else {
        ReplacementConfig config;
        config.window_len = baseline_window;
        config.method = spec.method == SampleMethod::Rw   ? ReplacementMethod::WithNoise
                        : spec.method == SampleMethod::Rn ? ReplacementMethod::WithoutNoise
                                                          : ReplacementMethod::Independent;
        config.condition_len = spec.method == SampleMethod::Independent ? 0 : spec.condition_len;
        config.steps = schedule.steps;
        config.eta = spec.eta;
        config.seed = spec.seed;
        config.dim = spec.dim;

        if (spec.method == SampleMethod::Independent) {
            if (spec.total_frames % config.window_len != 0)
                throw std::invalid_argument("run_sample: total frames must be a multiple of the window for "
                                            "independent clips");
            config.clips = static_cast<int>(spec.total_frames / config.window_len);
            config.validate();
            result.emitted = generate_independent_clips(config, *denoiser, vs, schedule);
        } else {
            LatentSequence seed_clip;
            if (!spec.init_video.empty()) {
                seed_clip = load_init_window(spec.init_video, config.condition_len, spec.dim);
            } else {
                // No conditioning video: the first clip is generated
                // unconditioned and its tail seeds the chain.
                ReplacementConfig first = config;
                first.method = ReplacementMethod::Independent;
                first.condition_len = 0;
                first.clips = 1;
                seed_clip = generate_independent_clips(first, *denoiser, vs, schedule);
            }
            std::int64_t remaining = spec.total_frames - seed_clip.frames;
            if (remaining < 0 || remaining % config.stride() != 0)
                throw std::invalid_argument(
                    "run_sample: total frames minus the seed clip must be a non-negative multiple of the "
                    "stride F-E = " + std::to_string(config.stride()));
            config.clips = static_cast<int>(remaining / config.stride());
            config.validate();
            result.emitted = config.method == ReplacementMethod::WithNoise
                                 ? generate_replacement_with_noise(config, *denoiser, vs, schedule, seed_clip)
                                 : generate_replacement_without_noise(config, *denoiser, vs, schedule,
                                                                      seed_clip);
        }
        // One clip per log period.
        const std::int64_t clip0 = result.emitted.frames -
                                   static_cast<std::int64_t>(config.clips) * config.stride();
        if (clip0 > 0) log.append(result.emitted.slice(0, clip0), 0);
        for (int c = 0; c < config.clips; ++c)
            log.append(result.emitted.slice(clip0 + static_cast<std::int64_t>(c) * config.stride(),
                                            config.stride()),
                       c + 1);
    }
    log.flush();

    nlohmann::json manifest = nlohmann::json::parse(spec.to_json_string());
    manifest["frame_count"] = result.emitted.frames;
    auto now = std::chrono::system_clock::now().time_since_epoch();
    manifest["created_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    write_text_file(run_dir + "/manifest.json", manifest.dump(2) + "\n");
    return result;
}

RunResult run_from_manifest(const std::string& manifest_path, const std::string& run_dir) {
    return run_sample(SampleSpec::from_json_string(read_text_file(manifest_path)), run_dir);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << text;
}

}  // namespace pavd
