#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "pavd/baselines.hpp"
#include "pavd/denoiser.hpp"
#include "pavd/diffusion.hpp"
#include "pavd/eval.hpp"
#include "pavd/run_io.hpp"
#include "pavd/schedule.hpp"
#include "pavd/synthetic.hpp"
#include "pavd/toy_denoiser.hpp"
#include "pavd/window.hpp"

namespace py = pybind11;
using namespace pavd;

namespace {

LatentSequence to_sequence(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a (frames, dim) float array");
    LatentSequence seq(arr.shape(0), arr.shape(1));
    std::copy(arr.data(), arr.data() + seq.size(), seq.data.begin());
    return seq;
}

py::array_t<double> from_sequence(const LatentSequence& seq) {
    py::array_t<double> arr({seq.frames, seq.dim});
    std::copy(seq.data.begin(), seq.data.end(), arr.mutable_data());
    return arr;
}

FrameNoiseVector to_levels(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
                           int chunk_size, const std::string& mode) {
    if (arr.ndim() != 1) throw std::invalid_argument("levels must be a 1-d float array");
    FrameNoiseVector v;
    v.levels.assign(arr.data(), arr.data() + arr.shape(0));
    v.chunk_size = chunk_size;
    v.mode = mode == "uniform" ? FrameNoiseVector::Mode::Uniform : FrameNoiseVector::Mode::Progressive;
    return v;
}

py::array_t<double> from_vector(const std::vector<double>& v) {
    py::array_t<double> arr(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), arr.mutable_data());
    return arr;
}

struct PyDenoiser {
    std::shared_ptr<Denoiser> ptr;
};

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

}  // namespace

PYBIND11_MODULE(pavd, m) {
    m.doc() = "progressive autoregressive diffusion sampling engine";

    py::class_<VarianceSchedule>(m, "VarianceSchedule")
        .def("alpha_bar", &VarianceSchedule::alpha_bar, py::arg("t"))
        .def_property_readonly("max_level", &VarianceSchedule::max_level);

    m.def(
        "make_variance_schedule",
        [](const std::string& kind, double max_level, double beta_start, double beta_end,
           int virtual_steps) {
            VarianceParams params;
            params.beta_start = beta_start;
            params.beta_end = beta_end;
            params.virtual_steps = virtual_steps;
            return VarianceSchedule::make(variance_kind_from_string(kind), max_level, params);
        },
        py::arg("kind") = "linear-beta", py::arg("max_level") = 1.0, py::arg("beta_start") = 1e-4,
        py::arg("beta_end") = 0.02, py::arg("virtual_steps") = 1000);

    m.def(
        "linear_sampling_grid",
        [](double max_level, int steps) {
            return from_vector(SamplingSchedule::make_linear(max_level, steps).grid);
        },
        py::arg("max_level"), py::arg("steps"));

    m.def(
        "progressive_input_levels",
        [](double max_level, int steps, int chunk_count, int chunk_size, int offset) {
            SamplingSchedule s = SamplingSchedule::make_linear(max_level, steps);
            return from_vector(progressive_input_levels(s, chunk_count, chunk_size, offset).levels);
        },
        py::arg("max_level"), py::arg("steps"), py::arg("chunk_count"), py::arg("chunk_size"),
        py::arg("offset") = 0);

    m.def(
        "output_levels",
        [](const Array& levels, double max_level, int steps, int chunk_size) {
            SamplingSchedule s = SamplingSchedule::make_linear(max_level, steps);
            return from_vector(output_levels(to_levels(levels, chunk_size, "progressive"), s).levels);
        },
        py::arg("levels"), py::arg("max_level"), py::arg("steps"), py::arg("chunk_size") = 1);

    m.def(
        "forward_diffuse",
        [](const Array& x0, const Array& levels, const Array& noise, const VarianceSchedule& vs,
           int chunk_size) {
            return from_sequence(forward_diffuse(to_sequence(x0), to_levels(levels, chunk_size, "any"),
                                                 to_sequence(noise), vs));
        },
        py::arg("x0"), py::arg("levels"), py::arg("noise"), py::arg("vs"), py::arg("chunk_size") = 1);

    m.def(
        "predict_x0",
        [](const Array& xt, const Array& eps_hat, const Array& levels, const VarianceSchedule& vs,
           int chunk_size) {
            return from_sequence(predict_x0(to_sequence(xt), to_sequence(eps_hat),
                                            to_levels(levels, chunk_size, "any"), vs));
        },
        py::arg("xt"), py::arg("eps_hat"), py::arg("levels"), py::arg("vs"), py::arg("chunk_size") = 1);

    m.def(
        "ddim_step",
        [](const Array& xt, const Array& eps_hat, const Array& from_levels, const Array& to_levels_arr,
           const VarianceSchedule& vs, double eta, std::uint64_t seed, int chunk_size) {
            Rng rng(seed);
            return from_sequence(ddim_step(to_sequence(xt), to_sequence(eps_hat),
                                           to_levels(from_levels, chunk_size, "any"),
                                           to_levels(to_levels_arr, chunk_size, "any"), vs, eta,
                                           eta > 0.0 ? &rng : nullptr));
        },
        py::arg("xt"), py::arg("eps_hat"), py::arg("from_levels"), py::arg("to_levels"), py::arg("vs"),
        py::arg("eta") = 0.0, py::arg("seed") = 0, py::arg("chunk_size") = 1);

    m.def(
        "mse_eps_loss",
        [](const Array& a, const Array& b) { return mse_eps_loss(to_sequence(a), to_sequence(b)); },
        py::arg("eps_hat"), py::arg("eps_true"));

    py::class_<PyDenoiser>(m, "Denoiser")
        .def(
            "predict_eps",
            [](const PyDenoiser& self, const Array& xt, const Array& levels, const VarianceSchedule& vs,
               int chunk_size) {
                return from_sequence(
                    self.ptr->predict_eps(to_sequence(xt), to_levels(levels, chunk_size, "any"), vs));
            },
            py::arg("xt"), py::arg("levels"), py::arg("vs"), py::arg("chunk_size") = 1);

    m.def(
        "ar1_denoiser",
        [](double rho, double sigma) {
            return PyDenoiser{std::make_shared<Ar1AnalyticDenoiser>(rho, sigma)};
        },
        py::arg("rho"), py::arg("sigma") = 1.0);
    m.def("zero_denoiser", [] { return PyDenoiser{std::make_shared<ZeroDenoiser>()}; });
    m.def(
        "toy_denoiser",
        [](const std::string& checkpoint_prefix) {
            return PyDenoiser{std::make_shared<ToyDenoiser>(load_toy_params(checkpoint_prefix))};
        },
        py::arg("checkpoint_prefix"));

    m.def(
        "generate_pa",
        [](int steps, int chunk, std::int64_t total_frames, int dim, std::uint64_t seed,
           const PyDenoiser& denoiser, bool keep_clean, bool terminate, double eta, double max_level,
           py::object init_video) {
            GenerationConfig config;
            config.steps = steps;
            config.chunk = chunk;
            config.total_frames = total_frames;
            config.dim = dim;
            config.seed = seed;
            config.keep_clean_chunk = keep_clean;
            config.enable_termination = terminate;
            config.eta = eta;
            VarianceSchedule vs = VarianceSchedule::make(VarianceKind::LinearBeta, max_level);
            SamplingSchedule schedule = SamplingSchedule::make_linear(max_level, steps);
            if (init_video.is_none()) {
                config.enable_init = true;
                return from_sequence(generate(config, *denoiser.ptr, vs, schedule));
            }
            config.enable_init = false;
            LatentSequence x0 = to_sequence(init_video.cast<Array>());
            return from_sequence(generate(config, *denoiser.ptr, vs, schedule, &x0));
        },
        py::arg("steps"), py::arg("chunk"), py::arg("total_frames"), py::arg("dim"), py::arg("seed"),
        py::arg("denoiser"), py::arg("keep_clean") = true, py::arg("terminate") = false,
        py::arg("eta") = 0.0, py::arg("max_level") = 1.0, py::arg("init_video") = py::none());

    m.def(
        "generate_baseline",
        [](const std::string& method, int window_len, int condition_len, int steps, int clips, int dim,
           std::uint64_t seed, const PyDenoiser& denoiser, double eta, double max_level,
           py::object seed_clip) {
            ReplacementConfig config;
            config.method = replacement_method_from_string(method);
            config.window_len = window_len;
            config.condition_len = condition_len;
            config.steps = steps;
            config.clips = clips;
            config.dim = dim;
            config.seed = seed;
            config.eta = eta;
            VarianceSchedule vs = VarianceSchedule::make(VarianceKind::LinearBeta, max_level);
            SamplingSchedule schedule = SamplingSchedule::make_linear(max_level, steps);
            if (config.method == ReplacementMethod::Independent)
                return from_sequence(generate_independent_clips(config, *denoiser.ptr, vs, schedule));
            LatentSequence clip = to_sequence(seed_clip.cast<Array>());
            return from_sequence(
                config.method == ReplacementMethod::WithNoise
                    ? generate_replacement_with_noise(config, *denoiser.ptr, vs, schedule, clip)
                    : generate_replacement_without_noise(config, *denoiser.ptr, vs, schedule, clip));
        },
        py::arg("method"), py::arg("window_len"), py::arg("condition_len"), py::arg("steps"),
        py::arg("clips"), py::arg("dim"), py::arg("seed"), py::arg("denoiser"), py::arg("eta") = 0.0,
        py::arg("max_level") = 1.0, py::arg("seed_clip") = py::none());

    m.def(
        "sample_ar1",
        [](double rho, double sigma, std::int64_t frames, int dim, std::uint64_t seed) {
            SequenceSpec spec;
            spec.generator = Generator::Ar1Gaussian;
            spec.rho = rho;
            spec.sigma = sigma;
            spec.length = frames;
            spec.dim = dim;
            Rng rng(seed);
            return from_sequence(sample_ar1_sequence(spec, rng));
        },
        py::arg("rho"), py::arg("sigma"), py::arg("frames"), py::arg("dim") = 1, py::arg("seed") = 0);

    m.def(
        "sample_moving_bump",
        [](std::int64_t frames, int grid, double width, double velocity, double amplitude, double noise,
           bool wrap, std::uint64_t seed) {
            SequenceSpec spec;
            spec.generator = Generator::MovingBump;
            spec.length = frames;
            spec.dim = grid;
            spec.bump_width = width;
            spec.bump_velocity = velocity;
            spec.bump_amplitude = amplitude;
            spec.bump_noise = noise;
            spec.wrap = wrap;
            Rng rng(seed);
            BumpSequence bump = sample_moving_bump(spec, rng);
            return py::make_tuple(from_sequence(bump.frames), from_vector(bump.centers));
        },
        py::arg("frames"), py::arg("grid"), py::arg("width") = 2.0, py::arg("velocity") = 0.5,
        py::arg("amplitude") = 1.0, py::arg("noise") = 0.0, py::arg("wrap") = true, py::arg("seed") = 0);

    m.def(
        "clip_metrics",
        [](const Array& seq, std::int64_t clip_len) {
            MetricReport report = compute_clip_metrics(to_sequence(seq), clip_len);
            py::list clips;
            for (const auto& c : report.clips) {
                py::dict d;
                d["mean"] = c.mean;
                d["variance"] = c.variance;
                d["autocorr1"] = c.autocorr1;
                d["mean_delta"] = c.mean_delta;
                clips.append(d);
            }
            py::dict drift;
            drift["mean"] = report.drift.mean;
            drift["variance"] = report.drift.variance;
            drift["autocorr1"] = report.drift.autocorr1;
            drift["mean_delta"] = report.drift.mean_delta;
            py::dict out;
            out["clip_len"] = report.clip_len;
            out["clips"] = clips;
            out["drift"] = drift;
            return out;
        },
        py::arg("seq"), py::arg("clip_len"));

    m.def(
        "quartile_drift",
        [](const Array& seq) {
            QuartileDrift q = quartile_drift(to_sequence(seq));
            py::dict out;
            out["delta_mean"] = q.delta_mean;
            out["variance_ratio"] = q.variance_ratio;
            out["delta_autocorr"] = q.delta_autocorr;
            out["first_mean"] = q.first.mean;
            out["last_mean"] = q.last.mean;
            out["first_variance"] = q.first.variance;
            out["last_variance"] = q.last.variance;
            return out;
        },
        py::arg("seq"));

    m.def(
        "detect_scene_changes",
        [](const Array& seq, int window, double k) {
            SceneChangeResult r = detect_scene_changes(to_sequence(seq), window, k);
            py::dict out;
            out["events"] = r.events;
            out["segments"] = r.segments;
            out["indices"] = r.indices;
            return out;
        },
        py::arg("seq"), py::arg("window") = kDefaultSceneWindow, py::arg("k") = kDefaultSceneThreshold);

    m.def(
        "estimate_velocity",
        [](const Array& seq, py::object true_velocity) {
            std::optional<double> v;
            if (!true_velocity.is_none()) v = true_velocity.cast<double>();
            VelocityEstimate est = estimate_velocity(to_sequence(seq), v);
            py::dict out;
            out["centers"] = from_vector(est.centers);
            out["velocity"] = from_vector(est.velocity);
            out["mean_velocity"] = est.mean_velocity;
            out["mae"] = est.mae;
            return out;
        },
        py::arg("seq"), py::arg("true_velocity") = py::none());

    m.def(
        "run_sample",
        [](const std::string& manifest_json, const std::string& out_dir) {
            RunResult result = run_sample(SampleSpec::from_json_string(manifest_json), out_dir);
            return from_sequence(result.emitted);
        },
        py::arg("manifest_json"), py::arg("out_dir"));

    m.attr("default_scene_threshold") = kDefaultSceneThreshold;
    m.attr("default_scene_window") = kDefaultSceneWindow;
    m.attr("__version__") = "0.1.0";
}
