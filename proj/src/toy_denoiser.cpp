#include "pavd/toy_denoiser.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pavd {

namespace {

constexpr double kMaxEmbedFreq = 200.0;

/// Sinusoidal features of the normalized level s in [0, 1].
void embed_level(double s, int embed, std::vector<double>& out) {
    const int half = embed / 2;
    out.resize(embed);
    for (int k = 0; k < half; ++k) {
        double omega = half == 1 ? 1.0 : std::exp(std::log(kMaxEmbedFreq) * k / (half - 1));
        out[2 * k] = std::sin(omega * s);
        out[2 * k + 1] = std::cos(omega * s);
    }
}

ParamTensor make_tensor(const std::string& name, int rows, int cols) {
    ParamTensor t;
    t.name = name;
    t.rows = rows;
    t.cols = cols;
    t.v.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return t;
}

void check_config(const ToyDenoiserConfig& c) {
    if (c.dim < 1 || c.hidden < 1 || c.max_frames < 1)
        throw std::invalid_argument("ToyDenoiserConfig: sizes must be >= 1");
    if (c.embed < 2 || c.embed % 2 != 0)
        throw std::invalid_argument("ToyDenoiserConfig: embed must be a positive even number");
}

struct ForwardCache {
    int f_count = 0;
    std::vector<double> phi;   // F x P
    std::vector<double> h;     // F x H, post-tanh
    std::vector<double> z;     // F x H, post-tanh
    LatentSequence out;
};

ForwardCache run_forward(const ToyDenoiserParams& p, const LatentSequence& xt,
                         const FrameNoiseVector& levels, const VarianceSchedule& vs) {
    const auto& c = p.config;
    if (xt.dim != c.dim)
        throw std::invalid_argument("toy denoiser: frame dim " + std::to_string(xt.dim) +
                                    " != configured " + std::to_string(c.dim));
    if (xt.frames > c.max_frames)
        throw std::invalid_argument("toy denoiser: window of " + std::to_string(xt.frames) +
                                    " frames exceeds max_frames " + std::to_string(c.max_frames));
    if (levels.frame_count() != xt.frames)
        throw std::invalid_argument("toy denoiser: level count mismatch");

    const int F = static_cast<int>(xt.frames), D = c.dim, P = c.embed, H = c.hidden;
    const int center = c.max_frames - 1;
    const auto& w_in = p[ToyDenoiserParams::kWIn];
    const auto& w_time = p[ToyDenoiserParams::kWTime];
    const auto& b1 = p[ToyDenoiserParams::kB1];
    const auto& mix = p[ToyDenoiserParams::kMix];
    const auto& b2 = p[ToyDenoiserParams::kB2];
    const auto& w_out = p[ToyDenoiserParams::kWOut];
    const auto& b_out = p[ToyDenoiserParams::kBOut];

    ForwardCache cache;
    cache.f_count = F;
    cache.phi.resize(static_cast<std::size_t>(F) * P);
    cache.h.assign(static_cast<std::size_t>(F) * H, 0.0);
    cache.z.assign(static_cast<std::size_t>(F) * H, 0.0);
    cache.out = LatentSequence(F, D);

    std::vector<double> phi_f;
    for (int f = 0; f < F; ++f) {
        embed_level(levels.levels[f] / vs.max_level(), P, phi_f);
        std::copy(phi_f.begin(), phi_f.end(), cache.phi.begin() + static_cast<std::size_t>(f) * P);
        auto xf = xt.frame(f);
        for (int i = 0; i < H; ++i) {
            double pre = b1.v[i];
            for (int d = 0; d < D; ++d) pre += w_in.at(i, d) * xf[d];
            for (int k = 0; k < P; ++k) pre += w_time.at(i, k) * phi_f[k];
            cache.h[static_cast<std::size_t>(f) * H + i] = std::tanh(pre);
        }
    }

    for (int f = 0; f < F; ++f) {
        for (int i = 0; i < H; ++i) {
            double u = b2.v[i];
            for (int g = 0; g < F; ++g)
                u += mix.at(i, f - g + center) * cache.h[static_cast<std::size_t>(g) * H + i];
            cache.z[static_cast<std::size_t>(f) * H + i] = std::tanh(u);
        }
        auto of = cache.out.frame(f);
        for (int d = 0; d < D; ++d) {
            double val = b_out.v[d];
            for (int i = 0; i < H; ++i) val += w_out.at(d, i) * cache.z[static_cast<std::size_t>(f) * H + i];
            of[d] = val;
        }
    }
    return cache;
}

}  // namespace

ToyDenoiserParams ToyDenoiserParams::zeros(const ToyDenoiserConfig& config) {
    check_config(config);
    ToyDenoiserParams p;
    p.config = config;
    p.tensors.reserve(kTensorCount);
    p.tensors.push_back(make_tensor("w_in", config.hidden, config.dim));
    p.tensors.push_back(make_tensor("w_time", config.hidden, config.embed));
    p.tensors.push_back(make_tensor("b1", config.hidden, 1));
    p.tensors.push_back(make_tensor("mix", config.hidden, 2 * config.max_frames - 1));
    p.tensors.push_back(make_tensor("b2", config.hidden, 1));
    p.tensors.push_back(make_tensor("w_out", config.dim, config.hidden));
    p.tensors.push_back(make_tensor("b_out", config.dim, 1));
    return p;
}

ToyDenoiserParams ToyDenoiserParams::random_init(const ToyDenoiserConfig& config, Rng& rng, double scale) {
    ToyDenoiserParams p = zeros(config);
    for (auto& t : p.tensors) {
        if (t.name == "b1" || t.name == "b2" || t.name == "b_out") continue;
        double fan_in = t.name == "mix" ? 1.0 : static_cast<double>(t.cols);
        for (double& x : t.v) x = scale * rng.normal() / std::sqrt(fan_in);
    }
    // Start the temporal kernel near identity so early training is frame-local.
    auto& mix = p.tensors[kMix];
    for (int i = 0; i < mix.rows; ++i) mix.at(i, config.max_frames - 1) += 1.0;
    return p;
}

std::size_t ToyDenoiserParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.v.size();
    return n;
}

bool ToyDenoiserParams::all_finite() const {
    for (const auto& t : tensors)
        for (double x : t.v)
            if (!std::isfinite(x)) return false;
    return true;
}

LatentSequence toy_predict_eps(const ToyDenoiserParams& params, const LatentSequence& xt,
                               const FrameNoiseVector& levels, const VarianceSchedule& vs) {
    return run_forward(params, xt, levels, vs).out;
}

ToyBackwardResult toy_backward(const ToyDenoiserParams& params, const LatentSequence& xt,
                               const FrameNoiseVector& levels, const LatentSequence& eps_true,
                               const VarianceSchedule& vs) {
    ForwardCache cache = run_forward(params, xt, levels, vs);
    require_same_shape(cache.out, eps_true, "toy_backward");

    const auto& c = params.config;
    const int F = cache.f_count, D = c.dim, P = c.embed, H = c.hidden;
    const int center = c.max_frames - 1;

    ToyBackwardResult result;
    result.grads = ToyDenoiserParams::zeros(c);

    const auto& w_in = params[ToyDenoiserParams::kWIn];
    const auto& mix = params[ToyDenoiserParams::kMix];
    const auto& w_out = params[ToyDenoiserParams::kWOut];
    auto& g_w_in = result.grads[ToyDenoiserParams::kWIn];
    auto& g_w_time = result.grads[ToyDenoiserParams::kWTime];
    auto& g_b1 = result.grads[ToyDenoiserParams::kB1];
    auto& g_mix = result.grads[ToyDenoiserParams::kMix];
    auto& g_b2 = result.grads[ToyDenoiserParams::kB2];
    auto& g_w_out = result.grads[ToyDenoiserParams::kWOut];
    auto& g_b_out = result.grads[ToyDenoiserParams::kBOut];

    const double inv_n = 1.0 / static_cast<double>(F * D);
    std::vector<double> d_z(static_cast<std::size_t>(F) * H, 0.0);
    std::vector<double> d_h(static_cast<std::size_t>(F) * H, 0.0);

    double loss = 0.0;
    for (int f = 0; f < F; ++f) {
        auto of = cache.out.frame(f);
        auto tf = eps_true.frame(f);
        for (int d = 0; d < D; ++d) {
            double diff = of[d] - tf[d];
            loss += diff * diff;
            double d_out = 2.0 * inv_n * diff;
            g_b_out.v[d] += d_out;
            for (int i = 0; i < H; ++i) {
                g_w_out.at(d, i) += d_out * cache.z[static_cast<std::size_t>(f) * H + i];
                d_z[static_cast<std::size_t>(f) * H + i] += d_out * w_out.at(d, i);
            }
        }
    }
    result.loss = loss * inv_n;

    // through z = tanh(u), u = mix * h + b2
    for (int f = 0; f < F; ++f)
        for (int i = 0; i < H; ++i) {
            double z = cache.z[static_cast<std::size_t>(f) * H + i];
            double d_u = d_z[static_cast<std::size_t>(f) * H + i] * (1.0 - z * z);
            g_b2.v[i] += d_u;
            for (int g = 0; g < F; ++g) {
                double h = cache.h[static_cast<std::size_t>(g) * H + i];
                g_mix.at(i, f - g + center) += d_u * h;
                d_h[static_cast<std::size_t>(g) * H + i] += d_u * mix.at(i, f - g + center);
            }
        }

    // through h = tanh(pre), pre = w_in x + w_time phi + b1
    for (int f = 0; f < F; ++f) {
        auto xf = xt.frame(f);
        const double* phi = cache.phi.data() + static_cast<std::size_t>(f) * P;
        for (int i = 0; i < H; ++i) {
            double h = cache.h[static_cast<std::size_t>(f) * H + i];
            double d_pre = d_h[static_cast<std::size_t>(f) * H + i] * (1.0 - h * h);
            g_b1.v[i] += d_pre;
            for (int d = 0; d < D; ++d) g_w_in.at(i, d) += d_pre * xf[d];
            for (int k = 0; k < P; ++k) g_w_time.at(i, k) += d_pre * phi[k];
        }
    }
    return result;
}

void save_toy_params(const ToyDenoiserParams& params, const std::string& path_prefix) {
    nlohmann::json manifest;
    manifest["dim"] = params.config.dim;
    manifest["embed"] = params.config.embed;
    manifest["hidden"] = params.config.hidden;
    manifest["max_frames"] = params.config.max_frames;
    manifest["dtype"] = "float64-le";

    std::ofstream bin(path_prefix + ".bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw std::runtime_error("save_toy_params: cannot open " + path_prefix + ".bin");
    std::size_t offset = 0;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : params.tensors) {
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
        bin.write(reinterpret_cast<const char*>(t.v.data()),
                  static_cast<std::streamsize>(t.v.size() * sizeof(double)));
        offset += t.v.size();
    }
    manifest["tensors"] = tensors;
    if (!bin) throw std::runtime_error("save_toy_params: write failed for " + path_prefix + ".bin");
    bin.close();

    std::ofstream js(path_prefix + ".json", std::ios::trunc);
    if (!js) throw std::runtime_error("save_toy_params: cannot open " + path_prefix + ".json");
    js << manifest.dump(2) << "\n";
}

ToyDenoiserParams load_toy_params(const std::string& path_prefix) {
    std::ifstream js(path_prefix + ".json");
    if (!js) throw std::runtime_error("load_toy_params: cannot open " + path_prefix + ".json");
    nlohmann::json manifest = nlohmann::json::parse(js);

    ToyDenoiserConfig config;
    config.dim = manifest.at("dim").get<int>();
    config.embed = manifest.at("embed").get<int>();
    config.hidden = manifest.at("hidden").get<int>();
    config.max_frames = manifest.at("max_frames").get<int>();
    ToyDenoiserParams params = ToyDenoiserParams::zeros(config);

    std::ifstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("load_toy_params: cannot open " + path_prefix + ".bin");
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != params.tensors.size())
        throw std::runtime_error("load_toy_params: manifest lists " + std::to_string(tensors.size()) +
                                 " tensors, expected " + std::to_string(params.tensors.size()));
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        auto& t = params.tensors[i];
        const auto& m = tensors[i];
        if (m.at("name").get<std::string>() != t.name || m.at("rows").get<int>() != t.rows ||
            m.at("cols").get<int>() != t.cols)
            throw std::runtime_error("load_toy_params: tensor " + t.name + " shape mismatch in manifest");
        bin.seekg(static_cast<std::streamoff>(m.at("offset").get<std::size_t>() * sizeof(double)));
        bin.read(reinterpret_cast<char*>(t.v.data()),
                 static_cast<std::streamsize>(t.v.size() * sizeof(double)));
        if (!bin) throw std::runtime_error("load_toy_params: short read for tensor " + t.name);
    }
    return params;
}

}  // namespace pavd
