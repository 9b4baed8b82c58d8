#pragma once

#include <string>
#include <vector>

#include "pavd/denoiser.hpp"
#include "pavd/latent.hpp"
#include "pavd/schedule.hpp"

namespace pavd {

struct ToyDenoiserConfig {
    int dim = 1;         // D, values per frame
    int embed = 16;      // sinusoidal level-embedding size (even)
    int hidden = 32;     // per-frame hidden width
    int max_frames = 8;  // longest window the temporal kernel spans

    bool operator==(const ToyDenoiserConfig&) const = default;
};

/// One named parameter block, row-major.
struct ParamTensor {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

/// Small per-frame network with an additive sinusoidal level embedding and a
/// single full-receptive-field temporal mixing layer (per-channel Toeplitz
/// kernel), so later noisy frames can read earlier cleaner frames.
struct ToyDenoiserParams {
    // tensor indices
    enum : int { kWIn = 0, kWTime, kB1, kMix, kB2, kWOut, kBOut, kTensorCount };

    ToyDenoiserConfig config;
    std::vector<ParamTensor> tensors;

    static ToyDenoiserParams zeros(const ToyDenoiserConfig& config);
    static ToyDenoiserParams random_init(const ToyDenoiserConfig& config, Rng& rng, double scale = 0.2);

    ParamTensor& operator[](int i) { return tensors[i]; }
    const ParamTensor& operator[](int i) const { return tensors[i]; }

    std::size_t parameter_count() const;
    bool all_finite() const;
};

/// Gradients mirror the parameter layout.
using ToyGradients = ToyDenoiserParams;

/// Deterministic forward pass; window length must not exceed max_frames.
LatentSequence toy_predict_eps(const ToyDenoiserParams& params, const LatentSequence& xt,
                               const FrameNoiseVector& levels, const VarianceSchedule& vs);

/// Exact reverse-mode gradients of mse_eps_loss(toy_predict_eps(...), eps_true).
struct ToyBackwardResult {
    double loss = 0.0;
    ToyGradients grads;
};
ToyBackwardResult toy_backward(const ToyDenoiserParams& params, const LatentSequence& xt,
                               const FrameNoiseVector& levels, const LatentSequence& eps_true,
                               const VarianceSchedule& vs);

/// Flat little-endian float64 blob at prefix.bin plus a JSON shape manifest
/// at prefix.json.
void save_toy_params(const ToyDenoiserParams& params, const std::string& path_prefix);
ToyDenoiserParams load_toy_params(const std::string& path_prefix);

class ToyDenoiser : public Denoiser {
public:
    explicit ToyDenoiser(ToyDenoiserParams params) : params_(std::move(params)) {}
    LatentSequence predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                               const VarianceSchedule& vs) const override {
        return toy_predict_eps(params_, xt, levels, vs);
    }
    const ToyDenoiserParams& params() const { return params_; }

private:
    ToyDenoiserParams params_;
};

}  // namespace pavd
