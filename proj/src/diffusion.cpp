#include "pavd/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pavd {

namespace {

constexpr double kAlphaFloor = 1e-6;

void require_levels_match(const FrameNoiseVector& levels, const LatentSequence& x, const char* where) {
    if (levels.frame_count() != x.frames)
        throw std::invalid_argument(std::string(where) + ": level count " +
                                    std::to_string(levels.frame_count()) + " != frame count " +
                                    std::to_string(x.frames));
}

}  // namespace

LatentSequence forward_diffuse(const LatentSequence& x0, const FrameNoiseVector& levels,
                               const NoiseTensor& noise, const VarianceSchedule& vs) {
    require_same_shape(x0, noise, "forward_diffuse");
    require_levels_match(levels, x0, "forward_diffuse");

    LatentSequence out(x0.frames, x0.dim);
    for (std::int64_t f = 0; f < x0.frames; ++f) {
        double a = vs.alpha_bar(levels.levels[f]);
        double cs = std::sqrt(a), cn = std::sqrt(1.0 - a);
        auto xf = x0.frame(f);
        auto nf = noise.frame(f);
        auto of = out.frame(f);
        for (std::int64_t d = 0; d < x0.dim; ++d) of[d] = cs * xf[d] + cn * nf[d];
    }
    return out;
}

LatentSequence predict_x0(const LatentSequence& xt, const LatentSequence& eps_hat,
                          const FrameNoiseVector& levels, const VarianceSchedule& vs) {
    require_same_shape(xt, eps_hat, "predict_x0");
    require_levels_match(levels, xt, "predict_x0");

    LatentSequence out(xt.frames, xt.dim);
    for (std::int64_t f = 0; f < xt.frames; ++f) {
        double a = vs.alpha_bar(levels.levels[f]);
        if (a < kAlphaFloor)
            throw std::invalid_argument("predict_x0: frame " + std::to_string(f) + " at level " +
                                        std::to_string(levels.levels[f]) + " has alpha_bar " +
                                        std::to_string(a) + " below the 1e-6 inversion floor");
        double cs = std::sqrt(a), cn = std::sqrt(1.0 - a);
        auto xf = xt.frame(f);
        auto ef = eps_hat.frame(f);
        auto of = out.frame(f);
        for (std::int64_t d = 0; d < xt.dim; ++d) of[d] = (xf[d] - cn * ef[d]) / cs;
    }
    return out;
}

LatentSequence ddim_step(const LatentSequence& xt, const LatentSequence& eps_hat,
                         const FrameNoiseVector& from_levels, const FrameNoiseVector& to_levels,
                         const VarianceSchedule& vs, double eta, Rng* rng) {
    require_same_shape(xt, eps_hat, "ddim_step");
    require_levels_match(from_levels, xt, "ddim_step");
    require_levels_match(to_levels, xt, "ddim_step");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("ddim_step: eta must lie in [0, 1]");
    if (eta > 0.0 && rng == nullptr) throw std::invalid_argument("ddim_step: eta > 0 needs an rng");

    LatentSequence out(xt.frames, xt.dim);
    for (std::int64_t f = 0; f < xt.frames; ++f) {
        double t_from = from_levels.levels[f];
        double t_to = to_levels.levels[f];
        if (t_to > t_from)
            throw std::invalid_argument("ddim_step: frame " + std::to_string(f) +
                                        " target level above source level");
        auto xf = xt.frame(f);
        auto of = out.frame(f);
        if (t_to == t_from) {
            for (std::int64_t d = 0; d < xt.dim; ++d) of[d] = xf[d];
            continue;
        }

        double a_from = vs.alpha_bar(t_from);
        double a_to = vs.alpha_bar(t_to);
        double sigma = 0.0;
        if (eta > 0.0)
            sigma = eta * std::sqrt((1.0 - a_to) / (1.0 - a_from)) * std::sqrt(1.0 - a_from / a_to);

        double cs_from = std::sqrt(a_from), cn_from = std::sqrt(1.0 - a_from);
        double cs_to = std::sqrt(a_to);
        double dir = std::sqrt(std::max(0.0, 1.0 - a_to - sigma * sigma));

        auto ef = eps_hat.frame(f);
        for (std::int64_t d = 0; d < xt.dim; ++d) {
            double x0 = (xf[d] - cn_from * ef[d]) / cs_from;
            double v = cs_to * x0 + dir * ef[d];
            if (sigma > 0.0) v += sigma * rng->normal();
            of[d] = v;
        }
    }
    return out;
}

double mse_eps_loss(const LatentSequence& eps_hat, const LatentSequence& eps_true) {
    require_same_shape(eps_hat, eps_true, "mse_eps_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < eps_hat.data.size(); ++i) {
        double d = eps_hat.data[i] - eps_true.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps_hat.data.size());
}

}  // namespace pavd
