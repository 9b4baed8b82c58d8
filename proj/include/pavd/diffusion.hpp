#pragma once

#include "pavd/latent.hpp"
#include "pavd/schedule.hpp"

namespace pavd {

/// x^t_f = sqrt(alpha_bar(t_f)) x0_f + sqrt(1 - alpha_bar(t_f)) eps_f, per frame.
LatentSequence forward_diffuse(const LatentSequence& x0, const FrameNoiseVector& levels,
                               const NoiseTensor& noise, const VarianceSchedule& vs);

/// Algebraic inverse of the forward process given a noise estimate:
/// x0_f = (xt_f - sqrt(1 - a) eps_f) / sqrt(a). Guards against a ~ 0.
LatentSequence predict_x0(const LatentSequence& xt, const LatentSequence& eps_hat,
                          const FrameNoiseVector& levels, const VarianceSchedule& vs);

/// One reverse transition per frame from `from_levels` down to `to_levels`.
/// sigma follows the standard eta interpolation; frames whose two levels are
/// equal pass through untouched. Requires an rng when eta > 0.
LatentSequence ddim_step(const LatentSequence& xt, const LatentSequence& eps_hat,
                         const FrameNoiseVector& from_levels, const FrameNoiseVector& to_levels,
                         const VarianceSchedule& vs, double eta, Rng* rng = nullptr);

/// Mean over all F*D entries of the squared difference.
double mse_eps_loss(const LatentSequence& eps_hat, const LatentSequence& eps_true);

}  // namespace pavd
