#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pavd/latent.hpp"
#include "pavd/rng.hpp"

namespace pavd {

enum class Generator { Ar1Gaussian, MovingBump };

std::string to_string(Generator g);
Generator generator_from_string(const std::string& s);

struct SequenceSpec {
    Generator generator = Generator::Ar1Gaussian;
    std::int64_t length = 64;
    int dim = 1;  // latent dim for ar1; grid size for moving-bump (>= 8)
    std::uint64_t seed = 0;

    // ar1-gaussian
    double rho = 0.9;
    double sigma = 1.0;

    // moving-bump
    double bump_width = 2.0;
    double bump_velocity = 0.5;
    double bump_amplitude = 1.0;
    double bump_noise = 0.0;
    bool wrap = true;

    void validate() const;
};

/// Exactly stationary AR(1) per dimension: x_{f+1} = rho x_f + sqrt(1-rho^2) sigma z.
LatentSequence sample_ar1_sequence(const SequenceSpec& spec, Rng& rng);

struct BumpSequence {
    LatentSequence frames;
    std::vector<double> centers;  // ground-truth track
};

/// Gaussian bump of width w travelling at velocity v on a periodic (or
/// clamped) grid of dim cells, plus i.i.d. observation noise.
BumpSequence sample_moving_bump(const SequenceSpec& spec, Rng& rng);

struct Dataset {
    SequenceSpec spec;
    std::vector<LatentSequence> sequences;
    std::vector<std::vector<double>> tracks;  // empty unless moving-bump
};

/// File format: magic "PAVD", version byte, u32 JSON spec block, then the raw
/// little-endian float64 payload (and tracks, when present).
void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

Dataset generate_dataset(const SequenceSpec& spec, int sequence_count);

/// Closed-form window moments of the moving-bump process with the phase
/// marginalized uniformly over the circle: mean field (constant per cell) and
/// the (F*dim)^2 covariance for a window of F frames. Used to build the GP
/// denoiser for moving-pattern runs.
double bump_mean_level(const SequenceSpec& spec);
Eigen::MatrixXd bump_window_covariance(const SequenceSpec& spec, int window_len);

}  // namespace pavd
