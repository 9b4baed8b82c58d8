#pragma once

#include <string>
#include <vector>

#include "pavd/rng.hpp"

namespace pavd {

enum class VarianceKind { LinearBeta, Cosine };

std::string to_string(VarianceKind kind);
VarianceKind variance_kind_from_string(const std::string& s);

struct VarianceParams {
    // linear-beta: cumulative product over a ladder of virtual_steps betas.
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int virtual_steps = 1000;
    // cosine: squared-cosine signal curve; the argument is capped below 1
    // so the terminal signal level stays positive.
    double cosine_s = 0.008;
    double cosine_cutoff = 0.995;
};

/// The cumulative signal coefficient curve t -> alpha_bar(t) on [0, T].
/// alpha_bar(0) = 1 exactly, strictly decreasing, alpha_bar(T) <= 0.01.
class VarianceSchedule {
public:
    static VarianceSchedule make(VarianceKind kind, double max_level, VarianceParams params = {});

    double alpha_bar(double t) const;
    double max_level() const { return max_level_; }
    VarianceKind kind() const { return kind_; }
    const VarianceParams& params() const { return params_; }

private:
    VarianceSchedule() = default;
    VarianceKind kind_ = VarianceKind::LinearBeta;
    double max_level_ = 1.0;
    VarianceParams params_;
    std::vector<double> log_alpha_grid_;  // linear-beta only; log alpha_bar at ladder points
};

/// Smallest t with alpha_bar(t) <= target, by bisection.
double invert_alpha_bar(const VarianceSchedule& vs, double target);

/// The uniform sampling grid {0, T/S, 2T/S, ..., T}.
struct SamplingSchedule {
    double max_level = 1.0;
    int steps = 0;
    std::vector<double> grid;  // steps + 1 ascending values

    static SamplingSchedule make_linear(double max_level, int steps);

    double level(int index) const;
    /// Grid index whose level matches `level` within `tol`; -1 if none.
    int index_of(double level, double tol = 1e-9) const;
};

/// Per-frame noise levels, constant within chunks of `chunk_size` frames.
struct FrameNoiseVector {
    enum class Mode { Progressive, Uniform };

    std::vector<double> levels;
    int chunk_size = 1;
    Mode mode = Mode::Progressive;

    int frame_count() const { return static_cast<int>(levels.size()); }
    int chunk_count() const { return frame_count() / chunk_size; }
    double chunk_level(int chunk) const { return levels[static_cast<std::size_t>(chunk) * chunk_size]; }

    /// Enforces chunk constancy plus the mode's ordering rule. Progressive
    /// chunk levels must be non-decreasing; ties are permitted only where
    /// clamping pinned a run of chunks at exactly 0 or max_level.
    void validate(double max_level) const;
};

FrameNoiseVector make_uniform_levels(int frame_count, int chunk_size, double level);

/// Input-side progressive ladder: chunk j (oldest first) sits at grid index
/// (j+1)*chunk_size - intra_offset. At intra_offset 0 the newest chunk is at
/// the top of the grid.
FrameNoiseVector progressive_input_levels(const SamplingSchedule& schedule, int chunk_count,
                                          int chunk_size, int intra_offset);

/// Every level moved down exactly one grid index. Rejects inputs already at 0.
FrameNoiseVector output_levels(const FrameNoiseVector& input, const SamplingSchedule& schedule);

/// One shared shift delta = 0.4 * eps * gap (gap = inter-chunk level spacing,
/// eps standard normal) added to all levels, then clamped to [0, max_level].
FrameNoiseVector perturb_training_levels(const FrameNoiseVector& levels, double max_level, Rng& rng);

/// Deterministic core of the perturbation: a given shared shift, clamped.
FrameNoiseVector shift_training_levels(const FrameNoiseVector& levels, double max_level, double delta);

/// The first nonzero inter-chunk gap of a progressive ladder.
double inter_chunk_gap(const FrameNoiseVector& levels);

/// Reproducibility document {kind, T, S, params} covering the variance curve
/// and the sampling grid together.
struct ScheduleSpec {
    VarianceKind kind = VarianceKind::LinearBeta;
    double max_level = 1.0;
    int steps = 30;
    VarianceParams params;

    VarianceSchedule make_variance() const { return VarianceSchedule::make(kind, max_level, params); }
    SamplingSchedule make_sampling() const { return SamplingSchedule::make_linear(max_level, steps); }

    std::string to_json_string() const;
    static ScheduleSpec from_json_string(const std::string& text);
};

}  // namespace pavd
