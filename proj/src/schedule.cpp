#include "pavd/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pavd {

std::string to_string(VarianceKind kind) {
    switch (kind) {
        case VarianceKind::LinearBeta: return "linear-beta";
        case VarianceKind::Cosine: return "cosine";
    }
    throw std::invalid_argument("unknown VarianceKind");
}

VarianceKind variance_kind_from_string(const std::string& s) {
    if (s == "linear-beta") return VarianceKind::LinearBeta;
    if (s == "cosine") return VarianceKind::Cosine;
    throw std::invalid_argument("unknown variance schedule kind '" + s +
                                "' (expected 'linear-beta' or 'cosine')");
}

VarianceSchedule VarianceSchedule::make(VarianceKind kind, double max_level, VarianceParams params) {
    if (!(max_level > 0.0)) throw std::invalid_argument("VarianceSchedule: max level T must be > 0");

    VarianceSchedule vs;
    vs.kind_ = kind;
    vs.max_level_ = max_level;
    vs.params_ = params;

    if (kind == VarianceKind::LinearBeta) {
        if (params.virtual_steps < 1)
            throw std::invalid_argument("VarianceSchedule: virtual_steps must be >= 1");
        if (!(params.beta_start > 0.0) || !(params.beta_end < 1.0) || params.beta_end < params.beta_start)
            throw std::invalid_argument(
                "VarianceSchedule: betas must satisfy 0 < beta_start <= beta_end < 1; "
                "anything else makes alpha_bar non-monotone");
        const int n = params.virtual_steps;
        vs.log_alpha_grid_.resize(n + 1);
        vs.log_alpha_grid_[0] = 0.0;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double beta = n == 1 ? params.beta_start
                                 : params.beta_start + (params.beta_end - params.beta_start) * i / (n - 1);
            acc += std::log1p(-beta);
            vs.log_alpha_grid_[i + 1] = acc;
        }
    } else {
        if (!(params.cosine_s > 0.0) || !(params.cosine_cutoff > 0.0) || !(params.cosine_cutoff < 1.0))
            throw std::invalid_argument("VarianceSchedule: cosine needs s > 0 and cutoff in (0,1)");
    }

    double terminal = vs.alpha_bar(max_level);
    if (!(terminal <= 0.01))
        throw std::invalid_argument("VarianceSchedule: alpha_bar(T) = " + std::to_string(terminal) +
                                    " exceeds the 0.01 near-pure-noise bound; widen the beta range");
    return vs;
}

double VarianceSchedule::alpha_bar(double t) const {
    if (t < 0.0 || t > max_level_)
        throw std::invalid_argument("alpha_bar: level " + std::to_string(t) + " outside [0, T]");
    if (t == 0.0) return 1.0;

    if (kind_ == VarianceKind::LinearBeta) {
        // Piecewise-linear in log alpha_bar over the virtual ladder.
        const int n = params_.virtual_steps;
        double u = t / max_level_ * n;
        int k = std::min(static_cast<int>(u), n - 1);
        double frac = u - k;
        return std::exp(log_alpha_grid_[k] + frac * (log_alpha_grid_[k + 1] - log_alpha_grid_[k]));
    }

    double s = params_.cosine_s;
    double x = (t / max_level_ * params_.cosine_cutoff + s) / (1.0 + s) * 1.5707963267948966;
    double x0 = s / (1.0 + s) * 1.5707963267948966;
    double c = std::cos(x) / std::cos(x0);
    return c * c;
}

double invert_alpha_bar(const VarianceSchedule& vs, double target) {
    if (target >= 1.0) return 0.0;
    if (target <= vs.alpha_bar(vs.max_level())) return vs.max_level();
    double lo = 0.0, hi = vs.max_level();
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (vs.alpha_bar(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SamplingSchedule SamplingSchedule::make_linear(double max_level, int steps) {
    if (steps < 1) throw std::invalid_argument("SamplingSchedule: steps S must be >= 1");
    if (!(max_level > 0.0)) throw std::invalid_argument("SamplingSchedule: max level T must be > 0");
    SamplingSchedule s;
    s.max_level = max_level;
    s.steps = steps;
    s.grid.resize(steps + 1);
    for (int i = 0; i < steps; ++i) s.grid[i] = i * max_level / steps;
    s.grid[steps] = max_level;  // exact endpoint
    return s;
}

double SamplingSchedule::level(int index) const {
    if (index < 0 || index > steps) throw std::out_of_range("SamplingSchedule::level: bad index");
    return grid[index];
}

int SamplingSchedule::index_of(double level, double tol) const {
    for (int i = 0; i <= steps; ++i)
        if (std::abs(grid[i] - level) <= tol) return i;
    return -1;
}

void FrameNoiseVector::validate(double max_level) const {
    if (chunk_size < 1) throw std::invalid_argument("FrameNoiseVector: chunk size must be >= 1");
    if (levels.empty() || frame_count() % chunk_size != 0)
        throw std::invalid_argument("FrameNoiseVector: frame count must be a positive multiple of chunk size");
    for (double t : levels)
        if (!(t >= 0.0) || !(t <= max_level))
            throw std::invalid_argument("FrameNoiseVector: level " + std::to_string(t) + " outside [0, T]");

    for (int c = 0; c < chunk_count(); ++c) {
        double v = chunk_level(c);
        for (int f = 0; f < chunk_size; ++f)
            if (levels[static_cast<std::size_t>(c) * chunk_size + f] != v)
                throw std::invalid_argument("FrameNoiseVector: levels differ within chunk " + std::to_string(c));
    }

    if (mode == Mode::Uniform) {
        for (double t : levels)
            if (t != levels[0]) throw std::invalid_argument("FrameNoiseVector: uniform mode with unequal levels");
        return;
    }

    for (int c = 0; c + 1 < chunk_count(); ++c) {
        double a = chunk_level(c), b = chunk_level(c + 1);
        if (b < a) throw std::invalid_argument("FrameNoiseVector: progressive levels must not decrease");
        if (a == b && a != 0.0 && a != max_level)
            throw std::invalid_argument("FrameNoiseVector: progressive chunks tied away from the boundaries");
    }
}

FrameNoiseVector make_uniform_levels(int frame_count, int chunk_size, double level) {
    FrameNoiseVector v;
    v.levels.assign(frame_count, level);
    v.chunk_size = chunk_size;
    v.mode = FrameNoiseVector::Mode::Uniform;
    return v;
}

FrameNoiseVector progressive_input_levels(const SamplingSchedule& schedule, int chunk_count,
                                          int chunk_size, int intra_offset) {
    if (chunk_count < 1 || chunk_size < 1)
        throw std::invalid_argument("progressive_input_levels: chunk count and size must be >= 1");
    if (schedule.steps != chunk_count * chunk_size)
        throw std::invalid_argument("progressive_input_levels: S must equal chunk_count * chunk_size (F = S); got S=" +
                                    std::to_string(schedule.steps) + ", K*C=" +
                                    std::to_string(chunk_count * chunk_size));
    if (intra_offset < 0 || intra_offset >= chunk_size)
        throw std::invalid_argument("progressive_input_levels: intra offset must lie in [0, C)");

    FrameNoiseVector v;
    v.chunk_size = chunk_size;
    v.mode = FrameNoiseVector::Mode::Progressive;
    v.levels.reserve(static_cast<std::size_t>(chunk_count) * chunk_size);
    for (int j = 0; j < chunk_count; ++j) {
        double level = schedule.level((j + 1) * chunk_size - intra_offset);
        for (int f = 0; f < chunk_size; ++f) v.levels.push_back(level);
    }
    return v;
}

FrameNoiseVector output_levels(const FrameNoiseVector& input, const SamplingSchedule& schedule) {
    FrameNoiseVector out = input;
    for (std::size_t i = 0; i < input.levels.size(); ++i) {
        int idx = schedule.index_of(input.levels[i]);
        if (idx < 0)
            throw std::invalid_argument("output_levels: level " + std::to_string(input.levels[i]) +
                                        " is not on the sampling grid");
        if (idx == 0)
            throw std::invalid_argument("output_levels: frame " + std::to_string(i) +
                                        " is already fully denoised (level 0)");
        out.levels[i] = schedule.level(idx - 1);
    }
    return out;
}

double inter_chunk_gap(const FrameNoiseVector& levels) {
    for (int c = 0; c + 1 < levels.chunk_count(); ++c) {
        double gap = levels.chunk_level(c + 1) - levels.chunk_level(c);
        if (gap > 0.0) return gap;
    }
    return 0.0;
}

FrameNoiseVector shift_training_levels(const FrameNoiseVector& levels, double max_level, double delta) {
    FrameNoiseVector out = levels;
    for (double& t : out.levels) t = std::clamp(t + delta, 0.0, max_level);
    return out;
}

FrameNoiseVector perturb_training_levels(const FrameNoiseVector& levels, double max_level, Rng& rng) {
    if (levels.mode != FrameNoiseVector::Mode::Progressive)
        throw std::invalid_argument("perturb_training_levels: progressive levels required");
    double gap = inter_chunk_gap(levels);
    if (!(gap > 0.0))
        throw std::invalid_argument("perturb_training_levels: need at least two distinct chunk levels");
    return shift_training_levels(levels, max_level, 0.4 * rng.normal() * gap);
}

std::string ScheduleSpec::to_json_string() const {
    nlohmann::json j;
    j["kind"] = pavd::to_string(kind);
    j["T"] = max_level;
    j["S"] = steps;
    if (kind == VarianceKind::LinearBeta) {
        j["params"] = {{"beta_start", params.beta_start},
                       {"beta_end", params.beta_end},
                       {"virtual_steps", params.virtual_steps}};
    } else {
        j["params"] = {{"s", params.cosine_s}, {"cutoff", params.cosine_cutoff}};
    }
    return j.dump(2);
}

ScheduleSpec ScheduleSpec::from_json_string(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ScheduleSpec spec;
    spec.kind = variance_kind_from_string(j.at("kind").get<std::string>());
    spec.max_level = j.at("T").get<double>();
    spec.steps = j.at("S").get<int>();
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (spec.kind == VarianceKind::LinearBeta) {
            spec.params.beta_start = p.value("beta_start", spec.params.beta_start);
            spec.params.beta_end = p.value("beta_end", spec.params.beta_end);
            spec.params.virtual_steps = p.value("virtual_steps", spec.params.virtual_steps);
        } else {
            spec.params.cosine_s = p.value("s", spec.params.cosine_s);
            spec.params.cosine_cutoff = p.value("cutoff", spec.params.cosine_cutoff);
        }
    }
    return spec;
}

}  // namespace pavd
