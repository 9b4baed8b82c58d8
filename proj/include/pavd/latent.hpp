#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pavd/rng.hpp"

namespace pavd {

/// A window or emitted run of latent frames: F frames of D values each,
/// stored row-major (frame-major).
struct LatentSequence {
    std::int64_t frames = 0;
    std::int64_t dim = 0;
    std::vector<double> data;

    LatentSequence() = default;
    LatentSequence(std::int64_t f, std::int64_t d)
        : frames(f), dim(d), data(static_cast<std::size_t>(f * d), 0.0) {
        if (f < 1 || d < 1) throw std::invalid_argument("LatentSequence: frames and dim must be >= 1");
    }

    std::span<double> frame(std::int64_t f) {
        return {data.data() + f * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> frame(std::int64_t f) const {
        return {data.data() + f * dim, static_cast<std::size_t>(dim)};
    }

    double& at(std::int64_t f, std::int64_t d) { return data[f * dim + d]; }
    double at(std::int64_t f, std::int64_t d) const { return data[f * dim + d]; }

    std::int64_t size() const { return frames * dim; }

    bool same_shape(const LatentSequence& other) const {
        return frames == other.frames && dim == other.dim;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    /// Frames [first, first+count) as a copy.
    LatentSequence slice(std::int64_t first, std::int64_t count) const {
        if (first < 0 || count < 1 || first + count > frames)
            throw std::invalid_argument("LatentSequence::slice: range out of bounds");
        LatentSequence out(count, dim);
        std::copy(data.begin() + first * dim, data.begin() + (first + count) * dim, out.data.begin());
        return out;
    }

    void append_frames(const LatentSequence& other) {
        if (dim != 0 && other.dim != dim)
            throw std::invalid_argument("LatentSequence::append_frames: dim mismatch");
        if (dim == 0) dim = other.dim;
        data.insert(data.end(), other.data.begin(), other.data.end());
        frames += other.frames;
    }
};

/// ε ~ N(0, I) with the same shape as the sequence it corrupts.
using NoiseTensor = LatentSequence;

inline LatentSequence sample_standard_normal(std::int64_t frames, std::int64_t dim, Rng& rng) {
    LatentSequence out(frames, dim);
    rng.fill_normal(out.data);
    return out;
}

inline void require_same_shape(const LatentSequence& a, const LatentSequence& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch (" +
                                    std::to_string(a.frames) + "x" + std::to_string(a.dim) + " vs " +
                                    std::to_string(b.frames) + "x" + std::to_string(b.dim) + ")");
}

}  // namespace pavd
