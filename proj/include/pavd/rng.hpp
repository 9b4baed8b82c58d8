#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>

namespace pavd {

/// Seeded random stream. Normal variates use an explicit Box-Muller
/// transform (no cached spare), so the draw sequence is a pure function
/// of the engine state on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes exactly two engine draws.
    double normal() {
        // u1 in (0, 1] so the log is finite.
        double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
        double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    void fill_normal(std::span<double> out) {
        for (double& v : out) v = normal();
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is fine here; n is tiny relative to 2^64.
        return engine_() % n;
    }

    /// Derive an independent child stream. Deterministic in (seed, tag).
    static Rng child_of(std::uint64_t seed, std::uint64_t tag) {
        std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return Rng(x ^ (x >> 31));
    }

    std::string save_state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void restore_state(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pavd
