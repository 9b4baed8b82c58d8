#include "pavd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pavd {

namespace {

constexpr int kWrapCopies = 5;

double bump_value(double cell, double center, double width, double amplitude, double grid, bool wrap) {
    if (!wrap) {
        double z = (cell - center) / width;
        return amplitude * std::exp(-0.5 * z * z);
    }
    double acc = 0.0;
    for (int k = -kWrapCopies; k <= kWrapCopies; ++k) {
        double z = (cell - center + k * grid) / width;
        acc += std::exp(-0.5 * z * z);
    }
    return amplitude * acc;
}

void write_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::string to_string(Generator g) {
    switch (g) {
        case Generator::Ar1Gaussian: return "ar1-gaussian";
        case Generator::MovingBump: return "moving-bump";
    }
    throw std::invalid_argument("unknown Generator");
}

Generator generator_from_string(const std::string& s) {
    if (s == "ar1-gaussian") return Generator::Ar1Gaussian;
    if (s == "moving-bump") return Generator::MovingBump;
    throw std::invalid_argument("unknown generator '" + s + "' (expected 'ar1-gaussian' or 'moving-bump')");
}

void SequenceSpec::validate() const {
    if (length < 1) throw std::invalid_argument("SequenceSpec: length must be >= 1");
    if (generator == Generator::Ar1Gaussian) {
        if (dim < 1) throw std::invalid_argument("SequenceSpec: dim must be >= 1");
        if (std::abs(rho) >= 1.0) throw std::invalid_argument("SequenceSpec: |rho| must be < 1");
        if (!(sigma > 0.0)) throw std::invalid_argument("SequenceSpec: sigma must be > 0");
    } else {
        if (dim < 8) throw std::invalid_argument("SequenceSpec: moving-bump grid needs dim >= 8");
        if (!(bump_width > 0.0)) throw std::invalid_argument("SequenceSpec: bump width must be > 0");
        if (bump_noise < 0.0) throw std::invalid_argument("SequenceSpec: bump noise must be >= 0");
    }
}

LatentSequence sample_ar1_sequence(const SequenceSpec& spec, Rng& rng) {
    spec.validate();
    if (spec.generator != Generator::Ar1Gaussian)
        throw std::invalid_argument("sample_ar1_sequence: spec is not ar1-gaussian");

    LatentSequence seq(spec.length, spec.dim);
    const double innov = std::sqrt(1.0 - spec.rho * spec.rho) * spec.sigma;
    for (std::int64_t d = 0; d < spec.dim; ++d) seq.at(0, d) = spec.sigma * rng.normal();
    for (std::int64_t f = 1; f < spec.length; ++f)
        for (std::int64_t d = 0; d < spec.dim; ++d)
            seq.at(f, d) = spec.rho * seq.at(f - 1, d) + innov * rng.normal();
    return seq;
}

BumpSequence sample_moving_bump(const SequenceSpec& spec, Rng& rng) {
    spec.validate();
    if (spec.generator != Generator::MovingBump)
        throw std::invalid_argument("sample_moving_bump: spec is not moving-bump");

    const double grid = static_cast<double>(spec.dim);
    BumpSequence out;
    out.frames = LatentSequence(spec.length, spec.dim);
    out.centers.resize(spec.length);

    double c0 = rng.uniform01() * grid;
    for (std::int64_t f = 0; f < spec.length; ++f) {
        double center = c0 + spec.bump_velocity * static_cast<double>(f);
        out.centers[f] = center;  // unwrapped ground truth
        double folded = spec.wrap ? center - grid * std::floor(center / grid)
                                  : std::clamp(center, 0.0, grid - 1.0);
        auto frame = out.frames.frame(f);
        for (int d = 0; d < spec.dim; ++d) {
            frame[d] = bump_value(d, folded, spec.bump_width, spec.bump_amplitude, grid, spec.wrap);
            if (spec.bump_noise > 0.0) frame[d] += spec.bump_noise * rng.normal();
        }
    }
    return out;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
    dataset.spec.validate();
    const bool has_tracks = !dataset.tracks.empty();
    if (has_tracks && dataset.tracks.size() != dataset.sequences.size())
        throw std::invalid_argument("write_dataset: track count != sequence count");
    for (const auto& s : dataset.sequences)
        if (s.frames != dataset.spec.length || s.dim != dataset.spec.dim)
            throw std::invalid_argument("write_dataset: sequence shape differs from spec");

    nlohmann::json j;
    j["generator"] = to_string(dataset.spec.generator);
    j["length"] = dataset.spec.length;
    j["dim"] = dataset.spec.dim;
    j["seed"] = dataset.spec.seed;
    j["rho"] = dataset.spec.rho;
    j["sigma"] = dataset.spec.sigma;
    j["bump_width"] = dataset.spec.bump_width;
    j["bump_velocity"] = dataset.spec.bump_velocity;
    j["bump_amplitude"] = dataset.spec.bump_amplitude;
    j["bump_noise"] = dataset.spec.bump_noise;
    j["wrap"] = dataset.spec.wrap;
    j["sequences"] = dataset.sequences.size();
    j["has_tracks"] = has_tracks;
    std::string header = j.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_dataset: cannot open " + path);
    os.write("PAVD", 4);
    os.put(static_cast<char>(1));
    write_u32(os, static_cast<std::uint32_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& s : dataset.sequences)
        os.write(reinterpret_cast<const char*>(s.data.data()),
                 static_cast<std::streamsize>(s.data.size() * sizeof(double)));
    for (const auto& t : dataset.tracks)
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_dataset: cannot open " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "PAVD", 4) != 0)
        throw std::runtime_error("read_dataset: bad magic bytes in " + path);
    int version = is.get();
    if (version != 1)
        throw std::runtime_error("read_dataset: unsupported version " + std::to_string(version));

    std::uint32_t header_len = read_u32(is);
    std::string header(header_len, '\0');
    is.read(header.data(), header_len);
    if (!is) throw std::runtime_error("read_dataset: truncated header in " + path);
    nlohmann::json j = nlohmann::json::parse(header);

    Dataset dataset;
    dataset.spec.generator = generator_from_string(j.at("generator").get<std::string>());
    dataset.spec.length = j.at("length").get<std::int64_t>();
    dataset.spec.dim = j.at("dim").get<int>();
    dataset.spec.seed = j.at("seed").get<std::uint64_t>();
    dataset.spec.rho = j.at("rho").get<double>();
    dataset.spec.sigma = j.at("sigma").get<double>();
    dataset.spec.bump_width = j.at("bump_width").get<double>();
    dataset.spec.bump_velocity = j.at("bump_velocity").get<double>();
    dataset.spec.bump_amplitude = j.at("bump_amplitude").get<double>();
    dataset.spec.bump_noise = j.at("bump_noise").get<double>();
    dataset.spec.wrap = j.at("wrap").get<bool>();
    const std::size_t count = j.at("sequences").get<std::size_t>();
    const bool has_tracks = j.at("has_tracks").get<bool>();

    dataset.sequences.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        LatentSequence s(dataset.spec.length, dataset.spec.dim);
        is.read(reinterpret_cast<char*>(s.data.data()),
                static_cast<std::streamsize>(s.data.size() * sizeof(double)));
        if (!is) throw std::runtime_error("read_dataset: truncated payload in " + path);
        dataset.sequences.push_back(std::move(s));
    }
    if (has_tracks) {
        dataset.tracks.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<double> t(dataset.spec.length);
            is.read(reinterpret_cast<char*>(t.data()),
                    static_cast<std::streamsize>(t.size() * sizeof(double)));
            if (!is) throw std::runtime_error("read_dataset: truncated tracks in " + path);
            dataset.tracks.push_back(std::move(t));
        }
    }
    return dataset;
}

Dataset generate_dataset(const SequenceSpec& spec, int sequence_count) {
    spec.validate();
    if (sequence_count < 1) throw std::invalid_argument("generate_dataset: sequence count must be >= 1");
    Dataset dataset;
    dataset.spec = spec;
    Rng rng(spec.seed);
    for (int i = 0; i < sequence_count; ++i) {
        if (spec.generator == Generator::Ar1Gaussian) {
            dataset.sequences.push_back(sample_ar1_sequence(spec, rng));
        } else {
            BumpSequence b = sample_moving_bump(spec, rng);
            dataset.sequences.push_back(std::move(b.frames));
            dataset.tracks.push_back(std::move(b.centers));
        }
    }
    return dataset;
}

double bump_mean_level(const SequenceSpec& spec) {
    // Phase marginalized over the circle: mean is cell-independent, equal to
    // the bump mass divided by the grid length.
    return spec.bump_amplitude * spec.bump_width * std::sqrt(2.0 * 3.14159265358979323846) /
           static_cast<double>(spec.dim);
}

Eigen::MatrixXd bump_window_covariance(const SequenceSpec& spec, int window_len) {
    spec.validate();
    if (spec.generator != Generator::MovingBump || !spec.wrap)
        throw std::invalid_argument("bump_window_covariance: needs a wrapping moving-bump spec");

    const int dim = spec.dim;
    const double grid = static_cast<double>(dim);
    const double w = spec.bump_width;
    const double a = spec.bump_amplitude;
    const double mean = bump_mean_level(spec);

    // Circular autocorrelation of the wrapped bump:
    // R(delta) = (a^2 w sqrt(pi) / grid) * sum_k exp(-(delta + k grid)^2 / (4 w^2)).
    auto autocorr = [&](double delta) {
        double acc = 0.0;
        for (int k = -kWrapCopies; k <= kWrapCopies; ++k) {
            double z = (delta + k * grid) / (2.0 * w);
            acc += std::exp(-z * z);
        }
        return a * a * w * std::sqrt(3.14159265358979323846) / grid * acc;
    };

    const int n = window_len * dim;
    Eigen::MatrixXd cov(n, n);
    for (int f = 0; f < window_len; ++f)
        for (int g = 0; g < window_len; ++g)
            for (int d = 0; d < dim; ++d)
                for (int e = 0; e < dim; ++e) {
                    double delta = (e - d) - spec.bump_velocity * (g - f);
                    cov(f * dim + d, g * dim + e) = autocorr(delta) - mean * mean;
                }
    // Observation noise plus a small ridge; the phase-process covariance by
    // itself is numerically rank-deficient.
    cov.diagonal().array() += spec.bump_noise * spec.bump_noise + 1e-6;
    return cov;
}

}  // namespace pavd
