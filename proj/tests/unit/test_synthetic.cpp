#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pavd/denoiser.hpp"
#include "pavd/eval.hpp"
#include "pavd/synthetic.hpp"

using namespace pavd;

TEST_CASE("ar1 generator matches its nominal moments") {
    SequenceSpec spec;
    spec.generator = Generator::Ar1Gaussian;
    spec.rho = 0.8;
    spec.sigma = 1.5;
    spec.dim = 1;
    spec.length = 100000;
    Rng rng(404);
    LatentSequence seq = sample_ar1_sequence(spec, rng);

    double mean = 0.0;
    for (double v : seq.data) mean += v;
    mean /= seq.data.size();
    double var = 0.0, lag = 0.0;
    for (std::size_t i = 0; i < seq.data.size(); ++i) {
        var += (seq.data[i] - mean) * (seq.data[i] - mean);
        if (i + 1 < seq.data.size()) lag += (seq.data[i] - mean) * (seq.data[i + 1] - mean);
    }
    lag /= var;
    var /= seq.data.size();
    CHECK(lag == doctest::Approx(0.8).epsilon(0.0125));  // +-0.01 absolute
    CHECK(var == doctest::Approx(1.5 * 1.5).epsilon(0.03));
}

TEST_CASE("ar1 with rho zero is iid") {
    SequenceSpec spec;
    spec.rho = 0.0;
    spec.sigma = 1.0;
    spec.length = 50000;
    Rng rng(7);
    LatentSequence seq = sample_ar1_sequence(spec, rng);
    ClipStats stats = range_stats(seq, 0, seq.frames);
    CHECK(std::abs(stats.autocorr1) < 0.02);
    CHECK(stats.variance == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("ar1 marginal variance is stationary across frame indices") {
    SequenceSpec spec;
    spec.rho = 0.9;
    spec.sigma = 1.0;
    spec.length = 8;
    Rng rng(2026);
    const int n = 10000;
    std::vector<double> acc2(spec.length, 0.0);
    for (int i = 0; i < n; ++i) {
        LatentSequence seq = sample_ar1_sequence(spec, rng);
        for (std::int64_t f = 0; f < spec.length; ++f) acc2[f] += seq.at(f, 0) * seq.at(f, 0);
    }
    for (std::int64_t f = 0; f < spec.length; ++f)
        CHECK(acc2[f] / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ar1 empirical covariance converges to the toeplitz prior") {
    SequenceSpec spec;
    spec.rho = 0.85;
    spec.sigma = 1.0;
    spec.length = 12;
    Rng rng(11);
    const int n = 10000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(12, 12);
    for (int i = 0; i < n; ++i) {
        LatentSequence seq = sample_ar1_sequence(spec, rng);
        Eigen::Map<Eigen::VectorXd> x(seq.data.data(), 12);
        acc += x * x.transpose();
    }
    acc /= n;
    Eigen::MatrixXd want = build_ar1_prior(0.85, 1.0, 12, 1).covariance;
    double rel = (acc - want).norm() / want.norm();
    CHECK(rel < 0.05);
}

TEST_CASE("moving bump basics") {
    SequenceSpec spec;
    spec.generator = Generator::MovingBump;
    spec.dim = 32;
    spec.length = 100;
    spec.bump_width = 2.0;
    spec.bump_velocity = 0.0;
    spec.bump_noise = 0.0;
    Rng rng(3);
    BumpSequence still = sample_moving_bump(spec, rng);
    for (std::int64_t f = 1; f < still.frames.frames; ++f)
        for (int d = 0; d < 32; ++d) CHECK(still.frames.at(f, d) == still.frames.at(0, d));

    // energy constant across frames at zero noise
    spec.bump_velocity = 0.37;
    Rng rng2(4);
    BumpSequence moving = sample_moving_bump(spec, rng2);
    double e0 = 0.0;
    for (int d = 0; d < 32; ++d) e0 += moving.frames.at(0, d);
    for (std::int64_t f = 1; f < moving.frames.frames; ++f) {
        double e = 0.0;
        for (int d = 0; d < 32; ++d) e += moving.frames.at(f, d);
        CHECK(e == doctest::Approx(e0).epsilon(1e-6));
    }
}

TEST_CASE("bump centroid and velocity recover the ground truth") {
    SequenceSpec spec;
    spec.generator = Generator::MovingBump;
    spec.dim = 64;
    spec.length = 100;
    spec.bump_width = 2.5;
    spec.bump_velocity = 0.8;
    spec.bump_noise = 0.0;
    Rng rng(5);
    BumpSequence bump = sample_moving_bump(spec, rng);

    VelocityEstimate est = estimate_velocity(bump.frames, spec.bump_velocity);
    CHECK(est.mae < 0.01 * spec.bump_velocity);
    CHECK(est.mean_velocity == doctest::Approx(0.8).epsilon(0.01));

    // centroid matches the recorded track modulo the grid
    for (std::int64_t f = 0; f < 10; ++f) {
        double wrapped_truth = std::fmod(bump.centers[f], 64.0);
        if (wrapped_truth < 0) wrapped_truth += 64.0;
        double wrapped_est = std::fmod(est.centers[f], 64.0);
        if (wrapped_est < 0) wrapped_est += 64.0;
        double diff = std::abs(wrapped_truth - wrapped_est);
        diff = std::min(diff, 64.0 - diff);
        CHECK(diff < 0.1);
    }
}

TEST_CASE("dataset round trip is bit exact") {
    SequenceSpec spec;
    spec.generator = Generator::MovingBump;
    spec.dim = 16;
    spec.length = 20;
    spec.seed = 9;
    spec.bump_noise = 0.05;
    Dataset dataset = generate_dataset(spec, 5);

    std::string path = (std::filesystem::temp_directory_path() / "pavd_ds_test.pavd").string();
    write_dataset(dataset, path);
    Dataset back = read_dataset(path);

    CHECK(back.spec.generator == spec.generator);
    CHECK(back.sequences.size() == 5);
    CHECK(back.tracks.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(back.sequences[i].data == dataset.sequences[i].data);
        CHECK(back.tracks[i] == dataset.tracks[i]);
    }
}

TEST_CASE("dataset rejects wrong magic and counts correctly") {
    std::string path = (std::filesystem::temp_directory_path() / "pavd_ds_magic.pavd").string();
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << "NOPE" << '\x01' << "garbage";
    }
    CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("magic"), std::runtime_error);

    SequenceSpec spec;
    spec.length = 4;
    spec.dim = 2;
    Dataset big = generate_dataset(spec, 1000);
    std::string big_path = (std::filesystem::temp_directory_path() / "pavd_ds_big.pavd").string();
    write_dataset(big, big_path);
    CHECK(read_dataset(big_path).sequences.size() == 1000);
}

TEST_CASE("bump window covariance matches monte carlo moments") {
    SequenceSpec spec;
    spec.generator = Generator::MovingBump;
    spec.dim = 12;
    spec.length = 2;
    spec.bump_width = 1.8;
    spec.bump_velocity = 0.6;
    spec.bump_noise = 0.0;

    Eigen::MatrixXd cov = bump_window_covariance(spec, 2);
    GaussianProcessPrior as_prior{2, 12, cov};
    CHECK_NOTHROW(as_prior.validate());

    const int n = 200000;
    Rng rng(123);
    const double mean = bump_mean_level(spec);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(24, 24);
    Eigen::VectorXd x(24);
    for (int i = 0; i < n; ++i) {
        BumpSequence b = sample_moving_bump(spec, rng);
        for (int j = 0; j < 24; ++j) x[j] = b.frames.data[j] - mean;
        acc += x * x.transpose();
    }
    acc /= n;
    acc.diagonal().array() += 1e-6;  // ridge matches the builder
    double worst = (acc - cov).cwiseAbs().maxCoeff();
    CHECK(worst < 5e-3);
}

TEST_CASE("sequence spec validation") {
    SequenceSpec bad;
    bad.rho = 1.2;
    CHECK_THROWS(bad.validate());
    SequenceSpec tiny;
    tiny.generator = Generator::MovingBump;
    tiny.dim = 4;
    CHECK_THROWS(tiny.validate());
    SequenceSpec neg;
    neg.sigma = -1.0;
    CHECK_THROWS(neg.validate());
}
