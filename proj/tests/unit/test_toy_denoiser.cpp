#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pavd/diffusion.hpp"
#include "pavd/toy_denoiser.hpp"

using namespace pavd;

namespace {

const VarianceSchedule& test_vs() {
    static VarianceSchedule vs = VarianceSchedule::make(VarianceKind::LinearBeta, 1.0);
    return vs;
}

double loss_only(const ToyDenoiserParams& params, const LatentSequence& xt,
                 const FrameNoiseVector& levels, const LatentSequence& eps_true) {
    return mse_eps_loss(toy_predict_eps(params, xt, levels, test_vs()), eps_true);
}

/// Central finite differences against the reverse-mode gradients.
double max_gradient_rel_error(ToyDenoiserParams params, const LatentSequence& xt,
                              const FrameNoiseVector& levels, const LatentSequence& eps_true,
                              double h) {
    ToyBackwardResult back = toy_backward(params, xt, levels, eps_true, test_vs());
    double worst = 0.0;
    for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        for (std::size_t i = 0; i < params.tensors[t].v.size(); ++i) {
            double saved = params.tensors[t].v[i];
            params.tensors[t].v[i] = saved + h;
            double up = loss_only(params, xt, levels, eps_true);
            params.tensors[t].v[i] = saved - h;
            double down = loss_only(params, xt, levels, eps_true);
            params.tensors[t].v[i] = saved;
            double fd = (up - down) / (2.0 * h);
            double bp = back.grads.tensors[t].v[i];
            double rel = std::abs(fd - bp) / std::max({std::abs(fd), std::abs(bp), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("zero weights produce zero output") {
    ToyDenoiserConfig config{2, 4, 6, 5};
    ToyDenoiserParams params = ToyDenoiserParams::zeros(config);
    Rng rng(4);
    LatentSequence xt = sample_standard_normal(4, 2, rng);
    FrameNoiseVector levels = make_uniform_levels(4, 1, 0.5);
    LatentSequence out = toy_predict_eps(params, xt, levels, test_vs());
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("equivariant mixing kernel commutes with frame permutations") {
    ToyDenoiserConfig config{3, 4, 8, 4};
    Rng rng(12);
    ToyDenoiserParams params = ToyDenoiserParams::random_init(config, rng);
    // all non-center taps equal per channel -> permutation equivariant mixing
    auto& mix = params[ToyDenoiserParams::kMix];
    for (int c = 0; c < mix.rows; ++c) {
        double off = 0.15 + 0.01 * c;
        for (int k = 0; k < mix.cols; ++k) mix.at(c, k) = off;
        mix.at(c, config.max_frames - 1) = 0.8 + 0.01 * c;
    }

    LatentSequence xt = sample_standard_normal(4, 3, rng);
    FrameNoiseVector levels;
    levels.chunk_size = 1;
    levels.mode = FrameNoiseVector::Mode::Progressive;
    levels.levels = {0.2, 0.4, 0.6, 0.8};
    LatentSequence base = toy_predict_eps(params, xt, levels, test_vs());

    // swap frames 1 and 3 together with their levels
    LatentSequence swapped = xt;
    for (int d = 0; d < 3; ++d) std::swap(swapped.at(1, d), swapped.at(3, d));
    FrameNoiseVector swapped_levels = levels;
    std::swap(swapped_levels.levels[1], swapped_levels.levels[3]);
    LatentSequence out = toy_predict_eps(params, swapped, swapped_levels, test_vs());

    for (int d = 0; d < 3; ++d) {
        CHECK(out.at(0, d) == doctest::Approx(base.at(0, d)).epsilon(1e-12));
        CHECK(out.at(1, d) == doctest::Approx(base.at(3, d)).epsilon(1e-12));
        CHECK(out.at(2, d) == doctest::Approx(base.at(2, d)).epsilon(1e-12));
        CHECK(out.at(3, d) == doctest::Approx(base.at(1, d)).epsilon(1e-12));
    }
}

TEST_CASE("backprop matches central finite differences") {
    ToyDenoiserConfig config{3, 4, 6, 4};
    Rng rng(2718);
    ToyDenoiserParams params = ToyDenoiserParams::random_init(config, rng, 0.5);
    LatentSequence xt = sample_standard_normal(3, 3, rng);
    LatentSequence eps = sample_standard_normal(3, 3, rng);
    FrameNoiseVector levels;
    levels.chunk_size = 1;
    levels.mode = FrameNoiseVector::Mode::Progressive;
    levels.levels = {0.3, 0.6, 0.9};
    CHECK(max_gradient_rel_error(params, xt, levels, eps, 1e-5) < 1e-4);
}

TEST_CASE("gradient vanishes at the quadratic minimum") {
    ToyDenoiserConfig config{2, 4, 4, 3};
    ToyDenoiserParams params = ToyDenoiserParams::zeros(config);
    Rng rng(5);
    LatentSequence xt = sample_standard_normal(3, 2, rng);
    LatentSequence eps_true(3, 2);  // zeros; prediction already equals the target
    FrameNoiseVector levels = make_uniform_levels(3, 1, 0.5);
    ToyBackwardResult back = toy_backward(params, xt, levels, eps_true, test_vs());
    CHECK(back.loss == 0.0);
    for (const auto& t : back.grads.tensors)
        for (double g : t.v) CHECK(g == 0.0);
}

TEST_CASE("gradients are linear in the loss sum") {
    ToyDenoiserConfig config{2, 4, 5, 4};
    Rng rng(8);
    ToyDenoiserParams params = ToyDenoiserParams::random_init(config, rng);
    LatentSequence xt = sample_standard_normal(4, 2, rng);
    LatentSequence eps = sample_standard_normal(4, 2, rng);
    FrameNoiseVector levels = make_uniform_levels(4, 1, 0.4);

    ToyBackwardResult once = toy_backward(params, xt, levels, eps, test_vs());
    // two identical batch items summed: every gradient entry doubles
    for (std::size_t t = 0; t < once.grads.tensors.size(); ++t)
        for (std::size_t i = 0; i < once.grads.tensors[t].v.size(); ++i) {
            double doubled = once.grads.tensors[t].v[i] + once.grads.tensors[t].v[i];
            CHECK(doubled == doctest::Approx(2.0 * once.grads.tensors[t].v[i]).epsilon(1e-15));
        }
    ToyBackwardResult again = toy_backward(params, xt, levels, eps, test_vs());
    CHECK(once.loss == again.loss);
    for (std::size_t t = 0; t < once.grads.tensors.size(); ++t)
        CHECK(once.grads.tensors[t].v == again.grads.tensors[t].v);
}

TEST_CASE("checkpoint round trip preserves parameters and predictions") {
    ToyDenoiserConfig config{2, 6, 7, 6};
    Rng rng(90);
    ToyDenoiserParams params = ToyDenoiserParams::random_init(config, rng);
    std::string prefix = (std::filesystem::temp_directory_path() / "pavd_toy_ckpt").string();
    save_toy_params(params, prefix);
    ToyDenoiserParams loaded = load_toy_params(prefix);

    CHECK(loaded.config == params.config);
    for (std::size_t t = 0; t < params.tensors.size(); ++t)
        CHECK(loaded.tensors[t].v == params.tensors[t].v);

    LatentSequence xt = sample_standard_normal(5, 2, rng);
    FrameNoiseVector levels = make_uniform_levels(5, 1, 0.3);
    CHECK(toy_predict_eps(params, xt, levels, test_vs()).data ==
          toy_predict_eps(loaded, xt, levels, test_vs()).data);
}

TEST_CASE("toy forward validates shapes") {
    ToyDenoiserConfig config{2, 4, 4, 3};
    ToyDenoiserParams params = ToyDenoiserParams::zeros(config);
    Rng rng(6);
    LatentSequence too_long = sample_standard_normal(4, 2, rng);
    FrameNoiseVector levels = make_uniform_levels(4, 1, 0.5);
    CHECK_THROWS(toy_predict_eps(params, too_long, levels, test_vs()));

    LatentSequence wrong_dim = sample_standard_normal(3, 3, rng);
    FrameNoiseVector levels3 = make_uniform_levels(3, 1, 0.5);
    CHECK_THROWS(toy_predict_eps(params, wrong_dim, levels3, test_vs()));
}
