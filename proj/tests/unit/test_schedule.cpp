#include <doctest.h>

#include <cmath>

#include "pavd/schedule.hpp"

using namespace pavd;

namespace {

// Independent oracle: the direct product over the 1000-step beta ladder.
double beta_ladder_product(double beta_start, double beta_end, int n) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
        double beta = beta_start + (beta_end - beta_start) * i / (n - 1);
        p *= 1.0 - beta;
    }
    return p;
}

}  // namespace

TEST_CASE("variance schedule boundary and monotonicity") {
    VarianceSchedule vs = VarianceSchedule::make(VarianceKind::LinearBeta, 1.0);
    CHECK(vs.alpha_bar(0.0) == 1.0);
    CHECK(vs.alpha_bar(1.0) < vs.alpha_bar(0.5));
    CHECK(vs.alpha_bar(0.5) < vs.alpha_bar(0.0));

    VarianceSchedule cos = VarianceSchedule::make(VarianceKind::Cosine, 1.0);
    CHECK(cos.alpha_bar(0.0) == 1.0);
    CHECK(cos.alpha_bar(1.0) <= 0.01);
    CHECK(cos.alpha_bar(1.0) > 0.0);
}

TEST_CASE("variance schedule terminal value matches the beta-ladder product") {
    const double oracle = beta_ladder_product(1e-4, 0.02, 1000);
    CHECK(oracle == doctest::Approx(4.0e-5).epsilon(0.01));  // the standard ladder lands at ~4.0e-5
    VarianceSchedule vs = VarianceSchedule::make(VarianceKind::LinearBeta, 1.0);
    CHECK(vs.alpha_bar(1.0) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("variance schedule monotone on a dense grid") {
    for (VarianceKind kind : {VarianceKind::LinearBeta, VarianceKind::Cosine}) {
        VarianceSchedule vs = VarianceSchedule::make(kind, 2.0);
        double prev = vs.alpha_bar(0.0);
        for (int i = 1; i <= 10000; ++i) {
            double cur = vs.alpha_bar(2.0 * i / 10000.0);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("variance schedule rejects bad parameters") {
    CHECK_THROWS(VarianceSchedule::make(VarianceKind::LinearBeta, 0.0));
    VarianceParams neg;
    neg.beta_start = -0.1;  // would make alpha_bar grow
    CHECK_THROWS(VarianceSchedule::make(VarianceKind::LinearBeta, 1.0, neg));
    VarianceParams big;
    big.beta_end = 1.5;
    CHECK_THROWS(VarianceSchedule::make(VarianceKind::LinearBeta, 1.0, big));
    VarianceParams tiny;
    tiny.beta_end = 1e-4;  // terminal alpha_bar ~ 0.9, not near-noise
    CHECK_THROWS(VarianceSchedule::make(VarianceKind::LinearBeta, 1.0, tiny));
    CHECK_THROWS(variance_kind_from_string("quadratic"));
}

TEST_CASE("invert_alpha_bar finds the requested level") {
    VarianceSchedule vs = VarianceSchedule::make(VarianceKind::LinearBeta, 1.0);
    double t = invert_alpha_bar(vs, 0.64);
    CHECK(vs.alpha_bar(t) == doctest::Approx(0.64).epsilon(1e-9));
}

TEST_CASE("linear sampling grid instantiations") {
    SamplingSchedule s4 = SamplingSchedule::make_linear(1.0, 4);
    REQUIRE(s4.grid.size() == 5);
    CHECK(s4.grid[0] == 0.0);
    CHECK(s4.grid[1] == 0.25);
    CHECK(s4.grid[2] == 0.5);
    CHECK(s4.grid[3] == 0.75);
    CHECK(s4.grid[4] == 1.0);

    SamplingSchedule s1 = SamplingSchedule::make_linear(1.0, 1);
    CHECK(s1.grid == std::vector<double>{0.0, 1.0});

    SamplingSchedule s30 = SamplingSchedule::make_linear(1.0, 30);
    for (int i = 0; i < 30; ++i)
        CHECK(std::abs(s30.grid[i + 1] - s30.grid[i] - 1.0 / 30.0) < 1e-15);

    CHECK_THROWS(SamplingSchedule::make_linear(1.0, 0));
}

TEST_CASE("linear sampling grid exact for every S up to 100") {
    for (int s = 1; s <= 100; ++s) {
        SamplingSchedule grid = SamplingSchedule::make_linear(1.0, s);
        CHECK(grid.grid.front() == 0.0);
        CHECK(grid.grid.back() == 1.0);
        double h = 1.0 / s;
        for (int i = 0; i < s; ++i) CHECK(std::abs(grid.grid[i + 1] - grid.grid[i] - h) <= 1e-12);
        for (int i = 1; i <= s; ++i) CHECK(grid.grid[i] > grid.grid[i - 1]);
    }
}

TEST_CASE("progressive input levels") {
    SamplingSchedule s = SamplingSchedule::make_linear(1.0, 4);

    FrameNoiseVector per_frame = progressive_input_levels(s, 4, 1, 0);
    CHECK(per_frame.levels == std::vector<double>{s.grid[1], s.grid[2], s.grid[3], s.grid[4]});
    per_frame.validate(1.0);

    FrameNoiseVector chunked = progressive_input_levels(s, 2, 2, 0);
    CHECK(chunked.levels == std::vector<double>{s.grid[2], s.grid[2], s.grid[4], s.grid[4]});

    // One simulated single-index decrement of every chunk from the r=0 state.
    FrameNoiseVector offset = progressive_input_levels(s, 2, 2, 1);
    FrameNoiseVector simulated = output_levels(chunked, s);
    CHECK(offset.levels == simulated.levels);

    CHECK_THROWS(progressive_input_levels(s, 3, 2, 0));  // S != K*C
    CHECK_THROWS(progressive_input_levels(s, 2, 2, 2));  // r out of range
}

TEST_CASE("output levels move one grid index down") {
    SamplingSchedule s = SamplingSchedule::make_linear(1.0, 4);

    FrameNoiseVector in = progressive_input_levels(s, 4, 1, 0);
    FrameNoiseVector out = output_levels(in, s);
    CHECK(out.levels == std::vector<double>{s.grid[0], s.grid[1], s.grid[2], s.grid[3]});

    FrameNoiseVector chunked = progressive_input_levels(s, 2, 2, 0);
    CHECK(output_levels(chunked, s).levels ==
          std::vector<double>{s.grid[1], s.grid[1], s.grid[3], s.grid[3]});

    CHECK_THROWS(output_levels(out, s));  // contains level 0

    // telescoping: S steps from the top uniform vector reach all-zero
    FrameNoiseVector uniform = make_uniform_levels(3, 1, s.grid[4]);
    for (int i = 0; i < 4; ++i) uniform = output_levels(uniform, s);
    for (double t : uniform.levels) CHECK(t == 0.0);
}

TEST_CASE("training level shift formula and clamping") {
    SamplingSchedule s = SamplingSchedule::make_linear(1.0, 4);
    FrameNoiseVector ladder = progressive_input_levels(s, 4, 1, 0);  // {0.25 0.5 0.75 1.0}
    CHECK(inter_chunk_gap(ladder) == doctest::Approx(0.25));

    // zero perturbation
    CHECK(shift_training_levels(ladder, 1.0, 0.0).levels == ladder.levels);

    // delta = 0.4 * 1.0 * 0.25 = 0.1, top level clamps back to T
    FrameNoiseVector shifted = shift_training_levels(ladder, 1.0, 0.4 * 1.0 * 0.25);
    CHECK(shifted.levels[0] == doctest::Approx(0.35));
    CHECK(shifted.levels[1] == doctest::Approx(0.6));
    CHECK(shifted.levels[2] == doctest::Approx(0.85));
    CHECK(shifted.levels[3] == 1.0);
    shifted.validate(1.0);

    FrameNoiseVector single = make_uniform_levels(2, 2, 0.5);
    single.mode = FrameNoiseVector::Mode::Progressive;
    Rng rng(1);
    CHECK_THROWS(perturb_training_levels(single, 1.0, rng));  // no second distinct level
}

TEST_CASE("perturbation delta stddev matches 0.4 gap over many draws") {
    SamplingSchedule s = SamplingSchedule::make_linear(1.0, 4);
    FrameNoiseVector ladder = progressive_input_levels(s, 4, 1, 0);
    Rng rng(2024);
    const int n = 100000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
        // level index 1 sits at 0.5; clamping there needs a 5-sigma draw
        double delta = perturb_training_levels(ladder, 1.0, rng).levels[1] - ladder.levels[1];
        acc += delta;
        acc2 += delta * delta;
    }
    double var = acc2 / n - (acc / n) * (acc / n);
    CHECK(std::sqrt(var) == doctest::Approx(0.4 * 0.25).epsilon(0.02));
}

TEST_CASE("perturbation keeps chunk constancy and ordering") {
    SamplingSchedule s = SamplingSchedule::make_linear(1.0, 30);
    Rng rng(7);
    for (int trial = 0; trial < 10000; ++trial) {
        int r = static_cast<int>(rng.below(5));
        FrameNoiseVector ladder = progressive_input_levels(s, 6, 5, r);
        FrameNoiseVector out = perturb_training_levels(ladder, 1.0, rng);
        out.validate(1.0);  // constancy, ordering, boundary-only ties, range
    }
}

TEST_CASE("progressive cycle property across configurations") {
    for (auto [steps, chunk] : {std::pair{4, 1}, {4, 2}, {30, 5}, {50, 5}}) {
        SamplingSchedule s = SamplingSchedule::make_linear(1.0, steps);
        const int k = steps / chunk;
        FrameNoiseVector start = progressive_input_levels(s, k, chunk, 0);

        FrameNoiseVector levels = start;
        for (int i = 0; i < chunk; ++i) levels = output_levels(levels, s);
        // shift: drop chunk 0, append a chunk at level T
        FrameNoiseVector shifted;
        shifted.chunk_size = chunk;
        shifted.mode = FrameNoiseVector::Mode::Progressive;
        shifted.levels.assign(levels.levels.begin() + chunk, levels.levels.end());
        shifted.levels.insert(shifted.levels.end(), chunk, s.grid[steps]);

        CHECK(shifted.levels == start.levels);
    }
}

TEST_CASE("schedule spec json round trip") {
    ScheduleSpec spec;
    spec.kind = VarianceKind::LinearBeta;
    spec.max_level = 1.0;
    spec.steps = 30;
    spec.params.beta_end = 0.0213;
    ScheduleSpec back = ScheduleSpec::from_json_string(spec.to_json_string());
    CHECK(back.kind == spec.kind);
    CHECK(back.max_level == spec.max_level);
    CHECK(back.steps == spec.steps);
    CHECK(back.params.beta_start == spec.params.beta_start);
    CHECK(back.params.beta_end == spec.params.beta_end);
    CHECK(back.params.virtual_steps == spec.params.virtual_steps);
}

TEST_CASE("frame noise vector validation") {
    FrameNoiseVector bad;
    bad.chunk_size = 2;
    bad.mode = FrameNoiseVector::Mode::Progressive;
    bad.levels = {0.1, 0.2, 0.3, 0.3};  // differs within chunk 0
    CHECK_THROWS(bad.validate(1.0));

    FrameNoiseVector tie_mid;
    tie_mid.chunk_size = 1;
    tie_mid.mode = FrameNoiseVector::Mode::Progressive;
    tie_mid.levels = {0.2, 0.5, 0.5, 0.9};  // tied away from the boundaries
    CHECK_THROWS(tie_mid.validate(1.0));

    FrameNoiseVector tie_boundary;
    tie_boundary.chunk_size = 1;
    tie_boundary.mode = FrameNoiseVector::Mode::Progressive;
    tie_boundary.levels = {0.0, 0.0, 0.5, 1.0, 1.0};  // clamped runs are fine
    CHECK_NOTHROW(tie_boundary.validate(1.0));
}
