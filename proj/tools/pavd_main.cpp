#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pavd/compare.hpp"
#include "pavd/eval.hpp"
#include "pavd/run_io.hpp"
#include "pavd/synthetic.hpp"
#include "pavd/training.hpp"

namespace {

using namespace pavd;

int cmd_gen_data(const SequenceSpec& spec, int sequences, const std::string& out) {
    Dataset dataset = generate_dataset(spec, sequences);
    write_dataset(dataset, out);
    std::printf("wrote %d %s sequence(s) of %lld x %d to %s\n", sequences,
                to_string(spec.generator).c_str(), static_cast<long long>(spec.length), spec.dim,
                out.c_str());
    return 0;
}

int cmd_sample(const SampleSpec& spec, const std::string& out_dir) {
    RunResult result = run_sample(spec, out_dir);
    std::printf("method %s: emitted %lld frames of dim %d into %s\n", to_string(spec.method).c_str(),
                static_cast<long long>(result.emitted.frames), spec.dim, result.run_dir.c_str());
    return 0;
}

int cmd_train(const TrainConfig& config, const std::string& data_path, const std::string& out_dir,
              bool resume) {
    Dataset dataset = read_dataset(data_path);
    TrainResult result = train_run(config, dataset, out_dir, resume);
    if (!result.metrics.empty()) {
        const auto& last = result.metrics.back();
        std::printf("step %lld  train %.6f  val(low/mid/high) %.6f / %.6f / %.6f\n",
                    static_cast<long long>(last.step), last.train_loss, last.val_loss_low,
                    last.val_loss_mid, last.val_loss_high);
    }
    std::printf("checkpoint and metrics.csv written to %s\n", out_dir.c_str());
    return 0;
}

int cmd_eval(const std::string& run_dir, std::int64_t clip_len, int scene_window, double scene_k) {
    nlohmann::json manifest = nlohmann::json::parse(read_text_file(run_dir + "/manifest.json"));
    const int dim = manifest.at("dim").get<int>();
    FrameLog log = read_frame_log(run_dir + "/frames.bin", dim);
    if (log.frames.frames < 2 * clip_len)
        throw std::invalid_argument("eval: run holds " + std::to_string(log.frames.frames) +
                                    " frames; need at least two clips of " + std::to_string(clip_len));

    MetricReport report = compute_clip_metrics(log.frames, clip_len);
    QuartileDrift drift = quartile_drift(log.frames);
    SceneChangeResult scenes = detect_scene_changes(log.frames, scene_window, scene_k);

    std::ofstream csv(run_dir + "/metrics.csv", std::ios::trunc);
    csv << "clip,mean,variance,autocorr1,mean_delta\n";
    csv.precision(10);
    for (std::size_t c = 0; c < report.clips.size(); ++c)
        csv << c << "," << report.clips[c].mean << "," << report.clips[c].variance << ","
            << report.clips[c].autocorr1 << "," << report.clips[c].mean_delta << "\n";
    csv.close();

    nlohmann::json summary;
    summary["clip_len"] = clip_len;
    summary["clips"] = report.clips.size();
    summary["drift"] = {{"mean", report.drift.mean},
                        {"variance", report.drift.variance},
                        {"autocorr1", report.drift.autocorr1},
                        {"mean_delta", report.drift.mean_delta}};
    summary["quartiles"] = {{"delta_mean", drift.delta_mean},
                            {"variance_ratio", drift.variance_ratio},
                            {"delta_autocorr", drift.delta_autocorr}};
    summary["scene_changes"] = {{"events", scenes.events},
                                {"segments", scenes.segments},
                                {"threshold", scene_k},
                                {"window", scene_window}};
    if (manifest.contains("denoiser") && manifest["denoiser"].value("type", "") == "bump-gp") {
        double v = manifest["denoiser"]["bump"].value("velocity", 0.0);
        VelocityEstimate vel = estimate_velocity(log.frames, v);
        summary["velocity"] = {{"true", v}, {"estimated_mean", vel.mean_velocity}, {"mae", vel.mae}};
    }
    write_text_file(run_dir + "/summary.json", summary.dump(2) + "\n");

    std::filesystem::create_directories(run_dir + "/plots");
    std::vector<double> means, variances, autocorrs, deltas;
    for (const auto& c : report.clips) {
        means.push_back(c.mean);
        variances.push_back(c.variance);
        autocorrs.push_back(c.autocorr1);
        deltas.push_back(c.mean_delta);
    }
    write_line_chart_svg(run_dir + "/plots/mean.svg", "per-clip mean", {"mean"}, {means});
    write_line_chart_svg(run_dir + "/plots/variance.svg", "per-clip variance", {"variance"}, {variances});
    write_line_chart_svg(run_dir + "/plots/autocorr1.svg", "per-clip lag-1 autocorrelation", {"autocorr1"},
                         {autocorrs});
    write_line_chart_svg(run_dir + "/plots/mean_delta.svg", "per-clip mean one-step delta", {"mean_delta"},
                         {deltas});

    std::printf("%zu clips; drift mean %.4f variance %.4f autocorr %.4f; %d scene event(s)\n",
                report.clips.size(), report.drift.mean, report.drift.variance, report.drift.autocorr1,
                scenes.events);
    std::printf("metrics.csv, summary.json and plots/ written to %s\n", run_dir.c_str());
    return 0;
}

int cmd_calibrate(const SequenceSpec& spec, int sequences, double target_fp, int window) {
    double k = calibrate_scene_threshold(spec, sequences, target_fp, window);
    std::printf("calibrated scene-change threshold k = %.2f (target fp rate %.3f over %d sequences of "
                "%lld x %d, rho=%.3f)\n",
                k, target_fp, sequences, static_cast<long long>(spec.length), spec.dim, spec.rho);
    return 0;
}

int cmd_compare(const CompareConfig& config, const std::string& out_dir) {
    CompareResult result = compare_methods(config, out_dir);
    std::printf("%zu rows -> %s\n", result.rows.size(), result.csv_path.c_str());
    std::string current;
    for (const auto& row : result.rows) {
        if (row.method != current) {
            current = row.method;
            std::printf("%s:\n", current.c_str());
        }
        std::printf("  seed %d: dmean %+.4f var-ratio %.3f dautocorr %+.4f scenes %d", row.seed,
                    row.drift.delta_mean, row.drift.variance_ratio, row.drift.delta_autocorr,
                    row.scene_events);
        if (row.has_velocity) std::printf(" vel-mae %.4f", row.velocity_mae);
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"progressive autoregressive diffusion sampling engine"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset file");
    SequenceSpec gen_spec;
    std::string gen_kind = "ar1-gaussian";
    int gen_sequences = 1;
    std::string gen_out = "dataset.pavd";
    bool gen_no_wrap = false;
    gen->add_option("--generator", gen_kind, "ar1-gaussian | moving-bump");
    gen->add_option("--sequences", gen_sequences, "number of sequences");
    gen->add_option("--frames", gen_spec.length, "frames per sequence");
    gen->add_option("--dim", gen_spec.dim, "latent dim (grid size for moving-bump)");
    gen->add_option("--rho", gen_spec.rho, "AR(1) correlation");
    gen->add_option("--sigma", gen_spec.sigma, "AR(1) marginal stddev");
    gen->add_option("--width", gen_spec.bump_width, "bump width");
    gen->add_option("--velocity", gen_spec.bump_velocity, "bump velocity, cells per frame");
    gen->add_option("--amplitude", gen_spec.bump_amplitude, "bump amplitude");
    gen->add_option("--noise", gen_spec.bump_noise, "bump observation noise");
    gen->add_flag("--no-wrap", gen_no_wrap, "clamped grid instead of periodic");
    gen->add_option("--seed", gen_spec.seed, "rng seed");
    gen->add_option("--out", gen_out, "output path");

    // sample
    auto* sample = app.add_subcommand("sample", "run one generation and write a run directory");
    SampleSpec sample_spec;
    std::string sample_method = "pa";
    std::string sample_denoiser = "ar1-analytic";
    std::string sample_config, sample_out = "run";
    sample->add_option("--config", sample_config, "manifest/config JSON; flags override");
    sample->add_option("--method", sample_method, "pa | rw | rn | independent");
    sample->add_option("--steps", sample_spec.schedule.steps, "sampling steps S");
    sample->add_option("--chunk", sample_spec.chunk, "chunk size C");
    sample->add_option("--frames", sample_spec.total_frames, "frames to emit");
    sample->add_flag("--keep-clean,!--no-keep-clean", sample_spec.keep_clean,
                     "retain the freshest clean chunk in the window");
    sample->add_flag("--terminate", sample_spec.terminate, "drain the window at the end");
    sample->add_option("--seed", sample_spec.seed, "rng seed");
    sample->add_option("--eta", sample_spec.eta, "DDIM eta");
    sample->add_option("--dim", sample_spec.dim, "latent dim");
    sample->add_option("--init-video", sample_spec.init_video, "dataset file with the conditioning clip");
    sample->add_option("--denoiser", sample_denoiser, "ar1-analytic | toy | zero | bump-gp");
    sample->add_option("--rho", sample_spec.denoiser.rho, "analytic prior correlation");
    sample->add_option("--sigma", sample_spec.denoiser.sigma, "analytic prior stddev");
    sample->add_option("--checkpoint", sample_spec.denoiser.checkpoint, "toy checkpoint prefix");
    sample->add_option("--condition", sample_spec.condition_len, "baseline condition length E");
    sample->add_option("--window", sample_spec.window_len, "baseline window length F (0 = S)");
    sample->add_option("--T", sample_spec.schedule.max_level, "max noise level");
    sample->add_option("--out", sample_out, "run directory");

    // train
    auto* train = app.add_subcommand("train", "fine-tune the toy denoiser");
    TrainConfig train_config;
    std::string train_data, train_out = "train-run", train_mode = "progressive-perturbed";
    bool train_resume = false;
    train->add_option("--data", train_data, "dataset file")->required();
    train->add_option("--steps", train_config.steps, "optimizer steps");
    train->add_option("--batch", train_config.batch, "batch size");
    train->add_option("--lr", train_config.lr, "learning rate");
    train->add_option("--chunk", train_config.chunk, "chunk size C");
    train->add_option("--clip-max", train_config.max_clip, "longest training clip (= S)");
    train->add_option("--mode", train_mode, "progressive-perturbed | uniform");
    train->add_option("--seed", train_config.seed, "rng seed");
    train->add_option("--hidden", train_config.model.hidden, "hidden width");
    train->add_option("--embed", train_config.model.embed, "level embedding size");
    train->add_option("--dim", train_config.model.dim, "latent dim");
    train->add_option("--max-frames", train_config.model.max_frames, "temporal kernel span");
    train->add_option("--checkpoint-every", train_config.checkpoint_every, "checkpoint cadence");
    train->add_option("--val-every", train_config.val_every, "validation cadence");
    train->add_flag("--resume", train_resume, "resume from the checkpoint in --out");
    train->add_option("--out", train_out, "output directory");

    // eval
    auto* eval = app.add_subcommand("eval", "compute metrics for a run directory");
    std::string eval_run;
    std::int64_t eval_clip = 48;
    int eval_scene_window = kDefaultSceneWindow;
    double eval_scene_k = kDefaultSceneThreshold;
    bool eval_calibrate = false;
    SequenceSpec eval_cal_spec;
    eval_cal_spec.rho = 0.95;
    eval_cal_spec.dim = 64;
    eval_cal_spec.length = 1000;
    int eval_cal_sequences = 200;
    double eval_cal_fp = 0.01;
    eval->add_option("--run", eval_run, "run directory to evaluate");
    eval->add_option("--clip", eval_clip, "clip length in frames");
    eval->add_option("--scene-window", eval_scene_window, "rolling-median window");
    eval->add_option("--scene-k", eval_scene_k, "scene-change threshold");
    eval->add_flag("--calibrate-scene-k", eval_calibrate, "re-run the threshold calibration instead");
    eval->add_option("--cal-rho", eval_cal_spec.rho, "calibration AR(1) rho");
    eval->add_option("--cal-dim", eval_cal_spec.dim, "calibration dim");
    eval->add_option("--cal-frames", eval_cal_spec.length, "calibration sequence length");
    eval->add_option("--cal-sequences", eval_cal_sequences, "calibration sequence count");
    eval->add_option("--cal-target-fp", eval_cal_fp, "target false-positive rate per sequence");
    eval->add_option("--cal-seed", eval_cal_spec.seed, "calibration seed");

    // compare
    auto* compare = app.add_subcommand("compare", "run and evaluate several methods side by side");
    CompareConfig cmp;
    std::string cmp_methods = "pa,independent";
    std::string cmp_data = "ar1";
    std::string cmp_out = "compare-run";
    compare->add_option("--methods", cmp_methods, "comma-separated: pa,rw,rn,independent");
    compare->add_option("--seeds", cmp.seeds, "seeds per method");
    compare->add_option("--base-seed", cmp.base_seed, "first seed");
    compare->add_option("--data", cmp_data, "ar1 | bump");
    compare->add_option("--frames", cmp.total_frames, "frames per run");
    compare->add_option("--steps", cmp.schedule.steps, "sampling steps S");
    compare->add_option("--chunk", cmp.chunk, "chunk size C");
    compare->add_option("--dim", cmp.dim, "latent dim / grid size");
    compare->add_option("--rho", cmp.rho, "AR(1) correlation");
    compare->add_option("--sigma", cmp.sigma, "AR(1) stddev");
    compare->add_option("--condition", cmp.condition_len, "baseline condition length E");
    compare->add_option("--window", cmp.window_len, "baseline window length (0 = S)");
    compare->add_option("--clip", cmp.clip_len, "metric clip length");
    compare->add_option("--scene-k", cmp.scene_threshold, "scene-change threshold");
    compare->add_option("--bump-width", cmp.bump.bump_width, "bump width");
    compare->add_option("--bump-velocity", cmp.bump.bump_velocity, "bump velocity");
    compare->add_option("--bump-noise", cmp.bump.bump_noise, "bump observation noise");
    compare->add_option("--out", cmp_out, "output directory");

    try {
        app.parse(argc, argv);

        if (gen->parsed()) {
            gen_spec.generator = generator_from_string(gen_kind);
            gen_spec.wrap = !gen_no_wrap;
            return cmd_gen_data(gen_spec, gen_sequences, gen_out);
        }
        if (sample->parsed()) {
            SampleSpec spec;
            if (!sample_config.empty()) spec = SampleSpec::from_json_string(read_text_file(sample_config));
            // flags the user actually passed override the config file
            auto passed = [&](const std::string& name) { return sample->count(name) > 0; };
            if (sample_config.empty() || passed("--method")) spec.method = sample_method_from_string(sample_method);
            if (sample_config.empty() || passed("--steps")) spec.schedule.steps = sample_spec.schedule.steps;
            if (sample_config.empty() || passed("--T")) spec.schedule.max_level = sample_spec.schedule.max_level;
            if (sample_config.empty() || passed("--chunk")) spec.chunk = sample_spec.chunk;
            if (sample_config.empty() || passed("--frames")) spec.total_frames = sample_spec.total_frames;
            if (sample_config.empty() || passed("--keep-clean") || passed("--no-keep-clean"))
                spec.keep_clean = sample_spec.keep_clean;
            if (sample_config.empty() || passed("--terminate")) spec.terminate = sample_spec.terminate;
            if (sample_config.empty() || passed("--seed")) spec.seed = sample_spec.seed;
            if (sample_config.empty() || passed("--eta")) spec.eta = sample_spec.eta;
            if (sample_config.empty() || passed("--dim")) spec.dim = sample_spec.dim;
            if (sample_config.empty() || passed("--init-video")) spec.init_video = sample_spec.init_video;
            if (sample_config.empty() || passed("--denoiser")) spec.denoiser.type = sample_denoiser;
            if (sample_config.empty() || passed("--rho")) spec.denoiser.rho = sample_spec.denoiser.rho;
            if (sample_config.empty() || passed("--sigma")) spec.denoiser.sigma = sample_spec.denoiser.sigma;
            if (sample_config.empty() || passed("--checkpoint"))
                spec.denoiser.checkpoint = sample_spec.denoiser.checkpoint;
            if (sample_config.empty() || passed("--condition")) spec.condition_len = sample_spec.condition_len;
            if (sample_config.empty() || passed("--window")) spec.window_len = sample_spec.window_len;
            return cmd_sample(spec, sample_out);
        }
        if (train->parsed()) {
            train_config.level_mode = level_mode_from_string(train_mode);
            if (train->count("--max-frames") == 0)
                train_config.model.max_frames = train_config.max_clip + train_config.chunk;
            return cmd_train(train_config, train_data, train_out, train_resume);
        }
        if (eval->parsed()) {
            if (eval_calibrate) {
                eval_cal_spec.generator = Generator::Ar1Gaussian;
                return cmd_calibrate(eval_cal_spec, eval_cal_sequences, eval_cal_fp, eval_scene_window);
            }
            if (eval_run.empty()) throw CLI::ValidationError("eval", "--run is required unless calibrating");
            return cmd_eval(eval_run, eval_clip, eval_scene_window, eval_scene_k);
        }
        if (compare->parsed()) {
            cmp.data = cmp_data == "bump" ? CompareData::Bump : CompareData::Ar1;
            if (cmp_data != "bump" && cmp_data != "ar1")
                throw CLI::ValidationError("compare", "--data must be ar1 or bump");
            cmp.methods.clear();
            std::stringstream ss(cmp_methods);
            std::string tok;
            while (std::getline(ss, tok, ',')) cmp.methods.push_back(sample_method_from_string(tok));
            cmp.bump.generator = Generator::MovingBump;
            cmp.bump.dim = cmp.dim;
            return cmd_compare(cmp, cmp_out);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
