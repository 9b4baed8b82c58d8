#include "pavd/compare.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pavd {

namespace {

SampleSpec spec_for(const CompareConfig& config, SampleMethod method, int seed_index,
                    const std::string& init_video) {
    SampleSpec spec;
    spec.method = method;
    spec.schedule = config.schedule;
    spec.chunk = config.chunk;
    spec.total_frames = config.total_frames;
    spec.keep_clean = config.keep_clean;
    spec.terminate = false;
    spec.seed = config.base_seed + static_cast<std::uint64_t>(seed_index);
    spec.dim = config.dim;
    spec.condition_len = config.condition_len;
    spec.window_len = config.window_len;
    spec.init_video = init_video;

    if (config.data == CompareData::Ar1) {
        spec.denoiser.type = "ar1-analytic";
        spec.denoiser.rho = config.rho;
        spec.denoiser.sigma = config.sigma;
    } else {
        spec.denoiser.type = "bump-gp";
        spec.denoiser.bump = config.bump;
    }
    return spec;
}

double column_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double column_stderr(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mu = column_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

CompareResult compare_methods(const CompareConfig& config, const std::string& out_dir) {
    if (config.methods.empty()) throw std::invalid_argument("compare_methods: no methods given");
    if (config.seeds < 1) throw std::invalid_argument("compare_methods: seeds must be >= 1");
    std::filesystem::create_directories(out_dir);

    std::vector<SampleMethod> methods = config.methods;
    std::sort(methods.begin(), methods.end(),
              [](SampleMethod a, SampleMethod b) { return to_string(a) < to_string(b); });
    methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

    CompareResult result;
    for (SampleMethod method : methods) {
        for (int s = 0; s < config.seeds; ++s) {
            std::string run_dir = out_dir + "/" + to_string(method) + "-seed" + std::to_string(s);

            std::string init_video;
            if (config.data == CompareData::Bump) {
                // Shared conditioning clip per seed so every method extends
                // identical source material.
                SequenceSpec bump = config.bump;
                bump.generator = Generator::MovingBump;
                bump.dim = config.dim;
                bump.seed = config.base_seed + static_cast<std::uint64_t>(s) + 0x62756d70ULL;
                int pa_window = config.schedule.steps + (config.keep_clean ? config.chunk : 0);
                bump.length = std::max<std::int64_t>(bump.length, pa_window);
                init_video = out_dir + "/init-seed" + std::to_string(s) + ".pavd";
                if (!std::filesystem::exists(init_video))
                    write_dataset(generate_dataset(bump, 1), init_video);
            }
            // PA on AR(1) starts from noise; on bump data it extends the clip.
            std::string pa_init = config.data == CompareData::Bump ? init_video : std::string();
            SampleSpec spec = spec_for(config, method, s,
                                       method == SampleMethod::Pa ? pa_init
                                       : method == SampleMethod::Independent ? std::string()
                                                                             : init_video);
            RunResult run = run_sample(spec, run_dir);

            CompareRow row;
            row.method = to_string(method);
            row.seed = s;
            row.frames = run.emitted.frames;
            row.drift = quartile_drift(run.emitted);
            row.clip_drift = compute_clip_metrics(run.emitted, config.clip_len).drift;
            SceneChangeResult scenes =
                detect_scene_changes(run.emitted, config.scene_window, config.scene_threshold);
            row.scene_events = scenes.events;
            row.scene_segments = scenes.segments;
            if (config.data == CompareData::Bump) {
                row.velocity_mae = estimate_velocity(run.emitted, config.bump.bump_velocity).mae;
                row.has_velocity = true;
            }
            result.rows.push_back(std::move(row));
        }
    }

    std::sort(result.rows.begin(), result.rows.end(), [](const CompareRow& a, const CompareRow& b) {
        return std::tie(a.method, a.seed) < std::tie(b.method, b.seed);
    });

    result.csv_path = out_dir + "/comparison.csv";
    std::ofstream csv(result.csv_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("compare_methods: cannot write " + result.csv_path);
    csv << "method,seed,frames,delta_mean,variance_ratio,delta_autocorr,"
           "drift_mean,drift_variance,drift_autocorr,drift_mean_delta,"
           "scene_events,scene_segments,velocity_mae\n";
    csv.precision(10);
    for (const auto& r : result.rows) {
        csv << r.method << "," << r.seed << "," << r.frames << "," << r.drift.delta_mean << ","
            << r.drift.variance_ratio << "," << r.drift.delta_autocorr << "," << r.clip_drift.mean << ","
            << r.clip_drift.variance << "," << r.clip_drift.autocorr1 << "," << r.clip_drift.mean_delta
            << "," << r.scene_events << "," << r.scene_segments << ",";
        if (r.has_velocity) csv << r.velocity_mae;
        csv << "\n";
    }
    csv.close();

    std::map<std::string, std::map<std::string, std::vector<double>>> columns;
    for (const auto& r : result.rows) {
        auto& m = columns[r.method];
        m["delta_mean"].push_back(r.drift.delta_mean);
        m["variance_ratio"].push_back(r.drift.variance_ratio);
        m["delta_autocorr"].push_back(r.drift.delta_autocorr);
        m["scene_events"].push_back(r.scene_events);
        m["scene_segments"].push_back(r.scene_segments);
        if (r.has_velocity) m["velocity_mae"].push_back(r.velocity_mae);
    }
    nlohmann::json agg;
    for (const auto& [method, cols] : columns)
        for (const auto& [name, values] : cols) {
            agg[method][name]["mean"] = column_mean(values);
            agg[method][name]["stderr"] = column_stderr(values);
        }
    result.json_path = out_dir + "/comparison.json";
    write_text_file(result.json_path, agg.dump(2) + "\n");
    return result;
}

}  // namespace pavd
