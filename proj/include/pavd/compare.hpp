#pragma once

#include <string>
#include <vector>

#include "pavd/eval.hpp"
#include "pavd/run_io.hpp"

namespace pavd {

enum class CompareData { Ar1, Bump };

struct CompareConfig {
    std::vector<SampleMethod> methods;
    int seeds = 10;
    std::uint64_t base_seed = 0;
    CompareData data = CompareData::Ar1;

    ScheduleSpec schedule;
    int chunk = 5;
    std::int64_t total_frames = 400;
    bool keep_clean = true;
    int condition_len = 5;
    int window_len = 0;  // 0 = schedule steps
    int dim = 64;

    double rho = 0.95;
    double sigma = 1.0;
    SequenceSpec bump;  // used when data == Bump

    std::int64_t clip_len = 48;  // two seconds at the nominal 24 fps
    int scene_window = kDefaultSceneWindow;
    double scene_threshold = kDefaultSceneThreshold;
};

struct CompareRow {
    std::string method;
    int seed = 0;
    std::int64_t frames = 0;
    QuartileDrift drift;
    DriftScores clip_drift;
    int scene_events = 0;
    int scene_segments = 0;
    double velocity_mae = 0.0;  // bump runs only
    bool has_velocity = false;
};

struct CompareResult {
    std::vector<CompareRow> rows;                // sorted by (method, seed)
    std::string csv_path;
    std::string json_path;
};

/// Runs every (method, seed) pair with one shared denoiser family and
/// schedule, evaluates each emitted sequence, and writes comparison.csv plus
/// aggregate mean/stderr per method to comparison.json.
CompareResult compare_methods(const CompareConfig& config, const std::string& out_dir);

}  // namespace pavd
