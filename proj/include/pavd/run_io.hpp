#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "pavd/baselines.hpp"
#include "pavd/denoiser.hpp"
#include "pavd/schedule.hpp"
#include "pavd/synthetic.hpp"
#include "pavd/window.hpp"

namespace pavd {

/// Append-only binary frame log. Record: int64 period, int64 frame index,
/// dim float64 values; everything little-endian.
class FrameLogWriter {
public:
    FrameLogWriter(const std::string& path, int dim);
    void append(const LatentSequence& frames, std::int64_t period);
    std::int64_t frames_written() const { return next_index_; }
    void flush() { os_.flush(); }

private:
    std::ofstream os_;
    int dim_;
    std::int64_t next_index_ = 0;
};

struct FrameLog {
    std::vector<std::int64_t> periods;
    std::vector<std::int64_t> indices;
    LatentSequence frames;
};

FrameLog read_frame_log(const std::string& path, int dim);

enum class SampleMethod { Pa, Rw, Rn, Independent };

std::string to_string(SampleMethod m);
SampleMethod sample_method_from_string(const std::string& s);

struct DenoiserSpec {
    std::string type = "ar1-analytic";  // ar1-analytic | toy | zero | bump-gp
    double rho = 0.9;
    double sigma = 1.0;
    std::string checkpoint;             // toy
    SequenceSpec bump;                  // bump-gp

    std::unique_ptr<Denoiser> build(int dim, int max_window) const;
};

/// Everything needed to reproduce one sampled run bit-exactly.
struct SampleSpec {
    SampleMethod method = SampleMethod::Pa;
    ScheduleSpec schedule;
    int chunk = 5;
    std::int64_t total_frames = 0;
    bool keep_clean = true;
    bool terminate = false;
    double eta = 0.0;
    std::uint64_t seed = 0;
    int dim = 1;
    DenoiserSpec denoiser;
    std::string init_video;        // dataset path; empty = start from noise (pa)
    int condition_len = 5;         // baselines
    int window_len = 0;            // baselines; 0 = schedule steps

    std::string to_json_string() const;
    static SampleSpec from_json_string(const std::string& text);
    void validate() const;
};

struct RunResult {
    LatentSequence emitted;
    std::string run_dir;
};

/// Executes the run and writes manifest.json + frames.bin under run_dir.
RunResult run_sample(const SampleSpec& spec, const std::string& run_dir);

/// Re-executes the run recorded in an existing manifest.
RunResult run_from_manifest(const std::string& manifest_path, const std::string& run_dir);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pavd
