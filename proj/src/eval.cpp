#include "pavd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace pavd {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> delta_norms(const LatentSequence& seq) {
    std::vector<double> deltas;
    if (seq.frames < 2) return deltas;
    deltas.reserve(seq.frames - 1);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(seq.dim));
    for (std::int64_t f = 0; f + 1 < seq.frames; ++f) {
        auto a = seq.frame(f);
        auto b = seq.frame(f + 1);
        double acc = 0.0;
        for (std::int64_t d = 0; d < seq.dim; ++d) {
            double diff = b[d] - a[d];
            acc += diff * diff;
        }
        deltas.push_back(std::sqrt(acc) * inv_sqrt_d);
    }
    return deltas;
}

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    return values[mid];
}

double curve_quartile_mean(const std::vector<ClipStats>& clips, bool last,
                           double ClipStats::*field) {
    std::size_t q = std::max<std::size_t>(1, clips.size() / 4);
    double acc = 0.0;
    std::size_t begin = last ? clips.size() - q : 0;
    for (std::size_t i = begin; i < begin + q; ++i) acc += clips[i].*field;
    return acc / static_cast<double>(q);
}

}  // namespace

ClipStats range_stats(const LatentSequence& seq, std::int64_t first, std::int64_t count) {
    if (first < 0 || count < 1 || first + count > seq.frames)
        throw std::invalid_argument("range_stats: range out of bounds");

    ClipStats stats;
    const std::int64_t n = count * seq.dim;
    double mean = 0.0;
    for (std::int64_t f = first; f < first + count; ++f)
        for (std::int64_t d = 0; d < seq.dim; ++d) mean += seq.at(f, d);
    mean /= static_cast<double>(n);
    stats.mean = mean;

    double var = 0.0;
    for (std::int64_t f = first; f < first + count; ++f)
        for (std::int64_t d = 0; d < seq.dim; ++d) {
            double c = seq.at(f, d) - mean;
            var += c * c;
        }
    var /= static_cast<double>(n);
    stats.variance = var;

    if (var > 0.0 && count > 1) {
        double num = 0.0;
        for (std::int64_t f = first; f + 1 < first + count; ++f)
            for (std::int64_t d = 0; d < seq.dim; ++d)
                num += (seq.at(f, d) - mean) * (seq.at(f + 1, d) - mean);
        stats.autocorr1 = num / (var * static_cast<double>(n));
    } else {
        stats.autocorr1 = 1.0;  // constant range
    }

    if (count > 1) {
        double acc = 0.0;
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(seq.dim));
        for (std::int64_t f = first; f + 1 < first + count; ++f) {
            double norm2 = 0.0;
            for (std::int64_t d = 0; d < seq.dim; ++d) {
                double diff = seq.at(f + 1, d) - seq.at(f, d);
                norm2 += diff * diff;
            }
            acc += std::sqrt(norm2) * inv_sqrt_d;
        }
        stats.mean_delta = acc / static_cast<double>(count - 1);
    }
    return stats;
}

MetricReport compute_clip_metrics(const LatentSequence& seq, std::int64_t clip_len,
                                  std::optional<ReferenceStats> reference) {
    if (clip_len < 1) throw std::invalid_argument("compute_clip_metrics: clip length must be >= 1");
    if (seq.frames < 2 * clip_len)
        throw std::invalid_argument("compute_clip_metrics: sequence of " + std::to_string(seq.frames) +
                                    " frames too short for clip length " + std::to_string(clip_len));

    MetricReport report;
    report.clip_len = clip_len;
    report.reference = reference;
    const std::int64_t n_clips = seq.frames / clip_len;
    report.clips.reserve(n_clips);
    for (std::int64_t c = 0; c < n_clips; ++c)
        report.clips.push_back(range_stats(seq, c * clip_len, clip_len));

    report.drift.mean = std::abs(curve_quartile_mean(report.clips, true, &ClipStats::mean) -
                                 curve_quartile_mean(report.clips, false, &ClipStats::mean));
    report.drift.variance = std::abs(curve_quartile_mean(report.clips, true, &ClipStats::variance) -
                                     curve_quartile_mean(report.clips, false, &ClipStats::variance));
    report.drift.autocorr1 = std::abs(curve_quartile_mean(report.clips, true, &ClipStats::autocorr1) -
                                      curve_quartile_mean(report.clips, false, &ClipStats::autocorr1));
    report.drift.mean_delta = std::abs(curve_quartile_mean(report.clips, true, &ClipStats::mean_delta) -
                                       curve_quartile_mean(report.clips, false, &ClipStats::mean_delta));
    return report;
}

QuartileDrift quartile_drift(const LatentSequence& seq) {
    if (seq.frames < 8) throw std::invalid_argument("quartile_drift: need at least 8 frames");
    const std::int64_t q = seq.frames / 4;
    QuartileDrift drift;
    drift.first = range_stats(seq, 0, q);
    drift.last = range_stats(seq, seq.frames - q, q);
    drift.delta_mean = drift.last.mean - drift.first.mean;
    drift.variance_ratio = drift.first.variance > 0.0 ? drift.last.variance / drift.first.variance : 1.0;
    drift.delta_autocorr = drift.last.autocorr1 - drift.first.autocorr1;
    return drift;
}

SceneChangeResult detect_scene_changes(const LatentSequence& seq, int window_len, double k) {
    if (window_len < 3) throw std::invalid_argument("detect_scene_changes: window must be >= 3");
    if (!(k > 0.0)) throw std::invalid_argument("detect_scene_changes: threshold must be > 0");

    SceneChangeResult result;
    std::vector<double> deltas = delta_norms(seq);
    if (deltas.size() < 2) {
        result.segments = 1;
        return result;
    }

    const std::int64_t n = static_cast<std::int64_t>(deltas.size());
    const std::int64_t half = window_len / 2;
    bool in_event = false;
    for (std::int64_t f = 0; f < n; ++f) {
        std::int64_t lo = std::max<std::int64_t>(0, f - half);
        std::int64_t hi = std::min(n, f + half + 1);
        double med = median_of({deltas.begin() + lo, deltas.begin() + hi});
        bool flagged = med > 0.0 ? deltas[f] > k * med : deltas[f] > 0.0;
        if (flagged && !in_event) {
            ++result.events;
            result.indices.push_back(f + 1);  // frame after the jump
        }
        in_event = flagged;
    }
    result.segments = result.events + 1;
    return result;
}

double calibrate_scene_threshold(const SequenceSpec& spec, int sequence_count, double target_fp_rate,
                                 int window_len) {
    if (sequence_count < 1) throw std::invalid_argument("calibrate_scene_threshold: need sequences");
    Rng rng(spec.seed);
    std::vector<LatentSequence> sequences;
    sequences.reserve(sequence_count);
    for (int i = 0; i < sequence_count; ++i) sequences.push_back(sample_ar1_sequence(spec, rng));

    for (double k = 1.5; k <= 12.0 + 1e-9; k += 0.25) {
        int with_fp = 0;
        for (const auto& seq : sequences)
            if (detect_scene_changes(seq, window_len, k).events > 0) ++with_fp;
        double rate = static_cast<double>(with_fp) / sequence_count;
        if (rate <= target_fp_rate) return k;
    }
    return 12.0;
}

VelocityEstimate estimate_velocity(const LatentSequence& bump_frames,
                                   std::optional<double> true_velocity) {
    const std::int64_t grid = bump_frames.dim;
    const std::int64_t f_count = bump_frames.frames;
    if (grid < 2 || f_count < 2)
        throw std::invalid_argument("estimate_velocity: need >= 2 frames on a grid of >= 2 cells");

    VelocityEstimate est;
    est.centers.resize(f_count);
    double prev_raw = 0.0;
    double offset = 0.0;
    for (std::int64_t f = 0; f < f_count; ++f) {
        auto frame = bump_frames.frame(f);
        double c = 0.0, s = 0.0, mass = 0.0;
        for (std::int64_t d = 0; d < grid; ++d) {
            double w = std::max(frame[d], 0.0);
            double theta = 2.0 * kPi * static_cast<double>(d) / static_cast<double>(grid);
            c += w * std::cos(theta);
            s += w * std::sin(theta);
            mass += w;
        }
        if (mass <= 0.0 || (c == 0.0 && s == 0.0))
            throw std::invalid_argument("estimate_velocity: degenerate frame " + std::to_string(f));
        double raw = std::atan2(s, c) / (2.0 * kPi) * static_cast<double>(grid);
        if (raw < 0.0) raw += static_cast<double>(grid);

        if (f == 0) {
            est.centers[0] = raw;
        } else {
            double diff = raw - prev_raw;
            double g = static_cast<double>(grid);
            diff -= g * std::round(diff / g);  // shortest circular step
            offset += diff;
            est.centers[f] = est.centers[0] + offset;
        }
        prev_raw = raw;
    }

    est.velocity.resize(f_count - 1);
    for (std::int64_t f = 0; f + 1 < f_count; ++f) est.velocity[f] = est.centers[f + 1] - est.centers[f];
    est.mean_velocity = (est.centers[f_count - 1] - est.centers[0]) / static_cast<double>(f_count - 1);

    if (true_velocity) {
        double acc = 0.0;
        for (double v : est.velocity) acc += std::abs(v - *true_velocity);
        est.mae = acc / static_cast<double>(est.velocity.size());
    }
    return est;
}

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::vector<std::string>& series_names,
                          const std::vector<std::vector<double>>& series) {
    if (series.empty() || series_names.size() != series.size())
        throw std::invalid_argument("write_line_chart_svg: series and names must align");

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    const double width = 840, height = 420, ml = 60, mr = 20, mt = 40, mb = 40;
    double lo = series[0][0], hi = series[0][0];
    std::size_t max_len = 0;
    for (const auto& s : series) {
        max_len = std::max(max_len, s.size());
        for (double v : s) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi == lo) hi = lo + 1.0;

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_line_chart_svg: cannot open " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"15\">" << title << "</text>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
       << "\" stroke=\"black\"/>\n";
    os.precision(6);
    os << "<text x=\"8\" y=\"" << mt + 5 << "\" font-family=\"sans-serif\" font-size=\"11\">" << hi
       << "</text>\n"
       << "<text x=\"8\" y=\"" << height - mb << "\" font-family=\"sans-serif\" font-size=\"11\">" << lo
       << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << kColors[si % 6] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.size(); ++i) {
            double x = ml + (width - ml - mr) * (s.size() == 1 ? 0.0 : static_cast<double>(i) / (s.size() - 1));
            double y = height - mb - (height - mt - mb) * (s[i] - lo) / (hi - lo);
            os << x << "," << y << " ";
        }
        os << "\"/>\n";
        os << "<text x=\"" << width - mr - 150 << "\" y=\"" << mt + 16 * (si + 1)
           << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << kColors[si % 6] << "\">"
           << series_names[si] << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace pavd
