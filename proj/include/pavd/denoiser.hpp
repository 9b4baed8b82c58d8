#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "pavd/latent.hpp"
#include "pavd/schedule.hpp"

namespace pavd {

/// Pluggable noise predictor over (latents, per-frame levels).
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual LatentSequence predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                                       const VarianceSchedule& vs) const = 0;
};

/// Zero-mean jointly Gaussian model of a window of F frames of dimension D,
/// with an explicit (F*D) x (F*D) covariance. Serves as the exact stand-in
/// for the data distribution in verification runs.
struct GaussianProcessPrior {
    int window_len = 0;
    int frame_dim = 0;
    Eigen::MatrixXd covariance;

    /// Symmetry to 1e-12 and positive-definiteness.
    void validate() const;
};

/// Toeplitz AR(1) covariance sigma^2 rho^|f-g| per dimension, dimensions independent.
GaussianProcessPrior build_ar1_prior(double rho, double sigma, int window_len, int frame_dim);

/// Exact posterior-mean noise estimate under the prior: with A = diag(sqrt(a_f)) (x) I_D
/// and N = diag(1 - a_f) (x) I_D, x0_hat = Sigma A^T (A Sigma A^T + N)^-1 x^t, inverted
/// to eps per frame. Frames at level 0 get eps_hat = 0.
LatentSequence analytic_predict_eps(const GaussianProcessPrior& prior, const LatentSequence& xt,
                                    const FrameNoiseVector& levels, const VarianceSchedule& vs);

/// Denoiser wrapper around a fixed explicit prior (window length pinned).
class GpDenoiser : public Denoiser {
public:
    explicit GpDenoiser(GaussianProcessPrior prior);
    LatentSequence predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                               const VarianceSchedule& vs) const override;

private:
    GaussianProcessPrior prior_;
};

/// Analytic denoiser for the AR(1) process family, valid for any window
/// length. Dimensions are independent under the prior, so each call solves
/// one F x F system shared by all D columns; factorizations are cached per
/// level pattern.
class Ar1AnalyticDenoiser : public Denoiser {
public:
    Ar1AnalyticDenoiser(double rho, double sigma);
    LatentSequence predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                               const VarianceSchedule& vs) const override;

    double rho() const { return rho_; }
    double sigma() const { return sigma_; }

private:
    struct Solver {
        Eigen::LDLT<Eigen::MatrixXd> factor;  // of A Sigma A + N
        Eigen::MatrixXd post_map;             // Sigma A
    };
    const Solver& solver_for(const std::vector<double>& alphas) const;

    double rho_;
    double sigma_;
    mutable std::map<std::vector<double>, Solver> cache_;
};

/// Predicts zero noise everywhere; the trivial baseline predictor.
class ZeroDenoiser : public Denoiser {
public:
    LatentSequence predict_eps(const LatentSequence& xt, const FrameNoiseVector&,
                               const VarianceSchedule&) const override {
        return LatentSequence(xt.frames, xt.dim);
    }
};

/// Analytic denoiser for a stationary process given by closed-form window
/// moments: mean field per frame plus an (F*D)^2 covariance built on demand
/// for each window length. Used for the moving-pattern comparisons.
class StationaryGpDenoiser : public Denoiser {
public:
    using CovarianceBuilder = std::function<Eigen::MatrixXd(int window_len)>;
    using MeanBuilder = std::function<Eigen::VectorXd(int window_len)>;

    StationaryGpDenoiser(int frame_dim, CovarianceBuilder cov, MeanBuilder mean);
    LatentSequence predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                               const VarianceSchedule& vs) const override;

private:
    struct Key {
        int window_len;
        std::vector<double> alphas;
        bool operator<(const Key& o) const {
            if (window_len != o.window_len) return window_len < o.window_len;
            return alphas < o.alphas;
        }
    };
    struct Solver {
        Eigen::LDLT<Eigen::MatrixXd> factor;
        Eigen::MatrixXd post_map;
    };

    int frame_dim_;
    CovarianceBuilder cov_builder_;
    MeanBuilder mean_builder_;
    mutable std::map<int, Eigen::MatrixXd> cov_cache_;
    mutable std::map<int, Eigen::VectorXd> mean_cache_;
    mutable std::map<Key, Solver> solver_cache_;
};

}  // namespace pavd
