#include "pavd/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pavd {

namespace {

std::vector<double> alphas_for(const FrameNoiseVector& levels, const VarianceSchedule& vs) {
    std::vector<double> a(levels.levels.size());
    for (std::size_t f = 0; f < a.size(); ++f) a[f] = vs.alpha_bar(levels.levels[f]);
    return a;
}

/// eps from the posterior x0 estimate; frames already clean get 0 by convention.
void fill_eps_from_x0(const LatentSequence& xt, const Eigen::VectorXd& x0,
                      const std::vector<double>& alphas, const FrameNoiseVector& levels,
                      LatentSequence& out) {
    const std::int64_t dim = xt.dim;
    for (std::int64_t f = 0; f < xt.frames; ++f) {
        auto of = out.frame(f);
        if (levels.levels[f] == 0.0) {
            for (std::int64_t d = 0; d < dim; ++d) of[d] = 0.0;
            continue;
        }
        double cs = std::sqrt(alphas[f]);
        double cn = std::sqrt(1.0 - alphas[f]);
        auto xf = xt.frame(f);
        for (std::int64_t d = 0; d < dim; ++d) of[d] = (xf[d] - cs * x0[f * dim + d]) / cn;
    }
}

}  // namespace

void GaussianProcessPrior::validate() const {
    const int n = window_len * frame_dim;
    if (window_len < 1 || frame_dim < 1) throw std::invalid_argument("GaussianProcessPrior: empty window");
    if (covariance.rows() != n || covariance.cols() != n)
        throw std::invalid_argument("GaussianProcessPrior: covariance must be (F*D) x (F*D)");
    double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw std::invalid_argument("GaussianProcessPrior: covariance asymmetric by " + std::to_string(asym));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("GaussianProcessPrior: covariance is not positive definite");
}

GaussianProcessPrior build_ar1_prior(double rho, double sigma, int window_len, int frame_dim) {
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("build_ar1_prior: |rho| must be < 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("build_ar1_prior: sigma must be > 0");
    GaussianProcessPrior prior;
    prior.window_len = window_len;
    prior.frame_dim = frame_dim;
    const int n = window_len * frame_dim;
    prior.covariance = Eigen::MatrixXd::Zero(n, n);
    for (int f = 0; f < window_len; ++f)
        for (int g = 0; g < window_len; ++g) {
            double c = sigma * sigma * std::pow(rho, std::abs(f - g));
            for (int d = 0; d < frame_dim; ++d)
                prior.covariance(f * frame_dim + d, g * frame_dim + d) = c;
        }
    return prior;
}

LatentSequence analytic_predict_eps(const GaussianProcessPrior& prior, const LatentSequence& xt,
                                    const FrameNoiseVector& levels, const VarianceSchedule& vs) {
    if (prior.window_len != xt.frames || prior.frame_dim != xt.dim)
        throw std::invalid_argument("analytic_predict_eps: prior sized for " +
                                    std::to_string(prior.window_len) + "x" + std::to_string(prior.frame_dim) +
                                    ", got window " + std::to_string(xt.frames) + "x" + std::to_string(xt.dim));
    if (levels.frame_count() != xt.frames)
        throw std::invalid_argument("analytic_predict_eps: level count mismatch");

    const std::int64_t n = xt.size();
    const std::int64_t dim = xt.dim;
    std::vector<double> alphas = alphas_for(levels, vs);

    Eigen::VectorXd a_coord(n), n_coord(n);
    for (std::int64_t i = 0; i < n; ++i) {
        double a = alphas[i / dim];
        a_coord[i] = std::sqrt(a);
        n_coord[i] = 1.0 - a;
    }

    // A Sigma A + N, with A diagonal.
    Eigen::MatrixXd m = a_coord.asDiagonal() * prior.covariance * a_coord.asDiagonal();
    m.diagonal() += n_coord;
    Eigen::LDLT<Eigen::MatrixXd> factor(m);
    if (factor.info() != Eigen::Success)
        throw std::runtime_error("analytic_predict_eps: posterior system not SPD");

    Eigen::Map<const Eigen::VectorXd> x(xt.data.data(), n);
    Eigen::VectorXd x0 = prior.covariance * a_coord.asDiagonal() * factor.solve(x);

    LatentSequence out(xt.frames, xt.dim);
    fill_eps_from_x0(xt, x0, alphas, levels, out);
    return out;
}

GpDenoiser::GpDenoiser(GaussianProcessPrior prior) : prior_(std::move(prior)) {
    prior_.validate();
}

LatentSequence GpDenoiser::predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                                       const VarianceSchedule& vs) const {
    return analytic_predict_eps(prior_, xt, levels, vs);
}

Ar1AnalyticDenoiser::Ar1AnalyticDenoiser(double rho, double sigma) : rho_(rho), sigma_(sigma) {
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("Ar1AnalyticDenoiser: |rho| must be < 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("Ar1AnalyticDenoiser: sigma must be > 0");
}

const Ar1AnalyticDenoiser::Solver& Ar1AnalyticDenoiser::solver_for(const std::vector<double>& alphas) const {
    auto it = cache_.find(alphas);
    if (it != cache_.end()) return it->second;

    const int f_count = static_cast<int>(alphas.size());
    Eigen::MatrixXd cov(f_count, f_count);
    for (int f = 0; f < f_count; ++f)
        for (int g = 0; g < f_count; ++g) cov(f, g) = sigma_ * sigma_ * std::pow(rho_, std::abs(f - g));

    Eigen::VectorXd a_sqrt(f_count), noise_var(f_count);
    for (int f = 0; f < f_count; ++f) {
        a_sqrt[f] = std::sqrt(alphas[f]);
        noise_var[f] = 1.0 - alphas[f];
    }
    Eigen::MatrixXd m = a_sqrt.asDiagonal() * cov * a_sqrt.asDiagonal();
    m.diagonal() += noise_var;

    Solver solver;
    solver.factor = Eigen::LDLT<Eigen::MatrixXd>(m);
    if (solver.factor.info() != Eigen::Success)
        throw std::runtime_error("Ar1AnalyticDenoiser: posterior system not SPD");
    solver.post_map = cov * a_sqrt.asDiagonal();
    return cache_.emplace(alphas, std::move(solver)).first->second;
}

LatentSequence Ar1AnalyticDenoiser::predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                                                const VarianceSchedule& vs) const {
    if (levels.frame_count() != xt.frames)
        throw std::invalid_argument("Ar1AnalyticDenoiser: level count mismatch");

    std::vector<double> alphas = alphas_for(levels, vs);
    const Solver& solver = solver_for(alphas);

    // Dimensions are independent: one F x F solve serves all D columns.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        xt.data.data(), xt.frames, xt.dim);
    Eigen::MatrixXd x0 = solver.post_map * solver.factor.solve(x);

    LatentSequence out(xt.frames, xt.dim);
    const std::int64_t dim = xt.dim;
    for (std::int64_t f = 0; f < xt.frames; ++f) {
        auto of = out.frame(f);
        if (levels.levels[f] == 0.0) {
            for (std::int64_t d = 0; d < dim; ++d) of[d] = 0.0;
            continue;
        }
        double cs = std::sqrt(alphas[f]);
        double cn = std::sqrt(1.0 - alphas[f]);
        auto xf = xt.frame(f);
        for (std::int64_t d = 0; d < dim; ++d) of[d] = (xf[d] - cs * x0(f, d)) / cn;
    }
    return out;
}

StationaryGpDenoiser::StationaryGpDenoiser(int frame_dim, CovarianceBuilder cov, MeanBuilder mean)
    : frame_dim_(frame_dim), cov_builder_(std::move(cov)), mean_builder_(std::move(mean)) {
    if (frame_dim < 1) throw std::invalid_argument("StationaryGpDenoiser: frame_dim must be >= 1");
}

LatentSequence StationaryGpDenoiser::predict_eps(const LatentSequence& xt, const FrameNoiseVector& levels,
                                                 const VarianceSchedule& vs) const {
    if (xt.dim != frame_dim_)
        throw std::invalid_argument("StationaryGpDenoiser: frame dim mismatch");
    if (levels.frame_count() != xt.frames)
        throw std::invalid_argument("StationaryGpDenoiser: level count mismatch");

    const int f_count = static_cast<int>(xt.frames);
    const std::int64_t n = xt.size();
    const std::int64_t dim = xt.dim;

    auto cov_it = cov_cache_.find(f_count);
    if (cov_it == cov_cache_.end())
        cov_it = cov_cache_.emplace(f_count, cov_builder_(f_count)).first;
    auto mean_it = mean_cache_.find(f_count);
    if (mean_it == mean_cache_.end())
        mean_it = mean_cache_.emplace(f_count, mean_builder_(f_count)).first;
    const Eigen::MatrixXd& cov = cov_it->second;
    const Eigen::VectorXd& mean = mean_it->second;
    if (cov.rows() != n || mean.size() != n)
        throw std::runtime_error("StationaryGpDenoiser: builder returned wrong size");

    std::vector<double> alphas = alphas_for(levels, vs);
    Key key{f_count, alphas};
    auto it = solver_cache_.find(key);
    if (it == solver_cache_.end()) {
        Eigen::VectorXd a_coord(n), n_coord(n);
        for (std::int64_t i = 0; i < n; ++i) {
            double a = alphas[i / dim];
            a_coord[i] = std::sqrt(a);
            n_coord[i] = 1.0 - a;
        }
        Solver solver;
        Eigen::MatrixXd m = a_coord.asDiagonal() * cov * a_coord.asDiagonal();
        m.diagonal() += n_coord;
        solver.factor = Eigen::LDLT<Eigen::MatrixXd>(m);
        if (solver.factor.info() != Eigen::Success)
            throw std::runtime_error("StationaryGpDenoiser: posterior system not SPD");
        solver.post_map = cov * a_coord.asDiagonal();
        it = solver_cache_.emplace(std::move(key), std::move(solver)).first;
    }

    Eigen::VectorXd a_coord(n);
    for (std::int64_t i = 0; i < n; ++i) a_coord[i] = std::sqrt(alphas[i / dim]);

    Eigen::Map<const Eigen::VectorXd> x(xt.data.data(), n);
    Eigen::VectorXd residual = x - a_coord.cwiseProduct(mean);
    Eigen::VectorXd x0 = mean + it->second.post_map * it->second.factor.solve(residual);

    LatentSequence out(xt.frames, xt.dim);
    fill_eps_from_x0(xt, x0, alphas, levels, out);
    return out;
}

}  // namespace pavd
