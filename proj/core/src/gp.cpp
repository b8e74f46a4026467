#include "trendtune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "trendtune/errors.hpp"

namespace trendtune {

namespace {

double kernel(std::span<const double> a, std::span<const double> b,
              const GaussianProcess::Hyperparams& h) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = (a[d] - b[d]) / h.length_scales[d];
        acc += diff * diff;
    }
    return h.signal_variance * std::exp(-0.5 * acc);
}

Eigen::MatrixXd gram(const std::vector<std::vector<double>>& x,
                     const GaussianProcess::Hyperparams& h) {
    const Eigen::Index n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel(x[i], x[j], h);
            k(i, j) = v;
            k(j, i) = v;
        }
        k(i, i) += GaussianProcess::kJitter;
    }
    return k;
}

}  // namespace

double GaussianProcess::log_marginal_likelihood(const Hyperparams& hyper) const {
    const Eigen::Index n = static_cast<Eigen::Index>(x_.size());
    const Eigen::MatrixXd k = gram(x_, hyper);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    Eigen::Map<const Eigen::VectorXd> y(y_std_.data(), n);
    const Eigen::VectorXd alpha = llt.solve(y);
    double log_det = 0.0;
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(l(i, i));
    return -0.5 * y.dot(alpha) - log_det - 0.5 * n * std::log(2.0 * 3.14159265358979323846);
}

void GaussianProcess::fit(std::vector<std::vector<double>> inputs, std::vector<double> targets,
                          Rng& rng) {
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw DomainError("gp fit: need matching, non-empty inputs and targets");
    }
    const std::size_t dims = inputs[0].size();
    if (dims == 0) throw DomainError("gp fit: zero-dimensional inputs");
    for (const std::vector<double>& row : inputs) {
        if (row.size() != dims) throw DomainError("gp fit: ragged input rows");
    }
    for (double t : targets) {
        if (!std::isfinite(t)) throw DomainError("gp fit: non-finite target");
    }

    x_ = std::move(inputs);
    const std::size_t n = targets.size();
    y_mean_ = 0.0;
    for (double t : targets) y_mean_ += t;
    y_mean_ /= static_cast<double>(n);
    double var = 0.0;
    for (double t : targets) var += (t - y_mean_) * (t - y_mean_);
    var /= static_cast<double>(n);
    y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
    y_std_.resize(n);
    for (std::size_t i = 0; i < n; ++i) y_std_[i] = (targets[i] - y_mean_) / y_scale_;

    // Multi-start random search over log length-scales and log signal
    // variance; inputs live in [0,1] so the scale ranges are generic.
    Hyperparams best;
    best.length_scales.assign(dims, 0.3);
    best.signal_variance = 1.0;
    double best_lml = log_marginal_likelihood(best);

    constexpr int kStarts = 32;
    for (int s = 0; s < kStarts; ++s) {
        Hyperparams cand;
        cand.length_scales.resize(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            cand.length_scales[d] = std::exp(rng.uniform(std::log(0.05), std::log(2.0)));
        }
        cand.signal_variance = std::exp(rng.uniform(std::log(0.25), std::log(4.0)));
        const double lml = log_marginal_likelihood(cand);
        if (lml > best_lml) {
            best_lml = lml;
            best = cand;
        }
    }
    // Local coordinate refinement around the best start.
    constexpr int kRounds = 3;
    for (int round = 0; round < kRounds; ++round) {
        const double factor = round == 0 ? 1.5 : (round == 1 ? 1.2 : 1.1);
        for (std::size_t d = 0; d <= dims; ++d) {
            for (double mult : {1.0 / factor, factor}) {
                Hyperparams cand = best;
                if (d < dims) cand.length_scales[d] *= mult;
                else cand.signal_variance *= mult;
                const double lml = log_marginal_likelihood(cand);
                if (lml > best_lml) {
                    best_lml = lml;
                    best = cand;
                }
            }
        }
    }
    hyper_ = best;

    const Eigen::Index ni = static_cast<Eigen::Index>(n);
    Eigen::LLT<Eigen::MatrixXd> llt(gram(x_, hyper_));
    if (llt.info() != Eigen::Success) {
        throw EvalError("gp fit: kernel matrix is not positive definite");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    chol_.assign(n * n, 0.0);
    for (Eigen::Index i = 0; i < ni; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) chol_[i * n + j] = l(i, j);
    }
    Eigen::Map<const Eigen::VectorXd> y(y_std_.data(), ni);
    const Eigen::VectorXd alpha = llt.solve(y);
    alpha_.assign(alpha.data(), alpha.data() + n);
    fitted_ = true;
}

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> x) const {
    if (!fitted_) throw DomainError("gp predict: not fitted");
    const std::size_t n = x_.size();
    if (x.size() != x_[0].size()) throw DomainError("gp predict: dimension mismatch");

    std::vector<double> k_star(n);
    for (std::size_t i = 0; i < n; ++i) k_star[i] = kernel(x, x_[i], hyper_);

    double mean_std = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_std += k_star[i] * alpha_[i];

    // v = L⁻¹ k*; predictive variance = k(x,x) − vᵀv.
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = k_star[i];
        for (std::size_t j = 0; j < i; ++j) acc -= chol_[i * n + j] * v[j];
        v[i] = acc / chol_[i * n + i];
    }
    double var_std = hyper_.signal_variance + kJitter;
    for (std::size_t i = 0; i < n; ++i) var_std -= v[i] * v[i];
    var_std = std::max(var_std, 0.0);

    Prediction p;
    p.mean = mean_std * y_scale_ + y_mean_;
    p.variance = var_std * y_scale_ * y_scale_;
    return p;
}

}  // namespace trendtune
