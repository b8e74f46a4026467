#pragma once

#include <span>
#include <vector>

#include "trendtune/rng.hpp"

namespace trendtune {

// Gaussian-process regressor with a squared-exponential kernel and
// per-dimension length-scales (ARD). Inputs are expected normalized to
// [0,1] per dimension; targets are standardized internally. Kernel
// hyperparameters are fit by multi-start gradient-free maximization of
// the log marginal likelihood.
class GaussianProcess {
public:
    struct Hyperparams {
        std::vector<double> length_scales;  // one per input dimension
        double signal_variance = 1.0;
    };

    struct Prediction {
        double mean = 0.0;
        double variance = 0.0;
    };

    // Fits hyperparameters and caches the Cholesky factorization.
    // Requires at least 1 observation; all rows share one width.
    void fit(std::vector<std::vector<double>> inputs, std::vector<double> targets, Rng& rng);

    Prediction predict(std::span<const double> x) const;

    bool fitted() const { return fitted_; }
    const Hyperparams& hyperparams() const { return hyper_; }

    // Log marginal likelihood of the stored data under the given
    // hyperparameters (standardized-target scale).
    double log_marginal_likelihood(const Hyperparams& hyper) const;

    static constexpr double kJitter = 1e-8;

private:
    std::vector<std::vector<double>> x_;
    std::vector<double> y_std_;  // standardized targets
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Hyperparams hyper_;
    std::vector<double> chol_;   // lower Cholesky of K, row-major
    std::vector<double> alpha_;  // K⁻¹ y
    bool fitted_ = false;
};

}  // namespace trendtune
