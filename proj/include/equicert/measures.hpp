#pragma once

#include "equicert/common.hpp"
#include "equicert/rng.hpp"

#include <string>
#include <vector>

namespace equicert {

// Gaussian on R^p, covariance may be singular (mass on an affine subspace).
// The eigendecomposition is computed once at construction and reused for
// sampling, rank and image queries.
class GaussianMeasure {
public:
    GaussianMeasure(Vec mean, Mat cov);

    static GaussianMeasure standard(int dim);
    static GaussianMeasure diagonal(Vec mean, const Vec& variances);

    int dim() const { return static_cast<int>(mean_.size()); }
    const Vec& mean() const { return mean_; }
    const Mat& cov() const { return cov_; }

    int rank() const { return rank_; }
    // Orthonormal basis of the covariance image (p x rank).
    const Mat& image_basis() const { return image_; }

    Vec sample(Rng& rng) const;  // consumes exactly dim() gaussians per draw

private:
    Vec mean_;
    Mat cov_;
    Mat image_;    // p x rank
    Mat factor_;   // p x p, factor_ * z ~ N(0, cov)
    int rank_ = 0;
};

// KL(nu || mu) in nats; +inf when nu is not absolutely continuous w.r.t. mu
// (covariance images differ, or the mean gap leaves the image; both decided
// at tolerance 1e-8).
double kl_gaussian(const GaussianMeasure& nu, const GaussianMeasure& mu);

GaussianMeasure pushforward_gaussian(const Mat& a, const GaussianMeasure& g);

struct KlDecomposition {
    double total = 0.0;
    double pushforward_kl = 0.0;
    double residual = 0.0;  // >= -1e-12 by construction; exactly 0 at fixed points
};

// Splits KL(nu||mu) into the part visible after pushing both measures
// through the idempotent map `a` plus a nonnegative remainder.  When the two
// covariances agree and are positive definite, the remainder is recomputed
// independently through the conditional-Gaussian route and the two values
// are required to agree (NumericError otherwise).
KlDecomposition kl_decompose_gaussian(const GaussianMeasure& nu, const GaussianMeasure& mu,
                                      const Mat& a);

// The independent remainder formula used for the cross-check: with equal
// positive-definite covariances, rotate into (image(a), kernel(a))
// coordinates and take the conditional mean-shift term.
double kl_residual_conditional(const GaussianMeasure& nu, const GaussianMeasure& mu,
                               const Mat& a);

// Probability vector on {0..k-1}.
struct DiscreteMeasure {
    std::vector<double> weights;

    explicit DiscreteMeasure(std::vector<double> w);
    int size() const { return static_cast<int>(weights.size()); }
};

double kl_discrete(const DiscreteMeasure& nu, const DiscreteMeasure& mu);

// alpha maps each source state to a target state in {0..target_size-1}.
DiscreteMeasure pushforward_discrete(const std::vector<int>& alpha, int target_size,
                                     const DiscreteMeasure& m);

// Discrete analogue of the Gaussian decomposition; the remainder is computed
// directly from density ratios (not by subtraction), so the additivity
// identity is a genuine output of the computation.
KlDecomposition kl_decompose_discrete(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                      const std::vector<int>& alpha, int target_size);

void save_gaussian_csv(const GaussianMeasure& g, const std::string& path);
GaussianMeasure load_gaussian_csv(const std::string& path);

}  // namespace equicert
