#include "equicert/measures.hpp"

#include "equicert/csv.hpp"

#include <cmath>
#include <limits>

namespace equicert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRankTol = 1e-12;   // relative eigenvalue cutoff
constexpr double kSupportTol = 1e-8;  // absolute-continuity decisions

}  // namespace

GaussianMeasure::GaussianMeasure(Vec mean, Mat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    const int p = static_cast<int>(mean_.size());
    if (cov_.rows() != p || cov_.cols() != p)
        throw DimensionError("gaussian: covariance shape does not match the mean");
    if ((cov_ - cov_.transpose()).lpNorm<Eigen::Infinity>() > 1e-10)
        throw NumericError("gaussian: covariance is not symmetric");
    cov_ = ((cov_ + cov_.transpose()) / 2.0).eval();

    Eigen::SelfAdjointEigenSolver<Mat> eig(cov_);
    if (eig.info() != Eigen::Success) throw NumericError("gaussian: eigendecomposition failed");
    Vec lam = eig.eigenvalues();
    const double lmax = std::max(1.0, lam.size() ? lam.maxCoeff() : 0.0);
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] < -1e-10 * lmax) throw NumericError("gaussian: covariance is not PSD");
        if (lam[i] < kRankTol * lmax) lam[i] = 0.0;
    }
    rank_ = 0;
    for (int i = 0; i < lam.size(); ++i)
        if (lam[i] > 0.0) ++rank_;
    image_.resize(p, rank_);
    int c = 0;
    for (int i = 0; i < lam.size(); ++i)
        if (lam[i] > 0.0) image_.col(c++) = eig.eigenvectors().col(i);
    factor_ = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

GaussianMeasure GaussianMeasure::standard(int dim) {
    return GaussianMeasure(Vec::Zero(dim), Mat::Identity(dim, dim));
}

GaussianMeasure GaussianMeasure::diagonal(Vec mean, const Vec& variances) {
    if (mean.size() != variances.size())
        throw DimensionError("gaussian: mean/variance size mismatch");
    Mat cov = variances.asDiagonal();
    return GaussianMeasure(std::move(mean), std::move(cov));
}

Vec GaussianMeasure::sample(Rng& rng) const {
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = rng.gaussian();
    return mean_ + factor_ * z;
}

double kl_gaussian(const GaussianMeasure& nu, const GaussianMeasure& mu) {
    if (nu.dim() != mu.dim()) throw DimensionError("kl_gaussian: dimension mismatch");

    // Absolute continuity between Gaussians forces equal covariance images
    // and a mean gap inside that image; otherwise the KL is infinite.
    if (nu.rank() != mu.rank()) return kInf;
    const Mat& u_mu = mu.image_basis();
    const Mat& u_nu = nu.image_basis();
    const Mat proj_mu = u_mu * u_mu.transpose();
    if ((u_nu - proj_mu * u_nu).lpNorm<Eigen::Infinity>() > kSupportTol) return kInf;

    const Vec delta = nu.mean() - mu.mean();
    if ((delta - proj_mu * delta).lpNorm<Eigen::Infinity>() > kSupportTol) return kInf;

    if (nu.rank() == 0) return 0.0;  // both are point masses at the same mean

    // Work in mu's image coordinates, where both reduced covariances are PD.
    const Mat s_mu = u_mu.transpose() * mu.cov() * u_mu;
    const Mat s_nu = u_mu.transpose() * nu.cov() * u_mu;
    const Vec d = u_mu.transpose() * delta;
    const int r = nu.rank();

    const Eigen::LLT<Mat> chol(s_mu);
    if (chol.info() != Eigen::Success)
        throw NumericError("kl_gaussian: reduced covariance not positive definite");
    const Mat solved = chol.solve(s_nu);
    const double quad = d.dot(chol.solve(d));

    double logdet_mu = 0.0;
    for (int i = 0; i < r; ++i) logdet_mu += 2.0 * std::log(chol.matrixL()(i, i));
    const Eigen::LLT<Mat> chol_nu(s_nu);
    if (chol_nu.info() != Eigen::Success)
        throw NumericError("kl_gaussian: reduced covariance not positive definite");
    double logdet_nu = 0.0;
    for (int i = 0; i < r; ++i) logdet_nu += 2.0 * std::log(chol_nu.matrixL()(i, i));

    return 0.5 * (solved.trace() + quad - r + logdet_mu - logdet_nu);
}

GaussianMeasure pushforward_gaussian(const Mat& a, const GaussianMeasure& g) {
    if (a.cols() != g.dim()) throw DimensionError("pushforward: matrix width != dimension");
    Mat cov = a * g.cov() * a.transpose();
    cov = ((cov + cov.transpose()) / 2.0).eval();
    return GaussianMeasure(a * g.mean(), std::move(cov));
}

double kl_residual_conditional(const GaussianMeasure& nu, const GaussianMeasure& mu,
                               const Mat& a) {
    if ((nu.cov() - mu.cov()).lpNorm<Eigen::Infinity>() > 1e-10)
        throw NumericError("conditional residual needs equal covariances");
    const int p = nu.dim();
    if (nu.rank() != p)
        throw NumericError("conditional residual needs a positive-definite covariance");

    // Coordinates adapted to the projection: first block reads off the image
    // component, second block the kernel component.  The pushforward only
    // sees the first block, so the remainder is the conditional mean-shift
    // of the second block given the first.
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smax = std::max(1.0, svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10 * smax) ++r;
    const Mat u = svd.matrixU().leftCols(r);           // basis of image(a)
    const Mat w = svd.matrixV().rightCols(p - r);      // basis of kernel(a)

    Mat l(p, p);
    l.topRows(r) = u.transpose() * a;
    l.bottomRows(p - r) = w.transpose() * (Mat::Identity(p, p) - a);

    const Vec dl = l * (nu.mean() - mu.mean());
    const Mat c = l * nu.cov() * l.transpose();
    if (r == p) return 0.0;
    if (r == 0) {
        const Eigen::LLT<Mat> chol(c);
        return 0.5 * dl.dot(chol.solve(dl));
    }
    const Mat caa = c.topLeftCorner(r, r);
    const Mat cab = c.topRightCorner(r, p - r);
    const Mat cba = c.bottomLeftCorner(p - r, r);
    const Mat cbb = c.bottomRightCorner(p - r, p - r);
    const Eigen::LLT<Mat> chol_aa(caa);
    if (chol_aa.info() != Eigen::Success)
        throw NumericError("conditional residual: degenerate image block");
    const Vec da = dl.head(r);
    const Vec db = dl.tail(p - r);
    const Vec db_given_a = db - cba * chol_aa.solve(da);
    const Mat schur = cbb - cba * chol_aa.solve(cab);
    const Eigen::LLT<Mat> chol_s(schur);
    if (chol_s.info() != Eigen::Success)
        throw NumericError("conditional residual: degenerate conditional block");
    return 0.5 * db_given_a.dot(chol_s.solve(db_given_a));
}

KlDecomposition kl_decompose_gaussian(const GaussianMeasure& nu, const GaussianMeasure& mu,
                                      const Mat& a) {
    if (a.rows() != a.cols() || a.cols() != nu.dim())
        throw DimensionError("kl_decompose: projection must be square in the measure dimension");
    if ((a * a - a).lpNorm<Eigen::Infinity>() > 1e-10)
        throw NumericError("kl_decompose: map is not idempotent");

    KlDecomposition d;
    d.total = kl_gaussian(nu, mu);
    d.pushforward_kl = kl_gaussian(pushforward_gaussian(a, nu), pushforward_gaussian(a, mu));
    d.residual = d.total - d.pushforward_kl;
    if (std::isinf(d.total)) d.residual = kInf;

    if (std::isfinite(d.total) && nu.rank() == nu.dim() &&
        (nu.cov() - mu.cov()).lpNorm<Eigen::Infinity>() <= 1e-10) {
        const double independent = kl_residual_conditional(nu, mu, a);
        if (std::abs(independent - d.residual) > 1e-9 * std::max(1.0, std::abs(d.total)))
            throw NumericError("kl_decompose: subtraction and conditional remainders disagree (" +
                               fmt_double(d.residual) + " vs " + fmt_double(independent) + ")");
    }
    return d;
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> w) : weights(std::move(w)) {
    if (weights.empty()) throw ConfigError("discrete measure: empty support");
    double total = 0.0;
    for (double v : weights) {
        if (!(v >= 0.0)) throw ConfigError("discrete measure: negative weight");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("discrete measure: weights sum to " + fmt_double(total));
}

double kl_discrete(const DiscreteMeasure& nu, const DiscreteMeasure& mu) {
    if (nu.size() != mu.size()) throw DimensionError("kl_discrete: support size mismatch");
    double kl = 0.0;
    for (int i = 0; i < nu.size(); ++i) {
        const double n = nu.weights[i], m = mu.weights[i];
        if (n == 0.0) continue;
        if (m == 0.0) return kInf;
        kl += n * std::log(n / m);
    }
    return kl;
}

DiscreteMeasure pushforward_discrete(const std::vector<int>& alpha, int target_size,
                                     const DiscreteMeasure& m) {
    if (static_cast<int>(alpha.size()) != m.size())
        throw DimensionError("pushforward_discrete: map length != support size");
    std::vector<double> out(static_cast<std::size_t>(target_size), 0.0);
    for (int i = 0; i < m.size(); ++i) {
        const int j = alpha[static_cast<std::size_t>(i)];
        if (j < 0 || j >= target_size)
            throw DimensionError("pushforward_discrete: target index out of range");
        out[static_cast<std::size_t>(j)] += m.weights[static_cast<std::size_t>(i)];
    }
    return DiscreteMeasure(std::move(out));
}

KlDecomposition kl_decompose_discrete(const DiscreteMeasure& nu, const DiscreteMeasure& mu,
                                      const std::vector<int>& alpha, int target_size) {
    KlDecomposition d;
    d.total = kl_discrete(nu, mu);
    const auto push_nu = pushforward_discrete(alpha, target_size, nu);
    const auto push_mu = pushforward_discrete(alpha, target_size, mu);
    d.pushforward_kl = kl_discrete(push_nu, push_mu);

    if (std::isinf(d.total)) {
        d.residual = kInf;
        return d;
    }
    // Remainder from density ratios directly: sum of nu * log of the ratio
    // between the per-state and the per-class likelihood ratios.
    double res = 0.0;
    for (int i = 0; i < nu.size(); ++i) {
        const double n = nu.weights[static_cast<std::size_t>(i)];
        if (n == 0.0) continue;
        const double m = mu.weights[static_cast<std::size_t>(i)];
        const int j = alpha[static_cast<std::size_t>(i)];
        const double pn = push_nu.weights[static_cast<std::size_t>(j)];
        const double pm = push_mu.weights[static_cast<std::size_t>(j)];
        res += n * (std::log(n / m) - std::log(pn / pm));
    }
    d.residual = res;
    return d;
}

void save_gaussian_csv(const GaussianMeasure& g, const std::string& path) {
    CsvTable t({"field", "i", "j", "value"});
    for (int i = 0; i < g.dim(); ++i) t.add_row({"mean", std::to_string(i), "", fmt_double(g.mean()[i])});
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j)
            t.add_row({"cov", std::to_string(i), std::to_string(j), fmt_double(g.cov()(i, j))});
    t.write(path);
}

GaussianMeasure load_gaussian_csv(const std::string& path) {
    const auto t = CsvTable::read(path);
    if (t.header() != std::vector<std::string>{"field", "i", "j", "value"})
        throw IoError("gaussian csv: unexpected header in " + path);
    int dim = 0;
    for (const auto& row : t.rows())
        if (row[0] == "mean") dim = std::max(dim, static_cast<int>(parse_long(row[1])) + 1);
    Vec mean = Vec::Zero(dim);
    Mat cov = Mat::Zero(dim, dim);
    for (const auto& row : t.rows()) {
        if (row[0] == "mean") {
            mean[parse_long(row[1])] = parse_double(row[3]);
        } else if (row[0] == "cov") {
            cov(parse_long(row[1]), parse_long(row[2])) = parse_double(row[3]);
        } else {
            throw IoError("gaussian csv: unknown field '" + row[0] + "'");
        }
    }
    return GaussianMeasure(std::move(mean), std::move(cov));
}

}  // namespace equicert
