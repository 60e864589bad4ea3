#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "iidm/image.hpp"
#include "iidm/tensor.hpp"

namespace iidm {

/// Metric bundle. Mask accuracy M and aesthetic score A come from external
/// tooling and are carried through; fid and style similarity are computed
/// here. total must satisfy total == total_score(M, A, fid, S).
struct ScoreReport {
    double mask_accuracy = 0.0;  // M, percent
    double aesthetic = 0.0;      // A, percent
    double fid = 0.0;            // percent-scale distribution distance
    double style_similarity = 0.0; // S, percent
    double total = 0.0;          // T, percent
};

/// Weighted aggregate: (M/100) * [0.2*A + 0.3*(0.5*S + 50) + 0.5*(100-fid)].
/// Exact arithmetic, no clamping.
inline double total_score(double mask_accuracy, double aesthetic, double fid,
                          double style_sim) {
    return mask_accuracy / 100.0 *
           (0.2 * aesthetic + 0.3 * (0.5 * style_sim + 50.0) + 0.5 * (100.0 - fid));
}

inline bool report_consistent(const ScoreReport& r, double tol = 1e-9) {
    return std::abs(r.total - total_score(r.mask_accuracy, r.aesthetic, r.fid,
                                          r.style_similarity)) <= tol;
}

namespace detail {

/// Pearson correlation; returns 2.0 as a sentinel when either side has zero
/// variance (caller decides the convention).
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 2.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace detail

/// Style similarity S: Pearson correlation between the concatenated channel
/// histograms, on the percent scale with negative correlations clamped to 0.
/// Zero-variance histogram pairs score 100 when equal, else 0.
inline double style_similarity(const RgbImage& generated, const RgbImage& reference,
                               int bins = 256) {
    auto hg = channel_histogram(generated, bins);
    auto hr = channel_histogram(reference, bins);
    double rho = detail::pearson(hg, hr);
    if (rho > 1.5) // degenerate variance
        return hg == hr ? 100.0 : 0.0;
    return 100.0 * std::max(rho, 0.0);
}

/// Sample mean and unbiased covariance of a feature set (rows = samples).
inline void gaussian_fit(const std::vector<std::vector<double>>& features,
                         Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
    require(features.size() >= 2, "gaussian_fit: need at least 2 feature vectors");
    const std::size_t n = features.size();
    const std::size_t d = features.front().size();
    for (const auto& f : features)
        require(f.size() == d, "gaussian_fit: inconsistent feature dimensions");

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = features[i][j];
    mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
    cov = centered.transpose() * centered / static_cast<double>(n - 1);
}

/// Squared Frechet distance between two Gaussians:
///   ||m1 - m2||^2 + tr(c1 + c2 - 2 * (c1 c2)^{1/2}).
/// tr((c1 c2)^{1/2}) is evaluated as tr((s c1 s)^{1/2}) with s = c2^{1/2},
/// which is symmetric PSD, via eigendecomposition with negative eigenvalues
/// floored at 0.
inline double frechet_distance(const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1,
                               const Eigen::VectorXd& m2, const Eigen::MatrixXd& c2) {
    require(m1.size() == m2.size(), "frechet_distance: mean dimensions differ");
    require(c1.rows() == c1.cols() && c2.rows() == c2.cols() && c1.rows() == m1.size() &&
                c2.rows() == m2.size(),
            "frechet_distance: covariance dimensions do not match the means");

    auto sym_sqrt = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return Eigen::MatrixXd(es.eigenvectors() * ev.asDiagonal() *
                               es.eigenvectors().transpose());
    };

    Eigen::MatrixXd s = sym_sqrt(c2);
    Eigen::MatrixXd inner = s * c1 * s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
    double trace_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    double d = (m1 - m2).squaredNorm() + c1.trace() + c2.trace() - 2.0 * trace_sqrt;
    return std::max(d, 0.0);
}

/// Default feature extractor for desk-scale distribution distances:
/// per-channel mean, std and an 8-bin histogram (30 dimensions). Not
/// comparable to Inception-based FID numbers.
inline std::vector<double> channel_feature_vector(const RgbImage& image) {
    std::vector<double> f;
    f.reserve(30);
    std::size_t n = image.pixel_count();
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += image.pixels[i * 3 + c];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = image.pixels[i * 3 + c] - mean;
            var += d * d;
        }
        f.push_back(mean);
        f.push_back(std::sqrt(var / static_cast<double>(n)));
    }
    auto h = channel_histogram(image, 8);
    f.insert(f.end(), h.begin(), h.end());
    return f;
}

/// Frechet distance between Gaussian fits of two image sets under the
/// channel-statistics feature extractor.
inline double frechet_distance_between_sets(const std::vector<RgbImage>& a,
                                            const std::vector<RgbImage>& b) {
    std::vector<std::vector<double>> fa, fb;
    fa.reserve(a.size());
    fb.reserve(b.size());
    for (const auto& img : a) fa.push_back(channel_feature_vector(img));
    for (const auto& img : b) fb.push_back(channel_feature_vector(img));
    Eigen::VectorXd m1, m2;
    Eigen::MatrixXd c1, c2;
    gaussian_fit(fa, m1, c1);
    gaussian_fit(fb, m2, c2);
    return frechet_distance(m1, c1, m2, c2);
}

} // namespace iidm
