#include "tabaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "tabaudit/error.hpp"

namespace tabaudit {

namespace {

/// r from already-centred vectors; nullopt when either has zero norm.
std::optional<double> centred_correlation(const std::vector<double>& dx, const std::vector<double>& dy) {
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        sxy += dx[i] * dy[i];
        sxx += dx[i] * dx[i];
        syy += dy[i] * dy[i];
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        return std::nullopt;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> centred(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] - mean;
    }
    return out;
}

} // namespace

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) {
        throw DomainError("student_t_cdf: df must be positive");
    }
    if (std::isinf(t)) {
        return t > 0 ? 1.0 : 0.0;
    }
    return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

double correlation_p_value(double r, std::size_t df) {
    if (df == 0) {
        throw DomainError("correlation_p_value: no degrees of freedom");
    }
    const double a = std::abs(r);
    if (a >= 1.0) {
        return 0.0;
    }
    const double t = a * std::sqrt(static_cast<double>(df) / (1.0 - a * a));
    const boost::math::students_t_distribution<double> dist(static_cast<double>(df));
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

CorrelationReport pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DomainError("pearson: x and y differ in length");
    }
    if (x.size() < 3) {
        throw DomainError("pearson: need at least 3 observations");
    }
    const auto r = centred_correlation(centred(x), centred(y));
    if (!r) {
        throw DomainError("pearson: constant input");
    }
    CorrelationReport rep;
    rep.n = x.size();
    rep.df = rep.n - 2;
    rep.r = *r;
    rep.p = correlation_p_value(rep.r, rep.df);
    return rep;
}

CorrelationReport partial_correlation(std::span<const double> x, std::span<const double> y,
                                      const DenseMatrix& covariates) {
    if (covariates.cols() == 0) {
        return pearson(x, y);
    }
    const std::size_t n = x.size();
    const std::size_t q = covariates.cols();
    if (y.size() != n || covariates.rows() != n) {
        throw DomainError("partial_correlation: x, y and covariates differ in length");
    }
    if (n < q + 3) {
        throw DomainError("partial_correlation: need n >= covariates + 3");
    }
    Eigen::MatrixXd design(n, q + 1);
    for (std::size_t i = 0; i < n; ++i) {
        design(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t j = 0; j < q; ++j) {
            design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = covariates(i, j);
        }
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (static_cast<std::size_t>(qr.rank()) < q + 1) {
        throw DomainError("partial_correlation: covariates are rank deficient");
    }
    auto residual = [&](std::span<const double> v) {
        const Eigen::Map<const Eigen::VectorXd> target(v.data(), static_cast<Eigen::Index>(n));
        const Eigen::VectorXd fitted = design * qr.solve(target);
        const Eigen::VectorXd res = target - fitted;
        // Residual noise relative to the input counts as an exact fit.
        const double scale = std::max(target.norm(), 1.0);
        std::vector<double> out(res.data(), res.data() + n);
        const bool exact = res.norm() <= 1e-10 * scale;
        return std::pair{std::move(out), exact};
    };
    const auto [rx, x_exact] = residual(x);
    const auto [ry, y_exact] = residual(y);

    CorrelationReport rep;
    rep.n = n;
    rep.n_covariates = q;
    rep.df = n - 2 - q;
    const auto r = (x_exact || y_exact) ? std::nullopt : centred_correlation(rx, ry);
    if (!r) {
        rep.degenerate = true;
        rep.r = 0.0;
        rep.p = 1.0;
        return rep;
    }
    rep.r = *r;
    rep.p = correlation_p_value(rep.r, rep.df);
    return rep;
}

double detectable_r(std::size_t n, double power, double alpha) {
    if (n < 4) {
        throw DomainError("detectable_r: n must be >= 4");
    }
    if (!(power > 0.0 && power < 1.0) || !(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("detectable_r: power and alpha must lie in (0, 1)");
    }
    const boost::math::normal_distribution<double> z;
    const double za = boost::math::quantile(z, 1.0 - alpha / 2.0);
    const double zb = boost::math::quantile(z, power);
    return std::tanh((za + zb) / std::sqrt(static_cast<double>(n) - 3.0));
}

} // namespace tabaudit
