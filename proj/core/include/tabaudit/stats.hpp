#pragma once

#include <cstddef>
#include <span>

#include "tabaudit/matrix.hpp"

namespace tabaudit {

struct CorrelationReport {
    double r = 0.0;
    double p = 1.0;          ///< two-sided, Student t with `df` degrees of freedom
    std::size_t n = 0;
    std::size_t n_covariates = 0;
    std::size_t df = 0;      ///< n - 2 - n_covariates
    bool degenerate = false; ///< covariates explained x or y completely; r reported as 0
};

/// Two-sided p-value of a correlation r on df degrees of freedom.
double correlation_p_value(double r, std::size_t df);

/// Student t CDF.
double student_t_cdf(double t, double df);

/// Pearson correlation. Throws DomainError for n < 3, unequal lengths or a
/// constant input.
CorrelationReport pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of the residuals of x and y after least-squares
/// regression on [1, covariates]. An empty covariate matrix reduces to
/// pearson(x, y) exactly. Throws DomainError on rank deficiency or df < 1.
CorrelationReport partial_correlation(std::span<const double> x, std::span<const double> y,
                                      const DenseMatrix& covariates);

/// Smallest |r| detectable at the given power and two-sided alpha, by the
/// Fisher z approximation. Requires n >= 4.
double detectable_r(std::size_t n, double power = 0.8, double alpha = 0.05);

} // namespace tabaudit
