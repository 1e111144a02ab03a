#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.
// Oracles are written independently of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tabaudit/csv.hpp"
#include "tabaudit/matrix.hpp"
#include "tabaudit/table.hpp"

namespace tabaudit::testing {

inline DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0,
                                  double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = u(rng);
        }
    }
    return m;
}

// ---------------------------------------------------------------- AUC

/// Exhaustive pair counting: correct pairs + half the ties, over all pairs.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double correct = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) {
                continue;
            }
            pairs += 1.0;
            if (scores[i] > scores[j]) {
                correct += 1.0;
            } else if (scores[i] == scores[j]) {
                correct += 0.5;
            }
        }
    }
    return correct / pairs;
}

// ---------------------------------------------------------------- coverage

struct CoverageOracle {
    double recall = 0.0;
    double precision = 0.0;
    double delta_b = 0.0;
    double delta_a = 0.0;
};

inline double oracle_percentile(std::vector<double> v, double pct) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * pct / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) {
        return v.back();
    }
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

/// Full distance matrix between row sets, then sorted rows.
inline std::vector<std::vector<double>> distance_matrix(const std::vector<std::vector<double>>& p,
                                                        const std::vector<std::vector<double>>& q) {
    std::vector<std::vector<double>> d(p.size(), std::vector<double>(q.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < p[i].size(); ++c) {
                const double t = p[i][c] - q[j][c];
                s += t * t;
            }
            d[i][j] = std::sqrt(s);
        }
    }
    return d;
}

inline double mean_smallest(std::vector<double> row, std::size_t k, std::ptrdiff_t skip) {
    if (skip >= 0) {
        row.erase(row.begin() + skip);
    }
    std::sort(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        s += row[i];
    }
    return s / static_cast<double>(k);
}

inline std::vector<std::vector<double>> rows_of(const DenseMatrix& m) {
    std::vector<std::vector<double>> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        out[i].assign(r.begin(), r.end());
    }
    return out;
}

/// Recall (A covered by B), precision (B covered by A) and both thresholds,
/// from full distance matrices. Identical inputs exclude the query row from
/// cross-set neighbours as well.
inline CoverageOracle coverage_oracle(const DenseMatrix& a_in, const DenseMatrix& b_in, std::size_t k, double pct,
                                      bool normalize = true) {
    auto a = rows_of(a_in);
    auto b = rows_of(b_in);
    const std::size_t dim = a_in.cols();
    if (normalize) {
        for (std::size_t c = 0; c < dim; ++c) {
            double lo = a[0][c];
            double hi = a[0][c];
            for (const auto* set : {&a, &b}) {
                for (const auto& r : *set) {
                    lo = std::min(lo, r[c]);
                    hi = std::max(hi, r[c]);
                }
            }
            for (auto* set : {&a, &b}) {
                for (auto& r : *set) {
                    r[c] = hi > lo ? (r[c] - lo) / (hi - lo) : 0.0;
                }
            }
        }
    }
    const bool same = a_in.rows() == b_in.rows() && a_in.data() == b_in.data();
    const auto dab = distance_matrix(a, b);
    const auto dba = distance_matrix(b, a);
    const auto daa = distance_matrix(a, a);
    const auto dbb = distance_matrix(b, b);

    auto within = [&](const std::vector<std::vector<double>>& d) {
        std::vector<double> v;
        for (std::size_t i = 0; i < d.size(); ++i) {
            v.push_back(mean_smallest(d[i], k, static_cast<std::ptrdiff_t>(i)));
        }
        return v;
    };
    CoverageOracle o;
    o.delta_b = oracle_percentile(within(dbb), pct);
    o.delta_a = oracle_percentile(within(daa), pct);
    std::size_t covered_a = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        covered_a += mean_smallest(dab[i], k, same ? static_cast<std::ptrdiff_t>(i) : -1) <= o.delta_b;
    }
    std::size_t covered_b = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        covered_b += mean_smallest(dba[i], k, same ? static_cast<std::ptrdiff_t>(i) : -1) <= o.delta_a;
    }
    o.recall = static_cast<double>(covered_a) / static_cast<double>(a.size());
    o.precision = static_cast<double>(covered_b) / static_cast<double>(b.size());
    return o;
}

// ---------------------------------------------------------------- tables

/// Random delimited text: numeric, integer-coded and token columns, with
/// occasional empty cells.
inline std::string random_table_text(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                     double missing_rate = 0.02) {
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    std::vector<int> kind(cols);
    for (auto& k : kind) {
        k = std::uniform_int_distribution<int>(0, 3)(rng);
    }
    std::string text;
    for (std::size_t j = 0; j < cols; ++j) {
        text += (j ? "," : "") + std::string("c") + std::to_string(j);
    }
    text += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (j) {
                text += ',';
            }
            if (u(rng) < missing_rate) {
                continue;
            }
            char buf[64];
            switch (kind[j]) {
            case 0: std::snprintf(buf, sizeof(buf), "%.6f", z(rng)); break;
            case 1: std::snprintf(buf, sizeof(buf), "%.4f", std::exp(z(rng))); break;
            case 2: std::snprintf(buf, sizeof(buf), "%d", std::uniform_int_distribution<int>(0, 4)(rng)); break;
            default: std::snprintf(buf, sizeof(buf), "tok%d", std::uniform_int_distribution<int>(0, 3)(rng)); break;
            }
            text += buf;
        }
        text += '\n';
    }
    return text;
}

/// Same table with rows and columns permuted, re-serialised and re-parsed.
inline std::string permute_table_text(const std::string& text, std::mt19937_64& rng) {
    auto records = csv::parse(text, ',');
    const std::size_t cols = records.front().size();
    std::vector<std::size_t> cperm(cols);
    std::iota(cperm.begin(), cperm.end(), 0);
    std::shuffle(cperm.begin(), cperm.end(), rng);
    std::vector<csv::Record> body(records.begin() + 1, records.end());
    std::shuffle(body.begin(), body.end(), rng);
    auto emit = [&](const csv::Record& r) {
        csv::Record out(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            out[j] = r[cperm[j]];
        }
        return csv::join(out, ',') + "\n";
    };
    std::string out = emit(records.front());
    for (const auto& r : body) {
        out += emit(r);
    }
    return out;
}

// ---------------------------------------------------------------- statistics

/// P(|T| <= t) for Student t with integer df, by the finite trigonometric
/// series for odd and even degrees of freedom, in long double.
inline long double t_central_mass(long double t, unsigned df) {
    const long double pi = 3.141592653589793238462643383279502884L;
    const long double theta = std::atan(std::fabs(t) / std::sqrt(static_cast<long double>(df)));
    const long double s = std::sin(theta);
    const long double c = std::cos(theta);
    const long double c2 = c * c;
    if (df % 2 == 1) {
        if (df == 1) {
            return 2.0L * theta / pi;
        }
        long double term = c;
        long double sum = c;
        for (unsigned k = 3; k + 2 <= df; k += 2) {
            term *= c2 * static_cast<long double>(k - 1) / static_cast<long double>(k);
            sum += term;
        }
        return 2.0L / pi * (theta + s * sum);
    }
    long double term = 1.0L;
    long double sum = 1.0L;
    for (unsigned k = 2; k + 2 <= df; k += 2) {
        term *= c2 * static_cast<long double>(k - 1) / static_cast<long double>(k);
        sum += term;
    }
    return s * sum;
}

/// Two-sided p-value of r on df degrees of freedom.
inline double oracle_p_value(double r, unsigned df) {
    const long double rr = r;
    const long double t = std::fabs(rr) * std::sqrt(static_cast<long double>(df) / (1.0L - rr * rr));
    return static_cast<double>(1.0L - t_central_mass(t, df));
}

/// `count` mutually orthogonal unit vectors, each orthogonal to the constant
/// vector, by Gram-Schmidt on random draws.
inline std::vector<std::vector<double>> centred_orthonormal(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<std::vector<double>> basis{std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n)))};
    while (basis.size() < count + 1) {
        std::vector<double> v(n);
        for (auto& x : v) {
            x = z(rng);
        }
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    dot += v[i] * b[i];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    v[i] -= dot * b[i];
                }
            }
        }
        double norm = 0.0;
        for (double x : v) {
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : v) {
            x /= norm;
        }
        basis.push_back(std::move(v));
    }
    basis.erase(basis.begin());
    return basis;
}

} // namespace tabaudit::testing
