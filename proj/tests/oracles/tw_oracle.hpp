#pragma once

// Independent Tracy-Widom (beta = 1) oracle: F1(s) = det(I - K_s) with
// K_s(x, y) = Ai((x + y) / 2) / 2 on [s, inf), discretised by Gauss-Legendre
// quadrature (nodes from the Golub-Welsch eigenproblem) on [s, max(s, 0) + 16].

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/airy.hpp>

namespace sfbcid::oracle {

struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1].
inline Quadrature gauss_legendre(int n) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        j(k, k - 1) = b;
        j(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    Quadrature q;
    for (int i = 0; i < n; ++i) {
        q.nodes.push_back(es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        q.weights.push_back(2.0 * v * v);
    }
    return q;
}

inline double tw1_cdf_fredholm(double s, int n = 120) {
    static const Quadrature base = gauss_legendre(n);
    const Quadrature& q = n == 120 ? base : gauss_legendre(n);
    const double a = s;
    const double b = std::max(s, 0.0) + 16.0;
    const double half = 0.5 * (b - a);
    const int m = static_cast<int>(q.nodes.size());
    std::vector<double> x(m), w(m);
    for (int i = 0; i < m; ++i) {
        x[i] = a + half * (q.nodes[i] + 1.0);
        w[i] = half * q.weights[i];
    }
    Eigen::MatrixXd k(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            k(i, j) = (i == j ? 1.0 : 0.0) -
                      std::sqrt(w[i]) * 0.5 * boost::math::airy_ai(0.5 * (x[i] + x[j])) * std::sqrt(w[j]);
    return k.partialPivLu().determinant();
}

/// Central second difference of the oracle CDF.
inline double tw1_d2cdf_fredholm(double s, double h = 1e-2) {
    return (tw1_cdf_fredholm(s + h) - 2.0 * tw1_cdf_fredholm(s) + tw1_cdf_fredholm(s - h)) / (h * h);
}

/// Exhaustive binomial lower-tail sum with independent (log-space) terms.
inline double binomial_lower_tail(int k_tests, int c, double p) {
    double sum = 0.0;
    for (int i = 0; i <= std::min(c, k_tests); ++i) {
        const double lc = std::lgamma(k_tests + 1.0) - std::lgamma(i + 1.0) - std::lgamma(k_tests - i + 1.0);
        const double lp = (i ? i * std::log(p) : 0.0) + (k_tests - i ? (k_tests - i) * std::log1p(-p) : 0.0);
        sum += std::exp(lc + lp);
    }
    return sum;
}

}  // namespace sfbcid::oracle
