#include "meanstab/numkernel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace meanstab {

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("expm: matrix must be square");
    if (!a.allFinite()) throw ValidationError("expm: matrix has non-finite entries");
    return a.exp();
}

SpectralSummary spectral_summary(const Matrix& a, int dimension_cap) {
    if (a.rows() != a.cols()) throw DimensionError("spectral_summary: matrix must be square");
    if (a.rows() > dimension_cap) {
        throw DimensionError("spectral_summary: dimension " + std::to_string(a.rows()) +
                             " exceeds cap " + std::to_string(dimension_cap));
    }
    if (!a.allFinite()) throw ValidationError("spectral_summary: matrix has non-finite entries");

    Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("spectral_summary: QR iteration did not converge");
    }

    SpectralSummary out;
    out.eigenvalues.reserve(static_cast<size_t>(a.rows()));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        out.eigenvalues.push_back(solver.eigenvalues()[i]);
    }
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
              [](const std::complex<double>& x, const std::complex<double>& y) {
                  if (x.real() != y.real()) return x.real() > y.real();
                  return x.imag() > y.imag();
              });

    out.spectral_radius = 0.0;
    out.spectral_abscissa = -std::numeric_limits<double>::infinity();
    for (const auto& ev : out.eigenvalues) {
        out.spectral_radius = std::max(out.spectral_radius, std::abs(ev));
        out.spectral_abscissa = std::max(out.spectral_abscissa, ev.real());
    }
    return out;
}

void gauss_legendre_rule(int nodes, std::vector<double>& points, std::vector<double>& weights) {
    if (nodes < 1) throw DimensionError("gauss_legendre_rule: node count must be >= 1");
    const int n = nodes;
    points.assign(static_cast<size_t>(n), 0.0);
    weights.assign(static_cast<size_t>(n), 0.0);

    // Roots of P_n by Newton iteration on the three-term recurrence.
    const int half = (n + 1) / 2;
    for (int k = 0; k < half; ++k) {
        double x = std::cos(M_PI * (static_cast<double>(k) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / static_cast<double>(j);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        points[static_cast<size_t>(k)] = -x;
        points[static_cast<size_t>(n - 1 - k)] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[static_cast<size_t>(k)] = w;
        weights[static_cast<size_t>(n - 1 - k)] = w;
    }
}

Matrix gauss_legendre(const std::function<Matrix(double)>& f, double a, double b, int nodes) {
    if (!(a < b)) throw ValidationError("gauss_legendre: interval must satisfy a < b");
    std::vector<double> pts, wts;
    gauss_legendre_rule(nodes, pts, wts);
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    Matrix acc;
    for (int k = 0; k < nodes; ++k) {
        Matrix fk = f(mid + hw * pts[static_cast<size_t>(k)]);
        if (acc.size() == 0) {
            acc = Matrix::Zero(fk.rows(), fk.cols());
        }
        acc += wts[static_cast<size_t>(k)] * fk;
    }
    return hw * acc;
}

Matrix integrate_matrix(const std::function<Matrix(double)>& f, double a, double b) {
    constexpr double kTol = 1e-10;
    constexpr int kMaxNodes = 2048;
    int nodes = 32;
    Matrix prev = gauss_legendre(f, a, b, nodes);
    while (nodes < kMaxNodes) {
        nodes *= 2;
        Matrix next = gauss_legendre(f, a, b, nodes);
        if ((next - prev).cwiseAbs().maxCoeff() < kTol) return next;
        prev = std::move(next);
    }
    return prev;
}

}  // namespace meanstab
