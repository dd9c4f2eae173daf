#pragma once

#include "meanstab/common.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace meanstab {

/// Full spectrum of a real square matrix plus the two decisive scalars.
struct SpectralSummary {
    /// All eigenvalues with multiplicity, sorted by (Re, Im) descending.
    std::vector<std::complex<double>> eigenvalues;
    double spectral_radius;
    double spectral_abscissa;
};

/// Matrix exponential (scaling-and-squaring Pade). Rejects non-square or
/// non-finite input.
Matrix expm(const Matrix& a);

/// Eigenvalues of a real square matrix via the real Schur form. Throws
/// ConvergenceError if the QR iteration fails, DimensionError above the cap.
SpectralSummary spectral_summary(const Matrix& a, int dimension_cap = 2048);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre_rule(int nodes, std::vector<double>& points, std::vector<double>& weights);

/// Fixed-order Gauss-Legendre integration of a matrix-valued integrand over
/// [a, b], applied entrywise.
Matrix gauss_legendre(const std::function<Matrix(double)>& f, double a, double b, int nodes);

/// Adaptive integration: Gauss-Legendre with node doubling from 32 until the
/// entrywise change drops below 1e-10 (or the node budget runs out).
Matrix integrate_matrix(const std::function<Matrix(double)>& f, double a, double b);

}  // namespace meanstab
