#include "meanstab/mlift.hpp"

#include <cmath>
#include <sstream>

namespace meanstab {

namespace {

// m! / (alpha_1! ... alpha_n!) as a chain of binomials, exact in 64 bits for
// every degree this library can realistically hold in memory.
unsigned long long multinomial_of(int m, const std::vector<int>& alpha) {
    auto binom = [](int n, int k) -> unsigned long long {
        unsigned long long r = 1;
        if (k > n - k) k = n - k;
        for (int i = 1; i <= k; ++i) {
            r = r * static_cast<unsigned long long>(n - k + i) / static_cast<unsigned long long>(i);
        }
        return r;
    };
    unsigned long long result = 1;
    int remaining = m;
    for (int a : alpha) {
        result *= binom(remaining, a);
        remaining -= a;
    }
    return result;
}

std::string index_to_string(const std::vector<int>& alpha) {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < alpha.size(); ++i) {
        if (i) os << ',';
        os << alpha[i];
    }
    os << ')';
    return os.str();
}

}  // namespace

MultiIndexBasis::MultiIndexBasis(int n, int m) : n_(n), m_(m) {
    if (n < 1) throw DimensionError("multi_index_basis: state dimension n must be >= 1");
    if (m < 1) throw DimensionError("multi_index_basis: lift degree m must be >= 1");

    // Descending lexicographic enumeration starting from (m, 0, ..., 0).
    std::vector<int> alpha(static_cast<size_t>(n), 0);
    alpha[0] = m;
    for (;;) {
        indices_.push_back(alpha);
        // successor: move one unit off the last nonzero entry before the tail
        int j = -1;
        for (int k = n - 2; k >= 0; --k) {
            if (alpha[static_cast<size_t>(k)] > 0) { j = k; break; }
        }
        if (j < 0) break;  // (0, ..., 0, m) reached
        int tail = alpha[static_cast<size_t>(n - 1)];
        alpha[static_cast<size_t>(j)] -= 1;
        alpha[static_cast<size_t>(j + 1)] = tail + 1;
        for (int k = j + 2; k < n; ++k) alpha[static_cast<size_t>(k)] = 0;
    }

    multinomials_.reserve(indices_.size());
    for (size_t k = 0; k < indices_.size(); ++k) {
        position_[indices_[k]] = static_cast<int>(k);
        multinomials_.push_back(multinomial_of(m, indices_[k]));
    }
}

int MultiIndexBasis::position(const std::vector<int>& alpha) const {
    auto it = position_.find(alpha);
    if (it == position_.end()) {
        throw DimensionError("MultiIndexBasis::position: " + index_to_string(alpha) +
                             " is not a degree-" + std::to_string(m_) + " exponent in " +
                             std::to_string(n_) + " variables");
    }
    return it->second;
}

double MultiIndexBasis::weight(int k) const {
    return std::sqrt(static_cast<double>(multinomials_[static_cast<size_t>(k)]));
}

MultiIndexBasis multi_index_basis(int n, int m) { return MultiIndexBasis(n, m); }

Vector lift_vector(const Vector& x, const MultiIndexBasis& basis) {
    if (x.size() != basis.n()) {
        throw DimensionError("lift_vector: vector length " + std::to_string(x.size()) +
                             " does not match basis dimension " + std::to_string(basis.n()));
    }
    Vector out(basis.size());
    for (int k = 0; k < basis.size(); ++k) {
        const auto& alpha = basis.index(k);
        double mono = 1.0;
        for (int i = 0; i < basis.n(); ++i) {
            for (int p = 0; p < alpha[static_cast<size_t>(i)]; ++p) mono *= x[i];
        }
        out[k] = basis.weight(k) * mono;
    }
    return out;
}

Vector lift_vector(const Vector& x, int m) {
    return lift_vector(x, MultiIndexBasis(static_cast<int>(x.size()), m));
}

LiftedMatrix induced_matrix(const Matrix& a, int m) {
    if (a.rows() != a.cols()) throw DimensionError("induced_matrix: matrix must be square");
    const int n = static_cast<int>(a.rows());
    MultiIndexBasis basis(n, m);
    const int nm = basis.size();
    Matrix out = Matrix::Zero(nm, nm);

    using Poly = std::map<std::vector<int>, double>;
    for (int r = 0; r < nm; ++r) {
        const auto& alpha = basis.index(r);
        // expand prod_i ((Ax)_i)^(alpha_i) into monomial coefficients
        Poly poly;
        poly[std::vector<int>(static_cast<size_t>(n), 0)] = 1.0;
        for (int i = 0; i < n; ++i) {
            for (int rep = 0; rep < alpha[static_cast<size_t>(i)]; ++rep) {
                Poly next;
                for (const auto& [beta, coeff] : poly) {
                    for (int j = 0; j < n; ++j) {
                        const double aij = a(i, j);
                        if (aij == 0.0) continue;
                        std::vector<int> nb = beta;
                        nb[static_cast<size_t>(j)] += 1;
                        next[nb] += coeff * aij;
                    }
                }
                poly.swap(next);
            }
        }
        const double fa = static_cast<double>(basis.multinomial(r));
        for (const auto& [beta, coeff] : poly) {
            const int c = basis.position(beta);
            const double fb = static_cast<double>(basis.multinomial(c));
            out(r, c) = std::sqrt(fa / fb) * coeff;
        }
    }
    return LiftedMatrix{std::move(basis), std::move(out), LiftKind::Induced};
}

LiftedMatrix infinitesimal_lift(const Matrix& a, int m) {
    if (a.rows() != a.cols()) throw DimensionError("infinitesimal_lift: matrix must be square");
    const int n = static_cast<int>(a.rows());
    MultiIndexBasis basis(n, m);
    const int nm = basis.size();
    Matrix out = Matrix::Zero(nm, nm);

    std::vector<int> beta;
    for (int r = 0; r < nm; ++r) {
        const auto& alpha = basis.index(r);
        const double fa = static_cast<double>(basis.multinomial(r));
        for (int i = 0; i < n; ++i) {
            const int ai = alpha[static_cast<size_t>(i)];
            if (ai == 0) continue;
            for (int j = 0; j < n; ++j) {
                beta = alpha;
                beta[static_cast<size_t>(i)] -= 1;
                beta[static_cast<size_t>(j)] += 1;
                const int c = basis.position(beta);
                const double fb = static_cast<double>(basis.multinomial(c));
                out(r, c) += std::sqrt(fa / fb) * static_cast<double>(ai) * a(i, j);
            }
        }
    }
    return LiftedMatrix{std::move(basis), std::move(out), LiftKind::Infinitesimal};
}

}  // namespace meanstab
