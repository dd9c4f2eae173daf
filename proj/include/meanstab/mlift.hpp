#pragma once

#include "meanstab/common.hpp"

#include <map>
#include <vector>

namespace meanstab {

/// Exponent basis of the degree-m monomials in n variables.
///
/// The basis holds every exponent vector alpha = (alpha_1, ..., alpha_n) with
/// nonnegative entries summing to m, in descending lexicographic order:
/// (m,0,...,0) first, (0,...,0,m) last. For n = m = 2 the order is
/// (2,0), (1,1), (0,2), so the lift of x reads [x1^2, sqrt(2) x1 x2, x2^2].
/// Every lifted object in this library indexes its coordinates through one of
/// these bases, which keeps the ordering convention global.
class MultiIndexBasis {
public:
    MultiIndexBasis(int n, int m);

    int n() const { return n_; }
    int m() const { return m_; }

    /// Number of basis monomials, binomial(n+m-1, m).
    int size() const { return static_cast<int>(indices_.size()); }

    const std::vector<int>& index(int k) const { return indices_[static_cast<size_t>(k)]; }
    const std::vector<std::vector<int>>& indices() const { return indices_; }

    /// Ordinal of an exponent vector; throws DimensionError if it is not a
    /// member of the basis.
    int position(const std::vector<int>& alpha) const;

    /// Multinomial m! / (alpha_1! ... alpha_n!) of the k-th index, exact.
    unsigned long long multinomial(int k) const { return multinomials_[static_cast<size_t>(k)]; }

    /// sqrt of the multinomial, the monomial weight used by the lift.
    double weight(int k) const;

private:
    int n_;
    int m_;
    std::vector<std::vector<int>> indices_;
    std::map<std::vector<int>, int> position_;
    std::vector<unsigned long long> multinomials_;
};

MultiIndexBasis multi_index_basis(int n, int m);

/// Degree-m lift of x: entries sqrt(m!/alpha!) * x^alpha over the basis
/// order. Satisfies ||lift_vector(x, m)|| = ||x||^m.
Vector lift_vector(const Vector& x, const MultiIndexBasis& basis);
Vector lift_vector(const Vector& x, int m);

enum class LiftKind { Induced, Infinitesimal };

/// A dense matrix acting on lifted coordinates, together with the basis that
/// defines those coordinates.
///
/// Induced kind: the unique matrix with lift(A x) = entries * lift(x).
/// Infinitesimal kind: the generator of the lifted flow,
/// exp(entries * t) = induced lift of exp(A t).
struct LiftedMatrix {
    MultiIndexBasis basis;
    Matrix entries;
    LiftKind kind;
};

/// Degree-m induced matrix of A (multiplicative lift). Entries are computed
/// by exact multinomial expansion of prod_i ((Ax)_i)^(alpha_i).
LiftedMatrix induced_matrix(const Matrix& a, int m);

/// Degree-m infinitesimal lift of A (additive lift). Entry (alpha, beta) is
/// nonzero only when beta = alpha - e_i + e_j for a single exponent move, and
/// then equals sqrt(alpha!/beta!) * alpha_i * a_ij, summed over such moves.
LiftedMatrix infinitesimal_lift(const Matrix& a, int m);

}  // namespace meanstab
