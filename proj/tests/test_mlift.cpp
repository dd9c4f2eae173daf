#include <doctest.h>

#include "meanstab/mlift.hpp"
#include "meanstab/numkernel.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace meanstab;

namespace {

std::mt19937_64 rng(20240915);

Matrix random_matrix(int n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    return a;
}

Vector random_vector(int n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = u(rng);
    return x;
}

double rel_err(const Matrix& got, const Matrix& want) {
    const double denom = std::max(1.0, want.norm());
    return (got - want).norm() / denom;
}

}  // namespace

TEST_CASE("basis enumerates degree-m exponents in descending lex order") {
    const MultiIndexBasis b(2, 2);
    REQUIRE(b.size() == 3);
    CHECK(b.index(0) == std::vector<int>{2, 0});
    CHECK(b.index(1) == std::vector<int>{1, 1});
    CHECK(b.index(2) == std::vector<int>{0, 2});

    const MultiIndexBasis b3(3, 2);
    REQUIRE(b3.size() == 6);
    CHECK(b3.index(0) == std::vector<int>{2, 0, 0});
    CHECK(b3.index(1) == std::vector<int>{1, 1, 0});
    CHECK(b3.index(2) == std::vector<int>{1, 0, 1});
    CHECK(b3.index(3) == std::vector<int>{0, 2, 0});
    CHECK(b3.index(4) == std::vector<int>{0, 1, 1});
    CHECK(b3.index(5) == std::vector<int>{0, 0, 2});
}

TEST_CASE("basis size is binomial(n+m-1, m) and position inverts index") {
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 4; ++m) {
            const MultiIndexBasis b(n, m);
            // binomial(n+m-1, m) via exact integer arithmetic
            long long expect = 1;
            for (int k = 1; k <= m; ++k) expect = expect * (n - 1 + k) / k;
            CHECK(b.size() == static_cast<int>(expect));
            for (int k = 0; k < b.size(); ++k) {
                int total = 0;
                for (int e : b.index(k)) {
                    CHECK(e >= 0);
                    total += e;
                }
                CHECK(total == m);
                CHECK(b.position(b.index(k)) == k);
            }
        }
    }
}

TEST_CASE("basis rejects degenerate arguments") {
    CHECK_THROWS_AS(MultiIndexBasis(0, 2), DimensionError);
    CHECK_THROWS_AS(MultiIndexBasis(2, 0), DimensionError);
    CHECK_THROWS_AS(MultiIndexBasis(2, -1), DimensionError);
    const MultiIndexBasis b(2, 2);
    CHECK_THROWS_AS(b.position({1, 0}), DimensionError);
    CHECK_THROWS_AS(b.position({3, -1}), DimensionError);
}

TEST_CASE("multinomial weights are exact") {
    const MultiIndexBasis b(3, 3);
    // (3,0,0) -> 3!/3! = 1, (1,1,1) -> 3!/1 = 6, (2,1,0) -> 3!/2! = 3
    CHECK(b.multinomial(b.position({3, 0, 0})) == 1);
    CHECK(b.multinomial(b.position({1, 1, 1})) == 6);
    CHECK(b.multinomial(b.position({2, 1, 0})) == 3);
    CHECK(b.weight(b.position({1, 1, 1})) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));
}

TEST_CASE("lift of a 2-vector at m = 2 matches the closed form") {
    Vector x(2);
    x << 1.0, 2.0;
    const Vector lifted = lift_vector(x, 2);
    REQUIRE(lifted.size() == 3);
    CHECK(lifted(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lifted(1) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(lifted(2) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("lift norm equals the m-th power of the vector norm") {
    for (int trial = 0; trial < 1200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int m = 1 + static_cast<int>(rng() % 4);
        const Vector x = random_vector(n, 2.0);
        const double lhs = lift_vector(x, m).norm();
        const double rhs = std::pow(x.norm(), m);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, rhs));
    }
}

TEST_CASE("induced matrix of the identity is the lifted identity") {
    for (int n = 1; n <= 3; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const LiftedMatrix lifted = induced_matrix(Matrix::Identity(n, n), m);
            CHECK(lifted.kind == LiftKind::Induced);
            CHECK(rel_err(lifted.entries, Matrix::Identity(lifted.basis.size(), lifted.basis.size())) == 0.0);
        }
    }
}

TEST_CASE("induced matrix of a general 2x2 at m = 2 matches the closed form") {
    const double a = 0.7, b = -1.3, c = 0.4, d = 2.1;
    Matrix A(2, 2);
    A << a, b, c, d;
    const double s2 = std::sqrt(2.0);
    Matrix want(3, 3);
    want << a * a, s2 * a * b, b * b,
            s2 * a * c, a * d + b * c, s2 * b * d,
            c * c, s2 * c * d, d * d;
    CHECK(rel_err(induced_matrix(A, 2).entries, want) <= 1e-14);
}

TEST_CASE("induced matrix reproduces the lift of the image vector") {
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int m = 1 + static_cast<int>(rng() % 4);
        const Matrix a = random_matrix(n);
        const Vector x = random_vector(n);
        const LiftedMatrix am = induced_matrix(a, m);
        const Vector lhs = am.entries * lift_vector(x, am.basis);
        const Vector rhs = lift_vector(a * x, am.basis);
        CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("induced matrix is multiplicative") {
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int m = 1 + static_cast<int>(rng() % 4);
        const Matrix a = random_matrix(n);
        const Matrix b = random_matrix(n);
        const Matrix lhs = induced_matrix(a * b, m).entries;
        const Matrix rhs = induced_matrix(a, m).entries * induced_matrix(b, m).entries;
        CHECK(rel_err(lhs, rhs) <= 1e-10);
    }
}

TEST_CASE("degree-1 lifts return the matrix itself") {
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const Matrix a = random_matrix(n);
        CHECK((induced_matrix(a, 1).entries - a).norm() == 0.0);
        CHECK((infinitesimal_lift(a, 1).entries - a).norm() == 0.0);
    }
}

TEST_CASE("infinitesimal lift of a diagonal matrix is diagonal with exponent-weighted entries") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 0.3;
    a(1, 1) = -0.9;
    const LiftedMatrix lifted = infinitesimal_lift(a, 2);
    CHECK(lifted.kind == LiftKind::Infinitesimal);
    Matrix want = Matrix::Zero(3, 3);
    want(0, 0) = 2 * 0.3;
    want(1, 1) = 0.3 + (-0.9);
    want(2, 2) = 2 * (-0.9);
    CHECK(rel_err(lifted.entries, want) <= 1e-15);
}

TEST_CASE("infinitesimal lift of a general 2x2 at m = 2 matches the closed form") {
    const double a = -0.2, b = 1.1, c = 0.5, d = 0.8;
    Matrix A(2, 2);
    A << a, b, c, d;
    const double s2 = std::sqrt(2.0);
    Matrix want(3, 3);
    want << 2 * a, s2 * b, 0,
            s2 * c, a + d, s2 * b,
            0, s2 * c, 2 * d;
    CHECK(rel_err(infinitesimal_lift(A, 2).entries, want) <= 1e-15);
}

TEST_CASE("matrix exponential commutes with the lifts") {
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int m = 1 + static_cast<int>(rng() % 4);
        const Matrix a = random_matrix(n);
        for (double t : {0.1, 1.0}) {
            const Matrix lhs = expm(infinitesimal_lift(a, m).entries * t);
            const Matrix rhs = induced_matrix(expm(a * t), m).entries;
            CHECK(rel_err(lhs, rhs) <= 1e-9);
        }
    }
}

TEST_CASE("shifting a matrix by c times identity shifts its lift by m c times identity") {
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 3);
        const int m = 1 + static_cast<int>(rng() % 4);
        const double c = random_vector(1)(0);
        const Matrix a = random_matrix(n);
        const Matrix shifted =
            infinitesimal_lift(a + c * Matrix::Identity(n, n), m).entries;
        const Matrix expect = infinitesimal_lift(a, m).entries +
                              m * c * Matrix::Identity(shifted.rows(), shifted.cols());
        CHECK(rel_err(shifted, expect) <= 1e-12);
    }
}

TEST_CASE("lift of a Metzler flow keeps the induced exponential nonnegative") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 3);
        const int m = 1 + static_cast<int>(rng() % 3);
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = (i == j) ? -u(rng) : u(rng);
        const Matrix lifted = induced_matrix(expm(a * 0.7), m).entries;
        CHECK(lifted.minCoeff() >= -1e-12);
    }
}

TEST_CASE("lift constructors reject non-square and degenerate input") {
    Matrix rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(induced_matrix(rect, 2), DimensionError);
    CHECK_THROWS_AS(infinitesimal_lift(rect, 2), DimensionError);
    CHECK_THROWS_AS(induced_matrix(Matrix::Identity(2, 2), 0), DimensionError);
    CHECK_THROWS_AS(infinitesimal_lift(Matrix::Identity(2, 2), 0), DimensionError);
}
