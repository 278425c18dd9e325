#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hypernn/algebra.hpp"

using namespace hypernn;

namespace {

std::vector<double> random_element(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    return v;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Brute-force nondegeneracy oracle: Gaussian elimination rank of the n x n^2
// matricization, independent of the production singular-value path.
std::size_t matrix_rank(std::vector<std::vector<double>> m, double tol) {
    const std::size_t rows = m.size();
    const std::size_t cols = m.empty() ? 0 : m[0].size();
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        for (std::size_t r = rank + 1; r < rows; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        if (std::abs(m[piv][c]) <= tol) continue;
        std::swap(m[rank], m[piv]);
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank) continue;
            const double f = m[r][c] / m[rank][c];
            for (std::size_t cc = c; cc < cols; ++cc) m[r][cc] -= f * m[rank][cc];
        }
        ++rank;
    }
    return rank;
}

NondegeneracyResult nondegenerate_oracle(const Algebra& alg, double tol) {
    const std::size_t n = alg.dim();
    std::vector<std::vector<double>> left(n, std::vector<double>(n * n));
    std::vector<std::vector<double>> right(n, std::vector<double>(n * n));
    double scale = tol;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                const double c = alg.coeff(i, j, k);
                left[i][j * n + k] = c;
                right[j][i * n + k] = c;
                scale = std::max(scale, std::abs(c));
            }
    const double eff = tol * scale * static_cast<double>(n);
    return {matrix_rank(left, eff) == n, matrix_rank(right, eff) == n};
}

}  // namespace

TEST_CASE("complex multiplication matches the closed form") {
    Algebra c = builtin_algebra("complex");
    const double x[] = {1.0, 2.0};
    const double y[] = {3.0, 4.0};
    auto z = algebra_mul(c, x, y);
    // (1 + 2i)(3 + 4i) = -5 + 10i
    REQUIRE(z.size() == 2);
    CHECK(z[0] == doctest::Approx(-5.0).epsilon(1e-15));
    CHECK(z[1] == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("quaternion basis products follow the standard table") {
    Algebra q = builtin_algebra("quaternion");
    auto basis = [&](std::size_t i) {
        std::vector<double> e(4, 0.0);
        e[i] = 1.0;
        return e;
    };
    auto mul = [&](std::size_t i, std::size_t j) { return algebra_mul(q, basis(i), basis(j)); };
    CHECK(mul(1, 2) == std::vector<double>{0, 0, 0, 1});   // i*j = k
    CHECK(mul(2, 1) == std::vector<double>{0, 0, 0, -1});  // j*i = -k
    CHECK(mul(2, 3) == std::vector<double>{0, 1, 0, 0});   // j*k = i
    CHECK(mul(3, 1) == std::vector<double>{0, 0, 1, 0});   // k*i = j
    CHECK(mul(1, 1) == std::vector<double>{-1, 0, 0, 0});
    CHECK(mul(2, 2) == std::vector<double>{-1, 0, 0, 0});
    CHECK(mul(3, 3) == std::vector<double>{-1, 0, 0, 0});
    CHECK(mul(0, 2) == std::vector<double>{0, 0, 1, 0});
}

TEST_CASE("split_complex and dual squares of the non-real unit") {
    Algebra s = builtin_algebra("split_complex");
    Algebra d = builtin_algebra("dual");
    const double e1[] = {0.0, 1.0};
    CHECK(algebra_mul(s, e1, e1) == std::vector<double>{1, 0});
    CHECK(algebra_mul(d, e1, e1) == std::vector<double>{0, 0});
}

TEST_CASE("algebra_mul is bilinear for every builtin algebra") {
    std::mt19937_64 rng(41);
    for (const auto& name : builtin_algebra_names()) {
        CAPTURE(name);
        Algebra alg = builtin_algebra(name);
        const std::size_t n = alg.dim();
        for (int trial = 0; trial < 20; ++trial) {
            auto x = random_element(n, rng);
            auto y = random_element(n, rng);
            auto z = random_element(n, rng);
            const double a = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;

            // (x + a*y) * z == x*z + a*(y*z)
            std::vector<double> lhs_in(n);
            for (std::size_t i = 0; i < n; ++i) lhs_in[i] = x[i] + a * y[i];
            auto lhs = algebra_mul(alg, lhs_in, z);
            auto xz = algebra_mul(alg, x, z);
            auto yz = algebra_mul(alg, y, z);
            std::vector<double> rhs(n);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = xz[i] + a * yz[i];
            CHECK(max_abs_diff(lhs, rhs) <= 1e-12);

            // z * (x + a*y) == z*x + a*(z*y)
            auto lhs2 = algebra_mul(alg, z, lhs_in);
            auto zx = algebra_mul(alg, z, x);
            auto zy = algebra_mul(alg, z, y);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = zx[i] + a * zy[i];
            CHECK(max_abs_diff(lhs2, rhs) <= 1e-12);
        }
    }
}

TEST_CASE("the identity element acts as identity in every builtin algebra") {
    std::mt19937_64 rng(43);
    for (const auto& name : builtin_algebra_names()) {
        CAPTURE(name);
        Algebra alg = builtin_algebra(name);
        std::vector<double> one(alg.dim(), 0.0);
        one[0] = 1.0;
        auto x = random_element(alg.dim(), rng);
        CHECK(max_abs_diff(algebra_mul(alg, one, x), x) <= 1e-15);
        CHECK(max_abs_diff(algebra_mul(alg, x, one), x) <= 1e-15);
        CHECK(check_unital(alg, 1e-12).ok);
    }
}

TEST_CASE("property checks classify the builtin algebras") {
    const double tol = 1e-10;
    for (const auto& name : builtin_algebra_names()) {
        CAPTURE(name);
        AlgebraReport r = algebra_report(builtin_algebra(name), tol);
        CHECK(r.is_unital);
        CHECK(r.is_associative);
        CHECK(r.is_commutative == (name != "quaternion"));
        // All builtins are nondegenerate: even for dual numbers, x * 1 = x,
        // so multiplication by a nonzero element is never the zero map.
        CHECK(r.is_left_nondegenerate);
        CHECK(r.is_right_nondegenerate);
    }
}

TEST_CASE("quaternion commutativity violation is exactly 2, first at (1,2,3)") {
    Algebra q = builtin_algebra("quaternion");
    CheckResult r = check_commutative(q, 1e-10);
    CHECK_FALSE(r.ok);
    CHECK(r.max_violation == 2.0);
    // |A[1][2][k] - A[2][1][k]| peaks at k = 3: e1 e2 = e3, e2 e1 = -e3.
    double first = 0.0;
    std::size_t fi = 0, fj = 0, fk = 0;
    bool found = false;
    for (std::size_t i = 0; i < 4 && !found; ++i)
        for (std::size_t j = 0; j < 4 && !found; ++j)
            for (std::size_t k = 0; k < 4 && !found; ++k) {
                const double v = std::abs(q.coeff(i, j, k) - q.coeff(j, i, k));
                if (v > 1e-10) {
                    first = v;
                    fi = i;
                    fj = j;
                    fk = k;
                    found = true;
                }
            }
    REQUIRE(found);
    CHECK(first == 2.0);
    CHECK(fi == 1);
    CHECK(fj == 2);
    CHECK(fk == 3);
}

TEST_CASE("nondegeneracy matches a Gaussian-elimination rank oracle") {
    const double tol = 1e-10;
    std::mt19937_64 rng(47);
    for (const auto& name : builtin_algebra_names()) {
        CAPTURE(name);
        Algebra alg = builtin_algebra(name);
        NondegeneracyResult got = check_nondegenerate(alg, tol);
        NondegeneracyResult want = nondegenerate_oracle(alg, tol);
        CHECK(got.left == want.left);
        CHECK(got.right == want.right);
    }
    // Random dense tables up to dim 6 are almost surely nondegenerate; the
    // oracle must agree either way.
    for (std::size_t n = 2; n <= 6; ++n) {
        Tensor table = Tensor::zeros({n, n, n});
        for (double& v : table.data()) v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
        Algebra alg("random", n, table);
        NondegeneracyResult got = check_nondegenerate(alg, tol);
        NondegeneracyResult want = nondegenerate_oracle(alg, tol);
        CHECK(got.left == want.left);
        CHECK(got.right == want.right);
    }
}

TEST_CASE("a zero row in the left matricization is flagged left-degenerate") {
    // dim-2 table: e0 acts as identity on the right only; left action of e1 is 0.
    Tensor table = Tensor::zeros({2, 2, 2});
    table[0 * 4 + 0 * 2 + 0] = 1.0;  // e0 e0 = e0
    table[0 * 4 + 1 * 2 + 1] = 1.0;  // e0 e1 = e1
    Algebra alg("left_degenerate", 2, table);
    NondegeneracyResult r = check_nondegenerate(alg, 1e-10);
    CHECK_FALSE(r.left);
    CHECK(r.right);
    NondegeneracyResult o = nondegenerate_oracle(alg, 1e-10);
    CHECK(o.left == r.left);
    CHECK(o.right == r.right);
}

TEST_CASE("associativity check flags a non-associative table") {
    // Halve the e1 e2 = e3 entry of the quaternion table: then
    // (e1 e1) e2 = -e2 but e1 (e1 e2) = 0.5 e1 e3 = -0.25 e2.
    Algebra q = builtin_algebra("quaternion");
    Tensor table = q.structure();
    table[(1 * 4 + 2) * 4 + 3] = 0.5;
    Algebra bent("bent", 4, table);
    CHECK_FALSE(check_associative(bent, 1e-10).ok);
    CHECK(check_associative(q, 1e-10).ok);
}

TEST_CASE("dense JSON round trip reproduces the table bit-exactly") {
    for (const auto& name : builtin_algebra_names()) {
        CAPTURE(name);
        Algebra alg = builtin_algebra(name);
        Algebra back = parse_algebra_json(algebra_to_json(alg));
        CHECK(back.name() == alg.name());
        REQUIRE(back.dim() == alg.dim());
        for (std::size_t i = 0; i < alg.structure().size(); ++i)
            CHECK(back.structure()[i] == alg.structure()[i]);
    }
}

TEST_CASE("sparse JSON form fills in zeros for absent triples") {
    const char* text = R"({
        "name": "complex",
        "dim": 2,
        "sparse": [[0,0,0,1.0],[0,1,1,1.0],[1,0,1,1.0],[1,1,0,-1.0]]
    })";
    Algebra sparse = parse_algebra_json(text);
    Algebra dense = builtin_algebra("complex");
    REQUIRE(sparse.dim() == 2);
    for (std::size_t i = 0; i < dense.structure().size(); ++i)
        CHECK(sparse.structure()[i] == dense.structure()[i]);
}

TEST_CASE("algebra JSON parsing rejects malformed input") {
    CHECK_THROWS(parse_algebra_json("not json"));
    CHECK_THROWS(parse_algebra_json(R"({"name":"x","dim":2})"));
    CHECK_THROWS(parse_algebra_json(R"({"name":"x","dim":2,"table":[[ [1,0] ]]})"));
    CHECK_THROWS(parse_algebra_json(R"({"name":"x","dim":0,"table":[]})"));
    CHECK_THROWS(parse_algebra_json(R"({"name":"x","dim":1,"sparse":[[0,0,2,1.0]]})"));
}

TEST_CASE("resolve_algebra understands the builtin prefix") {
    Algebra q = resolve_algebra("builtin:quaternion");
    CHECK(q.dim() == 4);
    CHECK_THROWS(resolve_algebra("builtin:octonion_typo"));
}

TEST_CASE("algebra construction validates its table") {
    CHECK_THROWS_AS(Algebra("bad", 2, Tensor::zeros({2, 2})), std::invalid_argument);
    CHECK_THROWS_AS(Algebra("bad", 3, Tensor::zeros({2, 2, 2})), std::invalid_argument);
    Tensor nan_table = Tensor::zeros({1, 1, 1});
    nan_table[0] = std::nan("");
    CHECK_THROWS_AS(Algebra("bad", 1, nan_table), std::invalid_argument);
}

TEST_CASE("real algebra reduces algebra_mul to scalar multiplication") {
    Algebra r = builtin_algebra("real");
    const double x[] = {3.0};
    const double y[] = {-7.0};
    CHECK(algebra_mul(r, x, y) == std::vector<double>{-21.0});
}
