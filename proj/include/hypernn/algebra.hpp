#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypernn/tensor.hpp"

namespace hypernn {

/// A finite-dimensional real algebra given by its rank-3 structure tensor.
/// structure()[i][j][k] is the coefficient of e_k in the product e_i . e_j.
/// Immutable after construction.
class Algebra {
public:
    /// Validates shape and finiteness; the unital convention (e_0 = 1) is
    /// diagnosed via unital_violation(), not enforced.
    Algebra(std::string name, std::size_t dim, Tensor structure);

    const std::string& name() const { return name_; }
    std::size_t dim() const { return dim_; }
    const Tensor& structure() const { return structure_; }

    double coeff(std::size_t i, std::size_t j, std::size_t k) const {
        return structure_[(i * dim_ + j) * dim_ + k];
    }

    /// Max deviation from A[0][j][k] = d_jk and A[i][0][k] = d_ik.
    double unital_violation() const { return unital_violation_; }

private:
    std::string name_;
    std::size_t dim_;
    Tensor structure_;
    double unital_violation_;
};

struct AlgebraReport {
    bool is_unital = false;
    bool is_commutative = false;
    bool is_associative = false;
    bool is_left_nondegenerate = false;
    bool is_right_nondegenerate = false;
    double unital_violation = 0.0;
    double commutative_violation = 0.0;
    double associative_violation = 0.0;
    double tol = 0.0;
};

Algebra algebra_from_table(std::string name, std::size_t dim, const Tensor& table);

/// z[k] = sum_{i,j} A[i][j][k] x[i] y[j].
std::vector<double> algebra_mul(const Algebra& alg, std::span<const double> x,
                                std::span<const double> y);

struct CheckResult {
    bool ok;
    double max_violation;
};

CheckResult check_unital(const Algebra& alg, double tol);
CheckResult check_commutative(const Algebra& alg, double tol);

/// Brute force over basis triples; O(dim^3) algebra_mul calls.
CheckResult check_associative(const Algebra& alg, double tol);

struct NondegeneracyResult {
    bool left;
    bool right;
};

/// Rank test on the n x n^2 matricizations of left/right multiplication;
/// singular values below tol * sigma_max count as zero.
NondegeneracyResult check_nondegenerate(const Algebra& alg, double tol);

AlgebraReport algebra_report(const Algebra& alg, double tol);

/// Built-in algebras: real, complex, quaternion, split_complex, dual.
const std::vector<std::string>& builtin_algebra_names();
Algebra builtin_algebra(const std::string& name);

// JSON file forms: dense {"name", "dim", "table": [n][n][n]} or sparse
// {"name", "dim", "sparse": [[i, j, k, coeff], ...]} with absent triples zero.
Algebra load_algebra_json(const std::string& path);
Algebra parse_algebra_json(const std::string& text);
std::string algebra_to_json(const Algebra& alg);

/// Resolves "builtin:<name>" against the registry, anything else as a path.
Algebra resolve_algebra(const std::string& name_or_path);

}  // namespace hypernn
