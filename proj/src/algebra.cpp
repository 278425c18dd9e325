#include "hypernn/algebra.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hypernn {

namespace {

double unital_deviation(std::size_t dim, const Tensor& s) {
    double worst = 0.0;
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t k = 0; k < dim; ++k) {
            const double want = (j == k) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(s.at({0, j, k}) - want));
            worst = std::max(worst, std::abs(s.at({j, 0, k}) - want));
        }
    return worst;
}

}  // namespace

Algebra::Algebra(std::string name, std::size_t dim, Tensor structure)
    : name_(std::move(name)), dim_(dim), structure_(std::move(structure)) {
    if (dim_ == 0) throw std::invalid_argument("algebra: dim must be >= 1");
    const std::vector<std::size_t> want{dim_, dim_, dim_};
    if (structure_.shape() != want)
        throw std::invalid_argument("algebra: structure tensor must have shape (n, n, n)");
    if (!structure_.all_finite())
        throw std::invalid_argument("algebra: structure tensor has non-finite entries");
    unital_violation_ = unital_deviation(dim_, structure_);
}

Algebra algebra_from_table(std::string name, std::size_t dim, const Tensor& table) {
    return Algebra(std::move(name), dim, table);
}

std::vector<double> algebra_mul(const Algebra& alg, std::span<const double> x,
                                std::span<const double> y) {
    const std::size_t n = alg.dim();
    if (x.size() != n || y.size() != n)
        throw std::invalid_argument("algebra_mul: vector length does not match algebra dim");
    std::vector<double> z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            const double xy = x[i] * y[j];
            if (xy == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) z[k] += alg.coeff(i, j, k) * xy;
        }
    }
    return z;
}

CheckResult check_unital(const Algebra& alg, double tol) {
    const double v = alg.unital_violation();
    return {v <= tol, v};
}

CheckResult check_commutative(const Algebra& alg, double tol) {
    const std::size_t n = alg.dim();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                worst = std::max(worst, std::abs(alg.coeff(i, j, k) - alg.coeff(j, i, k)));
    return {worst <= tol, worst};
}

CheckResult check_associative(const Algebra& alg, double tol) {
    const std::size_t n = alg.dim();
    double worst = 0.0;
    std::vector<double> ei(n), ej(n), ek(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(ei.begin(), ei.end(), 0.0);
        ei[i] = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            std::fill(ej.begin(), ej.end(), 0.0);
            ej[j] = 1.0;
            const auto ij = algebra_mul(alg, ei, ej);
            for (std::size_t k = 0; k < n; ++k) {
                std::fill(ek.begin(), ek.end(), 0.0);
                ek[k] = 1.0;
                const auto lhs = algebra_mul(alg, ij, ek);
                const auto rhs = algebra_mul(alg, ei, algebra_mul(alg, ej, ek));
                for (std::size_t c = 0; c < n; ++c)
                    worst = std::max(worst, std::abs(lhs[c] - rhs[c]));
            }
        }
    }
    return {worst <= tol, worst};
}

namespace {

// Singular values of an r x c matrix (r <= 32) via Jacobi eigenvalues of M M^T.
std::vector<double> singular_values(const std::vector<double>& m, std::size_t r, std::size_t c) {
    std::vector<double> g(r * r, 0.0);
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = a; b < r; ++b) {
            double acc = 0.0;
            for (std::size_t t = 0; t < c; ++t) acc += m[a * c + t] * m[b * c + t];
            g[a * r + b] = g[b * r + a] = acc;
        }

    // Cyclic Jacobi sweeps on the symmetric Gram matrix.
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < r; ++p)
            for (std::size_t q = p + 1; q < r; ++q) off += g[p * r + q] * g[p * r + q];
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < r; ++p)
            for (std::size_t q = p + 1; q < r; ++q) {
                const double apq = g[p * r + q];
                if (apq == 0.0) continue;
                const double theta = (g[q * r + q] - g[p * r + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t i = 0; i < r; ++i) {
                    const double gip = g[i * r + p], giq = g[i * r + q];
                    g[i * r + p] = cs * gip - sn * giq;
                    g[i * r + q] = sn * gip + cs * giq;
                }
                for (std::size_t i = 0; i < r; ++i) {
                    const double gpi = g[p * r + i], gqi = g[q * r + i];
                    g[p * r + i] = cs * gpi - sn * gqi;
                    g[q * r + i] = sn * gpi + cs * gqi;
                }
            }
    }

    std::vector<double> sv(r);
    for (std::size_t i = 0; i < r; ++i) sv[i] = std::sqrt(std::max(0.0, g[i * r + i]));
    return sv;
}

bool full_rank(const std::vector<double>& m, std::size_t r, std::size_t c, double tol) {
    const auto sv = singular_values(m, r, c);
    double top = 0.0;
    for (double s : sv) top = std::max(top, s);
    if (top == 0.0) return false;
    for (double s : sv)
        if (s <= tol * top) return false;
    return true;
}

}  // namespace

NondegeneracyResult check_nondegenerate(const Algebra& alg, double tol) {
    const std::size_t n = alg.dim();
    // Left: x -> (sum_i A[i][j][k] x[i])_{jk}; matricize as L[i, (j,k)].
    std::vector<double> left(n * n * n), right(n * n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                left[i * n * n + j * n + k] = alg.coeff(i, j, k);
                right[j * n * n + i * n + k] = alg.coeff(i, j, k);
            }
    return {full_rank(left, n, n * n, tol), full_rank(right, n, n * n, tol)};
}

AlgebraReport algebra_report(const Algebra& alg, double tol) {
    AlgebraReport rep;
    rep.tol = tol;
    const auto u = check_unital(alg, tol);
    rep.is_unital = u.ok;
    rep.unital_violation = u.max_violation;
    const auto c = check_commutative(alg, tol);
    rep.is_commutative = c.ok;
    rep.commutative_violation = c.max_violation;
    const auto a = check_associative(alg, tol);
    rep.is_associative = a.ok;
    rep.associative_violation = a.max_violation;
    const auto nd = check_nondegenerate(alg, tol);
    rep.is_left_nondegenerate = nd.left;
    rep.is_right_nondegenerate = nd.right;
    return rep;
}

namespace {

// Unital rows/columns plus the stated products of imaginary units.
Tensor unital_table(std::size_t dim, const std::vector<std::array<double, 4>>& extra) {
    Tensor t = Tensor::zeros({dim, dim, dim});
    for (std::size_t j = 0; j < dim; ++j) {
        t.at({0, j, j}) = 1.0;
        if (j != 0) t.at({j, 0, j}) = 1.0;
    }
    for (const auto& e : extra) {
        const auto i = static_cast<std::size_t>(e[0]);
        const auto j = static_cast<std::size_t>(e[1]);
        const auto k = static_cast<std::size_t>(e[2]);
        t.at({i, j, k}) = e[3];
    }
    return t;
}

}  // namespace

const std::vector<std::string>& builtin_algebra_names() {
    static const std::vector<std::string> names{"real", "complex", "quaternion", "split_complex",
                                                "dual"};
    return names;
}

Algebra builtin_algebra(const std::string& name) {
    if (name == "real") return Algebra("real", 1, unital_table(1, {}));
    if (name == "complex") return Algebra("complex", 2, unital_table(2, {{1, 1, 0, -1.0}}));
    if (name == "split_complex")
        return Algebra("split_complex", 2, unital_table(2, {{1, 1, 0, 1.0}}));
    if (name == "dual") return Algebra("dual", 2, unital_table(2, {}));
    if (name == "quaternion") {
        // i^2 = j^2 = k^2 = -1, ij = k, jk = i, ki = j, anticommuting.
        return Algebra("quaternion", 4,
                       unital_table(4, {{1, 1, 0, -1.0},
                                        {2, 2, 0, -1.0},
                                        {3, 3, 0, -1.0},
                                        {1, 2, 3, 1.0},
                                        {2, 1, 3, -1.0},
                                        {2, 3, 1, 1.0},
                                        {3, 2, 1, -1.0},
                                        {3, 1, 2, 1.0},
                                        {1, 3, 2, -1.0}}));
    }
    throw std::invalid_argument("unknown builtin algebra: " + name);
}

Algebra parse_algebra_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("algebra json parse error: ") + e.what());
    }
    const std::string name = j.value("name", "unnamed");
    if (!j.contains("dim") || !j["dim"].is_number_unsigned())
        throw std::invalid_argument("algebra json: missing or invalid \"dim\"");
    const std::size_t dim = j["dim"].get<std::size_t>();
    if (dim == 0) throw std::invalid_argument("algebra json: dim must be >= 1");

    Tensor table = Tensor::zeros({dim, dim, dim});
    if (j.contains("table")) {
        const auto& tab = j["table"];
        if (!tab.is_array() || tab.size() != dim)
            throw std::invalid_argument("algebra json: table must be a [n][n][n] array");
        for (std::size_t i = 0; i < dim; ++i) {
            const auto& row = tab[i];
            if (!row.is_array() || row.size() != dim)
                throw std::invalid_argument("algebra json: ragged table");
            for (std::size_t jj = 0; jj < dim; ++jj) {
                const auto& col = row[jj];
                if (!col.is_array() || col.size() != dim)
                    throw std::invalid_argument("algebra json: ragged table");
                for (std::size_t k = 0; k < dim; ++k)
                    table.at({i, jj, k}) = col[k].get<double>();
            }
        }
    } else if (j.contains("sparse")) {
        for (const auto& entry : j["sparse"]) {
            if (!entry.is_array() || entry.size() != 4)
                throw std::invalid_argument("algebra json: sparse entries are [i, j, k, coeff]");
            const auto i = entry[0].get<std::size_t>();
            const auto jj = entry[1].get<std::size_t>();
            const auto k = entry[2].get<std::size_t>();
            if (i >= dim || jj >= dim || k >= dim)
                throw std::invalid_argument("algebra json: sparse index out of range");
            table.at({i, jj, k}) = entry[3].get<double>();
        }
    } else {
        throw std::invalid_argument("algebra json: need \"table\" or \"sparse\"");
    }
    return algebra_from_table(name, dim, table);
}

Algebra load_algebra_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open algebra file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_algebra_json(ss.str());
}

std::string algebra_to_json(const Algebra& alg) {
    const std::size_t n = alg.dim();
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < n; ++j) {
            nlohmann::json col = nlohmann::json::array();
            for (std::size_t k = 0; k < n; ++k) col.push_back(alg.coeff(i, j, k));
            row.push_back(col);
        }
        table.push_back(row);
    }
    nlohmann::json j{{"name", alg.name()}, {"dim", alg.dim()}, {"table", table}};
    return j.dump(2);
}

Algebra resolve_algebra(const std::string& name_or_path) {
    constexpr std::string_view prefix = "builtin:";
    if (name_or_path.starts_with(prefix))
        return builtin_algebra(name_or_path.substr(prefix.size()));
    return load_algebra_json(name_or_path);
}

}  // namespace hypernn
