// Brute-force primal super-replication price for tiny trees, independent of the dual DP.
//
// Every subset of interior nodes of the non-recombining tree is an adapted intervention
// pattern. For a fixed pattern the cheapest capital is a small LP
//     min x  s.t.  x + sum_v h_v (S_next(v) - S_v) >= f(S_n) + kappa * #interior stops, per path,
// solved here by vertex enumeration in quad precision.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fixedcost/error.hpp"
#include "fixedcost/primal_hedger.hpp"

namespace fixedcost {

namespace {

using Real = boost::multiprecision::cpp_bin_float_quad;
using Matrix = std::vector<std::vector<Real>>;

// Non-recombining tree node: (time t, prefix bits p), heap id 2^t - 1 + p. Bit i of p is step i+1.
struct TreeNode {
    int time;
    unsigned prefix;
};

int node_id(TreeNode v) { return (1 << v.time) - 1 + static_cast<int>(v.prefix); }

std::string prefix_string(TreeNode v) {
    std::string s;
    for (int i = 0; i < v.time; ++i) s.push_back(((v.prefix >> i) & 1U) ? '+' : '-');
    return s;
}

// Solves the square system M z = rhs in place with partial pivoting; false if singular.
bool solve_square(Matrix m, std::vector<Real> rhs, std::vector<Real>& z) {
    const std::size_t k = rhs.size();
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (abs(m[r][col]) > abs(m[piv][col])) piv = r;
        if (abs(m[piv][col]) < Real(1e-28)) return false;
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t r = col + 1; r < k; ++r) {
            Real factor = m[r][col] / m[col][col];
            if (factor == 0) continue;
            for (std::size_t c = col; c < k; ++c) m[r][c] -= factor * m[col][c];
            rhs[r] -= factor * rhs[col];
        }
    }
    z.assign(k, Real(0));
    for (std::size_t i = k; i-- > 0;) {
        Real acc = rhs[i];
        for (std::size_t c = i + 1; c < k; ++c) acc -= m[i][c] * z[c];
        z[i] = acc / m[i][i];
    }
    return true;
}

// Greedy column basis (column 0 first). Returns indices of linearly independent columns.
std::vector<std::size_t> independent_columns(const Matrix& a) {
    const std::size_t rows = a.size();
    const std::size_t cols = rows ? a[0].size() : 0;
    std::vector<std::vector<Real>> basis;  // orthogonalized kept columns
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < cols; ++c) {
        std::vector<Real> v(rows);
        for (std::size_t r = 0; r < rows; ++r) v[r] = a[r][c];
        Real norm0(0);
        for (const auto& x : v) norm0 += x * x;
        for (const auto& b : basis) {
            Real dot(0), bb(0);
            for (std::size_t r = 0; r < rows; ++r) {
                dot += v[r] * b[r];
                bb += b[r] * b[r];
            }
            for (std::size_t r = 0; r < rows; ++r) v[r] -= dot / bb * b[r];
        }
        Real norm(0);
        for (const auto& x : v) norm += x * x;
        if (norm > Real(1e-40) * (norm0 + Real(1))) {
            basis.push_back(std::move(v));
            kept.push_back(c);
        }
    }
    return kept;
}

struct LpResult {
    bool feasible = false;
    Real objective;
    std::vector<Real> solution;  // over the kept columns
    std::vector<std::size_t> columns;
};

// min z[0] s.t. a z >= b, by enumerating square row subsets of the reduced column basis.
LpResult minimize_first(const Matrix& a, const std::vector<Real>& b) {
    LpResult best;
    const auto cols = independent_columns(a);
    if (cols.empty() || cols.front() != 0) throw std::logic_error("lp oracle: capital column is dependent");
    const std::size_t k = cols.size();
    const std::size_t m = a.size();
    std::vector<int> pick(m, 0);
    std::fill(pick.end() - static_cast<std::ptrdiff_t>(k), pick.end(), 1);
    const Real slack(1e-24);
    do {
        Matrix sq;
        std::vector<Real> rhs;
        for (std::size_t r = 0; r < m; ++r) {
            if (!pick[r]) continue;
            std::vector<Real> row(k);
            for (std::size_t c = 0; c < k; ++c) row[c] = a[r][cols[c]];
            sq.push_back(std::move(row));
            rhs.push_back(b[r]);
        }
        std::vector<Real> z;
        if (!solve_square(std::move(sq), std::move(rhs), z)) continue;
        bool ok = true;
        for (std::size_t r = 0; r < m && ok; ++r) {
            Real lhs(0);
            for (std::size_t c = 0; c < k; ++c) lhs += a[r][cols[c]] * z[c];
            ok = lhs >= b[r] - slack * (abs(b[r]) + Real(1));
        }
        if (!ok) continue;
        if (!best.feasible || z[0] < best.objective) {
            best.feasible = true;
            best.objective = z[0];
            best.solution = z;
            best.columns = cols;
        }
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

}  // namespace

PrimalOracleResult brute_force_primal(const BinomialSpec& spec, const Payoff& payoff) {
    spec.validate();
    const int n = spec.n;
    if (n > kMaxBruteForceSteps)
        throw InputError("oracle-primal: n = " + std::to_string(n) + " exceeds the brute-force budget n <= " +
                         std::to_string(kMaxBruteForceSteps));

    const Real log_step = Real(spec.sigma) / sqrt(Real(n));
    auto price = [&](int disp) { return Real(spec.s0) * exp(Real(disp) * log_step); };

    // Interior candidate nodes: times 1..n-1.
    std::vector<TreeNode> interior;
    for (int t = 1; t < n; ++t)
        for (unsigned p = 0; p < (1U << t); ++p) interior.push_back({t, p});
    const int paths = 1 << n;

    PrimalOracleResult result;
    result.value = std::numeric_limits<double>::infinity();
    Real best_value(std::numeric_limits<double>::infinity());

    for (unsigned mask = 0; mask < (1U << interior.size()); ++mask) {
        std::vector<char> active(static_cast<std::size_t>((1 << n) - 1), 0);
        active[0] = 1;
        for (std::size_t i = 0; i < interior.size(); ++i)
            if ((mask >> i) & 1U) active[static_cast<std::size_t>(node_id(interior[i]))] = 1;
        // Variable layout: 0 = capital, then one holding per active node in id order.
        std::vector<int> var_of(active.size(), -1);
        std::vector<TreeNode> var_node;
        int nvars = 1;
        for (int t = 0; t < n; ++t)
            for (unsigned p = 0; p < (1U << t); ++p)
                if (active[static_cast<std::size_t>(node_id({t, p}))]) {
                    var_of[static_cast<std::size_t>(node_id({t, p}))] = nvars++;
                    var_node.push_back({t, p});
                }

        Matrix a(static_cast<std::size_t>(paths), std::vector<Real>(static_cast<std::size_t>(nvars), Real(0)));
        std::vector<Real> b(static_cast<std::size_t>(paths));
        for (int w = 0; w < paths; ++w) {
            auto& row = a[static_cast<std::size_t>(w)];
            row[0] = Real(1);
            int charges = 0;
            int last_var = var_of[0];
            int last_disp = 0;
            int disp = 0;
            for (int t = 1; t <= n; ++t) {
                disp += ((static_cast<unsigned>(w) >> (t - 1)) & 1U) ? 1 : -1;
                const bool stop = t == n || active[static_cast<std::size_t>(
                                                 node_id({t, static_cast<unsigned>(w) & ((1U << t) - 1U)}))];
                if (!stop) continue;
                row[static_cast<std::size_t>(last_var)] += price(disp) - price(last_disp);
                if (t < n) {
                    ++charges;
                    last_var = var_of[static_cast<std::size_t>(node_id({t, static_cast<unsigned>(w) & ((1U << t) - 1U)}))];
                    last_disp = disp;
                }
            }
            b[static_cast<std::size_t>(w)] = payoff.evaluate<Real>(price(disp)) + Real(spec.kappa) * Real(charges);
        }

        const auto lp = minimize_first(a, b);
        if (!lp.feasible) continue;
        if (lp.objective < best_value) {
            best_value = lp.objective;
            result.pattern.clear();
            for (std::size_t i = 0; i < interior.size(); ++i)
                if ((mask >> i) & 1U) result.pattern.push_back(prefix_string(interior[i]));
            result.holdings.clear();
            for (std::size_t c = 1; c < lp.columns.size(); ++c) {
                const TreeNode v = var_node[lp.columns[c] - 1];
                result.holdings.emplace_back(prefix_string(v), static_cast<double>(lp.solution[c]));
            }
        }
    }
    result.value = static_cast<double>(best_value);
    return result;
}

}  // namespace fixedcost
