#ifndef MAXMIN_EQUILIBRIUM_HPP
#define MAXMIN_EQUILIBRIUM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "maxmin/contour.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"

namespace maxmin {

/// Straight piece [a, b] of the contour owned by one node.
struct Cell {
    cplx a;
    cplx b;

    double length() const { return std::abs(b - a); }
    cplx tangent() const { return (b - a) / std::abs(b - a); }
    cplx midpoint() const { return 0.5 * (a + b); }
};

/// Energy of the uniform probability measure on a segment of length len.
inline double segment_self_energy(double len) { return -std::log(len) + 1.5; }

/// Logarithmic potential at z of the uniform probability measure on [a, b].
inline double segment_log_potential(cplx a, cplx b, cplx z)
{
    const cplx d = b - a;
    const cplx u = (z - a) / d;
    auto xlogx = [](cplx x) { return x == cplx{} ? cplx{} : x * std::log(x); };
    // integral over t in [0,1] of log(t - u), principal branch; the path
    // t - u never crosses the cut except through zero.
    const cplx integral = xlogx(1.0 - u) - xlogx(-u) - 1.0;
    return -std::log(std::abs(d)) - integral.real();
}

/// Cauchy transform at z of the uniform probability measure on [a, b].
inline cplx segment_cauchy(cplx a, cplx b, cplx z) { return std::log((b - z) / (a - z)) / (b - a); }

namespace detail {

/// x^2/2 log x - x^2/4 with the argument of log x supplied.
inline cplx h_antiderivative(cplx x, double arg)
{
    if (x == cplx{})
        return 0.0;
    const cplx x2 = x * x;
    return 0.5 * x2 * cplx(std::log(std::abs(x)), arg) - 0.25 * x2;
}

/// Mean of Re(x log x) along the straight path x0 -> x1. The real part is
/// continuous across the cut, so the path is split where it crosses it.
inline double mean_re_xlogx(cplx x0, cplx x1)
{
    const cplx r = x1 - x0;
    const double i0 = x0.imag();
    const double i1 = x1.imag();
    if ((i0 > 0.0 && i1 < 0.0) || (i0 < 0.0 && i1 > 0.0)) {
        const double s = i0 / (i0 - i1);
        const double xr = x0.real() + s * r.real();
        if (xr < 0.0) {
            const cplx xs(xr, 0.0);
            const double side0 = i0 > 0.0 ? pi : -pi;
            const cplx first = h_antiderivative(xs, side0) - h_antiderivative(x0, std::arg(x0));
            const cplx second = h_antiderivative(x1, std::arg(x1)) - h_antiderivative(xs, -side0);
            return ((first + second) / r).real();
        }
    }
    return ((h_antiderivative(x1, std::arg(x1)) - h_antiderivative(x0, std::arg(x0))) / r).real();
}

} // namespace detail

/// Mutual energy of the uniform probability measures on [a1, b1] and [a2, b2].
inline double segment_pair_energy(cplx a1, cplx b1, cplx a2, cplx b2)
{
    const cplx d2 = b2 - a2;
    const cplx u0 = (a1 - a2) / d2;
    const cplx r = (b1 - a1) / d2;
    // mean over s of the potential of segment 2 at a1 + s (b1 - a1)
    return -std::log(std::abs(d2)) + 1.0 - detail::mean_re_xlogx(1.0 - u0, 1.0 - u0 - r) +
           detail::mean_re_xlogx(-u0, -u0 - r);
}

/// Nodes with nonnegative weights of total mass one. When cells are present
/// each weight is spread uniformly over its cell for near-field evaluation.
struct DiscreteMeasure {
    std::vector<cplx> nodes;
    std::vector<double> weights;
    std::vector<Cell> cells;
    /// Index of the host component and whether the node sits on a ray.
    std::vector<int> component;
    std::vector<bool> on_ray;
    /// Sorted indices of the cells that interact through the exact segment
    /// energy. Fixed when the cells are laid out so that deformations keep
    /// the same pairing.
    std::vector<std::vector<std::size_t>> near;

    std::size_t size() const { return nodes.size(); }
    bool has_cells() const { return !cells.empty(); }

    double mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

    void validate() const
    {
        if (nodes.size() != weights.size() || (!cells.empty() && cells.size() != nodes.size()))
            fail(ErrorKind::InvalidContour, "measure arrays have inconsistent sizes");
        for (double w : weights)
            if (!(w >= 0.0))
                fail(ErrorKind::InvalidContour, "weights must be nonnegative");
        if (std::abs(mass() - 1.0) > 1e-12)
            fail(ErrorKind::InvalidContour, "weights must sum to one");
        std::vector<cplx> sorted = nodes;
        std::sort(sorted.begin(), sorted.end(), [](cplx x, cplx y) {
            return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag());
        });
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i] == sorted[i - 1])
                fail(ErrorKind::NodeCollision, "nodes must be pairwise distinct");
    }

    std::vector<std::size_t> active(double threshold = 0.0) const
    {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < weights.size(); ++k)
            if (weights[k] > threshold)
                out.push_back(k);
        return out;
    }
};

/// Atomic measure with the given weights (normalized).
inline DiscreteMeasure atomic_measure(std::vector<cplx> nodes, std::vector<double> weights)
{
    DiscreteMeasure mu;
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights)
        w /= total;
    mu.nodes = std::move(nodes);
    mu.weights = std::move(weights);
    mu.component.assign(mu.nodes.size(), 0);
    mu.on_ray.assign(mu.nodes.size(), false);
    return mu;
}

/// Cells farther than this many cell lengths are treated as point charges.
inline constexpr double near_field_cells = 5.0;

inline double log_potential(const DiscreteMeasure& mu, cplx z)
{
    double u = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.weights[k] == 0.0)
            continue;
        const double d = std::abs(mu.nodes[k] - z);
        if (mu.has_cells() && d < near_field_cells * mu.cells[k].length()) {
            u += mu.weights[k] * segment_log_potential(mu.cells[k].a, mu.cells[k].b, z);
            continue;
        }
        if (d == 0.0)
            return std::numeric_limits<double>::infinity();
        u -= mu.weights[k] * std::log(d);
    }
    return u;
}

inline cplx cauchy_transform(const DiscreteMeasure& mu, cplx z)
{
    cplx c = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.weights[k] == 0.0)
            continue;
        const cplx d = mu.nodes[k] - z;
        if (mu.has_cells() && std::abs(d) < near_field_cells * mu.cells[k].length()) {
            if (point_segment_distance(z, mu.cells[k].a, mu.cells[k].b) == 0.0)
                fail(ErrorKind::NodeCollision, "Cauchy transform evaluated on a cell");
            c += mu.weights[k] * segment_cauchy(mu.cells[k].a, mu.cells[k].b, z);
            continue;
        }
        if (d == cplx{})
            fail(ErrorKind::NodeCollision, "Cauchy transform evaluated at a node");
        c += mu.weights[k] / d;
    }
    return c;
}

/// Pairs of cells closer than near_field_cells times the larger length.
inline void build_near_pairs(DiscreteMeasure& mu)
{
    mu.near.assign(mu.size(), {});
    if (!mu.has_cells())
        return;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = i + 1; j < mu.size(); ++j)
            if (std::abs(mu.nodes[i] - mu.nodes[j]) <
                near_field_cells * std::max(mu.cells[i].length(), mu.cells[j].length())) {
                mu.near[i].push_back(j);
                mu.near[j].push_back(i);
            }
    for (auto& v : mu.near)
        std::sort(v.begin(), v.end());
}

inline bool near_cells(const DiscreteMeasure& mu, std::size_t i, std::size_t j)
{
    if (!mu.has_cells())
        return false;
    if (mu.near.size() == mu.size())
        return std::binary_search(mu.near[i].begin(), mu.near[i].end(), j);
    return std::abs(mu.nodes[i] - mu.nodes[j]) <
           near_field_cells * std::max(mu.cells[i].length(), mu.cells[j].length());
}

/// Interaction matrix. Nearby cells interact through the exact energy of
/// their uniform densities, distant ones as point charges; the diagonal is
/// the cell self-energy, or zero for atomic measures.
inline Eigen::MatrixXd kernel_matrix(const DiscreteMeasure& mu)
{
    const auto n = static_cast<Eigen::Index>(mu.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        k(i, i) = mu.has_cells() ? segment_self_energy(mu.cells[ui].length()) : 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double d = std::abs(mu.nodes[ui] - mu.nodes[uj]);
            if (d == 0.0)
                fail(ErrorKind::NodeCollision, "coincident nodes");
            k(i, j) = k(j, i) = near_cells(mu, ui, uj) ? segment_pair_energy(mu.cells[ui].a, mu.cells[ui].b,
                                                                              mu.cells[uj].a, mu.cells[uj].b)
                                                        : -std::log(d);
        }
    }
    return k;
}

inline Eigen::VectorXd weight_vector(const DiscreteMeasure& mu)
{
    return Eigen::Map<const Eigen::VectorXd>(mu.weights.data(), static_cast<Eigen::Index>(mu.weights.size()));
}

/// Logarithmic energy; cell self-energies are included when cells exist.
inline double energy(const DiscreteMeasure& mu)
{
    const Eigen::VectorXd w = weight_vector(mu);
    return w.dot(kernel_matrix(mu) * w);
}

inline std::vector<double> field_values(const DiscreteMeasure& mu, const ExternalField& field)
{
    std::vector<double> f(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (field.is_singular(mu.nodes[k]))
            fail(ErrorKind::SingularNode, "node on the singular set of the field");
        f[k] = field.phi(mu.nodes[k]);
    }
    return f;
}

inline double weighted_energy(const DiscreteMeasure& mu, const ExternalField& field)
{
    const auto f = field_values(mu, field);
    double s = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k)
        s += mu.weights[k] * f[k];
    return energy(mu) + 2.0 * s;
}

/// Node placement along bounded polylines.
enum class Grading { Uniform, Chebyshev };

struct DiscretizeOptions {
    Grading grading = Grading::Uniform;
    /// Rays stop once phi - 2 log|z| exceeds this value.
    double ray_cutoff = 20.0;
    /// Ratio of consecutive ray cell lengths.
    double ray_growth = 1.15;
    std::size_t max_ray_cells = 400;
};

namespace detail {

inline std::vector<double> cell_edges(double length, std::size_t cells, Grading grading)
{
    std::vector<double> e(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(cells);
        e[i] = grading == Grading::Uniform ? t * length : 0.5 * length * (1.0 - std::cos(pi * t));
    }
    e.back() = length;
    return e;
}

inline void append_ray(DiscreteMeasure& mu, int comp, cplx start, cplx dir, double first, const ExternalField* field,
                       const DiscretizeOptions& opt)
{
    if (!field)
        fail(ErrorKind::GrowthViolation, "rays need a field that grows faster than log|z|");
    dir /= std::abs(dir);
    double t = 0.0;
    double len = first;
    for (std::size_t k = 0; k < opt.max_ray_cells; ++k) {
        const Cell c{start + t * dir, start + (t + len) * dir};
        mu.nodes.push_back(c.midpoint());
        mu.cells.push_back(c);
        mu.component.push_back(comp);
        mu.on_ray.push_back(true);
        t += len;
        len *= opt.ray_growth;
        const cplx z = c.b;
        if (std::abs(z) > 1.0 && !field->is_singular(z) &&
            field->phi(z) - 2.0 * std::log(std::abs(z)) > opt.ray_cutoff)
            return;
    }
    fail(ErrorKind::GrowthViolation, "phi - log|z| does not reach the cutoff along a ray");
}

} // namespace detail

/// Cells and nodes for a contour: n cells over the bounded polylines (shared
/// in proportion to length), then geometrically growing cells along rays.
/// Weights start uniform over the bounded cells.
inline DiscreteMeasure discretize(const Contour& g, const ExternalField* field, std::size_t n,
                                  const DiscretizeOptions& opt = {})
{
    g.validate();
    double total = 0.0;
    for (const auto& c : g.components)
        total += c.length();
    DiscreteMeasure mu;
    std::size_t bounded = 0;
    for (std::size_t ci = 0; ci < g.components.size(); ++ci) {
        const auto& comp = g.components[ci];
        const auto cells = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::lround(static_cast<double>(n) * comp.length() / total)));
        const auto edges = detail::cell_edges(comp.length(), cells, opt.grading);
        std::vector<cplx> pts;
        for (double s : edges)
            pts.push_back(comp.at_arclength(s));
        for (std::size_t i = 0; i < cells; ++i) {
            const Cell c{pts[i], pts[i + 1]};
            mu.nodes.push_back(comp.at_arclength(0.5 * (edges[i] + edges[i + 1])));
            mu.cells.push_back(c);
            mu.component.push_back(static_cast<int>(ci));
            mu.on_ray.push_back(false);
        }
        bounded += cells;
        const double first_len = mu.cells[mu.cells.size() - cells].length();
        const double last_len = mu.cells.back().length();
        if (comp.head)
            detail::append_ray(mu, static_cast<int>(ci), comp.vertices.front(), comp.head->direction, first_len,
                               field, opt);
        if (comp.tail)
            detail::append_ray(mu, static_cast<int>(ci), comp.vertices.back(), comp.tail->direction, last_len, field,
                               opt);
    }
    build_near_pairs(mu);
    mu.weights.assign(mu.size(), 0.0);
    for (std::size_t k = 0; k < mu.size(); ++k)
        if (!mu.on_ray[k])
            mu.weights[k] = 1.0 / static_cast<double>(bounded);
    if (field)
        for (cplx z : mu.nodes)
            if (field->is_singular(z))
                fail(ErrorKind::SingularNode, "node on the singular set of the field");
    return mu;
}

struct SolveOptions {
    std::size_t max_iter = 100000;
    double tol = 1e-9;
    /// Starting weights (any nonnegative vector with positive sum); uniform
    /// over bounded cells when empty.
    std::vector<double> initial;
    DiscretizeOptions discretize;
    /// Record the objective after each accepted update.
    bool record_trace = false;
    /// Rounds of halving the cells next to each support endpoint.
    int edge_refinement = 0;
};

struct EquilibriumResult {
    DiscreteMeasure mu;
    double ell = 0.0;
    /// Discrete I(mu) and I^phi(mu).
    double energy = 0.0;
    double weighted_energy = 0.0;
    std::size_t iterations = 0;
    std::vector<double> trace;
};

/// Potential plus field at each node, including the node's own cell.
inline std::vector<double> node_effective_potential(const DiscreteMeasure& mu, const std::vector<double>& f)
{
    const Eigen::VectorXd p = kernel_matrix(mu) * weight_vector(mu);
    std::vector<double> out(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k)
        out[k] = p(static_cast<Eigen::Index>(k)) + (f.empty() ? 0.0 : f[k]);
    return out;
}

/// Weighted median of values over active nodes.
inline double weighted_median(const DiscreteMeasure& mu, const std::vector<double>& values)
{
    std::vector<std::pair<double, double>> vw;
    for (std::size_t k = 0; k < mu.size(); ++k)
        if (mu.weights[k] > 0.0)
            vw.emplace_back(values[k], mu.weights[k]);
    if (vw.empty())
        fail(ErrorKind::EmptySet, "measure has no active node");
    std::sort(vw.begin(), vw.end());
    const double half = 0.5 * std::accumulate(vw.begin(), vw.end(), 0.0,
                                              [](double s, const auto& p) { return s + p.second; });
    double acc = 0.0;
    for (const auto& [v, w] : vw) {
        acc += w;
        if (acc >= half)
            return v;
    }
    return vw.back().first;
}

namespace detail {

/// Minimizer of w'Kw + 2f'w on the affine face {sum w = 1, w_k = 0 off free}.
inline bool face_minimizer(const Eigen::MatrixXd& k, const Eigen::VectorXd& f, const std::vector<bool>& free,
                           Eigen::VectorXd& w, double& nu)
{
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < free.size(); ++i)
        if (free[i])
            idx.push_back(static_cast<Eigen::Index>(i));
    const auto m = static_cast<Eigen::Index>(idx.size());
    if (m == 0)
        return false;
    Eigen::MatrixXd a(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j)
            a(i, j) = k(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        a(i, m) = -1.0;
        a(m, i) = 1.0;
        rhs(i) = -f(idx[static_cast<std::size_t>(i)]);
    }
    a(m, m) = 0.0;
    rhs(m) = 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::VectorXd x = lu.solve(rhs);
    if (!x.allFinite())
        return false;
    w = Eigen::VectorXd::Zero(k.rows());
    for (Eigen::Index i = 0; i < m; ++i)
        w(idx[static_cast<std::size_t>(i)]) = x(i);
    nu = x(m);
    return true;
}

inline double objective(const Eigen::MatrixXd& k, const Eigen::VectorXd& f, const Eigen::VectorXd& w)
{
    return w.dot(k * w) + 2.0 * f.dot(w);
}

} // namespace detail

/// Minimizes w'Kw + 2 f'w over the probability simplex by an active-set
/// method. Every accepted iterate is feasible and the objective never
/// increases. Returns the weights and the face multiplier.
inline std::pair<Eigen::VectorXd, double> simplex_qp(const Eigen::MatrixXd& k, const Eigen::VectorXd& f,
                                                     Eigen::VectorXd w, const SolveOptions& opt,
                                                     std::size_t& iterations, std::vector<double>* trace)
{
    const auto n = static_cast<std::size_t>(k.rows());
    std::vector<bool> free(n);
    for (std::size_t i = 0; i < n; ++i)
        free[i] = w(static_cast<Eigen::Index>(i)) > 0.0;
    double current = detail::objective(k, f, w);
    if (trace)
        trace->push_back(current);
    bool single_add = false;
    Eigen::VectorXd y;
    double nu = 0.0;
    iterations = 0;

    // Primal-dual active-set rounds: drop negative weights and add negative
    // multipliers together. Only the final, feasible point is accepted.
    {
        std::vector<bool> guess = free;
        std::vector<std::vector<bool>> seen;
        for (int round = 0; round < 60 && iterations < opt.max_iter; ++round) {
            ++iterations;
            if (!detail::face_minimizer(k, f, guess, y, nu))
                break;
            const Eigen::VectorXd g = k * y + f;
            const double scale = std::max(1.0, std::abs(nu));
            std::vector<bool> next(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                next[i] = guess[i] ? y(ii) > 0.0 : g(ii) - nu < -opt.tol * scale;
            }
            if (next == guess) {
                const double val = detail::objective(k, f, y);
                if (y.minCoeff() >= 0.0 && val <= current) {
                    if (trace)
                        trace->push_back(val);
                    return {y, nu};
                }
                break;
            }
            if (std::find(seen.begin(), seen.end(), next) != seen.end())
                break;
            seen.push_back(guess);
            guess = std::move(next);
        }
    }

    while (iterations < opt.max_iter) {
        ++iterations;
        if (!detail::face_minimizer(k, f, free, y, nu))
            fail(ErrorKind::NonConvergence, "singular face system");
        bool negative = false;
        for (std::size_t i = 0; i < n; ++i)
            if (free[i] && y(static_cast<Eigen::Index>(i)) < 0.0)
                negative = true;
        if (negative) {
            // Drop every negative weight at once while that keeps descending.
            std::vector<bool> trial = free;
            Eigen::VectorXd yy = y;
            double nn = nu;
            bool accepted = false;
            for (int round = 0; round < 8; ++round) {
                for (std::size_t i = 0; i < n; ++i)
                    if (trial[i] && yy(static_cast<Eigen::Index>(i)) < 0.0)
                        trial[i] = false;
                ++iterations;
                if (!detail::face_minimizer(k, f, trial, yy, nn))
                    break;
                if (yy.minCoeff() >= 0.0) {
                    const double val = detail::objective(k, f, yy);
                    if (val <= current) {
                        w = yy;
                        free = trial;
                        current = val;
                        accepted = true;
                    }
                    break;
                }
            }
            if (!accepted) {
                // Step toward the face minimizer until a weight hits zero.
                double alpha = 1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto ii = static_cast<Eigen::Index>(i);
                    if (free[i] && y(ii) < 0.0)
                        alpha = std::min(alpha, w(ii) / (w(ii) - y(ii)));
                }
                w += alpha * (y - w);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto ii = static_cast<Eigen::Index>(i);
                    if (free[i] && y(ii) < 0.0 && w(ii) <= 1e-15 * (1.0 + std::abs(y(ii)))) {
                        w(ii) = 0.0;
                        free[i] = false;
                    }
                }
                w = w.cwiseMax(0.0);
                w /= w.sum();
                current = detail::objective(k, f, w);
                if (alpha == 0.0)
                    single_add = true;
            }
            if (trace)
                trace->push_back(current);
            continue;
        }
        w = y;
        current = detail::objective(k, f, w);
        if (trace)
            trace->push_back(current);
        const Eigen::VectorXd g = k * w + f;
        const double scale = std::max(1.0, std::abs(nu));
        std::vector<std::pair<double, std::size_t>> violated;
        for (std::size_t i = 0; i < n; ++i) {
            const double mult = g(static_cast<Eigen::Index>(i)) - nu;
            if (!free[i] && mult < -opt.tol * scale)
                violated.emplace_back(mult, i);
        }
        if (violated.empty())
            return {w, nu};
        std::sort(violated.begin(), violated.end());
        if (single_add) {
            free[violated.front().second] = true;
            single_add = false;
        }
        else {
            for (const auto& v : violated)
                free[v.second] = true;
        }
    }
    fail(ErrorKind::NonConvergence, "active-set iteration cap reached");
}

namespace detail {

/// Indices of cells sharing an endpoint with each cell.
inline std::vector<std::vector<std::size_t>> cell_neighbours(const DiscreteMeasure& mu)
{
    std::vector<std::vector<std::size_t>> nb(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = i + 1; j < mu.size(); ++j) {
            const Cell& a = mu.cells[i];
            const Cell& b = mu.cells[j];
            if (a.a == b.a || a.a == b.b || a.b == b.a || a.b == b.b) {
                nb[i].push_back(j);
                nb[j].push_back(i);
            }
        }
    return nb;
}

/// Halves every cell within one neighbour of a change between zero and
/// positive weight. Weights are split evenly.
inline bool refine_support_edges(DiscreteMeasure& mu)
{
    const auto nb = cell_neighbours(mu);
    std::vector<bool> mark(mu.size(), false);
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j : nb[i])
            if ((mu.weights[i] > 0.0) != (mu.weights[j] > 0.0)) {
                mark[i] = true;
                for (std::size_t k : nb[i])
                    mark[k] = true;
            }
    if (std::none_of(mark.begin(), mark.end(), [](bool b) { return b; }))
        return false;
    DiscreteMeasure out;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const Cell& c = mu.cells[i];
        if (!mark[i]) {
            out.nodes.push_back(mu.nodes[i]);
            out.cells.push_back(c);
            out.weights.push_back(mu.weights[i]);
            out.component.push_back(mu.component[i]);
            out.on_ray.push_back(mu.on_ray[i]);
            continue;
        }
        const cplx m = c.midpoint();
        for (const Cell& half : {Cell{c.a, m}, Cell{m, c.b}}) {
            out.nodes.push_back(half.midpoint());
            out.cells.push_back(half);
            out.weights.push_back(0.5 * mu.weights[i]);
            out.component.push_back(mu.component[i]);
            out.on_ray.push_back(mu.on_ray[i]);
        }
    }
    build_near_pairs(out);
    mu = std::move(out);
    return true;
}

} // namespace detail

/// Minimizes the discrete weighted energy over the weights of a given
/// node/cell layout, starting from mu.weights.
inline EquilibriumResult solve_weights(DiscreteMeasure mu, const ExternalField* field, const SolveOptions& opt = {})
{
    EquilibriumResult res;
    res.mu = std::move(mu);
    auto& m = res.mu;
    const Eigen::MatrixXd k = kernel_matrix(m);
    const std::vector<double> fv = field ? field_values(m, *field) : std::vector<double>(m.size(), 0.0);
    const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(fv.data(), static_cast<Eigen::Index>(fv.size()));
    Eigen::VectorXd w = weight_vector(m);
    if (w.minCoeff() < 0.0 || !(w.sum() > 0.0))
        fail(ErrorKind::InvalidContour, "initial weights must be nonnegative with positive sum");
    w /= w.sum();
    auto [sol, nu] = simplex_qp(k, f, w, opt, res.iterations, opt.record_trace ? &res.trace : nullptr);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.weights[i] = std::max(0.0, sol(static_cast<Eigen::Index>(i)));
    const double total = m.mass();
    for (auto& x : m.weights)
        x /= total;
    const Eigen::VectorXd wf = weight_vector(m);
    res.energy = wf.dot(k * wf);
    res.weighted_energy = res.energy + 2.0 * f.dot(wf);
    res.ell = weighted_median(m, node_effective_potential(m, fv));
    return res;
}

/// Discrete weighted equilibrium measure on a contour. Pass a null field for
/// the unweighted problem.
inline EquilibriumResult equilibrium_measure(const Contour& g, const ExternalField* field, std::size_t n,
                                             const SolveOptions& opt = {})
{
    if (n < 16)
        fail(ErrorKind::InvalidContour, "at least 16 nodes are required");
    DiscreteMeasure mu = discretize(g, field, n, opt.discretize);
    if (!opt.initial.empty()) {
        if (opt.initial.size() != mu.size())
            fail(ErrorKind::InvalidContour, "initial weights do not match the node count");
        mu.weights = opt.initial;
    }
    EquilibriumResult res = solve_weights(std::move(mu), field, opt);
    for (int level = 0; level < opt.edge_refinement; ++level) {
        DiscreteMeasure refined = res.mu;
        if (!detail::refine_support_edges(refined))
            break;
        const std::size_t previous = res.iterations;
        res = solve_weights(std::move(refined), field, opt);
        res.iterations += previous;
    }
    return res;
}

inline EquilibriumResult equilibrium_measure(const Contour& g, const ExternalField& field, std::size_t n,
                                             const SolveOptions& opt = {})
{
    return equilibrium_measure(g, &field, n, opt);
}

inline EquilibriumResult equilibrium_measure(const Contour& g, std::size_t n, const SolveOptions& opt = {})
{
    return equilibrium_measure(g, nullptr, n, opt);
}

struct ElResidual {
    double sup_on_support = 0.0;
    double deficit_off_support = 0.0;
};

/// Euler-Lagrange defects of a solved measure. Node potentials include the
/// node's own cell.
inline ElResidual euler_lagrange_residual(const DiscreteMeasure& mu, double ell, const ExternalField* field)
{
    const std::vector<double> fv = field ? field_values(mu, *field) : std::vector<double>();
    const auto v = node_effective_potential(mu, fv);
    ElResidual r;
    double min_off = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.weights[k] > 0.0)
            r.sup_on_support = std::max(r.sup_on_support, std::abs(v[k] - ell));
        else
            min_off = std::min(min_off, v[k]);
    }
    if (std::isfinite(min_off))
        r.deficit_off_support = std::max(0.0, ell - min_off);
    return r;
}

} // namespace maxmin

#endif
