#ifndef MAXMIN_ASCENT_HPP
#define MAXMIN_ASCENT_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maxmin/contour.hpp"
#include "maxmin/equilibrium.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"
#include "maxmin/grid.hpp"
#include "maxmin/membership.hpp"
#include "maxmin/topology.hpp"
#include "maxmin/variation.hpp"

namespace maxmin {

struct AscentOptions {
    std::size_t n = 400;
    double tol_crit = 1e-3;
    std::size_t max_iter = 200;
    int basis_size = 20;
    /// Finer basis sizes used in turn once the current one is critical.
    std::vector<int> refine_sizes;
    /// Bump radius in units of the basis spacing.
    double bump_overlap = 3.0;
    double dead_zone = 0.05;
    double shrink = 0.5;
    double armijo = 1e-4;
    /// Rebuild the mesh from the contour after this many accepted steps.
    std::size_t remesh_every = 10;
    /// Spacing of the contour polyline relative to the mesh cell length.
    double vertex_spacing = 0.5;
    /// Region the contour must never touch.
    const GridMask* forbidden = nullptr;
    SolveOptions solve;
    /// Edge refinement levels for the final solve.
    int final_refinement = 0;
    /// Steps along the L2(mu) Riesz representative of the derivative
    /// within the bump span instead of the raw derivative vector.
    bool precondition = true;
    /// Tikhonov shift of the Gram matrix relative to its mean diagonal.
    double gram_shift = 1e-2;
    /// Use only the diagonal of the Gram matrix.
    bool lumped = false;
};

struct AscentStep {
    std::size_t iter = 0;
    double energy = 0.0;
    double criticality = 0.0;
    double el_residual = 0.0;
    double step = 0.0;
    std::size_t basis_size = 0;
    /// Increments each time the contour is remeshed.
    std::size_t mesh = 0;
};

struct AscentResult {
    Contour contour;
    EquilibriumResult equilibrium;
    double criticality = 0.0;
    bool converged = false;
    std::string stop_reason;
    std::vector<AscentStep> log;
};

namespace detail {

inline bool touches(const Contour& g, const GridMask* mask, double step)
{
    if (!mask)
        return false;
    for (cplx z : sample_contour(g, step, false))
        if (mask->contains(z))
            return true;
    return false;
}

inline double bounded_length(const Contour& g)
{
    double l = 0.0;
    for (const auto& c : g.components)
        l += c.length();
    return l;
}

/// Coefficients c solving (G + shift) c = d with G_kl = sum_n w_n Re(h_k conj h_l)(z_n).
inline std::vector<double> riesz_coefficients(const DiscreteMeasure& mu, const std::vector<BumpField>& basis,
                                              const std::vector<double>& d, double shift, bool diagonal_only)
{
    const auto nb = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nb, nb);
    std::vector<cplx> vals(basis.size());
    for (std::size_t n = 0; n < mu.size(); ++n) {
        if (mu.weights[n] <= 0.0)
            continue;
        std::vector<Eigen::Index> hit;
        for (std::size_t k = 0; k < basis.size(); ++k) {
            vals[k] = basis[k](mu.nodes[n]);
            if (vals[k] != cplx{})
                hit.push_back(static_cast<Eigen::Index>(k));
        }
        for (Eigen::Index a : hit)
            for (Eigen::Index b : hit)
                gram(a, b) += mu.weights[n] * (vals[static_cast<std::size_t>(a)] *
                                               std::conj(vals[static_cast<std::size_t>(b)])).real();
    }
    const double mean_diag = nb > 0 ? gram.trace() / static_cast<double>(nb) : 1.0;
    if (diagonal_only) {
        std::vector<double> c(basis.size());
        for (std::size_t k = 0; k < basis.size(); ++k)
            c[k] = d[k] / (gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) +
                           shift * std::max(mean_diag, 1e-300));
        return c;
    }
    gram.diagonal().array() += shift * std::max(mean_diag, 1e-300);
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(d.data(), nb);
    const Eigen::VectorXd c = gram.ldlt().solve(rhs);
    return std::vector<double>(c.data(), c.data() + nb);
}

} // namespace detail

/// Steepest ascent of the equilibrium energy over deformations of the
/// contour by bump fields. Trial energies re-solve the weights on the
/// deformed mesh, so the energy along a search line is smooth and its slope
/// at zero is the directional derivative.
inline AscentResult maxmin_ascent(const AdmissibleTriple& triple, const ExternalField& field,
                                  std::span<const cplx> fixed, const SectorSet& sectors, const Contour& init,
                                  const AscentOptions& opt = {})
{
    init.validate(fixed);
    const double clearance = init.clearance_radius();
    {
        const Report r = membership(init, triple, sectors, fixed, clearance);
        if (!r.ok())
            fail(ErrorKind::InitInvalid, "initial contour is not in the admissible class: " +
                                             r.violations.front().condition);
    }
    const double cell = detail::bounded_length(init) / static_cast<double>(opt.n);
    if (detail::touches(init, opt.forbidden, 0.5 * cell))
        fail(ErrorKind::InitInvalid, "initial contour touches the forbidden region");

    TestFieldRules rules;
    rules.fixed.assign(fixed.begin(), fixed.end());
    rules.singular = field.singularities();
    rules.dead_zone = opt.dead_zone;

    AscentResult out;
    Contour g = densify(init, opt.vertex_spacing * cell);
    auto fresh = [&](const Contour& c, const std::vector<double>* warm) {
        SolveOptions so = opt.solve;
        so.edge_refinement = 0;
        DiscreteMeasure mu = discretize(c, &field, opt.n, so.discretize);
        if (warm && warm->size() == mu.size())
            mu.weights = *warm;
        return solve_weights(std::move(mu), &field, so);
    };
    EquilibriumResult sol = fresh(g, nullptr);
    double step = 0.0;
    std::size_t since_remesh = 0;
    std::size_t mesh = 0;
    std::size_t stage = 0;
    int basis_size = opt.basis_size;
    out.stop_reason = "iteration cap";

    for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
        const auto basis = bump_basis(sol.mu, rules, basis_size, opt.bump_overlap);
        std::vector<double> d(basis.size());
        double crit = 0.0;
        for (std::size_t k = 0; k < basis.size(); ++k) {
            d[k] = directional_derivative(sol.mu, &field, basis[k]);
            crit = std::max(crit, normalized_derivative(d[k], basis[k]));
        }
        const auto el = euler_lagrange_residual(sol.mu, sol.ell, &field);
        out.log.push_back({iter, sol.weighted_energy, crit, el.sup_on_support, step, basis.size(), mesh});
        out.criticality = crit;
        if (crit < opt.tol_crit && stage < opt.refine_sizes.size()) {
            basis_size = opt.refine_sizes[stage++];
            step = 0.0;
            continue;
        }
        if (crit < opt.tol_crit) {
            out.converged = true;
            out.stop_reason = "criticality below tolerance";
            break;
        }
        const std::vector<double> coef =
            opt.precondition ? detail::riesz_coefficients(sol.mu, basis, d, opt.gram_shift, opt.lumped) : d;
        BumpSum h{basis, coef};
        double slope = 0.0;
        double cmax = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            slope += coef[k] * d[k];
            cmax = std::max(cmax, std::abs(coef[k]));
        }
        const double radius = basis.empty() ? 1.0 : basis.front().radius();
        if (step == 0.0)
            step = 0.01 * radius / std::max(cmax, 1e-300);
        step = std::min(step, 0.5 / std::max(h.lipschitz(), 1e-300));
        const double min_step = 1e-12 * radius / std::max(cmax, 1e-300);

        bool accepted = false;
        while (step >= min_step) {
            Contour trial_contour;
            try {
                trial_contour = perturb(g, h, step);
            }
            catch (const Error&) {
                step *= opt.shrink;
                continue;
            }
            if (detail::touches(trial_contour, opt.forbidden, 0.5 * cell) ||
                !membership(trial_contour, triple, sectors, fixed, clearance).ok()) {
                step *= opt.shrink;
                continue;
            }
            EquilibriumResult trial = solve_weights(pushforward(sol.mu, h, step), &field, opt.solve);
            if (trial.weighted_energy >= sol.weighted_energy + opt.armijo * step * slope) {
                sol = std::move(trial);
                g = std::move(trial_contour);
                accepted = true;
                break;
            }
            step *= opt.shrink;
        }
        if (!accepted) {
            out.stop_reason = "step size underflow";
            break;
        }
        step *= 2.0;
        if (++since_remesh >= opt.remesh_every) {
            since_remesh = 0;
            ++mesh;
            g = densify(g, opt.vertex_spacing * cell);
            sol = fresh(g, nullptr);
        }
    }

    // final measure on a fresh mesh of the final contour
    SolveOptions so = opt.solve;
    so.edge_refinement = opt.final_refinement;
    out.equilibrium = equilibrium_measure(g, &field, opt.n, so);
    out.contour = std::move(g);
    return out;
}

} // namespace maxmin

#endif
