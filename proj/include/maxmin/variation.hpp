#ifndef MAXMIN_VARIATION_HPP
#define MAXMIN_VARIATION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "maxmin/contour.hpp"
#include "maxmin/equilibrium.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"

namespace maxmin {

namespace detail {

inline constexpr std::array<double, 6> gauss6_nodes = {0.033765242898423975, 0.16939530676686776,
                                                       0.38069040695840156,  0.61930959304159845,
                                                       0.83060469323313224,  0.96623475710157603};
inline constexpr std::array<double, 6> gauss6_weights = {0.085662246189585173, 0.18038078652406930,
                                                         0.23395696728634552,  0.23395696728634552,
                                                         0.18038078652406930,  0.085662246189585173};

/// Mean of (g(x) - g(y)) / (x - y) over two cells, g linear on each cell
/// with end values (ga, gb).
inline cplx mean_difference_quotient(const Cell& p, cplx pa, cplx pb, const Cell& q, cplx qa, cplx qb)
{
    cplx acc = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        const double s = gauss6_nodes[i];
        const cplx x = p.a + s * (p.b - p.a);
        const cplx gx = pa + s * (pb - pa);
        for (std::size_t j = 0; j < 6; ++j) {
            const double t = gauss6_nodes[j];
            const cplx y = q.a + t * (q.b - q.a);
            const cplx gy = qa + t * (qb - qa);
            acc += gauss6_weights[i] * gauss6_weights[j] * (gx - gy) / (x - y);
        }
    }
    return acc;
}

} // namespace detail

/// Derivative at t = 0 of the discrete weighted energy of the pushforward of
/// mu under z -> z + t h(z). Cells are carried along with their end points,
/// so near pairs use the mean difference quotient of the piecewise-linear
/// interpolant of h and a cell's own term is (h(b) - h(a)) / (b - a). For
/// atomic measures the diagonal term is the derivative of h along the real
/// axis. Pass a null field for the unweighted energy.
template <DisplacementField H>
double directional_derivative(const DiscreteMeasure& mu, const ExternalField* field, const H& h)
{
    const std::size_t n = mu.size();
    std::vector<cplx> hv(n), ha, hb;
    std::vector<std::size_t> moving;
    for (std::size_t k = 0; k < n; ++k) {
        hv[k] = h(mu.nodes[k]);
        if (hv[k] != cplx{})
            moving.push_back(k);
    }
    if (mu.has_cells()) {
        ha.resize(n);
        hb.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            ha[k] = h(mu.cells[k].a);
            hb[k] = h(mu.cells[k].b);
            if ((ha[k] != cplx{} || hb[k] != cplx{}) && hv[k] == cplx{})
                moving.push_back(k);
        }
        std::sort(moving.begin(), moving.end());
    }
    std::vector<bool> is_moving(n, false);
    for (std::size_t k : moving)
        is_moving[k] = true;

    cplx pair_sum = 0.0;
    for (std::size_t k : moving) {
        const double wk = mu.weights[k];
        if (wk == 0.0)
            continue;
        cplx diag;
        if (mu.has_cells())
            diag = (hb[k] - ha[k]) / (mu.cells[k].b - mu.cells[k].a);
        else
            diag = h.jacobian(mu.nodes[k], cplx(1.0, 0.0));
        pair_sum += wk * wk * diag;
        for (std::size_t l = 0; l < n; ++l) {
            if (l == k || mu.weights[l] == 0.0)
                continue;
            // pairs of two moving nodes are visited twice, others once
            const double mult = is_moving[l] ? 1.0 : 2.0;
            cplx kern;
            if (near_cells(mu, k, l))
                kern = detail::mean_difference_quotient(mu.cells[k], ha[k], hb[k], mu.cells[l], ha[l], hb[l]);
            else
                kern = (hv[k] - hv[l]) / (mu.nodes[k] - mu.nodes[l]);
            pair_sum += mult * wk * mu.weights[l] * kern;
        }
    }
    cplx field_sum = 0.0;
    if (field)
        for (std::size_t k : moving)
            if (mu.weights[k] != 0.0)
                field_sum += mu.weights[k] * field->phi_prime(mu.nodes[k]) * hv[k];
    return -(pair_sum - 2.0 * field_sum).real();
}

template <DisplacementField H>
double directional_derivative(const DiscreteMeasure& mu, const ExternalField& field, const H& h)
{
    return directional_derivative(mu, &field, h);
}

/// Admissibility data for test fields: they vanish at the fixed points and
/// on discs of radius dead_zone around the singularities.
struct TestFieldRules {
    std::vector<cplx> fixed;
    std::vector<cplx> singular;
    double dead_zone = 0.05;
};

inline double directional_derivative(const DiscreteMeasure& mu, const ExternalField* field, const BumpField& h,
                                     const TestFieldRules& rules)
{
    check_test_function(h, rules.fixed, rules.singular, rules.dead_zone);
    return directional_derivative(mu, field, h);
}

/// Image of the measure under z -> z + t h(z); weights are unchanged.
template <DisplacementField H>
DiscreteMeasure pushforward(const DiscreteMeasure& mu, const H& h, double t)
{
    DiscreteMeasure out = mu;
    for (std::size_t k = 0; k < mu.size(); ++k)
        out.nodes[k] += t * h(mu.nodes[k]);
    for (auto& c : out.cells) {
        c.a += t * h(c.a);
        c.b += t * h(c.b);
    }
    return out;
}

inline double weighted_energy(const DiscreteMeasure& mu, const ExternalField* field)
{
    return field ? weighted_energy(mu, *field) : energy(mu);
}

/// Bounding box of the active bounded nodes.
struct Box {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
};

inline Box support_box(const DiscreteMeasure& mu)
{
    Box b{1e300, -1e300, 1e300, -1e300};
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.weights[k] <= 0.0)
            continue;
        b.xmin = std::min(b.xmin, mu.nodes[k].real());
        b.xmax = std::max(b.xmax, mu.nodes[k].real());
        b.ymin = std::min(b.ymin, mu.nodes[k].imag());
        b.ymax = std::max(b.ymax, mu.nodes[k].imag());
    }
    if (b.xmin > b.xmax)
        fail(ErrorKind::EmptySet, "measure has no active node");
    return b;
}

/// Bumps centred on a grid over the (slightly enlarged) support box, two
/// orthogonal directions per centre. basis_size is the number of centres
/// along the longer side of the box.
inline std::vector<BumpField> bump_basis(const DiscreteMeasure& mu, const TestFieldRules& rules, int basis_size,
                                         double overlap = 2.0)
{
    const Box box = support_box(mu);
    const double w = box.xmax - box.xmin;
    const double hgt = box.ymax - box.ymin;
    const double diam = std::max({w, hgt, 1e-3});
    const int n = std::max(2, basis_size);
    const double spacing = diam / (n - 1);
    const double margin = 0.5 * spacing;
    const int nx = std::max(1, static_cast<int>(std::ceil((w + 2 * margin) / spacing)) + 1);
    const int ny = std::max(1, static_cast<int>(std::ceil((hgt + 2 * margin) / spacing)) + 1);
    const double x0 = 0.5 * (box.xmin + box.xmax) - 0.5 * spacing * (nx - 1);
    const double y0 = 0.5 * (box.ymin + box.ymax) - 0.5 * spacing * (ny - 1);
    const double radius = overlap * spacing;
    std::vector<BumpField> out;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const cplx c(x0 + spacing * i, y0 + spacing * j);
            for (cplx dir : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
                auto b = constrained_bump(c, radius, dir, rules.fixed, rules.singular, rules.dead_zone,
                                          0.25 * radius);
                if (b)
                    out.push_back(*b);
            }
        }
    return out;
}

/// Scale-free size of a directional derivative.
inline double normalized_derivative(double d, const BumpField& h)
{
    return std::abs(d) / (1.0 + h.sup_value() + h.sup_derivative());
}

/// Largest normalized |D_h I^phi(mu)| over a bump basis covering the
/// support. It bounds the true criticality defect from below.
inline double criticality_residual(const DiscreteMeasure& mu, const ExternalField* field, const TestFieldRules& rules,
                                   int basis_size)
{
    double worst = 0.0;
    for (const auto& h : bump_basis(mu, rules, basis_size))
        worst = std::max(worst, normalized_derivative(directional_derivative(mu, field, h), h));
    return worst;
}

/// Active nodes whose two neighbouring cells are active as well.
inline std::vector<std::size_t> interior_support_nodes(const DiscreteMeasure& mu)
{
    std::vector<std::size_t> out;
    if (!mu.has_cells())
        return out;
    const auto nb = detail::cell_neighbours(mu);
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.weights[k] <= 0.0 || nb[k].size() != 2)
            continue;
        bool ok = true;
        for (std::size_t j : nb[k])
            for (std::size_t i : nb[j])
                if (mu.weights[i] <= 0.0 || mu.weights[j] <= 0.0)
                    ok = false;
        if (ok)
            out.push_back(k);
    }
    return out;
}

struct SProperty {
    double residual = 0.0;
    std::size_t probes = 0;
};

/// Mismatch of the two one-sided normal derivatives of U^mu + phi/2 at
/// interior support nodes, probed at distance 1e-3 max(1, |s|) on each side.
inline SProperty s_property_residual(const DiscreteMeasure& mu, const ExternalField* field)
{
    const auto probes = interior_support_nodes(mu);
    if (probes.size() < 3)
        fail(ErrorKind::TooFewProbes, "S-property needs at least three interior support nodes");
    SProperty out;
    out.probes = probes.size();
    for (std::size_t k : probes) {
        const cplx s = mu.nodes[k];
        const cplx eta = cplx(0.0, 1.0) * mu.cells[k].tangent();
        const double delta = 1e-3 * std::max(1.0, std::abs(s));
        auto grad = [&](cplx z) {
            cplx g = cauchy_transform(mu, z);
            if (field)
                g += 0.5 * field->phi_prime(z);
            return g;
        };
        const double dp = (grad(s + delta * eta) * eta).real();
        const double dm = (grad(s - delta * eta) * (-eta)).real();
        out.residual = std::max(out.residual, std::abs(dp - dm) / (std::abs(dp) + std::abs(dm) + 1.0));
    }
    return out;
}

} // namespace maxmin

#endif
