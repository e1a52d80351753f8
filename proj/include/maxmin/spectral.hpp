#ifndef MAXMIN_SPECTRAL_HPP
#define MAXMIN_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "maxmin/equilibrium.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"
#include "maxmin/polynomial.hpp"

namespace maxmin {

/// Prescribed pole structure of R = numerator / denominator.
struct SpectralStructure {
    Polynomial denominator = Polynomial::constant(1.0);
    std::vector<PoleFactor> poles;
    std::vector<cplx> fixed;
    int numerator_degree = 0;
    /// Expected leading coefficient of R at infinity.
    cplx lead = 1.0;
};

/// Denominator A^2 C and numerator degree 2 deg B + deg C.
inline SpectralStructure spectral_structure(const ExternalField& field, std::span<const cplx> fixed = {})
{
    SpectralStructure s;
    const Polynomial c = Polynomial::from_roots(fixed);
    s.denominator = field.a() * field.a() * c;
    for (const auto& p : field.poles())
        s.poles.push_back({p.location, 2 * p.order + 2});
    for (const auto& l : field.log_terms())
        s.poles.push_back({l.location, 2});
    for (cplx z : fixed)
        s.poles.push_back({z, 1});
    s.fixed.assign(fixed.begin(), fixed.end());
    s.numerator_degree = 2 * field.b_poly().degree() + static_cast<int>(fixed.size());
    s.lead = field.b() * field.b();
    return s;
}

/// Polynomial structure: no finite poles, numerator of the given degree.
inline SpectralStructure polynomial_structure(int degree, cplx lead = 1.0)
{
    SpectralStructure s;
    s.numerator_degree = degree;
    s.lead = lead;
    return s;
}

struct SpectralCurve {
    Polynomial numerator;
    Polynomial denominator = Polynomial::constant(1.0);
    std::vector<PoleFactor> poles;
    std::vector<cplx> fixed;
    cplx expected_lead = 1.0;
    double fit_residual = 0.0;
    double condition = 1.0;

    cplx operator()(cplx z) const { return numerator(z) / denominator(z); }

    /// R'(z).
    cplx derivative(cplx z) const
    {
        const cplx d = denominator(z);
        return (numerator.derivative()(z) * d - numerator(z) * denominator.derivative()(z)) / (d * d);
    }

    /// Coefficient of the leading power of R at infinity.
    cplx leading() const { return numerator.leading() / denominator.leading(); }
    /// R ~ lead z^k at infinity.
    int infinity_exponent() const { return numerator.degree() - denominator.degree(); }

    /// Pole order at a prescribed location after cancelling numerator
    /// Taylor coefficients that vanish to relative tolerance.
    int pole_order(cplx location, double rel_tol = 1e-6) const
    {
        int mult = 0;
        Polynomial d = denominator;
        while (d.degree() > 0 && std::abs(d(location)) <= 1e-12 * (1.0 + std::abs(d.leading()))) {
            ++mult;
            d = d.derivative();
        }
        double scale = 0.0;
        for (cplx c : numerator.coeffs())
            scale = std::max(scale, std::abs(c));
        int vanish = 0;
        const double h = std::max(1.0, std::abs(location));
        while (vanish < mult && vanish <= numerator.degree() &&
               std::abs(numerator.taylor_coeff(location, vanish)) * std::pow(h, vanish) <= rel_tol * scale)
            ++vanish;
        return mult - vanish;
    }

    /// Residue of R at a simple root of the denominator.
    cplx residue(cplx location) const { return numerator(location) / denominator.derivative()(location); }
};

namespace detail {

inline double distance_to_support(const DiscreteMeasure& mu, cplx z)
{
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.weights[k] <= 0.0)
            continue;
        d = std::min(d, mu.has_cells() ? point_segment_distance(z, mu.cells[k].a, mu.cells[k].b)
                                       : std::abs(z - mu.nodes[k]));
    }
    return d;
}

} // namespace detail

/// (C^mu + Phi')^2 at each point.
inline std::vector<cplx> sample_R(const DiscreteMeasure& mu, const ExternalField* field, std::span<const cplx> points,
                                  double min_distance = 1e-8)
{
    std::vector<cplx> out;
    out.reserve(points.size());
    for (cplx z : points) {
        if (detail::distance_to_support(mu, z) < min_distance * std::max(1.0, std::abs(z)))
            fail(ErrorKind::TooCloseToSupport, "spectral sample on the support");
        if (field && field->is_singular(z))
            fail(ErrorKind::TooCloseToSupport, "spectral sample on a singularity");
        cplx g = cauchy_transform(mu, z);
        if (field)
            g += field->phi_prime(z);
        out.push_back(g * g);
    }
    return out;
}

inline std::vector<cplx> sample_R(const DiscreteMeasure& mu, const ExternalField& field, std::span<const cplx> points)
{
    return sample_R(mu, &field, points);
}

/// Weighted linear least squares for the numerator, rows scaled so the fit
/// error is relative to 1 + |R|. The monomial basis is centred and scaled
/// on the sample cloud.
inline SpectralCurve fit_spectral_curve(std::span<const cplx> points, std::span<const cplx> values,
                                        const SpectralStructure& structure, double max_condition = 1e13)
{
    if (points.size() != values.size())
        fail(ErrorKind::InsufficientSamples, "points and values differ in length");
    const int deg = structure.numerator_degree;
    const auto unknowns = static_cast<std::size_t>(deg + 1);
    if (points.size() < 2 * unknowns)
        fail(ErrorKind::InsufficientSamples, "need at least twice as many samples as numerator coefficients");
    cplx centre = 0.0;
    for (cplx z : points)
        centre += z;
    centre /= static_cast<double>(points.size());
    double scale = 0.0;
    for (cplx z : points)
        scale = std::max(scale, std::abs(z - centre));
    if (!(scale > 0.0))
        fail(ErrorKind::InsufficientSamples, "samples coincide");
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (std::abs(points[i] - points[j]) < 1e-10 * scale)
                fail(ErrorKind::InsufficientSamples, "duplicate sample points");

    const auto m = static_cast<Eigen::Index>(points.size());
    const auto n = static_cast<Eigen::Index>(unknowns);
    Eigen::MatrixXcd mat(m, n);
    Eigen::VectorXcd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const cplx z = points[static_cast<std::size_t>(r)];
        const cplx v = values[static_cast<std::size_t>(r)];
        const cplx den = structure.denominator(z);
        const double w = 1.0 / (std::abs(den) * (1.0 + std::abs(v)));
        const cplx u = (z - centre) / scale;
        cplx p = 1.0;
        for (Eigen::Index c = 0; c < n; ++c) {
            mat(r, c) = w * p;
            p *= u;
        }
        rhs(r) = w * v * den;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= max_condition))
        fail(ErrorKind::IllConditioned, "spectral fit condition number " + std::to_string(cond));
    const Eigen::VectorXcd x = svd.solve(rhs);

    // expand sum x_k ((z - centre) / scale)^k in powers of z
    const Polynomial u({-centre / scale, 1.0 / scale});
    Polynomial num;
    Polynomial power = Polynomial::constant(1.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        num = num + power * x(k);
        power = power * u;
    }
    SpectralCurve curve;
    curve.numerator = num;
    curve.denominator = structure.denominator;
    curve.poles = structure.poles;
    curve.fixed = structure.fixed;
    curve.expected_lead = structure.lead;
    curve.condition = cond;
    double res = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        res = std::max(res, std::abs(curve(points[i]) - values[i]) / (1.0 + std::abs(values[i])));
    curve.fit_residual = res;
    return curve;
}

/// max |sample - R| / (1 + |R|) over the probes.
inline double spectral_residual(const SpectralCurve& curve, const DiscreteMeasure& mu, const ExternalField* field,
                                std::span<const cplx> probes)
{
    const auto s = sample_R(mu, field, probes);
    double worst = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const cplx r = curve(probes[i]);
        worst = std::max(worst, std::abs(s[i] - r) / (1.0 + std::abs(r)));
    }
    return worst;
}

/// Relative deviation of the fitted leading coefficient from b^2.
inline double leading_coefficient_error(const SpectralCurve& curve)
{
    return std::abs(curve.leading() / curve.expected_lead - 1.0);
}

struct ProbeOptions {
    int ring_points = 48;
    /// Ring radii as multiples of the support hull radius.
    double inner_ring = 1.5;
    double outer_ring = 3.0;
    /// Near-field probe offset as a fraction of the support diameter.
    double near_offset = 0.2;
    int near_probes = 16;
};

/// Two rings around the support hull, small rings around finite poles and
/// near-field probes offset normally from the support. Points too close to
/// the support or to a singularity are dropped.
inline std::vector<cplx> spectral_probes(const DiscreteMeasure& mu, const ExternalField* field,
                                         std::span<const cplx> fixed = {}, const ProbeOptions& opt = {})
{
    cplx centre = 0.0;
    double mass = 0.0;
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < mu.size(); ++k)
        if (mu.weights[k] > 0.0) {
            active.push_back(k);
            centre += mu.nodes[k];
            mass += 1.0;
        }
    if (active.empty())
        fail(ErrorKind::EmptySet, "measure has no active node");
    centre /= mass;
    double radius = 0.0;
    for (std::size_t k : active)
        radius = std::max(radius, std::abs(mu.nodes[k] - centre));
    radius = std::max(radius, 1e-3);
    const double diam = 2.0 * radius;

    std::vector<cplx> sing;
    if (field)
        sing = field->singularities();
    std::vector<cplx> features = sing;
    features.insert(features.end(), fixed.begin(), fixed.end());

    std::vector<cplx> out;
    auto keep = [&](cplx z, double clearance) {
        if (detail::distance_to_support(mu, z) < clearance)
            return;
        for (cplx w : features)
            if (std::abs(z - w) < clearance)
                return;
        out.push_back(z);
    };
    const double clearance = 0.05 * radius;
    for (double f : {opt.inner_ring, opt.outer_ring})
        for (int i = 0; i < opt.ring_points; ++i)
            keep(centre + std::polar(f * radius, 2.0 * pi * (i + 0.5) / opt.ring_points), clearance);
    for (cplx w : features) {
        double room = detail::distance_to_support(mu, w);
        for (cplx v : features)
            if (v != w)
                room = std::min(room, std::abs(v - w));
        if (!(room > 0.0) || !std::isfinite(room))
            continue;
        const double r = 0.4 * room;
        for (int i = 0; i < opt.ring_points / 2; ++i)
            keep(w + std::polar(r, 2.0 * pi * (i + 0.5) / (opt.ring_points / 2)), 0.1 * r);
    }
    if (mu.has_cells() && opt.near_probes > 0) {
        const std::size_t stride = std::max<std::size_t>(1, active.size() / static_cast<std::size_t>(opt.near_probes));
        for (std::size_t i = stride / 2; i < active.size(); i += stride) {
            const std::size_t k = active[i];
            const cplx nrm = cplx(0.0, 1.0) * mu.cells[k].tangent();
            for (double side : {1.0, -1.0})
                keep(mu.nodes[k] + side * opt.near_offset * diam * nrm, 0.5 * opt.near_offset * diam);
        }
    }
    return out;
}

/// Samples and fits R for a computed measure.
inline SpectralCurve fit_from_measure(const DiscreteMeasure& mu, const ExternalField& field,
                                      std::span<const cplx> fixed = {}, const ProbeOptions& opt = {})
{
    const auto pts = spectral_probes(mu, &field, fixed, opt);
    const auto vals = sample_R(mu, &field, pts);
    return fit_spectral_curve(pts, vals, spectral_structure(field, fixed));
}

namespace detail {

// Carries the branch of sqrt(R) from (s0, v0) to s1. The root is predicted
// by one Euler step and the step is halved while the prediction is poor, so
// zeros of sqrt(R) are crossed on the analytic branch.
inline cplx continue_root(const SpectralCurve& curve, cplx s0, cplx v0, cplx s1, int depth)
{
    const cplx v1 = std::sqrt(curve(s1));
    if (v0 == 0.0 || !std::isfinite(std::abs(v1)))
        return v1;
    const cplx pred = v0 + curve.derivative(s0) / (2.0 * v0) * (s1 - s0);
    const cplx best = std::abs(v1 - pred) <= std::abs(v1 + pred) ? v1 : -v1;
    if (std::abs(best - pred) <= 0.25 * std::max(std::abs(best), std::abs(v0)) || depth >= 12)
        return best;
    const cplx mid = 0.5 * (s0 + s1);
    return continue_root(curve, mid, continue_root(curve, s0, v0, mid, depth + 1), s1, depth + 1);
}

} // namespace detail

struct DensityProfile {
    /// Segment midpoints of the arc and the density per unit arclength there.
    std::vector<cplx> points;
    std::vector<double> values;
    double mass = 0.0;
};

/// Density (1 / pi i) sqrt(R) ds along an arc, with sqrt(R) continued
/// along the arc and its overall sign chosen once so that the density is
/// nonnegative. Uses the midpoint rule on each polyline segment.
inline DensityProfile density_from_R(const SpectralCurve& curve, std::span<const cplx> arc)
{
    if (arc.size() < 2)
        fail(ErrorKind::InvalidContour, "arc needs at least two vertices");
    DensityProfile out;
    cplx prev_s = 0.0;
    cplx prev = 0.0;
    bool have_prev = false;
    std::vector<double> raw;
    std::vector<double> lens;
    for (std::size_t i = 1; i < arc.size(); ++i) {
        const cplx ds = arc[i] - arc[i - 1];
        const cplx s = 0.5 * (arc[i] + arc[i - 1]);
        const cplx v = have_prev ? detail::continue_root(curve, prev_s, prev, s, 0) : std::sqrt(curve(s));
        prev_s = s;
        prev = v;
        have_prev = true;
        const double len = std::abs(ds);
        raw.push_back((v * ds / cplx(0.0, pi)).real() / len);
        lens.push_back(len);
        out.points.push_back(s);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i)
        total += raw[i] * lens[i];
    const double sign = total < 0.0 ? -1.0 : 1.0;
    double peak = 0.0;
    for (double& r : raw) {
        r *= sign;
        peak = std::max(peak, std::abs(r));
    }
    for (double r : raw)
        if (r < -1e-6 * peak)
            fail(ErrorKind::BranchAmbiguity, "density changes sign along the arc");
    out.values = std::move(raw);
    out.mass = std::abs(total);
    return out;
}

} // namespace maxmin

#endif
