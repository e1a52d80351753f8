#ifndef MAXMIN_CONTOUR_HPP
#define MAXMIN_CONTOUR_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "maxmin/error.hpp"
#include "maxmin/polynomial.hpp"

namespace maxmin {

inline const cplx infinity_point{std::numeric_limits<double>::infinity(), 0.0};

inline bool is_infinite(cplx z) { return !std::isfinite(z.real()) || !std::isfinite(z.imag()); }

/// Ray leaving the end vertex of a polyline in a fixed direction.
struct RayTail {
    cplx direction{1.0, 0.0};
    /// Sector the ray is aimed at, -1 when untagged.
    int sector = -1;
};

struct Pin {
    std::size_t vertex = 0;
    std::size_t fixed = 0;
};

/// A polyline with optional rays at its first (head) and last (tail) vertex.
struct Component {
    std::vector<cplx> vertices;
    std::optional<RayTail> head;
    std::optional<RayTail> tail;
    std::vector<Pin> pins;

    double length() const
    {
        double l = 0.0;
        for (std::size_t i = 1; i < vertices.size(); ++i)
            l += std::abs(vertices[i] - vertices[i - 1]);
        return l;
    }

    /// Point at arclength s from the first vertex, clamped to the polyline.
    cplx at_arclength(double s) const
    {
        if (s <= 0.0)
            return vertices.front();
        for (std::size_t i = 1; i < vertices.size(); ++i) {
            const double seg = std::abs(vertices[i] - vertices[i - 1]);
            if (s <= seg)
                return vertices[i - 1] + (vertices[i] - vertices[i - 1]) * (s / seg);
            s -= seg;
        }
        return vertices.back();
    }

    /// Unit direction of the head ray, pointing away from the polyline.
    cplx head_direction() const { return head ? head->direction / std::abs(head->direction) : cplx{}; }
    cplx tail_direction() const { return tail ? tail->direction / std::abs(tail->direction) : cplx{}; }
};

struct Contour {
    std::vector<Component> components;

    bool has_rays() const
    {
        return std::any_of(components.begin(), components.end(),
                           [](const Component& c) { return c.head || c.tail; });
    }

    /// Largest modulus over the polyline vertices; rays start inside this disc.
    double clearance_radius() const
    {
        double r = 0.0;
        for (const auto& c : components)
            for (cplx v : c.vertices)
                r = std::max(r, std::abs(v));
        return r;
    }

    /// Checks the structural invariants; pins are compared against `fixed`
    /// when it is nonempty.
    void validate(std::span<const cplx> fixed = {}) const
    {
        if (components.empty())
            fail(ErrorKind::InvalidContour, "contour has no components");
        for (const auto& c : components) {
            if (c.vertices.size() < 2)
                fail(ErrorKind::InvalidContour, "polyline needs at least two vertices");
            for (std::size_t i = 1; i < c.vertices.size(); ++i)
                if (c.vertices[i] == c.vertices[i - 1])
                    fail(ErrorKind::InvalidContour, "consecutive vertices coincide");
            for (cplx v : c.vertices)
                if (is_infinite(v))
                    fail(ErrorKind::InvalidContour, "vertices must be finite");
            for (const auto* r : {&c.head, &c.tail})
                if (*r && std::abs((*r)->direction) == 0.0)
                    fail(ErrorKind::InvalidContour, "ray direction must be nonzero");
            for (const auto& p : c.pins) {
                if (p.vertex >= c.vertices.size())
                    fail(ErrorKind::InvalidContour, "pin refers to a missing vertex");
                if (!fixed.empty()) {
                    if (p.fixed >= fixed.size())
                        fail(ErrorKind::InvalidContour, "pin refers to a missing fixed point");
                    if (c.vertices[p.vertex] != fixed[p.fixed])
                        fail(ErrorKind::InvalidContour, "pinned vertex differs from its fixed point");
                }
            }
        }
    }
};

/// Segment [a, b] joined by a straight line.
inline Component segment(cplx a, cplx b, std::size_t pieces = 1)
{
    Component c;
    for (std::size_t i = 0; i <= pieces; ++i)
        c.vertices.push_back(a + (b - a) * (static_cast<double>(i) / static_cast<double>(pieces)));
    return c;
}

inline double point_segment_distance(cplx z, cplx a, cplx b)
{
    const cplx d = b - a;
    const double len2 = std::norm(d);
    if (len2 == 0.0)
        return std::abs(z - a);
    const double t = std::clamp(((z - a) * std::conj(d)).real() / len2, 0.0, 1.0);
    return std::abs(z - (a + t * d));
}

inline double point_ray_distance(cplx z, cplx start, cplx dir)
{
    dir /= std::abs(dir);
    const double t = std::max(0.0, ((z - start) * std::conj(dir)).real());
    return std::abs(z - (start + t * dir));
}

inline double distance_to_component(cplx z, const Component& c)
{
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < c.vertices.size(); ++i)
        d = std::min(d, point_segment_distance(z, c.vertices[i - 1], c.vertices[i]));
    if (c.head)
        d = std::min(d, point_ray_distance(z, c.vertices.front(), c.head->direction));
    if (c.tail)
        d = std::min(d, point_ray_distance(z, c.vertices.back(), c.tail->direction));
    return d;
}

inline double distance_to_contour(cplx z, const Contour& g)
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto& c : g.components)
        d = std::min(d, distance_to_component(z, c));
    return d;
}

/// Polyline resampled so that consecutive points are at most `step` apart.
inline std::vector<cplx> densify(std::span<const cplx> poly, double step)
{
    std::vector<cplx> out;
    if (poly.empty())
        return out;
    for (std::size_t i = 1; i < poly.size(); ++i) {
        const cplx a = poly[i - 1];
        const cplx b = poly[i];
        const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(b - a) / step)));
        for (std::size_t k = 0; k < pieces; ++k)
            out.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(pieces)));
    }
    out.push_back(poly.back());
    return out;
}

/// Contour with every polyline resampled at spacing <= step; pins follow
/// their vertices.
inline Contour densify(const Contour& g, double step)
{
    Contour out = g;
    for (std::size_t ci = 0; ci < g.components.size(); ++ci) {
        const auto& c = g.components[ci];
        auto& d = out.components[ci];
        d.vertices.clear();
        std::vector<std::size_t> index(c.vertices.size());
        for (std::size_t i = 0; i < c.vertices.size(); ++i) {
            index[i] = d.vertices.size();
            d.vertices.push_back(c.vertices[i]);
            if (i + 1 == c.vertices.size())
                break;
            const cplx a = c.vertices[i];
            const cplx b = c.vertices[i + 1];
            const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(b - a) / step)));
            for (std::size_t k = 1; k < pieces; ++k)
                d.vertices.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(pieces)));
        }
        for (auto& p : d.pins)
            p.vertex = index.at(p.vertex);
    }
    return out;
}

/// Points along a ray at geometrically growing distance: |z| follows
/// R q^k until the escape radius 10 R.
inline std::vector<cplx> ray_samples(cplx start, cplx dir, double q = 1.25)
{
    dir /= std::abs(dir);
    const double r0 = std::max(1.0, std::abs(start));
    const double escape = 10.0 * r0;
    std::vector<cplx> out;
    double t = 0.0;
    double step = 0.0;
    for (int k = 1; k < 10000; ++k) {
        step = r0 * (std::pow(q, k) - std::pow(q, k - 1));
        t += step;
        const cplx z = start + t * dir;
        out.push_back(z);
        if (std::abs(z) >= escape)
            break;
    }
    return out;
}

/// Samples for metric comparisons: polylines at spacing <= step, rays
/// geometrically, plus the point at infinity when any ray is present.
inline std::vector<cplx> sample_contour(const Contour& g, double step, bool include_infinity = true)
{
    std::vector<cplx> out;
    for (const auto& c : g.components) {
        for (std::size_t i = 1; i < c.vertices.size(); ++i) {
            const cplx a = c.vertices[i - 1];
            const cplx b = c.vertices[i];
            const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(b - a) / step)));
            for (std::size_t k = 0; k < pieces; ++k)
                out.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(pieces)));
        }
        out.push_back(c.vertices.back());
        if (c.head)
            for (cplx z : ray_samples(c.vertices.front(), c.head->direction))
                out.push_back(z);
        if (c.tail)
            for (cplx z : ray_samples(c.vertices.back(), c.tail->direction))
                out.push_back(z);
    }
    if (include_infinity && g.has_rays())
        out.push_back(infinity_point);
    return out;
}

/// Chordal distance on the Riemann sphere; either argument may be infinite.
inline double chordal_distance(cplx z, cplx w)
{
    const bool zi = is_infinite(z);
    const bool wi = is_infinite(w);
    if (zi && wi)
        return 0.0;
    if (zi)
        return 1.0 / std::sqrt(1.0 + std::norm(w));
    if (wi)
        return 1.0 / std::sqrt(1.0 + std::norm(z));
    return std::abs(z - w) / (std::sqrt(1.0 + std::norm(z)) * std::sqrt(1.0 + std::norm(w)));
}

/// sup over a in `from` of the chordal distance to `to`.
inline double directed_hausdorff(std::span<const cplx> from, std::span<const cplx> to)
{
    double worst = 0.0;
    for (cplx a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (cplx b : to) {
            best = std::min(best, chordal_distance(a, b));
            if (best == 0.0)
                break;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

inline double hausdorff_distance(std::span<const cplx> k1, std::span<const cplx> k2)
{
    if (k1.empty() || k2.empty())
        fail(ErrorKind::EmptySet, "Hausdorff distance needs two nonempty samples");
    return std::max(directed_hausdorff(k1, k2), directed_hausdorff(k2, k1));
}

/// Vector field z -> h(z) used to deform contours. The Jacobian action gives
/// Dh(z) v for a real direction v written as a complex number.
template <class F>
concept DisplacementField = requires(const F& f, cplx z) {
    { f(z) } -> std::convertible_to<cplx>;
    { f.jacobian(z, z) } -> std::convertible_to<cplx>;
    { f.lipschitz() } -> std::convertible_to<double>;
};

struct ZeroField {
    cplx operator()(cplx) const { return {}; }
    cplx jacobian(cplx, cplx) const { return {}; }
    double lipschitz() const { return 0.0; }
    double support_radius() const { return 0.0; }
};

/// Holomorphic polynomial displacement; only meant for formula checks since
/// it does not vanish near the singular set.
struct PolynomialField {
    Polynomial p;

    cplx operator()(cplx z) const { return p(z); }
    cplx jacobian(cplx z, cplx v) const { return p.derivative()(z) * v; }
    double lipschitz() const { return std::numeric_limits<double>::infinity(); }
};

/// C^2 bump d (1 - s^2)^3 with s = |z - center| / radius.
class BumpField {
public:
    /// max over s of |d/ds (1 - s^2)^3|, attained at s = 1/sqrt(5).
    static constexpr double slope_bound = 1.7173300880745577;

    BumpField(cplx center, double radius, cplx direction) : center_(center), radius_(radius), direction_(direction)
    {
        if (!(radius > 0.0))
            fail(ErrorKind::TestFunctionViolation, "bump radius must be positive");
    }

    cplx center() const { return center_; }
    double radius() const { return radius_; }
    cplx direction() const { return direction_; }

    double profile(cplx z) const
    {
        const double s2 = std::norm(z - center_) / (radius_ * radius_);
        if (s2 >= 1.0)
            return 0.0;
        const double u = 1.0 - s2;
        return u * u * u;
    }

    cplx operator()(cplx z) const { return direction_ * profile(z); }

    /// Gradient of the profile packed as d/dx + i d/dy.
    cplx profile_gradient(cplx z) const
    {
        const double r2 = radius_ * radius_;
        const double s2 = std::norm(z - center_) / r2;
        if (s2 >= 1.0)
            return {};
        const double u = 1.0 - s2;
        return -6.0 * u * u * (z - center_) / r2;
    }

    cplx jacobian(cplx z, cplx v) const
    {
        const cplx g = profile_gradient(z);
        return direction_ * (g.real() * v.real() + g.imag() * v.imag());
    }

    double lipschitz() const { return std::abs(direction_) * slope_bound / radius_; }

    /// sup |h| and sup |Dh| over the plane.
    double sup_value() const { return std::abs(direction_); }
    double sup_derivative() const { return lipschitz(); }

    bool supports(cplx z) const { return std::abs(z - center_) < radius_; }

private:
    cplx center_;
    double radius_;
    cplx direction_;
};

/// Shrinks a bump until it vanishes at every fixed point and on a disc of
/// radius `dead_zone` around each singularity. Returns nothing when the
/// remaining radius falls below `min_radius`.
inline std::optional<BumpField> constrained_bump(cplx center, double radius, cplx direction,
                                                 std::span<const cplx> fixed, std::span<const cplx> singular,
                                                 double dead_zone, double min_radius)
{
    double r = radius;
    for (cplx c : fixed)
        r = std::min(r, std::abs(center - c));
    for (cplx w : singular)
        r = std::min(r, std::abs(center - w) - dead_zone);
    // shaved so that rounding in the profile cannot leave a residue at the boundary
    r *= 1.0 - 1e-12;
    if (!(r >= min_radius) || r <= 0.0)
        return std::nullopt;
    return BumpField(center, r, direction);
}

/// Throws unless the bump vanishes on the fixed points and the dead zones.
inline void check_test_function(const BumpField& h, std::span<const cplx> fixed, std::span<const cplx> singular,
                                double dead_zone)
{
    for (cplx c : fixed)
        if (std::abs(c - h.center()) < h.radius())
            fail(ErrorKind::TestFunctionViolation, "test field must vanish at the fixed points");
    for (cplx w : singular)
        if (std::abs(w - h.center()) < h.radius() + dead_zone)
            fail(ErrorKind::TestFunctionViolation, "test field must vanish near the singular set");
}

/// Linear combination sum_i g_i h_i of bumps.
struct BumpSum {
    std::vector<BumpField> bumps;
    std::vector<double> coeffs;

    cplx operator()(cplx z) const
    {
        cplx v = 0.0;
        for (std::size_t i = 0; i < bumps.size(); ++i)
            if (coeffs[i] != 0.0)
                v += coeffs[i] * bumps[i](z);
        return v;
    }

    cplx jacobian(cplx z, cplx dir) const
    {
        cplx v = 0.0;
        for (std::size_t i = 0; i < bumps.size(); ++i)
            if (coeffs[i] != 0.0)
                v += coeffs[i] * bumps[i].jacobian(z, dir);
        return v;
    }

    /// Triangle-inequality bound; overlapping bumps make it pessimistic.
    double lipschitz() const
    {
        double l = 0.0;
        for (std::size_t i = 0; i < bumps.size(); ++i)
            l += std::abs(coeffs[i]) * bumps[i].lipschitz();
        return l;
    }
};

/// Image of the contour under z -> z + t h(z). Pinned vertices stay put;
/// rays keep their direction and follow their start vertex.
template <DisplacementField H>
Contour perturb(const Contour& g, const H& h, double t)
{
    if (t == 0.0)
        return g;
    if (!(std::abs(t) * h.lipschitz() < 1.0))
        fail(ErrorKind::FoldDetected, "step exceeds the fold-free bound |t| Lip(h) < 1");
    Contour out = g;
    for (auto& c : out.components) {
        std::vector<bool> pinned(c.vertices.size(), false);
        for (const auto& p : c.pins)
            pinned[p.vertex] = true;
        for (std::size_t i = 0; i < c.vertices.size(); ++i)
            if (!pinned[i])
                c.vertices[i] += t * h(c.vertices[i]);
        for (std::size_t i = 1; i < c.vertices.size(); ++i)
            if (c.vertices[i] == c.vertices[i - 1])
                fail(ErrorKind::FoldDetected, "consecutive vertices collapsed");
    }
    return out;
}

} // namespace maxmin

#endif
