#ifndef MAXMIN_MEMBERSHIP_HPP
#define MAXMIN_MEMBERSHIP_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "maxmin/contour.hpp"
#include "maxmin/field.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

namespace condition {
inline const std::string contains_fixed_points = "contains-fixed-points";
inline const std::string block_component = "block-component";
inline const std::string sector_block_component = "sector-block-component";
inline const std::string unconnected_sector = "unconnected-sector-clearance";
inline const std::string component_count = "component-count";
inline const std::string qualifying_arc = "qualifying-arc";
} // namespace condition

namespace detail {

/// Parameters t in [0, t_max] with |a + t d| = r.
inline void circle_hits(cplx a, cplx d, double t_max, double r, std::vector<cplx>& out)
{
    const double qa = std::norm(d);
    if (qa == 0.0)
        return;
    const double qb = 2.0 * (std::conj(a) * d).real();
    const double qc = std::norm(a) - r * r;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0)
        return;
    const double sq = std::sqrt(disc);
    for (double t : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)})
        if (t >= 0.0 && t <= t_max)
            out.push_back(a + t * d);
}

inline std::vector<cplx> circle_intersections(const Component& c, double r)
{
    std::vector<cplx> out;
    for (std::size_t i = 1; i < c.vertices.size(); ++i)
        circle_hits(c.vertices[i - 1], c.vertices[i] - c.vertices[i - 1], 1.0, r, out);
    const double inf = std::numeric_limits<double>::infinity();
    if (c.head)
        circle_hits(c.vertices.front(), c.head_direction(), inf, r, out);
    if (c.tail)
        circle_hits(c.vertices.back(), c.tail_direction(), inf, r, out);
    return out;
}

inline bool segments_intersect(cplx a, cplx b, cplx c, cplx d)
{
    auto cross = [](cplx u, cplx v) { return u.real() * v.imag() - u.imag() * v.real(); };
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

inline bool components_touch(const Component& x, const Component& y, double tol)
{
    for (cplx v : x.vertices)
        if (distance_to_component(v, y) <= tol)
            return true;
    for (cplx v : y.vertices)
        if (distance_to_component(v, x) <= tol)
            return true;
    for (std::size_t i = 1; i < x.vertices.size(); ++i)
        for (std::size_t j = 1; j < y.vertices.size(); ++j)
            if (segments_intersect(x.vertices[i - 1], x.vertices[i], y.vertices[j - 1], y.vertices[j]))
                return true;
    return false;
}

} // namespace detail

/// Radii r0 q^k, k >= 0, up to and including the first one beyond 10 r0.
inline std::vector<double> stretch_radii(double r0, double q = 1.25)
{
    std::vector<double> out;
    for (double r = r0; r <= 10.0 * r0 * q; r *= q)
        out.push_back(r);
    return out;
}

/// True when the union of the components meets every sampled circle
/// |z| = r, r >= r0, strictly inside the sector shrunk by epsilon.
inline bool stretches_to_infinity(std::span<const Component> group, const SectorSet& sectors, int sector,
                                  double epsilon, double r0)
{
    const double r_start = std::max(r0, 1e-12);
    const double theta = sectors.angles.at(static_cast<std::size_t>(sector));
    const double limit = sectors.half_width - epsilon;
    for (double r : stretch_radii(r_start)) {
        bool hit = false;
        for (const auto& c : group) {
            for (cplx z : detail::circle_intersections(c, r))
                if (angle_distance(std::arg(z), theta) < limit) {
                    hit = true;
                    break;
                }
            if (hit)
                break;
        }
        if (!hit)
            return false;
    }
    return true;
}

inline bool stretches_to_infinity(const Component& c, const SectorSet& sectors, int sector, double epsilon, double r0)
{
    return stretches_to_infinity(std::span<const Component>(&c, 1), sectors, sector, epsilon, r0);
}

/// Groups of mutually touching components (union-find), each sorted.
inline std::vector<std::vector<std::size_t>> connected_groups(const Contour& g, double tol)
{
    const std::size_t n = g.components.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (detail::components_touch(g.components[i], g.components[j], tol))
                parent[find(i)] = find(j);
    std::vector<std::vector<std::size_t>> groups;
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(slot[r])].push_back(i);
    }
    return groups;
}

struct MembershipOptions {
    /// Distance below which a point counts as lying on the contour.
    double tolerance = 1e-8;
    /// Inner radius of the stretch test; 0 means twice the clearance radius.
    double stretch_radius = 0.0;
    /// Sample spacing for the unconnected-sector test.
    double sample_step = 0.05;
};

/// Checks a sampled contour against the admissible family of a triple.
inline Report membership(const Contour& g, const AdmissibleTriple& triple, const SectorSet& sectors,
                         std::span<const cplx> fixed, double clearance_radius, const MembershipOptions& opt = {})
{
    Report report;
    const double scale = std::max(1.0, g.clearance_radius());
    const double tol = opt.tolerance * scale;
    const double r0 = opt.stretch_radius > 0.0 ? opt.stretch_radius : 2.0 * scale;
    const double eps = sectors.epsilon;

    const auto groups = connected_groups(g, tol);
    std::vector<std::vector<Component>> parts;
    for (const auto& grp : groups) {
        std::vector<Component> p;
        for (std::size_t i : grp)
            p.push_back(g.components[i]);
        parts.push_back(std::move(p));
    }
    auto on_part = [&](cplx z, const std::vector<Component>& p) {
        return std::any_of(p.begin(), p.end(), [&](const Component& c) { return distance_to_component(z, c) <= tol; });
    };
    // stretch[k][j]: part k stretches into sector j
    std::vector<std::vector<bool>> stretch(parts.size(), std::vector<bool>(static_cast<std::size_t>(sectors.size())));
    for (std::size_t k = 0; k < parts.size(); ++k)
        for (int j = 0; j < sectors.size(); ++j)
            stretch[k][static_cast<std::size_t>(j)] = stretches_to_infinity(parts[k], sectors, j, eps, r0);
    std::vector<std::vector<std::size_t>> fixed_on(parts.size());
    for (std::size_t c = 0; c < fixed.size(); ++c) {
        bool found = false;
        for (std::size_t k = 0; k < parts.size(); ++k)
            if (on_part(fixed[c], parts[k])) {
                fixed_on[k].push_back(c);
                found = true;
            }
        if (!found)
            report.add(condition::contains_fixed_points, "fixed point " + std::to_string(c) + " is not on the contour");
    }

    for (std::size_t b = 0; b < triple.c_partition.size(); ++b) {
        bool ok = false;
        for (std::size_t k = 0; k < parts.size() && !ok; ++k) {
            bool good = true;
            for (int c : triple.c_partition[b])
                good = good && std::find(fixed_on[k].begin(), fixed_on[k].end(), static_cast<std::size_t>(c)) !=
                                   fixed_on[k].end();
            for (int j : triple.psi[b])
                good = good && stretch[k][static_cast<std::size_t>(j)];
            ok = good;
        }
        if (!ok)
            report.add(condition::block_component,
                       "no connected piece holds fixed-point block " + std::to_string(b) + " with its sectors");
    }

    const Partition free_blocks = triple.free_sector_blocks();
    for (const auto& blk : free_blocks) {
        bool ok = false;
        for (std::size_t k = 0; k < parts.size() && !ok; ++k)
            ok = std::all_of(blk.begin(), blk.end(), [&](int j) { return stretch[k][static_cast<std::size_t>(j)]; });
        if (!ok)
            report.add(condition::sector_block_component,
                       "no connected piece stretches through sectors " + detail::block_string(blk));
    }

    const auto unconnected = triple.unconnected_sectors();
    if (!unconnected.empty()) {
        for (cplx z : sample_contour(g, opt.sample_step * scale, false)) {
            if (std::abs(z) <= clearance_radius)
                continue;
            for (int j : unconnected)
                if (sectors.in_sector(z, j, eps)) {
                    report.add(condition::unconnected_sector,
                               "contour enters unconnected sector " + std::to_string(j) + " beyond the clearance radius");
                    break;
                }
            if (report.has(condition::unconnected_sector))
                break;
        }
    }

    const std::size_t allowed = triple.c_partition.size() + free_blocks.size();
    if (parts.size() > allowed)
        report.add(condition::component_count, std::to_string(parts.size()) + " connected pieces, at most " +
                                                   std::to_string(allowed) + " allowed");
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto n_stretch = std::count(stretch[k].begin(), stretch[k].end(), true);
        const auto n_fixed = fixed_on[k].size();
        if (!(n_fixed >= 2 || (n_fixed >= 1 && n_stretch >= 1) || n_stretch >= 2))
            report.add(condition::qualifying_arc, "connected piece " + std::to_string(k) +
                                                      " joins neither two fixed points, a fixed point and infinity, "
                                                      "nor two sectors");
    }
    return report;
}

} // namespace maxmin

#endif
