#ifndef MAXMIN_CONSTRUCT_HPP
#define MAXMIN_CONSTRUCT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "maxmin/contour.hpp"
#include "maxmin/equilibrium.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"
#include "maxmin/grid.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

struct LambdaRegion {
    GridMask mask;
    /// Radius beyond which the mask splits into one piece per sector.
    double radius = 0.0;
    int components = 0;
};

/// U^mu + phi - ell on the grid, NaN at singular points of the field.
inline std::vector<double> effective_potential_grid(const DiscreteMeasure& mu, double ell, const ExternalField& field,
                                                    const Window& w)
{
    return sample_grid(w, [&](cplx z) {
        if (field.is_singular(z))
            return std::numeric_limits<double>::quiet_NaN();
        return log_potential(mu, z) + field.phi(z) - ell;
    });
}

namespace detail {

inline double feature_radius(const DiscreteMeasure& mu, const ExternalField& field)
{
    double r = 1.0;
    for (std::size_t k = 0; k < mu.size(); ++k)
        if (mu.weights[k] > 0.0)
            r = std::max(r, std::abs(mu.nodes[k]));
    for (cplx s : field.singularities())
        r = std::max(r, std::abs(s));
    return r;
}

inline double inscribed_radius(const Window& w)
{
    return std::min({-w.xmin, w.xmax, -w.ymin, w.ymax});
}

/// Component labels of the mask restricted to |z| > r, or -1.
inline std::pair<std::vector<int>, int> outer_components(const GridMask& m, double r)
{
    GridMask outer(m.window);
    for (int j = 0; j < m.window.ny(); ++j)
        for (int i = 0; i < m.window.nx(); ++i)
            outer.set(i, j, m.at(i, j) && std::abs(m.window.point(i, j)) > r);
    return outer.components();
}

inline std::pair<int, int> nearest_node(const Window& w, cplx z)
{
    const int i = std::clamp(static_cast<int>(std::lround((z.real() - w.xmin) / w.dx())), 0, w.nx() - 1);
    const int j = std::clamp(static_cast<int>(std::lround((z.imag() - w.ymin) / w.dy())), 0, w.ny() - 1);
    return {i, j};
}

/// Does the outer mask split into exactly one piece per sector, with every
/// central ray inside its own piece?
inline bool sector_split(const GridMask& m, const SectorSet& sectors, double r, int& count)
{
    const auto [label, n] = outer_components(m, r);
    count = n;
    if (n != sectors.size())
        return false;
    const double r_max = inscribed_radius(m.window);
    const double step = m.window.cell_diagonal();
    std::set<int> seen;
    for (int j = 0; j < sectors.size(); ++j) {
        const cplx dir = sectors.direction(j);
        int piece = -1;
        for (double s = r + 2.0 * step; s < r_max - step; s += step) {
            const auto [a, b] = nearest_node(m.window, s * dir);
            const int l = label[m.index(a, b)];
            if (l < 0 || (piece >= 0 && l != piece))
                return false;
            piece = l;
        }
        if (piece < 0 || !seen.insert(piece).second)
            return false;
    }
    return true;
}

} // namespace detail

/// Mask of U^mu + phi > ell and the smallest radius of a doubling schedule
/// beyond which it has one component per sector.
inline LambdaRegion lambda_region(const DiscreteMeasure& mu, double ell, const ExternalField& field,
                                  const SectorSet& sectors, const Window& w)
{
    w.validate();
    const auto v = effective_potential_grid(mu, ell, field, w);
    LambdaRegion out;
    out.mask = GridMask(w);
    for (std::size_t k = 0; k < v.size(); ++k)
        out.mask.values[k] = v[k] > 0.0 ? 1 : 0;

    const double r0 = 1.5 * detail::feature_radius(mu, field);
    const double r_max = detail::inscribed_radius(w);
    int count = 0;
    double r = r0;
    for (int k = 0; k <= 10; ++k, r *= 2.0) {
        if (r >= r_max - 3.0 * w.cell_diagonal())
            break;
        if (detail::sector_split(out.mask, sectors, r, count)) {
            out.radius = r;
            out.components = count;
            return out;
        }
    }
    if (count == sectors.size())
        fail(ErrorKind::ComponentCountMismatch, "region beyond radius " + std::to_string(r) +
                                                    " does not hold each central ray in its own component");
    fail(ErrorKind::ComponentCountMismatch,
         "region beyond radius " + std::to_string(r) + " has " + std::to_string(count) + " components, expected " +
             std::to_string(sectors.size()));
}

struct Gamma0Options {
    /// Extra cost factor for grid edges leaving the mask.
    double barrier = 100.0;
    /// Grid nodes closer than this many cells to the support are dropped.
    double support_exclusion = 0.75;
    /// Reach of the links from support vertices and terminals to the grid, in cells.
    double link_reach = 1.5;
    /// Cost factor of those links, so that ties go to paths along the support.
    double link_cost = 1.01;
};

namespace detail {

struct PathGraph {
    std::vector<cplx> pos;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;

    std::size_t add(cplx z)
    {
        pos.push_back(z);
        adj.emplace_back();
        return pos.size() - 1;
    }
    void link(std::size_t a, std::size_t b, double w)
    {
        adj[a].push_back({b, w});
        adj[b].push_back({a, w});
    }
};

/// Maximal runs of consecutive active cells as polylines.
inline std::vector<std::vector<cplx>> support_arcs(const DiscreteMeasure& mu)
{
    std::vector<std::vector<cplx>> arcs;
    std::vector<cplx> run;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.weights[k] <= 0.0) {
            if (!run.empty())
                arcs.push_back(std::move(run));
            run.clear();
            continue;
        }
        const Cell& c = mu.cells[k];
        const double tol = 1e-12 * std::max(1.0, std::abs(c.a));
        if (!run.empty() && std::abs(run.back() - c.a) > tol) {
            arcs.push_back(std::move(run));
            run.clear();
        }
        if (run.empty())
            run.push_back(c.a);
        run.push_back(c.b);
    }
    if (!run.empty())
        arcs.push_back(std::move(run));
    return arcs;
}

} // namespace detail

/// Rebuilds a contour from the support of mu: shortest grid paths through
/// the closure of the mask join each fixed-point block with the anchors of
/// its sectors and each free sector block through its anchors; a central
/// ray leaves every anchor.
inline Contour build_gamma0(const GridMask& mask, const DiscreteMeasure& mu, const AdmissibleTriple& triple,
                            const SectorSet& sectors, std::span<const cplx> fixed, double radius,
                            const Gamma0Options& opt = {})
{
    if (!mu.has_cells())
        fail(ErrorKind::InvalidContour, "measure needs cells");
    const Window& w = mask.window;
    const double cell = std::max(w.dx(), w.dy());
    detail::PathGraph graph;

    // support arcs, vertices merged by position
    std::vector<std::pair<cplx, std::size_t>> arc_nodes;
    auto arc_node = [&](cplx z) {
        for (const auto& [p, id] : arc_nodes)
            if (std::abs(p - z) <= 1e-12 * std::max(1.0, std::abs(z)))
                return id;
        const std::size_t id = graph.add(z);
        arc_nodes.push_back({z, id});
        return id;
    };
    std::set<std::pair<std::size_t, std::size_t>> edges;
    auto use_edge = [&](std::size_t a, std::size_t b) {
        if (a != b)
            edges.insert({std::min(a, b), std::max(a, b)});
    };
    std::vector<std::pair<cplx, cplx>> arc_segments;
    for (auto& arc : detail::support_arcs(mu)) {
        // split at fixed points lying on the arc
        std::vector<cplx> pts{arc.front()};
        for (std::size_t i = 1; i < arc.size(); ++i) {
            std::vector<std::pair<double, cplx>> inner;
            for (cplx c : fixed) {
                const cplx d = arc[i] - arc[i - 1];
                const double t = ((c - arc[i - 1]) * std::conj(d)).real() / std::norm(d);
                if (t > 1e-9 && t < 1 - 1e-9 && point_segment_distance(c, arc[i - 1], arc[i]) <= 1e-9 * cell)
                    inner.push_back({t, c});
            }
            std::sort(inner.begin(), inner.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
            for (const auto& [t, c] : inner)
                pts.push_back(c);
            pts.push_back(arc[i]);
        }
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const std::size_t a = arc_node(pts[i - 1]);
            const std::size_t b = arc_node(pts[i]);
            graph.link(a, b, std::abs(pts[i] - pts[i - 1]));
            use_edge(a, b);
            arc_segments.push_back({pts[i - 1], pts[i]});
        }
    }
    auto support_distance = [&](cplx z) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& [a, b] : arc_segments)
            d = std::min(d, point_segment_distance(z, a, b));
        return d;
    };

    // grid nodes
    const int nx = w.nx();
    const int ny = w.ny();
    std::vector<long> grid_id(static_cast<std::size_t>(nx * ny), -1);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const cplx z = w.point(i, j);
            if (support_distance(z) < opt.support_exclusion * cell)
                continue;
            grid_id[mask.index(i, j)] = static_cast<long>(graph.add(z));
        }
    auto outside = [&](int i, int j) { return mask.at(i, j) ? 0.0 : 1.0; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const long a = grid_id[mask.index(i, j)];
            if (a < 0)
                continue;
            const int di[4] = {1, 0, 1, 1};
            const int dj[4] = {0, 1, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const int u = i + di[d];
                const int v = j + dj[d];
                if (u < 0 || v < 0 || u >= nx || v >= ny)
                    continue;
                const long b = grid_id[mask.index(u, v)];
                if (b < 0)
                    continue;
                const double len = std::abs(w.point(u, v) - w.point(i, j));
                graph.link(static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                           len * (1.0 + opt.barrier * 0.5 * (outside(i, j) + outside(u, v))));
            }
        }
    auto link_to_grid = [&](std::size_t id) {
        const cplx z = graph.pos[id];
        const double reach = opt.link_reach * cell;
        const int i0 = static_cast<int>(std::floor((z.real() - reach - w.xmin) / w.dx()));
        const int j0 = static_cast<int>(std::floor((z.imag() - reach - w.ymin) / w.dy()));
        const int i1 = static_cast<int>(std::ceil((z.real() + reach - w.xmin) / w.dx()));
        const int j1 = static_cast<int>(std::ceil((z.imag() + reach - w.ymin) / w.dy()));
        for (int j = std::max(0, j0); j <= std::min(ny - 1, j1); ++j)
            for (int i = std::max(0, i0); i <= std::min(nx - 1, i1); ++i) {
                const long g = grid_id[mask.index(i, j)];
                const double len = std::abs(w.point(i, j) - z);
                if (g < 0 || len > reach || len == 0.0)
                    continue;
                graph.link(id, static_cast<std::size_t>(g),
                           opt.link_cost * len * (1.0 + opt.barrier * 0.5 * outside(i, j)));
            }
    };
    const std::size_t n_arc = graph.pos.size();
    for (const auto& [p, id] : arc_nodes)
        link_to_grid(id);

    // terminals: fixed points and anchors
    std::vector<std::size_t> fixed_id(fixed.size());
    auto terminal = [&](cplx z) {
        for (const auto& [p, id] : arc_nodes)
            if (std::abs(p - z) <= 1e-9 * std::max(cell, 1e-300))
                return id;
        const std::size_t id = graph.add(z);
        link_to_grid(id);
        for (const auto& [p, aid] : arc_nodes)
            if (std::abs(p - z) <= opt.link_reach * cell)
                graph.link(id, aid, opt.link_cost * std::abs(p - z));
        return id;
    };
    for (std::size_t c = 0; c < fixed.size(); ++c)
        fixed_id[c] = terminal(fixed[c]);
    std::map<int, std::size_t> anchor_id;
    auto anchor = [&](int j) {
        auto it = anchor_id.find(j);
        if (it != anchor_id.end())
            return it->second;
        const std::size_t id = terminal(radius * sectors.direction(j));
        anchor_id[j] = id;
        return id;
    };
    std::vector<std::vector<std::size_t>> requirements;
    std::vector<std::string> labels;
    for (std::size_t b = 0; b < triple.c_partition.size(); ++b) {
        std::vector<std::size_t> t;
        for (int c : triple.c_partition[b])
            t.push_back(fixed_id.at(static_cast<std::size_t>(c)));
        for (int j : triple.psi[b])
            t.push_back(anchor(j));
        requirements.push_back(std::move(t));
        labels.push_back("fixed-point block " + std::to_string(b));
    }
    for (const auto& blk : triple.free_sector_blocks()) {
        std::vector<std::size_t> t;
        for (int j : blk)
            t.push_back(anchor(j));
        requirements.push_back(std::move(t));
        labels.push_back("sector block " + detail::block_string(blk));
    }

    // grid closure of the mask: nodes in the mask or next to it
    auto near_mask = [&](std::size_t id) {
        if (id < n_arc)
            return true;
        const cplx z = graph.pos[id];
        const auto [i, j] = detail::nearest_node(w, z);
        if (std::abs(w.point(i, j) - z) > 1e-9 * cell)
            return true;
        for (int b = std::max(0, j - 1); b <= std::min(ny - 1, j + 1); ++b)
            for (int a = std::max(0, i - 1); a <= std::min(nx - 1, i + 1); ++a)
                if (mask.at(a, b))
                    return true;
        return false;
    };

    const std::size_t nn = graph.pos.size();
    for (std::size_t r = 0; r < requirements.size(); ++r) {
        const auto& terms = requirements[r];
        if (terms.size() < 2)
            continue;
        std::set<std::size_t> tree{terms.front()};
        std::set<std::size_t> pending(terms.begin() + 1, terms.end());
        pending.erase(terms.front());
        while (!pending.empty()) {
            std::vector<double> dist(nn, std::numeric_limits<double>::infinity());
            std::vector<std::size_t> prev(nn, nn);
            using Item = std::pair<double, std::size_t>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
            for (std::size_t s : tree) {
                dist[s] = 0.0;
                q.push({0.0, s});
            }
            std::size_t hit = nn;
            while (!q.empty()) {
                const auto [d, u] = q.top();
                q.pop();
                if (d > dist[u])
                    continue;
                if (pending.count(u)) {
                    hit = u;
                    break;
                }
                for (const auto& [v, wt] : graph.adj[u])
                    if (d + wt < dist[v] || (d + wt == dist[v] && u < prev[v])) {
                        dist[v] = d + wt;
                        prev[v] = u;
                        q.push({dist[v], v});
                    }
            }
            if (hit == nn)
                fail(ErrorKind::Disconnected, labels[r] + ": no path between its terminals");
            for (std::size_t u = hit; !tree.count(u); u = prev[u]) {
                if (!near_mask(u))
                    fail(ErrorKind::Disconnected,
                         labels[r] + ": the only path leaves the closure of the region");
                use_edge(prev[u], u);
                tree.insert(u);
            }
            pending.erase(hit);
        }
    }

    // chains between junctions and terminals
    std::map<std::size_t, std::vector<std::size_t>> nbr;
    for (const auto& [a, b] : edges) {
        nbr[a].push_back(b);
        nbr[b].push_back(a);
    }
    std::set<std::size_t> stops(fixed_id.begin(), fixed_id.end());
    for (const auto& [j, id] : anchor_id)
        stops.insert(id);
    auto is_break = [&](std::size_t u) { return nbr[u].size() != 2 || stops.count(u); };
    std::set<std::pair<std::size_t, std::size_t>> done;
    Contour out;
    auto walk = [&](std::size_t start, std::size_t next) {
        std::vector<std::size_t> chain{start};
        std::size_t a = start;
        std::size_t b = next;
        while (true) {
            done.insert({std::min(a, b), std::max(a, b)});
            chain.push_back(b);
            if (is_break(b) || b == start)
                break;
            const std::size_t c = nbr[b][0] == a ? nbr[b][1] : nbr[b][0];
            a = b;
            b = c;
        }
        Component comp;
        for (std::size_t id : chain)
            comp.vertices.push_back(graph.pos[id]);
        for (std::size_t v = 0; v < chain.size(); ++v)
            for (std::size_t c = 0; c < fixed_id.size(); ++c)
                if (chain[v] == fixed_id[c])
                    comp.pins.push_back({v, c});
        out.components.push_back(std::move(comp));
    };
    for (const auto& [u, list] : nbr)
        if (is_break(u))
            for (std::size_t v : list)
                if (!done.count({std::min(u, v), std::max(u, v)}))
                    walk(u, v);
    for (const auto& [u, list] : nbr)
        for (std::size_t v : list)
            if (!done.count({std::min(u, v), std::max(u, v)}))
                walk(u, v);

    for (const auto& [j, id] : anchor_id) {
        const cplx dir = sectors.direction(j);
        Component ray;
        ray.vertices = {graph.pos[id], graph.pos[id] + cell * dir};
        ray.tail = RayTail{dir, j};
        out.components.push_back(std::move(ray));
    }
    if (out.components.empty())
        fail(ErrorKind::Disconnected, "nothing to connect and no support");
    return out;
}

/// Total variation between two measures binned on the cells of mu. Each
/// cell of nu is split into equal sub-masses sent to the nearest cell of mu;
/// mass farther than `reach` from every cell of mu stays unmatched.
inline double node_total_variation(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double reach,
                                   int subdivisions = 64)
{
    std::vector<double> bins(mu.size(), 0.0);
    double unmatched = 0.0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
        if (nu.weights[k] <= 0.0)
            continue;
        const int m = nu.has_cells() ? subdivisions : 1;
        for (int s = 0; s < m; ++s) {
            const cplx z = nu.has_cells() ? nu.cells[k].a + (nu.cells[k].b - nu.cells[k].a) * ((s + 0.5) / m)
                                          : nu.nodes[k];
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t i = 0; i < mu.size(); ++i) {
                const double d = mu.has_cells() ? point_segment_distance(z, mu.cells[i].a, mu.cells[i].b)
                                                : std::abs(z - mu.nodes[i]);
                if (d < best) {
                    best = d;
                    arg = i;
                }
            }
            if (best <= reach)
                bins[arg] += nu.weights[k] / m;
            else
                unmatched += nu.weights[k] / m;
        }
    }
    double tv = unmatched;
    for (std::size_t i = 0; i < mu.size(); ++i)
        tv += std::abs(bins[i] - mu.weights[i]);
    return 0.5 * tv;
}

} // namespace maxmin

#endif
