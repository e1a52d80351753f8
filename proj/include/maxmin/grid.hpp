#ifndef MAXMIN_GRID_HPP
#define MAXMIN_GRID_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <thread>
#include <vector>

#include "maxmin/contour.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"

namespace maxmin {

/// Worker cap for row-parallel grid evaluation; 1 means sequential.
inline std::atomic<int>& thread_limit()
{
    static std::atomic<int> limit{1};
    return limit;
}

/// Runs fn(row) for every row. Rows are independent, so results do not
/// depend on the number of workers.
inline void for_each_row(int rows, const std::function<void(int)>& fn)
{
    const int workers = std::clamp(thread_limit().load(), 1, std::max(1, rows));
    if (workers == 1) {
        for (int r = 0; r < rows; ++r)
            fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (int r = next++; r < rows; r = next++)
                fn(r);
        });
    for (auto& th : pool)
        th.join();
}

/// Axis-aligned sampling window with `resolution` grid points per axis.
struct Window {
    double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
    int resolution = 100;

    int nx() const { return resolution; }
    int ny() const { return resolution; }
    double dx() const { return (xmax - xmin) / (resolution - 1); }
    double dy() const { return (ymax - ymin) / (resolution - 1); }
    cplx point(int i, int j) const { return {xmin + i * dx(), ymin + j * dy()}; }
    double cell_diagonal() const { return std::hypot(dx(), dy()); }

    void validate() const
    {
        if (!(xmax > xmin) || !(ymax > ymin) || resolution < 3)
            fail(ErrorKind::ConfigError, "window needs positive extent and at least 3 points per axis");
    }

    bool on_boundary(cplx z, double tol) const
    {
        return z.real() - xmin < tol || xmax - z.real() < tol || z.imag() - ymin < tol || ymax - z.imag() < tol;
    }
};

/// Boolean field over the grid nodes of a window.
struct GridMask {
    Window window;
    std::vector<std::uint8_t> values;

    GridMask() = default;
    explicit GridMask(const Window& w) : window(w), values(static_cast<std::size_t>(w.nx() * w.ny()), 0) {}

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j * window.nx() + i); }
    bool at(int i, int j) const { return values[index(i, j)] != 0; }
    void set(int i, int j, bool v) { values[index(i, j)] = v ? 1 : 0; }

    std::size_t count() const { return static_cast<std::size_t>(std::count(values.begin(), values.end(), 1)); }

    /// Bilinear interpolation of the 0/1 node values, thresholded at 1/2.
    /// Points outside the window are reported as outside the mask.
    bool contains(cplx z) const
    {
        const double fx = (z.real() - window.xmin) / window.dx();
        const double fy = (z.imag() - window.ymin) / window.dy();
        if (fx < 0.0 || fy < 0.0 || fx > window.nx() - 1 || fy > window.ny() - 1)
            return false;
        const int i = std::min(static_cast<int>(fx), window.nx() - 2);
        const int j = std::min(static_cast<int>(fy), window.ny() - 2);
        const double s = fx - i;
        const double t = fy - j;
        const double v = (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j) + (1 - s) * t * at(i, j + 1) +
                         s * t * at(i + 1, j + 1);
        return v >= 0.5;
    }

    /// 4-connected component labels (-1 outside the mask) and their count.
    std::pair<std::vector<int>, int> components() const
    {
        std::vector<int> label(values.size(), -1);
        int count = 0;
        const int nx = window.nx();
        const int ny = window.ny();
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (!at(i, j) || label[index(i, j)] >= 0)
                    continue;
                std::queue<std::pair<int, int>> q;
                q.emplace(i, j);
                label[index(i, j)] = count;
                while (!q.empty()) {
                    auto [a, b] = q.front();
                    q.pop();
                    const int da[4] = {1, -1, 0, 0};
                    const int db[4] = {0, 0, 1, -1};
                    for (int d = 0; d < 4; ++d) {
                        const int u = a + da[d];
                        const int v = b + db[d];
                        if (u < 0 || v < 0 || u >= nx || v >= ny || !at(u, v) || label[index(u, v)] >= 0)
                            continue;
                        label[index(u, v)] = count;
                        q.emplace(u, v);
                    }
                }
                ++count;
            }
        return {label, count};
    }

    int component_count() const { return components().second; }
};

/// Samples a real function on the grid; nodes where it cannot be evaluated
/// hold NaN.
inline std::vector<double> sample_grid(const Window& w, const std::function<double(cplx)>& f)
{
    std::vector<double> v(static_cast<std::size_t>(w.nx() * w.ny()));
    for_each_row(w.ny(), [&](int j) {
        for (int i = 0; i < w.nx(); ++i)
            v[static_cast<std::size_t>(j * w.nx() + i)] = f(w.point(i, j));
    });
    return v;
}

enum class CurveKind { Unbounded, Tear, LogArc };

inline const char* to_string(CurveKind k)
{
    switch (k) {
    case CurveKind::Unbounded: return "unbounded";
    case CurveKind::Tear: return "tear";
    case CurveKind::LogArc: return "log";
    }
    return "?";
}

/// One branch of {phi = -M}: an unbounded arc between two sectors, a tear
/// attached to a pole, or an arc around or into a logarithmic point.
struct LevelCurve {
    std::vector<cplx> points;
    CurveKind kind = CurveKind::Unbounded;
    bool closed = false;
    /// Sector indices at both ends for unbounded arcs.
    int sector_a = -1;
    int sector_b = -1;
    /// Index into field.singularities() for tears and log arcs.
    int singularity = -1;
};

namespace detail {

struct SegmentPiece {
    long e0;
    long e1;
    cplx p0;
    cplx p1;
};

/// Chains marching-squares pieces that share grid edges into polylines.
inline std::vector<std::pair<std::vector<cplx>, bool>> chain_pieces(const std::vector<SegmentPiece>& pieces)
{
    std::map<long, std::vector<std::size_t>> by_edge;
    for (std::size_t s = 0; s < pieces.size(); ++s) {
        by_edge[pieces[s].e0].push_back(s);
        by_edge[pieces[s].e1].push_back(s);
    }
    std::vector<bool> used(pieces.size(), false);
    std::vector<std::pair<std::vector<cplx>, bool>> out;
    auto other = [&](long edge, std::size_t self) -> long {
        for (std::size_t s : by_edge[edge])
            if (s != self && !used[s])
                return static_cast<long>(s);
        return -1;
    };
    // open chains first: start at edges touched by a single piece
    auto walk = [&](std::size_t start, long start_edge) {
        std::vector<cplx> pts;
        std::size_t cur = start;
        long edge = start_edge;
        pts.push_back(edge == pieces[cur].e0 ? pieces[cur].p0 : pieces[cur].p1);
        bool closed = false;
        while (true) {
            used[cur] = true;
            const bool forward = edge == pieces[cur].e0;
            const long next_edge = forward ? pieces[cur].e1 : pieces[cur].e0;
            pts.push_back(forward ? pieces[cur].p1 : pieces[cur].p0);
            if (next_edge == start_edge && pts.size() > 2) {
                closed = true;
                break;
            }
            const long nxt = other(next_edge, cur);
            if (nxt < 0)
                break;
            cur = static_cast<std::size_t>(nxt);
            edge = next_edge;
        }
        out.emplace_back(std::move(pts), closed);
    };
    for (std::size_t s = 0; s < pieces.size(); ++s) {
        if (used[s])
            continue;
        for (long e : {pieces[s].e0, pieces[s].e1})
            if (!used[s] && by_edge[e].size() == 1)
                walk(s, e);
    }
    for (std::size_t s = 0; s < pieces.size(); ++s)
        if (!used[s])
            walk(s, pieces[s].e0);
    return out;
}

} // namespace detail

/// Polylines of {f = level} over the window by marching squares. Cells
/// touching a NaN node are skipped, so curves stop next to those nodes.
inline std::vector<std::pair<std::vector<cplx>, bool>> contour_lines(const Window& w, const std::vector<double>& v,
                                                                     double level)
{
    const int nx = w.nx();
    const int ny = w.ny();
    auto val = [&](int i, int j) { return v[static_cast<std::size_t>(j * nx + i)] - level; };
    auto hedge = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i); };
    auto vedge = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i) + 1; };
    auto cross = [&](cplx a, cplx b, double fa, double fb) { return a + (b - a) * (fa / (fa - fb)); };
    std::vector<detail::SegmentPiece> pieces;
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double f00 = val(i, j), f10 = val(i + 1, j), f11 = val(i + 1, j + 1), f01 = val(i, j + 1);
            if (std::isnan(f00) || std::isnan(f10) || std::isnan(f11) || std::isnan(f01))
                continue;
            const cplx p00 = w.point(i, j), p10 = w.point(i + 1, j), p11 = w.point(i + 1, j + 1),
                       p01 = w.point(i, j + 1);
            // edges: bottom, right, top, left
            struct Hit {
                long id;
                cplx p;
            };
            std::vector<Hit> hits;
            if ((f00 < 0) != (f10 < 0)) hits.push_back({hedge(i, j), cross(p00, p10, f00, f10)});
            if ((f10 < 0) != (f11 < 0)) hits.push_back({vedge(i + 1, j), cross(p10, p11, f10, f11)});
            if ((f01 < 0) != (f11 < 0)) hits.push_back({hedge(i, j + 1), cross(p01, p11, f01, f11)});
            if ((f00 < 0) != (f01 < 0)) hits.push_back({vedge(i, j), cross(p00, p01, f00, f01)});
            if (hits.size() == 2) {
                pieces.push_back({hits[0].id, hits[1].id, hits[0].p, hits[1].p});
            }
            else if (hits.size() == 4) {
                // saddle: pair edges according to the sign at the centre
                const bool centre_neg = 0.25 * (f00 + f10 + f11 + f01) < 0;
                const bool corner_neg = f00 < 0;
                if (centre_neg == corner_neg) {
                    pieces.push_back({hits[0].id, hits[1].id, hits[0].p, hits[1].p});
                    pieces.push_back({hits[2].id, hits[3].id, hits[2].p, hits[3].p});
                }
                else {
                    pieces.push_back({hits[0].id, hits[3].id, hits[0].p, hits[3].p});
                    pieces.push_back({hits[1].id, hits[2].id, hits[1].p, hits[2].p});
                }
            }
        }
    return detail::chain_pieces(pieces);
}

/// Grid values of phi with NaN on nodes within `mask_radius` of the
/// singular set.
inline std::vector<double> phi_grid(const ExternalField& field, const Window& w, double mask_radius)
{
    return sample_grid(w, [&](cplx z) {
        if (field.distance_to_singularities(z) < mask_radius)
            return std::numeric_limits<double>::quiet_NaN();
        return field.phi(z);
    });
}

namespace detail {

inline double winding_angle(const std::vector<cplx>& pts, cplx centre)
{
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        total += std::arg((pts[i] - centre) / (pts[i - 1] - centre));
    return total;
}

} // namespace detail

/// Extracts and classifies the level set {phi = -M} inside the window.
inline std::vector<LevelCurve> level_set(const ExternalField& field, const SectorSet& sectors, double m,
                                         const Window& w)
{
    w.validate();
    const double mask_radius = 2.0 * w.cell_diagonal();
    const auto v = phi_grid(field, w, mask_radius);
    const auto lines = contour_lines(w, v, -m);
    const auto& sing = field.singularities();
    const std::size_t n_poles = field.poles().size();
    const double near_tol = mask_radius + 2.0 * w.cell_diagonal();
    const double boundary_tol = 1e-9 * std::max(w.xmax - w.xmin, w.ymax - w.ymin) + 1e-12;

    auto nearest_singularity = [&](cplx z) -> int {
        int best = -1;
        double bd = near_tol;
        for (std::size_t s = 0; s < sing.size(); ++s) {
            const double d = std::abs(z - sing[s]);
            if (d <= bd) {
                bd = d;
                best = static_cast<int>(s);
            }
        }
        return best;
    };

    std::vector<LevelCurve> out;
    for (const auto& [pts, closed] : lines) {
        if (pts.size() < 2)
            continue;
        LevelCurve c;
        c.points = pts;
        c.closed = closed;
        if (closed) {
            int around = -1;
            for (std::size_t s = n_poles; s < sing.size(); ++s)
                if (std::abs(detail::winding_angle(pts, sing[s])) > pi)
                    around = static_cast<int>(s);
            if (around < 0)
                fail(ErrorKind::ResolutionTooCoarse, "closed level curve not attached to any singularity");
            c.kind = CurveKind::LogArc;
            c.singularity = around;
            out.push_back(std::move(c));
            continue;
        }
        const cplx a = pts.front();
        const cplx b = pts.back();
        const bool a_edge = w.on_boundary(a, boundary_tol);
        const bool b_edge = w.on_boundary(b, boundary_tol);
        const int sa = nearest_singularity(a);
        const int sb = nearest_singularity(b);
        if (a_edge && b_edge) {
            c.kind = CurveKind::Unbounded;
            c.sector_a = sectors.sector_of(a, sectors.epsilon);
            c.sector_b = sectors.sector_of(b, sectors.epsilon);
            if (c.sector_a < 0 || c.sector_b < 0)
                fail(ErrorKind::ResolutionTooCoarse, "unbounded level curve leaves the window outside the sectors");
        }
        else if (sa >= 0 && sa == sb && static_cast<std::size_t>(sa) < n_poles) {
            c.kind = CurveKind::Tear;
            c.singularity = sa;
        }
        else if ((sa >= 0 && static_cast<std::size_t>(sa) >= n_poles) ||
                 (sb >= 0 && static_cast<std::size_t>(sb) >= n_poles)) {
            c.kind = CurveKind::LogArc;
            c.singularity = (sa >= 0 && static_cast<std::size_t>(sa) >= n_poles) ? sa : sb;
        }
        else {
            fail(ErrorKind::ResolutionTooCoarse, "level curve could not be classified");
        }
        out.push_back(std::move(c));
    }
    return out;
}

/// Points of {phi < -M} farther than `margin` from every unbounded level
/// curve.
inline GridMask forbidden_region(const ExternalField& field, const SectorSet& sectors, double m, double margin,
                                 const Window& w)
{
    const auto curves = level_set(field, sectors, m, w);
    std::vector<std::pair<cplx, cplx>> segs;
    for (const auto& c : curves)
        if (c.kind == CurveKind::Unbounded)
            for (std::size_t i = 1; i < c.points.size(); ++i)
                segs.emplace_back(c.points[i - 1], c.points[i]);
    GridMask mask(w);
    for_each_row(w.ny(), [&](int j) {
        for (int i = 0; i < w.nx(); ++i) {
            const cplx z = w.point(i, j);
            if (field.is_singular(z) || !(field.phi(z) < -m))
                continue;
            bool far = true;
            for (const auto& [p, q] : segs)
                if (point_segment_distance(z, p, q) <= margin) {
                    far = false;
                    break;
                }
            mask.set(i, j, far);
        }
    });
    return mask;
}

} // namespace maxmin

#endif
