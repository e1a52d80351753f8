#ifndef MAXMIN_QUADDIFF_HPP
#define MAXMIN_QUADDIFF_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "maxmin/contour.hpp"
#include "maxmin/error.hpp"
#include "maxmin/polynomial.hpp"
#include "maxmin/spectral.hpp"

namespace maxmin {

namespace detail {

/// A root of multiplicity m is a simple root of the (m-1)-th derivative.
inline cplx polish_multiple_root(const Polynomial& p, cplx z, int m)
{
    if (m < 2)
        return z;
    Polynomial d = p;
    for (int k = 1; k < m; ++k)
        d = d.derivative();
    const Polynomial dd = d.derivative();
    for (int it = 0; it < 8; ++it) {
        const cplx den = dd(z);
        if (den == 0.0)
            break;
        z -= d(z) / den;
    }
    return z;
}

} // namespace detail

/// Curve with R = numerator / denominator and no fitting metadata.
inline SpectralCurve rational_curve(Polynomial numerator, Polynomial denominator = Polynomial::constant(1.0))
{
    SpectralCurve c;
    c.numerator = std::move(numerator);
    c.denominator = std::move(denominator);
    if (c.denominator.degree() > 0) {
        const auto r = roots(c.denominator);
        std::vector<bool> used(r.size(), false);
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (used[i])
                continue;
            int order = 0;
            cplx mean = 0.0;
            for (std::size_t j = i; j < r.size(); ++j)
                if (!used[j] && std::abs(r[j] - r[i]) <= 1e-4 * std::max(1.0, std::abs(r[i]))) {
                    used[j] = true;
                    mean += r[j];
                    ++order;
                }
            c.poles.push_back({detail::polish_multiple_root(c.denominator, mean / static_cast<double>(order), order),
                               order});
        }
    }
    c.expected_lead = c.leading();
    return c;
}

enum class CriticalKind { Zero, SimplePole, DoublePole, HigherPole };

inline const char* to_string(CriticalKind k)
{
    switch (k) {
    case CriticalKind::Zero: return "zero";
    case CriticalKind::SimplePole: return "simple-pole";
    case CriticalKind::DoublePole: return "double-pole";
    case CriticalKind::HigherPole: return "higher-pole";
    }
    return "?";
}

/// Local picture at a double pole, from the residue c of sqrt(-R).
enum class LoopRegime { None, ClosedLoops, Radial, Spiral };

inline const char* to_string(LoopRegime r)
{
    switch (r) {
    case LoopRegime::None: return "none";
    case LoopRegime::ClosedLoops: return "closed-loops";
    case LoopRegime::Radial: return "radial";
    case LoopRegime::Spiral: return "spiral";
    }
    return "?";
}

struct CriticalPoint {
    cplx point;
    /// Order of R at the point: positive for zeros, negative for poles.
    int order = 0;
    CriticalKind kind = CriticalKind::Zero;
    /// Angles along which trajectories leave (zeros, simple poles) or end
    /// (poles of order 4 and more). Empty for double poles.
    std::vector<double> directions;
    cplx residue = 0.0;
    LoopRegime regime = LoopRegime::None;
};

struct Classification {
    std::vector<CriticalPoint> points;
    /// Order of the quadratic differential at infinity.
    int infinity_order = 0;
    /// Asymptotic angles of trajectories escaping to infinity.
    std::vector<double> infinity_directions;
};

/// Angles theta with -a e^{i (n + 2) theta} > 0, for R ~ a (z - p)^n.
inline std::vector<double> trajectory_directions(cplx a, int n)
{
    const int k = std::abs(n + 2);
    std::vector<double> out;
    if (k == 0)
        return out;
    for (int j = 0; j < k; ++j)
        out.push_back(wrap_angle((pi - std::arg(a) + 2.0 * pi * j) / (n + 2)));
    std::sort(out.begin(), out.end());
    return out;
}

inline Classification classify_critical_points(const SpectralCurve& curve, double cluster_tol = 1e-4)
{
    Classification out;
    int total = 0;
    for (const auto& pole : curve.poles) {
        const int ord = curve.pole_order(pole.location);
        if (ord <= 0)
            continue;
        CriticalPoint cp;
        cp.point = pole.location;
        cp.order = -ord;
        // leading Laurent coefficient of R at the pole
        int mult = 0;
        while (mult < curve.denominator.degree() &&
               std::abs(curve.denominator.taylor_coeff(pole.location, mult)) <=
                   1e-12 * (1.0 + std::abs(curve.denominator.leading())))
            ++mult;
        const cplx a = curve.numerator.taylor_coeff(pole.location, mult - ord) /
                       curve.denominator.taylor_coeff(pole.location, mult);
        if (ord == 1) {
            cp.kind = CriticalKind::SimplePole;
            cp.directions = trajectory_directions(a, -1);
        }
        else if (ord == 2) {
            cp.kind = CriticalKind::DoublePole;
            cp.residue = std::sqrt(-a);
            if (cp.residue.real() < 0.0 || (cp.residue.real() == 0.0 && cp.residue.imag() < 0.0))
                cp.residue = -cp.residue;
            const double mag = std::abs(cp.residue);
            if (std::abs(cp.residue.real()) <= 1e-9 * mag)
                cp.regime = LoopRegime::ClosedLoops;
            else if (std::abs(cp.residue.imag()) <= 1e-9 * mag)
                cp.regime = LoopRegime::Radial;
            else
                cp.regime = LoopRegime::Spiral;
        }
        else {
            cp.kind = CriticalKind::HigherPole;
            cp.directions = trajectory_directions(a, -ord);
        }
        total -= ord;
        out.points.push_back(cp);
    }

    if (curve.numerator.degree() > 0) {
        const auto r = roots(curve.numerator);
        for (cplx z : r)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                fail(ErrorKind::RootfindingFailure, "numerator roots are not finite");
        std::vector<bool> used(r.size(), false);
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (used[i])
                continue;
            std::vector<cplx> cluster;
            for (std::size_t j = i; j < r.size(); ++j)
                if (!used[j] && std::abs(r[j] - r[i]) <= cluster_tol * std::max(1.0, std::abs(r[i]))) {
                    used[j] = true;
                    cluster.push_back(r[j]);
                }
            cplx p = 0.0;
            for (cplx z : cluster)
                p += z;
            p = detail::polish_multiple_root(curve.numerator, p / static_cast<double>(cluster.size()),
                                             static_cast<int>(cluster.size()));
            const bool on_pole = std::any_of(curve.poles.begin(), curve.poles.end(), [&](const PoleFactor& f) {
                return std::abs(f.location - p) <= cluster_tol * std::max(1.0, std::abs(p));
            });
            if (on_pole)
                continue;
            const int n = static_cast<int>(cluster.size());
            CriticalPoint cp;
            cp.point = p;
            cp.order = n;
            cp.kind = CriticalKind::Zero;
            const cplx a = curve.numerator.taylor_coeff(p, n) / curve.denominator(p);
            cp.directions = trajectory_directions(a, n);
            total += n;
            out.points.push_back(cp);
        }
    }
    out.infinity_order = -4 - total;
    out.infinity_directions = trajectory_directions(curve.leading(), curve.infinity_exponent());
    return out;
}

struct TraceOptions {
    /// Zero selects 10 (1 + max |critical point|).
    double escape_radius = 0.0;
    /// Zero selects 20 times the escape radius.
    double max_length = 0.0;
    /// Zero selects 1e-4 times the local feature size.
    double stop_distance = 0.0;
    double tolerance = 1e-12;
    std::size_t max_steps = 200000;
    double max_winding = 3.0;
};

enum class TraceEnd { CriticalPoint, Escape, Closed, WindingCap, MaxLength };

inline const char* to_string(TraceEnd e)
{
    switch (e) {
    case TraceEnd::CriticalPoint: return "critical-point";
    case TraceEnd::Escape: return "escape";
    case TraceEnd::Closed: return "closed";
    case TraceEnd::WindingCap: return "winding-cap";
    case TraceEnd::MaxLength: return "max-length";
    }
    return "?";
}

struct Trajectory {
    std::vector<cplx> points;
    TraceEnd end = TraceEnd::MaxLength;
    /// Indices into the classification, -1 when not at a critical point.
    int start_point = -1;
    int end_point = -1;
    /// Index into infinity_directions for escaping traces.
    int escape_direction = -1;
    double length = 0.0;
    /// Accumulated |Re int sqrt(R) dz| per unit length.
    double drift = 0.0;
};

namespace detail {

/// Unit horizontal direction at z with sqrt(R) taken nearest to q_ref.
inline cplx horizontal_field(const SpectralCurve& curve, cplx z, cplx q_ref, cplx* q_out = nullptr)
{
    cplx q = std::sqrt(curve(z));
    if (std::abs(q + q_ref) < std::abs(q - q_ref))
        q = -q;
    if (q_out)
        *q_out = q;
    const double m = std::abs(q);
    if (m == 0.0)
        return 0.0;
    return cplx(0.0, 1.0) * std::conj(q) / m;
}

/// Re of the integral of sqrt(R) along the chord [a, b], branch nearest q_ref.
inline double chord_invariant(const SpectralCurve& curve, cplx a, cplx b, cplx q_ref)
{
    static constexpr std::array<double, 8> x = {0.019855071751231856, 0.10166676129318664, 0.23723379504183550,
                                                0.40828267875217510,  0.59171732124782490, 0.76276620495816450,
                                                0.89833323870681336,  0.98014492824876814};
    static constexpr std::array<double, 8> w = {0.050614268145188130, 0.11119051722668724, 0.15685332293894364,
                                                0.18134189168918100,  0.18134189168918100, 0.15685332293894364,
                                                0.11119051722668724,  0.050614268145188130};
    cplx acc = 0.0;
    cplx ref = q_ref;
    for (std::size_t i = 0; i < 8; ++i) {
        cplx q = std::sqrt(curve(a + x[i] * (b - a)));
        if (std::abs(q + ref) < std::abs(q - ref))
            q = -q;
        ref = q;
        acc += w[i] * q;
    }
    return (acc * (b - a)).real();
}

} // namespace detail

/// Integrates dz/ds = v(z) with -R v^2 > 0 by an embedded 5(4) Runge-Kutta
/// scheme, continuing sqrt(R) by nearest-value selection.
inline Trajectory trace_trajectory(const SpectralCurve& curve, cplx z0, cplx direction, const Classification& cls,
                                   const TraceOptions& opt = {})
{
    double max_abs = 0.0;
    for (const auto& cp : cls.points)
        max_abs = std::max(max_abs, std::abs(cp.point));
    double feature = 1.0;
    for (std::size_t i = 0; i < cls.points.size(); ++i)
        for (std::size_t j = i + 1; j < cls.points.size(); ++j)
            feature = std::min(feature, std::abs(cls.points[i].point - cls.points[j].point));
    const double escape = opt.escape_radius > 0.0 ? opt.escape_radius : 10.0 * (1.0 + max_abs);
    const double max_length = opt.max_length > 0.0 ? opt.max_length : 20.0 * escape;
    const double stop = opt.stop_distance > 0.0 ? opt.stop_distance : 1e-4 * feature;

    Trajectory tr;
    direction /= std::abs(direction);
    int start_index = -1;
    for (std::size_t i = 0; i < cls.points.size(); ++i)
        if (std::abs(cls.points[i].point - z0) <= stop)
            start_index = static_cast<int>(i);
    tr.start_point = start_index;
    tr.points.push_back(z0);
    cplx z = z0;
    if (start_index >= 0) {
        z = z0 + 10.0 * stop * direction;
        tr.points.push_back(z);
    }
    cplx q = std::sqrt(curve(z));
    {
        const cplx v = detail::horizontal_field(curve, z, q);
        if ((v * std::conj(direction)).real() < 0.0)
            q = -q;
    }
    std::vector<double> winding(cls.points.size(), 0.0);
    double length = std::abs(z - z0);
    double drift = 0.0;
    if (start_index >= 0)
        drift += std::abs(detail::chord_invariant(curve, z0, z, q));

    auto crit_distance = [&](cplx p) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& cp : cls.points)
            d = std::min(d, std::abs(p - cp.point));
        return d;
    };

    // Dormand-Prince 5(4)
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2;
    (void)c3;
    (void)c4;
    (void)c5;

    double h = 0.01 * std::min(crit_distance(z), std::max(1.0, std::abs(z)));
    const double h_min = 1e-14 * std::max(1.0, escape);
    for (std::size_t step = 0; step < opt.max_steps; ++step) {
        const double dc = crit_distance(z);
        const double h_cap = 0.1 * std::min(dc, std::max(1.0, std::abs(z)));
        h = std::min(h, h_cap);
        auto f = [&](cplx p) { return detail::horizontal_field(curve, p, q); };
        const cplx k1 = f(z);
        const cplx k2 = f(z + h * (a21 * k1));
        const cplx k3 = f(z + h * (a31 * k1 + a32 * k2));
        const cplx k4 = f(z + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const cplx k5 = f(z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const cplx k6 = f(z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const cplx zn = z + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const cplx k7 = f(zn);
        const cplx err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double tol = opt.tolerance * std::max(1.0, std::abs(z));
        const double en = std::abs(err) / tol;
        if (en > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            if (h < h_min)
                fail(ErrorKind::StepUnderflow, "trajectory step size underflow");
            continue;
        }
        cplx qn;
        detail::horizontal_field(curve, zn, q, &qn);
        drift += std::abs(detail::chord_invariant(curve, z, zn, q));
        length += std::abs(zn - z);
        for (std::size_t i = 0; i < cls.points.size(); ++i)
            if (cls.points[i].kind == CriticalKind::DoublePole)
                winding[i] += std::arg((zn - cls.points[i].point) / (z - cls.points[i].point));
        const cplx prev = z;
        z = zn;
        q = qn;
        tr.points.push_back(z);
        h *= std::min(5.0, 0.9 * std::pow(std::max(en, 1e-10), -0.2));

        for (std::size_t i = 0; i < cls.points.size(); ++i) {
            if (cls.points[i].kind == CriticalKind::DoublePole)
                continue;
            if (static_cast<int>(i) == start_index && length < 1000.0 * stop)
                continue;
            if (std::abs(z - cls.points[i].point) < stop) {
                drift += std::abs(detail::chord_invariant(curve, z, cls.points[i].point, q));
                length += std::abs(cls.points[i].point - z);
                tr.points.push_back(cls.points[i].point);
                tr.end = TraceEnd::CriticalPoint;
                tr.end_point = static_cast<int>(i);
                tr.length = length;
                tr.drift = drift / std::max(length, 1e-300);
                return tr;
            }
        }
        if (std::abs(z) > escape) {
            tr.end = TraceEnd::Escape;
            double best = 1e300;
            for (std::size_t j = 0; j < cls.infinity_directions.size(); ++j) {
                const double d = angle_distance(std::arg(z), cls.infinity_directions[j]);
                if (d < best) {
                    best = d;
                    tr.escape_direction = static_cast<int>(j);
                }
            }
            break;
        }
        if (length > 20.0 * std::abs(tr.points[1 < tr.points.size() ? 1 : 0] - z0) + 10.0 * stop &&
            point_segment_distance(tr.points[start_index >= 0 ? 1 : 0], prev, z) <
                std::max(1e-8 * std::max(1.0, std::abs(z)), 0.02 * std::abs(z - prev))) {
            tr.end = TraceEnd::Closed;
            break;
        }
        if (std::any_of(winding.begin(), winding.end(),
                        [&](double w) { return std::abs(w) > 2.0 * pi * opt.max_winding; })) {
            tr.end = TraceEnd::WindingCap;
            break;
        }
        if (length > max_length) {
            tr.end = TraceEnd::MaxLength;
            break;
        }
    }
    tr.length = length;
    tr.drift = drift / std::max(length, 1e-300);
    return tr;
}

inline Trajectory trace_trajectory(const SpectralCurve& curve, cplx z0, cplx direction, const TraceOptions& opt = {})
{
    return trace_trajectory(curve, z0, direction, classify_critical_points(curve), opt);
}

struct CriticalGraph {
    Classification classification;
    std::vector<Trajectory> trajectories;

    /// Trajectories joining two finite critical points.
    std::vector<const Trajectory*> finite() const
    {
        std::vector<const Trajectory*> out;
        for (const auto& t : trajectories)
            if (t.end == TraceEnd::CriticalPoint && t.start_point >= 0)
                out.push_back(&t);
        return out;
    }
    std::size_t escaping() const
    {
        return static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(),
                                                      [](const Trajectory& t) { return t.end == TraceEnd::Escape; }));
    }
};

/// Traces from every zero and simple pole along every emanating direction;
/// a trace that retraces an earlier one between the same endpoints is
/// dropped.
inline CriticalGraph critical_graph(const SpectralCurve& curve, const TraceOptions& opt = {})
{
    CriticalGraph g;
    g.classification = classify_critical_points(curve);
    const auto& pts = g.classification.points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].kind != CriticalKind::Zero && pts[i].kind != CriticalKind::SimplePole)
            continue;
        for (double theta : pts[i].directions) {
            Trajectory t = trace_trajectory(curve, pts[i].point, std::polar(1.0, theta), g.classification, opt);
            bool duplicate = false;
            if (t.end == TraceEnd::CriticalPoint)
                for (const auto& old : g.trajectories) {
                    if (old.end != TraceEnd::CriticalPoint)
                        continue;
                    const bool same_ends = (old.start_point == t.end_point && old.end_point == t.start_point) ||
                                           (old.start_point == t.start_point && old.end_point == t.end_point);
                    if (!same_ends)
                        continue;
                    const cplx mid = t.points[t.points.size() / 2];
                    double d = 1e300;
                    for (std::size_t k = 1; k < old.points.size(); ++k)
                        d = std::min(d, point_segment_distance(mid, old.points[k - 1], old.points[k]));
                    if (d <= 1e-3 * std::max(t.length, 1e-12)) {
                        duplicate = true;
                        break;
                    }
                }
            if (!duplicate)
                g.trajectories.push_back(std::move(t));
        }
    }
    return g;
}

} // namespace maxmin

#endif
