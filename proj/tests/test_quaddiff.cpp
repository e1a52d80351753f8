#include <gtest/gtest.h>

#include <random>

#include "maxmin/quaddiff.hpp"

using namespace maxmin;

namespace {

Polynomial from_roots(std::vector<cplx> r) { return Polynomial::from_roots(r); }

const CriticalPoint* find_point(const Classification& cls, cplx p)
{
    for (const auto& cp : cls.points)
        if (std::abs(cp.point - p) < 1e-8)
            return &cp;
    return nullptr;
}

// -R v^2 > 0 along every listed direction, checked to first order at p.
void expect_horizontal(cplx a, int n, const std::vector<double>& dirs)
{
    ASSERT_EQ(static_cast<int>(dirs.size()), std::abs(n + 2));
    for (double t : dirs) {
        const cplx w = -a * std::polar(1.0, (n + 2) * t);
        EXPECT_GT(w.real(), 0.0);
        EXPECT_NEAR(w.imag() / std::abs(w), 0.0, 1e-12);
    }
}

} // namespace

TEST(Classify, SimpleZero)
{
    const auto cls = classify_critical_points(rational_curve(Polynomial({0.0, 1.0})));
    ASSERT_EQ(cls.points.size(), 1u);
    const auto& z = cls.points[0];
    EXPECT_EQ(z.kind, CriticalKind::Zero);
    EXPECT_EQ(z.order, 1);
    ASSERT_EQ(z.directions.size(), 3u);
    EXPECT_NEAR(z.directions[0], pi / 3, 1e-3);
    EXPECT_NEAR(z.directions[1], pi, 1e-3);
    EXPECT_NEAR(z.directions[2], 5 * pi / 3, 1e-3);
    EXPECT_EQ(cls.infinity_order, -5);
}

TEST(Classify, DirectionCountIsOrderPlusTwo)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 20; ++k) {
        std::vector<cplx> r;
        for (int j = 0; j < 2 + k % 4; ++j)
            r.emplace_back(u(rng), u(rng));
        const cplx lead(u(rng), u(rng));
        const Polynomial p = Polynomial::from_roots(r) * Polynomial::constant(lead);
        const auto cls = classify_critical_points(rational_curve(p));
        ASSERT_EQ(cls.points.size(), r.size());
        int total = 0;
        for (const auto& cp : cls.points) {
            expect_horizontal(p.derivative()(cp.point), 1, cp.directions);
            total += cp.order;
        }
        EXPECT_EQ(cls.infinity_order, -4 - total);
        EXPECT_EQ(static_cast<int>(cls.infinity_directions.size()), total + 2);
    }
    // double zero at 0, simple zero at 1
    const Polynomial p({0.0, 0.0, -1.0, 1.0});
    const auto cls = classify_critical_points(rational_curve(p));
    const auto* z0 = find_point(cls, 0.0);
    ASSERT_NE(z0, nullptr);
    EXPECT_EQ(z0->order, 2);
    expect_horizontal(-1.0, 2, z0->directions);
}

TEST(Classify, Poles)
{
    const Polynomial one = Polynomial::constant(1.0);
    const auto simple = classify_critical_points(rational_curve(one, Polynomial({0.0, 1.0})));
    ASSERT_EQ(simple.points.size(), 1u);
    EXPECT_EQ(simple.points[0].kind, CriticalKind::SimplePole);
    ASSERT_EQ(simple.points[0].directions.size(), 1u);
    EXPECT_NEAR(simple.points[0].directions[0], pi, 1e-12);
    EXPECT_EQ(simple.infinity_order, -3);

    const auto quartic = classify_critical_points(rational_curve(one, from_roots({0.0, 0.0, 0.0, 0.0})));
    ASSERT_EQ(quartic.points.size(), 1u);
    EXPECT_EQ(quartic.points[0].kind, CriticalKind::HigherPole);
    EXPECT_EQ(quartic.points[0].order, -4);
    expect_horizontal(1.0, -4, quartic.points[0].directions);
    EXPECT_EQ(quartic.infinity_order, 0);
}

TEST(Classify, DoublePoleRegimes)
{
    // R = -rho^2 / (z - w)^2 so that sqrt(-R) has residue rho at w
    const cplx w(0.5, -0.25);
    const Polynomial den = from_roots({w, w});
    const auto closed = classify_critical_points(rational_curve(Polynomial::constant(1.0), den));
    ASSERT_EQ(closed.points.size(), 1u);
    EXPECT_EQ(closed.points[0].kind, CriticalKind::DoublePole);
    EXPECT_NEAR(closed.points[0].residue.real(), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(closed.points[0].residue), 1.0, 1e-12);
    EXPECT_EQ(closed.points[0].regime, LoopRegime::ClosedLoops);
    EXPECT_TRUE(closed.points[0].directions.empty());

    const auto radial = classify_critical_points(rational_curve(Polynomial::constant(-1.0), den));
    EXPECT_EQ(radial.points[0].regime, LoopRegime::Radial);
    const auto spiral = classify_critical_points(rational_curve(Polynomial::constant(cplx(-1.0, 1.0)), den));
    EXPECT_EQ(spiral.points[0].regime, LoopRegime::Spiral);
}

TEST(Trace, ClosedLoopsAroundADoublePole)
{
    const SpectralCurve c = rational_curve(Polynomial::constant(1.0), from_roots({0.0, 0.0}));
    const auto t = trace_trajectory(c, 1.0, cplx(0, 1));
    EXPECT_EQ(t.end, TraceEnd::Closed);
    for (cplx z : t.points)
        EXPECT_NEAR(std::abs(z), 1.0, 1e-6);
    EXPECT_NEAR(t.length, 2 * pi, 0.1);
}

TEST(Trace, RadialArcsLeaveADoublePole)
{
    const SpectralCurve c = rational_curve(Polynomial::constant(-1.0), from_roots({0.0, 0.0}));
    const auto t = trace_trajectory(c, cplx(0.6, 0.8), cplx(0.6, 0.8));
    EXPECT_EQ(t.end, TraceEnd::Escape);
    for (cplx z : t.points)
        EXPECT_NEAR(std::arg(z), std::arg(cplx(0.6, 0.8)), 1e-6);
}

TEST(Trace, SpiralIsCappedByWinding)
{
    const SpectralCurve c = rational_curve(Polynomial::constant(cplx(-1.0, 4.0)), from_roots({0.0, 0.0}));
    const cplx dir(0, 1);
    // one orientation winds inward
    const auto cls = classify_critical_points(c);
    const auto a = trace_trajectory(c, 1.0, dir, cls);
    const auto b = trace_trajectory(c, 1.0, -dir, cls);
    const bool capped = a.end == TraceEnd::WindingCap || b.end == TraceEnd::WindingCap;
    EXPECT_TRUE(capped);
}

TEST(Trace, ConstantGivesVerticalLines)
{
    const SpectralCurve c = rational_curve(Polynomial::constant(1.0));
    TraceOptions opt;
    opt.escape_radius = 5.0;
    const auto t = trace_trajectory(c, 0.3, cplx(0, 1), opt);
    EXPECT_EQ(t.end, TraceEnd::Escape);
    for (cplx z : t.points)
        EXPECT_NEAR(z.real(), 0.3, 1e-12);
    EXPECT_GT(t.points.back().imag(), 4.0);
}

TEST(Trace, HorizontalDirectionIsUniqueUpToSign)
{
    const SpectralCurve c = rational_curve(Polynomial({cplx(0.3, 1.0), -2.0, 0.0, 1.0}));
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 50; ++k) {
        const cplx z(u(rng), u(rng));
        const cplx r = c(z);
        const cplx v = detail::horizontal_field(c, z, 1.0);
        EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
        EXPECT_GT((-r * v * v).real(), 0.0);
        EXPECT_NEAR((-r * v * v).imag() / std::abs(r), 0.0, 1e-12);
        // sign changes of Im(-R e^{2 i t}) with positive real part: exactly two, at +-v
        const int m = 3600;
        std::vector<double> hits;
        for (int j = 0; j < m; ++j) {
            const double t0 = 2 * pi * j / m, t1 = 2 * pi * (j + 1) / m;
            const cplx w0 = -r * std::polar(1.0, 2 * t0), w1 = -r * std::polar(1.0, 2 * t1);
            if (w0.imag() * w1.imag() <= 0.0 && w0.real() + w1.real() > 0.0)
                hits.push_back(0.5 * (t0 + t1));
        }
        ASSERT_EQ(hits.size(), 2u) << z;
        for (double t : hits)
            EXPECT_LT(std::min(std::abs(std::polar(1.0, t) - v), std::abs(std::polar(1.0, t) + v)), 2e-3);
    }
}

TEST(Graph, SemicircleCurve)
{
    const SpectralCurve c = rational_curve(Polynomial({-4.0, 0.0, 4.0}));
    const auto g = critical_graph(c);
    const auto& cls = g.classification;
    ASSERT_EQ(cls.points.size(), 2u);
    for (const auto& cp : cls.points) {
        EXPECT_NEAR(std::abs(cp.point.real()), 1.0, 1e-12);
        EXPECT_EQ(cp.directions.size(), 3u);
    }
    EXPECT_EQ(cls.infinity_order, -6);
    const auto fin = g.finite();
    ASSERT_EQ(fin.size(), 1u);
    // Hausdorff distance between the traced polyline and [-1, 1]
    const auto& pts = fin[0]->points;
    double h = 0.0;
    for (cplx z : pts)
        h = std::max(h, point_segment_distance(z, -1.0, 1.0));
    for (int i = 0; i <= 2000; ++i) {
        const cplx x(-1.0 + i / 1000.0, 0.0);
        double d = 1e300;
        for (std::size_t k = 1; k < pts.size(); ++k)
            d = std::min(d, point_segment_distance(x, pts[k - 1], pts[k]));
        h = std::max(h, d);
    }
    EXPECT_LE(h, 1e-3);
    EXPECT_EQ(g.escaping(), 4u);
    for (const auto& t : g.trajectories)
        EXPECT_LE(t.drift, 1e-6);
}

TEST(Graph, SimplePoleEmitsOneTrajectory)
{
    const SpectralCurve c = rational_curve(Polynomial::constant(1.0), Polynomial({0.0, 1.0}));
    const auto g = critical_graph(c);
    ASSERT_EQ(g.trajectories.size(), 1u);
    const auto& t = g.trajectories[0];
    EXPECT_EQ(t.end, TraceEnd::Escape);
    for (cplx z : t.points)
        EXPECT_NEAR(z.imag(), 0.0, 1e-9);
    EXPECT_LT(t.points.back().real(), 0.0);
}

TEST(Graph, DriftOnACubic)
{
    const SpectralCurve c = rational_curve(Polynomial({-1.0, 0.0, 0.0, 1.0}));
    const auto g = critical_graph(c);
    EXPECT_EQ(g.trajectories.size(), 9u);
    for (const auto& t : g.trajectories) {
        EXPECT_LE(t.drift, 1e-6);
        EXPECT_NE(t.end, TraceEnd::MaxLength);
    }
}
