#include <gtest/gtest.h>

#include <random>

#include "maxmin/equilibrium.hpp"

#include "cases.hpp"

using namespace maxmin;

namespace {

// Second antiderivative of log|u|, used for collinear unit segments at offset d.
double g2(double u) { return u == 0.0 ? 0.0 : 0.5 * u * u * std::log(std::abs(u)) - 0.75 * u * u; }

double collinear_unit_energy(double d) { return -(g2(d + 1) - 2 * g2(d) + g2(d - 1)); }

// Gauss-Legendre on [0, 1] with m points, computed by Newton on P_m.
std::pair<std::vector<double>, std::vector<double>> gauss(int m)
{
    std::vector<double> x(static_cast<std::size_t>(m)), w(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double t = std::cos(pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (t * p1 - p0) / (t * t - 1);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15)
                break;
        }
        x[static_cast<std::size_t>(i)] = 0.5 * (1 - t);
        w[static_cast<std::size_t>(i)] = 1.0 / ((1 - t * t) * dp * dp);
    }
    return {x, w};
}

Contour interval(double a, double b) { return Contour{{segment(a, b)}}; }

} // namespace

TEST(Kernels, SegmentPotentialAgainstQuadrature)
{
    const auto [x, w] = gauss(40);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 100; ++k) {
        const cplx a(u(rng), u(rng)), b(u(rng), u(rng)), z(u(rng), u(rng));
        if (point_segment_distance(z, a, b) < 0.3)
            continue;
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            q -= w[i] * std::log(std::abs(z - (a + (b - a) * x[i])));
        EXPECT_NEAR(segment_log_potential(a, b, z), q, 1e-10);
    }
}

TEST(Kernels, CollinearEnergiesInClosedForm)
{
    EXPECT_NEAR(segment_self_energy(1.0), collinear_unit_energy(0.0), 1e-14);
    EXPECT_NEAR(segment_pair_energy(0.0, 1.0, 1.0, 2.0), 1.5 - 2 * std::log(2.0), 1e-12);
    for (double d : {1.0, 1.5, 3.0, 7.25})
        EXPECT_NEAR(segment_pair_energy(0.0, 1.0, d, d + 1.0), collinear_unit_energy(d), 1e-11) << d;
    // scaling: lengths L shift the energy by -log L
    EXPECT_NEAR(segment_self_energy(0.25), segment_self_energy(1.0) + std::log(4.0), 1e-14);
    EXPECT_NEAR(segment_pair_energy(0.0, 0.5, 0.5, 1.0), 1.5 - 2 * std::log(2.0) + std::log(2.0), 1e-12);
}

TEST(Kernels, PairEnergyAgainstQuadrature)
{
    const auto [x, w] = gauss(30);
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 40; ++k) {
        const cplx a1(u(rng), u(rng)), b1(u(rng), u(rng)), a2(u(rng), u(rng)), b2(u(rng), u(rng));
        // mean over segment 1 of the exact potential of segment 2
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            q += w[i] * segment_log_potential(a2, b2, a1 + (b1 - a1) * x[i]);
        const double tol = 1e-3 * (1.0 + std::abs(q));
        EXPECT_NEAR(segment_pair_energy(a1, b1, a2, b2), q, tol);
        EXPECT_NEAR(segment_pair_energy(a1, b1, a2, b2), segment_pair_energy(a2, b2, a1, b1), 1e-10);
    }
}

TEST(Kernels, CauchyTransformOfSegment)
{
    const cplx a(0.1, 0.2), b(1.3, -0.4), z(0.5, 1.0);
    const auto [x, w] = gauss(40);
    cplx q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        q += w[i] / (a + (b - a) * x[i] - z);
    EXPECT_NEAR(std::abs(segment_cauchy(a, b, z) - q), 0.0, 1e-10);
}

TEST(Interval, RobinConstantAndArcsine)
{
    const auto res = equilibrium_measure(interval(-1, 1), 400);
    EXPECT_NEAR(res.energy, std::log(2.0), 5e-3);
    const double l1 = cases::relative_l1(res.mu, cases::arcsine_cdf);
    EXPECT_LE(l1, 2e-2);
    const auto el = euler_lagrange_residual(res.mu, res.ell, nullptr);
    EXPECT_LE(el.sup_on_support, 5e-3);
    EXPECT_LE(el.deficit_off_support, 5e-3);
    EXPECT_NEAR(res.mu.mass(), 1.0, 1e-12);
}

TEST(Interval, PotentialAndCauchyTransformOffTheSupport)
{
    const auto res = equilibrium_measure(interval(-1, 1), 400);
    for (cplx z : {cplx(2, 0), cplx(0, 1.5), cplx(-1.3, 0.7), cplx(0.2, -3)}) {
        const cplx s = std::sqrt(z - 1.0) * std::sqrt(z + 1.0);
        EXPECT_NEAR(log_potential(res.mu, z), std::log(2.0) - std::log(std::abs(z + s)), 2e-3);
        EXPECT_NEAR(std::abs(cauchy_transform(res.mu, z) + 1.0 / s), 0.0, 5e-3);
    }
}

TEST(Interval, UniformWeightsAreNotInEquilibrium)
{
    DiscreteMeasure mu = discretize(interval(-1, 1), nullptr, 200);
    mu.weights.assign(mu.size(), 1.0 / static_cast<double>(mu.size()));
    const auto v = node_effective_potential(mu, {});
    const double ell = weighted_median(mu, v);
    EXPECT_GT(euler_lagrange_residual(mu, ell, nullptr).sup_on_support, 0.05);
}

TEST(Interval, SingleActiveNode)
{
    DiscreteMeasure mu = discretize(interval(-1, 1), nullptr, 50);
    mu.weights.assign(mu.size(), 0.0);
    mu.weights[10] = 1.0;
    const auto v = node_effective_potential(mu, {});
    const auto el = euler_lagrange_residual(mu, v[10], nullptr);
    EXPECT_EQ(el.sup_on_support, 0.0);
    EXPECT_GT(el.deficit_off_support, 0.0);
}

TEST(Interval, MonotoneTraceAndMassConservation)
{
    SolveOptions opt;
    opt.record_trace = true;
    const auto res = equilibrium_measure(interval(-1, 1), 200, opt);
    ASSERT_GE(res.trace.size(), 2u);
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        EXPECT_LE(res.trace[i], res.trace[i - 1] + 1e-13);
    EXPECT_NEAR(res.mu.mass(), 1.0, 1e-12);
    for (double w : res.mu.weights)
        EXPECT_GE(w, 0.0);
}

TEST(Hermite, TruncatedLineGivesSemicircle)
{
    const cases::Hermite h;
    const auto res = equilibrium_measure(interval(-3, 3), h.field, 400);
    const auto [lo, hi] = cases::support_ends(res.mu);
    EXPECT_NEAR(lo, -1.0, 2e-2);
    EXPECT_NEAR(hi, 1.0, 2e-2);
    double sup = 0.0;
    for (std::size_t k = 0; k < res.mu.size(); ++k) {
        const Cell& c = res.mu.cells[k];
        const double exact = cases::cell_mean([](cplx z) { return cases::semicircle(z.real()); }, c.a, c.b);
        sup = std::max(sup, std::abs(res.mu.weights[k] / c.length() - exact));
    }
    EXPECT_LE(sup, 2e-2);
    // closed form: I = log 2 + 3/4 for the weighted problem with phi = x^2
    EXPECT_NEAR(res.weighted_energy, std::log(2.0) + 0.75, 5e-3);
}

TEST(Laguerre, HalfLineEndpointAndDensity)
{
    const auto f = ExternalField::polynomial({0.0, 1.0});
    const auto res = equilibrium_measure(interval(0, 6), f, 400);
    EXPECT_NEAR(cases::support_ends(res.mu).second, 2.0, 2e-2);
    const double l1 = cases::relative_l1(res.mu, cases::laguerre_cdf);
    EXPECT_LE(l1, 3e-2);
}

TEST(Refinement, EnergyDifferencesShrink)
{
    const cases::Hermite h;
    std::vector<double> e;
    for (std::size_t n : {100, 200, 400})
        e.push_back(equilibrium_measure(interval(-3, 3), h.field, n).weighted_energy);
    EXPECT_LT(std::abs(e[2] - e[1]), std::abs(e[1] - e[0]));
}

TEST(Uniqueness, DifferentStartsAgree)
{
    const cases::Hermite h;
    const auto a = equilibrium_measure(interval(-3, 3), h.field, 200);
    SolveOptions opt;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    opt.initial.resize(a.mu.size());
    for (auto& w : opt.initial)
        w = u(rng);
    const double total = std::accumulate(opt.initial.begin(), opt.initial.end(), 0.0);
    for (auto& w : opt.initial)
        w /= total;
    const auto b = equilibrium_measure(interval(-3, 3), h.field, 200, opt);
    EXPECT_NEAR(a.weighted_energy, b.weighted_energy, 1e-6);
}

TEST(Rays, RealLineWithRaysMatchesTruncation)
{
    const cases::Hermite h;
    Component c = segment(-2.0, 2.0, 1);
    c.head = RayTail{-1.0, 1};
    c.tail = RayTail{1.0, 0};
    const auto res = equilibrium_measure(Contour{{c}}, h.field, 400);
    EXPECT_NEAR(res.weighted_energy, std::log(2.0) + 0.75, 5e-3);
    double ray_mass = 0.0;
    for (std::size_t k = 0; k < res.mu.size(); ++k)
        if (res.mu.on_ray[k])
            ray_mass += res.mu.weights[k];
    EXPECT_EQ(ray_mass, 0.0);
}

TEST(Discretize, RejectsTooFewNodes)
{
    EXPECT_THROW(equilibrium_measure(interval(-1, 1), 8), Error);
}
