#include <gtest/gtest.h>

#include "maxmin/ascent.hpp"
#include "maxmin/variation.hpp"

#include "cases.hpp"

using namespace maxmin;

namespace {

const AscentResult& hermite_run()
{
    static const AscentResult r = [] {
        const cases::Hermite h;
        return maxmin_ascent(h.triple, h.field, h.fixed, h.sectors, cases::Hermite::bent_line(),
                             cases::Hermite::options());
    }();
    return r;
}

// Arc y = height (1 - x^2) from -1 to 1 with both ends pinned.
Component pinned_arc(double height, std::size_t pieces = 200)
{
    Component c;
    for (std::size_t i = 0; i <= pieces; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(pieces);
        c.vertices.emplace_back(x, height * (1.0 - x * x));
    }
    c.pins = {{0, 0}, {pieces, 1}};
    return c;
}

} // namespace

TEST(Hermite, BentLineRelaxesToTheRealLine)
{
    const auto& r = hermite_run();
    EXPECT_TRUE(r.converged) << r.stop_reason;
    EXPECT_LE(r.criticality, 1e-3);
    const auto [lo, hi] = cases::support_ends(r.equilibrium.mu);
    EXPECT_NEAR(lo, -1.0, 2e-2);
    EXPECT_NEAR(hi, 1.0, 2e-2);
    EXPECT_NEAR(r.equilibrium.weighted_energy, std::log(2.0) + 0.75, 1e-3);
    const cases::Hermite h;
    EXPECT_LE(s_property_residual(r.equilibrium.mu, &h.field).residual, 5e-3);
    // the active part of the contour lies on the real line
    double off = 0.0;
    for (std::size_t k = 0; k < r.equilibrium.mu.size(); ++k)
        if (r.equilibrium.mu.weights[k] > 0.0)
            off = std::max(off, std::abs(r.equilibrium.mu.nodes[k].imag()));
    EXPECT_LE(off, 2e-2);
}

TEST(Hermite, EnergyNeverDecreasesOnAMesh)
{
    const auto& log = hermite_run().log;
    ASSERT_GE(log.size(), 2u);
    for (std::size_t i = 1; i < log.size(); ++i)
        if (log[i].mesh == log[i - 1].mesh) {
            EXPECT_GE(log[i].energy, log[i - 1].energy) << i;
        }
    EXPECT_GT(log.back().energy, log.front().energy);
}

TEST(Hermite, StaysAdmissible)
{
    const cases::Hermite h;
    const auto& g = hermite_run().contour;
    EXPECT_TRUE(membership(g, h.triple, h.sectors, h.fixed, g.clearance_radius()).ok());
}

TEST(Chebotarev, ArcThroughTwoFixedPointsStraightens)
{
    const auto field = ExternalField::polynomial({0.0, 0.0, 1e-3});
    const auto sectors = admissible_sectors(field, 0.1);
    const AdmissibleTriple triple{{{0, 1}}, {{}}, {{0}, {1}}};
    const std::vector<cplx> fixed{-1.0, 1.0};
    AscentOptions opt;
    opt.n = 200;
    opt.tol_crit = 1e-4;
    opt.max_iter = 150;
    opt.gram_shift = 1.0;
    const auto r = maxmin_ascent(triple, field, fixed, sectors, Contour{{pinned_arc(0.3)}}, opt);
    EXPECT_NEAR(r.equilibrium.weighted_energy, std::log(2.0), 2e-2);
    double bow = 0.0;
    for (cplx z : r.contour.components[0].vertices)
        bow = std::max(bow, std::abs(z.imag()));
    EXPECT_LT(bow, 0.3);
    EXPECT_GT(r.log.back().energy, r.log.front().energy);
}

TEST(Init, MissingFixedPointIsRejected)
{
    const auto f = ExternalField::polynomial({0.0, 0.0, 1e-3});
    const auto s = admissible_sectors(f, 0.1);
    const AdmissibleTriple triple{{{0, 1}}, {{}}, {{0}, {1}}};
    const std::vector<cplx> fixed{-1.0, 1.0};
    Component c = segment(-1.0, 0.0);
    c.pins = {{0, 0}};
    try {
        maxmin_ascent(triple, f, fixed, s, Contour{{c}});
        FAIL() << "expected InitInvalid";
    }
    catch (const Error& e) {
        EXPECT_TRUE(e.kind() == ErrorKind::InitInvalid || e.kind() == ErrorKind::InvalidContour) << e.what();
    }
}

TEST(Init, ForbiddenRegionIsRejected)
{
    const cases::Hermite h;
    Window w{-4.0, 4.0, -4.0, 4.0, 81};
    GridMask mask(w);
    // a block sitting on the real axis near x = 2
    for (int j = 0; j < w.ny(); ++j)
        for (int i = 0; i < w.nx(); ++i) {
            const cplx z = w.point(i, j);
            mask.set(i, j, std::abs(z.real() - 2.0) < 0.3 && std::abs(z.imag()) < 0.3);
        }
    AscentOptions opt = cases::Hermite::options();
    opt.forbidden = &mask;
    try {
        maxmin_ascent(h.triple, h.field, h.fixed, h.sectors, cases::Hermite::bent_line(), opt);
        FAIL() << "expected InitInvalid";
    }
    catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InitInvalid);
    }
}
