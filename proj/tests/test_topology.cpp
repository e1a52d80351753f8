#include <gtest/gtest.h>

#include <random>

#include "maxmin/io.hpp"
#include "maxmin/membership.hpp"
#include "maxmin/topology.hpp"

#include "cases.hpp"

using namespace maxmin;
using cases::first_attempt;
using cases::random_partition;
using cases::repaired;
using cases::rotate;
using cases::seven_sectors;

namespace {

// Brute force: some a < b < c < d with a, c in one block and b, d in another.
bool crosses_by_quadruples(const Partition& p, int labels)
{
    std::vector<int> owner(static_cast<std::size_t>(labels), -1);
    for (std::size_t k = 0; k < p.size(); ++k)
        for (int v : p[k])
            owner[static_cast<std::size_t>(v)] = static_cast<int>(k);
    auto o = [&](int v) { return owner[static_cast<std::size_t>(v)]; };
    for (int a = 0; a < labels; ++a)
        for (int b = a + 1; b < labels; ++b)
            for (int c = b + 1; c < labels; ++c)
                for (int d = c + 1; d < labels; ++d)
                    if (o(a) >= 0 && o(b) >= 0 && o(a) == o(c) && o(b) == o(d) && o(a) != o(b))
                        return true;
    return false;
}

} // namespace

TEST(NonCrossing, SmallCases)
{
    EXPECT_TRUE(blocks_cross({0, 2}, {1, 3}));
    EXPECT_FALSE(blocks_cross({0, 3}, {1, 2}));
    EXPECT_FALSE(blocks_cross({0, 1}, {2, 3}));
    EXPECT_TRUE(blocks_cross({1, 5}, {2, 6}));
    EXPECT_TRUE(is_non_crossing({{0, 3}, {1, 2}, {4}}));
    EXPECT_FALSE(is_non_crossing({{0, 2, 4}, {1, 3}}));
    EXPECT_TRUE(is_non_crossing({}));
}

TEST(NonCrossing, AgreesWithQuadrupleSearch)
{
    std::mt19937 rng(11);
    for (int k = 0; k < 500; ++k) {
        const int n = 1 + k % 10;
        const Partition p = random_partition(rng, n);
        EXPECT_EQ(is_non_crossing(p), !crosses_by_quadruples(p, n));
    }
}

TEST(NonCrossing, InvariantUnderEveryRotation)
{
    std::mt19937 rng(5);
    int crossing = 0;
    for (int k = 0; k < 200; ++k) {
        const int n = 1 + k % 10;
        const Partition p = random_partition(rng, n);
        const bool base = is_non_crossing(p);
        crossing += !base;
        for (int s = 1; s < n; ++s)
            ASSERT_EQ(is_non_crossing(rotate(p, s, n)), base);
    }
    // both outcomes are exercised
    EXPECT_GT(crossing, 10);
    EXPECT_LT(crossing, 190);
}

TEST(ValidateTriple, FirstAttemptHasInterleavedImages)
{
    const Report r = validate_triple(first_attempt(), 8, 6);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(r.has(condition::non_crossing_images));
}

TEST(ValidateTriple, RepairedTripleIsValid)
{
    const Report r = validate_triple(repaired(), 8, 6);
    EXPECT_TRUE(r.ok()) << r.violations.front().condition;
}

TEST(ValidateTriple, SevenSectorExampleIsValid)
{
    EXPECT_TRUE(validate_triple(seven_sectors(), 7, 6).ok());
}

TEST(ValidateTriple, EachConditionFiresAlone)
{
    // base: C = {0, 1}, N = 4
    const AdmissibleTriple good{{{0}, {1}}, {{0}, {2}}, {{0}, {1}, {2}, {3}}};
    ASSERT_TRUE(validate_triple(good, 4, 2).ok());

    AdmissibleTriple t = good;
    t.c_partition = {{0}, {}};
    EXPECT_TRUE(validate_triple(t, 4, 2).has(condition::fixed_point_cover));

    t = good;
    t.theta_partition = {{0}, {1}, {2}};
    EXPECT_TRUE(validate_triple(t, 4, 2).has(condition::sector_cover));

    t = good;
    t.psi = {{0}, {}};
    EXPECT_TRUE(validate_triple(t, 4, 2).has(condition::singleton_needs_sector));

    t = good;
    t.psi = {{0}, {0}};
    EXPECT_TRUE(validate_triple(t, 4, 2).has(condition::disjoint_sector_images));

    t = good;
    t.psi = {{0}, {1, 2}};
    EXPECT_TRUE(validate_triple(t, 4, 2).has(condition::subordination));
    t.psi = {{0}, {1, 3}};
    t.theta_partition = {{0}, {1, 3}, {2}};
    EXPECT_TRUE(validate_triple(t, 4, 2).ok());
    t.theta_partition = {{0, 2}, {1, 3}};
    const Report r = validate_triple(t, 4, 2);
    EXPECT_TRUE(r.has(condition::non_crossing_sectors));
    EXPECT_TRUE(r.has(condition::subordination));

    t = good;
    t.psi = {{0, 2}, {1, 3}};
    t.theta_partition = {{0, 2}, {1, 3}};
    EXPECT_TRUE(validate_triple(t, 4, 2).has(condition::non_crossing_images));
}

TEST(ValidateTriple, IndicesOutOfRangeThrow)
{
    AdmissibleTriple t{{{0}}, {{4}}, {{0}, {1}, {2}, {3}}};
    try {
        validate_triple(t, 4, 1);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IndexOutOfRange);
    }
    t.psi = {};
    EXPECT_THROW(validate_triple(t, 4, 1), Error);
}

TEST(ValidateTriple, RotatingSectorsPreservesTheVerdict)
{
    std::mt19937 rng(2);
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + k % 7;
        AdmissibleTriple t;
        t.theta_partition = random_partition(rng, n);
        t.c_partition = {{0}};
        t.psi = {t.theta_partition.front()};
        const bool base = validate_triple(t, n, 1).ok();
        for (int s = 1; s < n; ++s) {
            AdmissibleTriple r = t;
            r.theta_partition = rotate(t.theta_partition, s, n);
            r.psi = rotate({t.psi.front()}, s, n);
            EXPECT_EQ(validate_triple(r, n, 1).ok(), base);
        }
    }
}

TEST(ValidateTriple, JsonRoundTrip)
{
    const std::vector<cplx> fixed{{0, 0}, {1, 0}, {2, 1}, {3, 0}, {4, -1}, {5, 0}};
    for (const auto& t : {first_attempt(), repaired(), seven_sectors()}) {
        std::vector<cplx> back_fixed;
        const AdmissibleTriple back = triple_from_json(triple_to_json(t, fixed), &back_fixed);
        EXPECT_EQ(back.c_partition, t.c_partition);
        EXPECT_EQ(back.psi, t.psi);
        EXPECT_EQ(back.theta_partition, t.theta_partition);
        EXPECT_EQ(back_fixed, fixed);
        EXPECT_EQ(validate_triple(back, 8, 6).ok(), validate_triple(t, 8, 6).ok());
    }
}

TEST(Derived, FreeBlocksAndUnconnectedSectors)
{
    const AdmissibleTriple t = repaired();
    EXPECT_EQ(t.psi_partition(), (Partition{{0, 2, 5, 6}}));
    EXPECT_EQ(t.free_sector_blocks(), (Partition{{3, 4}}));
    EXPECT_EQ(t.unconnected_sectors(), (std::vector<int>{1, 7}));
}

TEST(FixedPoints, DistinctAndRegular)
{
    const auto f = ExternalField({1.0, 0.0, 1.0}, {{0.0, 1}}, {});
    EXPECT_NO_THROW(FixedPointSet({1.0, 2.0}, f));
    EXPECT_THROW(FixedPointSet({1.0, 1.0}, f), Error);
    EXPECT_THROW(FixedPointSet({0.0}, f), Error);
    const FixedPointSet c({1.0, -2.0}, f);
    EXPECT_NEAR(std::abs(c.poly()(3.0) - cplx(2.0 * 5.0)), 0.0, 1e-12);
}

// ---- membership ----

namespace {

Component line_with_rays(cplx a, cplx b, std::optional<RayTail> head, std::optional<RayTail> tail, std::size_t pieces = 20)
{
    Component c = segment(a, b, pieces);
    c.head = head;
    c.tail = tail;
    return c;
}

} // namespace

TEST(Membership, HermiteFamily)
{
    const cases::Hermite h;
    const Contour real_line{{line_with_rays(-1.0, 1.0, RayTail{-1.0, 1}, RayTail{1.0, 0})}};
    EXPECT_TRUE(membership(real_line, h.triple, h.sectors, {}, 1.0).ok());

    const Contour interval{{segment(-1.0, 1.0, 20)}};
    const Report r = membership(interval, h.triple, h.sectors, {}, 1.0);
    EXPECT_TRUE(r.has(condition::sector_block_component));

    // rays along the sector boundaries arg z = +-pi/4 never enter the widened sector test region
    const Contour bent{{line_with_rays(-1.0, 1.0, RayTail{std::polar(1.0, 3 * pi / 4), 1},
                                       RayTail{std::polar(1.0, pi / 4), 0})}};
    EXPECT_FALSE(membership(bent, h.triple, h.sectors, {}, 1.0).ok());
    const Contour central{{line_with_rays(-1.0, 1.0, RayTail{std::polar(1.0, pi - 0.05), 1},
                                          RayTail{std::polar(1.0, 0.05), 0})}};
    EXPECT_TRUE(membership(central, h.triple, h.sectors, {}, 1.0).ok());
}

TEST(Membership, LaguerreFamily)
{
    // Phi = z with C = {0}: N = 1, one block {0} escaping through the only sector
    const auto f = ExternalField::polynomial({0.0, 1.0});
    const SectorSet s = admissible_sectors(f, 0.2);
    const AdmissibleTriple t{{{0}}, {{0}}, {{0}}};
    ASSERT_TRUE(validate_triple(t, s.size(), 1).ok());
    const std::vector<cplx> c0{0.0};
    Component half = segment(0.0, 1.0, 10);
    half.pins = {{0, 0}};
    half.tail = RayTail{1.0, 0};
    EXPECT_TRUE(membership(Contour{{half}}, t, s, c0, 1.0).ok());

    Component missing = segment(0.5, 1.0, 10);
    missing.tail = RayTail{1.0, 0};
    EXPECT_TRUE(membership(Contour{{missing}}, t, s, c0, 1.0).has(condition::contains_fixed_points));

    Component wrong = segment(0.0, -1.0, 10);
    wrong.tail = RayTail{-1.0, -1};
    EXPECT_TRUE(membership(Contour{{wrong}}, t, s, c0, 1.0).has(condition::block_component));
}

TEST(Membership, UnconnectedSectorAndStrayPieces)
{
    // Phi = z^4: four sectors; connect 0 and 2, leave 1 and 3 unconnected
    const auto f = ExternalField::polynomial({0.0, 0.0, 0.0, 0.0, 1.0});
    const SectorSet s = admissible_sectors(f, 0.1);
    const AdmissibleTriple t{{}, {}, {{0, 2}, {1}, {3}}};
    const Component main = line_with_rays(-1.0, 1.0, RayTail{-1.0, 2}, RayTail{1.0, 0});
    EXPECT_TRUE(membership(Contour{{main}}, t, s, {}, 1.0).ok());

    Contour spur{{main, segment(0.0, cplx(0, 5), 10)}};
    const Report r = membership(spur, t, s, {}, 1.0);
    EXPECT_TRUE(r.has(condition::unconnected_sector));

    Contour stray{{main, segment(cplx(3, 3), cplx(3.5, 3.5), 2)}};
    const Report r2 = membership(stray, t, s, {}, 10.0);
    EXPECT_TRUE(r2.has(condition::component_count));
    EXPECT_TRUE(r2.has(condition::qualifying_arc));
}

TEST(ValidateTriple, ImagePairsAreSectorConnected)
{
    std::mt19937 rng(9);
    int checked = 0;
    for (int k = 0; k < 2000 && checked < 100; ++k) {
        const int n = 2 + k % 8;
        AdmissibleTriple t;
        t.theta_partition = random_partition(rng, n);
        t.c_partition = {{0}, {1}};
        std::uniform_int_distribution<std::size_t> pick(0, t.theta_partition.size() - 1);
        t.psi = {t.theta_partition[pick(rng)], t.theta_partition[pick(rng)]};
        if (!validate_triple(t, n, 2).ok())
            continue;
        ++checked;
        for (const auto& img : t.psi)
            for (int a : img)
                for (int b : img) {
                    const auto same = std::any_of(t.theta_partition.begin(), t.theta_partition.end(), [&](const Block& blk) {
                        return std::count(blk.begin(), blk.end(), a) && std::count(blk.begin(), blk.end(), b);
                    });
                    EXPECT_TRUE(same);
                }
    }
    EXPECT_EQ(checked, 100);
}
