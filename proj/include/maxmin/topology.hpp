#ifndef MAXMIN_TOPOLOGY_HPP
#define MAXMIN_TOPOLOGY_HPP

#include <algorithm>
#include <complex>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "maxmin/error.hpp"
#include "maxmin/field.hpp"
#include "maxmin/polynomial.hpp"

namespace maxmin {

using Block = std::vector<int>;
using Partition = std::vector<Block>;

/// Sorted blocks of sorted labels, empty blocks dropped; ordered by first label.
inline Partition canonical(Partition p)
{
    for (auto& b : p)
        std::sort(b.begin(), b.end());
    std::erase_if(p, [](const Block& b) { return b.empty(); });
    std::sort(p.begin(), p.end());
    return p;
}

/// Two blocks cross when their labels interleave as x < y < x' < y' (in
/// either role). Labels are positions in the cyclic order.
inline bool blocks_cross(const Block& x, const Block& y)
{
    std::vector<std::pair<int, int>> merged;
    for (int v : x) merged.emplace_back(v, 0);
    for (int v : y) merged.emplace_back(v, 1);
    std::sort(merged.begin(), merged.end());
    int alternations = 0;
    int last = -1;
    for (const auto& [label, owner] : merged) {
        if (owner != last) {
            ++alternations;
            last = owner;
        }
    }
    return alternations >= 4;
}

/// Quadratic pair scan over blocks; the test is invariant under cyclic
/// relabelling.
inline bool is_non_crossing(const Partition& blocks)
{
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t j = i + 1; j < blocks.size(); ++j)
            if (blocks_cross(blocks[i], blocks[j]))
                return false;
    return true;
}

/// The prescribed points C with C(z) = prod (z - c_j).
class FixedPointSet {
public:
    FixedPointSet() : poly_(Polynomial::constant(1.0)) {}

    FixedPointSet(std::vector<cplx> points, const ExternalField& field) : points_(std::move(points))
    {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            for (std::size_t j = i + 1; j < points_.size(); ++j)
                if (std::abs(points_[i] - points_[j]) <= singular_tolerance * local_scale(points_[i]))
                    fail(ErrorKind::InvalidFixedPoints, "fixed points must be pairwise distinct");
            if (field.is_singular(points_[i]))
                fail(ErrorKind::InvalidFixedPoints, "fixed points must avoid the singularities of the field");
        }
        poly_ = Polynomial::from_roots(points_);
    }

    const std::vector<cplx>& points() const { return points_; }
    const Polynomial& poly() const { return poly_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

private:
    std::vector<cplx> points_;
    Polynomial poly_;
};

/// Connection topology: which fixed points belong together, which sectors each
/// group of fixed points escapes through, and which sectors are joined at
/// infinity. psi[i] is the image of c_partition[i].
struct AdmissibleTriple {
    Partition c_partition;
    std::vector<Block> psi;
    Partition theta_partition;

    /// Nonempty sector images.
    Partition psi_partition() const
    {
        Partition out;
        for (const auto& img : psi)
            if (!img.empty())
                out.push_back(img);
        return canonical(out);
    }

    /// Blocks of the sector partition with at least two sectors.
    Partition nonsingleton_theta() const
    {
        Partition out;
        for (const auto& b : canonical(theta_partition))
            if (b.size() > 1)
                out.push_back(b);
        return out;
    }

    /// Non-singleton sector blocks that are not the image of a fixed-point block.
    Partition free_sector_blocks() const
    {
        const Partition images = psi_partition();
        Partition out;
        for (auto b : nonsingleton_theta())
            if (std::find(images.begin(), images.end(), b) == images.end())
                out.push_back(b);
        return out;
    }

    /// Sectors that must stay empty at infinity: singleton blocks not used by psi.
    std::vector<int> unconnected_sectors() const
    {
        const Partition images = psi_partition();
        std::vector<int> out;
        for (const auto& b : canonical(theta_partition))
            if (b.size() == 1 && std::find(images.begin(), images.end(), b) == images.end())
                out.push_back(b.front());
        return out;
    }
};

struct Violation {
    std::string condition;
    std::string detail;
};

struct Report {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(const std::string& condition) const
    {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const Violation& v) { return v.condition == condition; });
    }
    void add(std::string condition, std::string detail) { violations.push_back({std::move(condition), std::move(detail)}); }
};

namespace condition {
inline const std::string fixed_point_cover = "fixed-point-cover";
inline const std::string sector_cover = "sector-cover";
inline const std::string singleton_needs_sector = "singleton-needs-sector";
inline const std::string disjoint_sector_images = "disjoint-sector-images";
inline const std::string non_crossing_images = "non-crossing-sector-images";
inline const std::string non_crossing_sectors = "non-crossing-sector-partition";
inline const std::string subordination = "subordination";
} // namespace condition

namespace detail {

inline std::string block_string(const Block& b)
{
    std::string s = "{";
    for (std::size_t i = 0; i < b.size(); ++i)
        s += (i ? "," : "") + std::to_string(b[i]);
    return s + "}";
}

inline void check_cover(const Partition& p, int count, const std::string& name, Report& report)
{
    std::vector<int> seen(static_cast<std::size_t>(count), 0);
    for (const auto& b : p)
        for (int v : b)
            ++seen[static_cast<std::size_t>(v)];
    for (int i = 0; i < count; ++i) {
        if (seen[static_cast<std::size_t>(i)] == 0)
            report.add(name, "label " + std::to_string(i) + " is in no block");
        else if (seen[static_cast<std::size_t>(i)] > 1)
            report.add(name, "label " + std::to_string(i) + " is in several blocks");
    }
}

inline void check_range(const Partition& p, int count, const char* what)
{
    for (const auto& b : p)
        for (int v : b)
            if (v < 0 || v >= count)
                fail(ErrorKind::IndexOutOfRange, std::string(what) + " index " + std::to_string(v) + " out of range");
}

} // namespace detail

/// Lists every violated admissibility condition; an empty report means the
/// triple is admissible.
inline Report validate_triple(const AdmissibleTriple& triple, int n_sectors, std::size_t n_fixed)
{
    const int nc = static_cast<int>(n_fixed);
    detail::check_range(triple.c_partition, nc, "fixed point");
    detail::check_range(triple.theta_partition, n_sectors, "sector");
    detail::check_range(triple.psi, n_sectors, "sector");
    if (triple.psi.size() != triple.c_partition.size())
        fail(ErrorKind::IndexOutOfRange, "psi must assign one sector set per fixed-point block");

    Report report;
    detail::check_cover(triple.c_partition, nc, condition::fixed_point_cover, report);
    detail::check_cover(triple.theta_partition, n_sectors, condition::sector_cover, report);

    for (std::size_t i = 0; i < triple.c_partition.size(); ++i)
        if (triple.c_partition[i].size() == 1 && triple.psi[i].empty())
            report.add(condition::singleton_needs_sector,
                       "singleton block " + detail::block_string(triple.c_partition[i]) + " has no sector");

    for (std::size_t i = 0; i < triple.psi.size(); ++i)
        for (std::size_t j = i + 1; j < triple.psi.size(); ++j) {
            std::set<int> a(triple.psi[i].begin(), triple.psi[i].end());
            for (int v : triple.psi[j])
                if (a.count(v)) {
                    report.add(condition::disjoint_sector_images,
                               "blocks " + std::to_string(i) + " and " + std::to_string(j) + " share sector " +
                                   std::to_string(v));
                    break;
                }
        }

    const Partition images = triple.psi_partition();
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
            if (blocks_cross(images[i], images[j]))
                report.add(condition::non_crossing_images, "images " + detail::block_string(images[i]) + " and " +
                                                               detail::block_string(images[j]) + " interleave");

    const Partition theta = canonical(triple.theta_partition);
    for (std::size_t i = 0; i < theta.size(); ++i)
        for (std::size_t j = i + 1; j < theta.size(); ++j)
            if (blocks_cross(theta[i], theta[j]))
                report.add(condition::non_crossing_sectors, "blocks " + detail::block_string(theta[i]) + " and " +
                                                                detail::block_string(theta[j]) + " interleave");

    for (const auto& img : images)
        if (std::find(theta.begin(), theta.end(), img) == theta.end())
            report.add(condition::subordination,
                       "image " + detail::block_string(img) + " is not a block of the sector partition");
    return report;
}

inline Report validate_triple(const AdmissibleTriple& triple, const SectorSet& sectors, const FixedPointSet& fixed)
{
    return validate_triple(triple, sectors.size(), fixed.size());
}

} // namespace maxmin

#endif
