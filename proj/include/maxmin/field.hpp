#ifndef MAXMIN_FIELD_HPP
#define MAXMIN_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "maxmin/error.hpp"
#include "maxmin/polynomial.hpp"

namespace maxmin {

struct PoleFactor {
    cplx location;
    int order = 1;
};

struct LogTerm {
    cplx location;
    cplx weight;
};

/// Relative proximity tolerance used for all singularity tests.
inline constexpr double singular_tolerance = 1e-9;

inline double local_scale(cplx z) { return std::max(1.0, std::abs(z)); }

/// Angle difference wrapped to [0, pi].
inline double angle_distance(double a, double b)
{
    return std::abs(std::remainder(a - b, 2.0 * pi));
}

inline double wrap_angle(double a)
{
    double r = std::fmod(a, 2.0 * pi);
    if (r < 0.0)
        r += 2.0 * pi;
    if (r >= 2.0 * pi)
        r = 0.0;
    return r;
}

struct FieldOptions {
    /// Accept real log weights (they are flagged, not rejected).
    bool allow_real_log_weights = false;
};

/// Semiclassical external field Phi = P/Q + sum rho_j log(z - w_j), together
/// with the rational form Phi' = B/A. The real part phi uses the principal
/// branch of each logarithm.
class ExternalField {
public:
    using Options = FieldOptions;

    ExternalField(std::vector<cplx> p_coeffs, std::vector<PoleFactor> q_factors,
                  std::vector<LogTerm> log_terms, Options options = {})
        : p_(std::move(p_coeffs)), q_factors_(std::move(q_factors)), log_terms_(std::move(log_terms))
    {
        build(options);
    }

    /// Polynomial field, the common special case.
    static ExternalField polynomial(std::vector<cplx> p_coeffs) { return ExternalField(std::move(p_coeffs), {}, {}); }

    const Polynomial& p() const { return p_; }
    const Polynomial& q() const { return q_; }
    const Polynomial& a() const { return a_; }
    const Polynomial& b_poly() const { return b_; }
    const std::vector<PoleFactor>& poles() const { return q_factors_; }
    const std::vector<LogTerm>& log_terms() const { return log_terms_; }
    const std::vector<cplx>& singularities() const { return singular_; }

    int n() const { return n_; }
    cplx alpha() const { return p_.leading(); }
    /// Leading coefficient of B; equals N times alpha.
    cplx b() const { return b_.leading(); }
    bool has_real_log_weight() const { return real_log_weight_; }

    double distance_to_singularities(cplx z) const
    {
        double d = std::numeric_limits<double>::infinity();
        for (cplx s : singular_)
            d = std::min(d, std::abs(z - s));
        return d;
    }

    bool is_singular(cplx z) const
    {
        return distance_to_singularities(z) < singular_tolerance * local_scale(z);
    }

    /// Phi(z) itself, principal branch for the logarithms.
    cplx value(cplx z) const
    {
        require_regular(z);
        cplx v = p_(z) / q_(z);
        for (const auto& t : log_terms_)
            v += t.weight * std::log(z - t.location);
        return v;
    }

    double phi(cplx z) const { return value(z).real(); }

    cplx phi_prime(cplx z) const
    {
        require_regular(z);
        return b_(z) / a_(z);
    }

    /// Phi' by term-by-term differentiation of P/Q + L; used as a cross-check
    /// of the B/A form.
    cplx phi_prime_direct(cplx z) const
    {
        require_regular(z);
        const cplx qz = q_(z);
        cplx v = p_.derivative()(z) / qz - p_(z) * q_.derivative()(z) / (qz * qz);
        for (const auto& t : log_terms_)
            v += t.weight / (z - t.location);
        return v;
    }

    cplx phi_second(cplx z) const
    {
        require_regular(z);
        const cplx az = a_(z);
        return (b_.derivative()(z) * az - b_(z) * a_.derivative()(z)) / (az * az);
    }

private:
    void require_regular(cplx z) const
    {
        if (is_singular(z))
            fail(ErrorKind::SingularPoint, "evaluation at a singularity of the field");
    }

    void build(const Options& options)
    {
        if (p_.is_zero())
            fail(ErrorKind::InvalidField, "P must be nonzero");
        q_ = Polynomial::constant(1.0);
        Polynomial simple_poles = Polynomial::constant(1.0);
        for (const auto& f : q_factors_) {
            if (f.order <= 0)
                fail(ErrorKind::InvalidField, "pole orders must be positive");
            q_ = q_ * Polynomial({-f.location, 1.0}).pow(static_cast<unsigned>(f.order));
            simple_poles = simple_poles * Polynomial({-f.location, 1.0});
            singular_.push_back(f.location);
        }
        Polynomial w_poly = Polynomial::constant(1.0);
        for (const auto& t : log_terms_) {
            if (t.weight == cplx{})
                fail(ErrorKind::InvalidField, "log weights must be nonzero");
            if (t.weight.imag() == 0.0) {
                if (!options.allow_real_log_weights)
                    fail(ErrorKind::InvalidField, "log weights must have nonzero imaginary part");
                real_log_weight_ = true;
            }
            w_poly = w_poly * Polynomial({-t.location, 1.0});
            singular_.push_back(t.location);
        }
        if (p_.degree() > static_cast<int>(max_degree) || q_.degree() > static_cast<int>(max_degree))
            fail(ErrorKind::InvalidField, "degree above the supported cap");
        n_ = p_.degree() - q_.degree();
        if (n_ < 1)
            fail(ErrorKind::InvalidField, "deg P - deg Q must be at least 1");
        for (std::size_t i = 0; i < singular_.size(); ++i)
            for (std::size_t j = i + 1; j < singular_.size(); ++j)
                if (std::abs(singular_[i] - singular_[j]) < singular_tolerance * local_scale(singular_[i]))
                    fail(ErrorKind::InvalidField, "singularities must be pairwise distinct");
        for (const auto& f : q_factors_) {
            double scale = 0.0;
            for (std::size_t k = 0; k < p_.coeffs().size(); ++k)
                scale += std::abs(p_.coeffs()[k]) * std::pow(std::abs(f.location), static_cast<double>(k));
            if (std::abs(p_(f.location)) <= singular_tolerance * std::max(1.0, scale))
                fail(ErrorKind::InvalidField, "P and Q share a root");
        }

        // A = Q * prod(z - z_j) * prod(z - w_j)
        // B = (P' Z1 - P sum_j m_j Z1/(z - z_j)) W + Q Z1 sum_j rho_j W/(z - w_j)
        a_ = q_ * simple_poles * w_poly;
        Polynomial pole_sum;
        for (std::size_t j = 0; j < q_factors_.size(); ++j) {
            Polynomial others = Polynomial::constant(static_cast<double>(q_factors_[j].order));
            for (std::size_t k = 0; k < q_factors_.size(); ++k)
                if (k != j)
                    others = others * Polynomial({-q_factors_[k].location, 1.0});
            pole_sum = pole_sum + others;
        }
        Polynomial log_sum;
        for (std::size_t j = 0; j < log_terms_.size(); ++j) {
            Polynomial others = Polynomial::constant(log_terms_[j].weight);
            for (std::size_t k = 0; k < log_terms_.size(); ++k)
                if (k != j)
                    others = others * Polynomial({-log_terms_[k].location, 1.0});
            log_sum = log_sum + others;
        }
        b_ = (p_.derivative() * simple_poles - p_ * pole_sum) * w_poly + q_ * simple_poles * log_sum;

        const int expected = p_.degree() + static_cast<int>(q_factors_.size() + log_terms_.size()) - 1;
        const cplx expected_lead = static_cast<double>(n_) * alpha();
        if (b_.degree() != expected || std::abs(b_.leading() - expected_lead) > 1e-12 * std::abs(expected_lead))
            fail(ErrorKind::InvalidField, "inconsistent rational form of the derivative");
    }

    Polynomial p_;
    std::vector<PoleFactor> q_factors_;
    std::vector<LogTerm> log_terms_;
    Polynomial q_;
    Polynomial a_;
    Polynomial b_;
    std::vector<cplx> singular_;
    int n_ = 0;
    bool real_log_weight_ = false;
};

inline double eval_phi(const ExternalField& field, cplx z) { return field.phi(z); }
inline cplx eval_phi_prime(const ExternalField& field, cplx z) { return field.phi_prime(z); }

/// Central angles of the sectors where phi grows to +infinity, sorted in
/// [0, 2 pi), with the widening margin used by the sampled tests.
struct SectorSet {
    std::vector<double> angles;
    double half_width = 0.0;
    double epsilon = 0.0;
    /// phi increased from r = 10 to r = 100 on every central ray.
    bool growth_verified = false;

    int size() const { return static_cast<int>(angles.size()); }

    cplx direction(int j) const { return std::polar(1.0, angles.at(static_cast<std::size_t>(j))); }
    cplx anchor(int j, double radius) const { return std::polar(radius, angles.at(static_cast<std::size_t>(j))); }

    /// |arg z - theta_j| < half_width + widen.
    bool in_sector(cplx z, int j, double widen = 0.0) const
    {
        if (z == cplx{})
            return false;
        return angle_distance(std::arg(z), angles.at(static_cast<std::size_t>(j))) < half_width + widen;
    }

    /// Index of the sector whose widened copy contains z, or -1.
    int sector_of(cplx z, double widen) const
    {
        for (int j = 0; j < size(); ++j)
            if (in_sector(z, j, widen))
                return j;
        return -1;
    }

    int nearest_sector(double angle) const
    {
        int best = 0;
        for (int j = 1; j < size(); ++j)
            if (angle_distance(angle, angles[static_cast<std::size_t>(j)]) <
                angle_distance(angle, angles[static_cast<std::size_t>(best)]))
                best = j;
        return best;
    }
};

inline SectorSet admissible_sectors(const ExternalField& field, double epsilon)
{
    const int n = field.n();
    const double half = pi / (2.0 * n);
    if (!(epsilon > 0.0) || !(epsilon < half))
        fail(ErrorKind::BadEpsilon, "widened sectors overlap unless 0 < epsilon < pi/(2N)");
    SectorSet s;
    s.half_width = half;
    s.epsilon = epsilon;
    const double base = -std::arg(field.alpha()) / n;
    for (int j = 0; j < n; ++j)
        s.angles.push_back(wrap_angle(base + 2.0 * pi * j / n));
    std::sort(s.angles.begin(), s.angles.end());
    s.growth_verified = true;
    for (double theta : s.angles) {
        const cplx z10 = std::polar(10.0, theta);
        const cplx z100 = std::polar(100.0, theta);
        if (field.is_singular(z10) || field.is_singular(z100) || !(field.phi(z100) > field.phi(z10)))
            s.growth_verified = false;
    }
    return s;
}

} // namespace maxmin

#endif
