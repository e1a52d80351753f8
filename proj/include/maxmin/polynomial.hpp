#ifndef MAXMIN_POLYNOMIAL_HPP
#define MAXMIN_POLYNOMIAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "maxmin/error.hpp"

namespace maxmin {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr std::size_t max_degree = 32;

/// Dense complex polynomial in the monomial basis, coefficients stored by
/// increasing power.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial constant(cplx value) { return Polynomial({value}); }
    static Polynomial monomial(std::size_t power, cplx coeff = 1.0)
    {
        std::vector<cplx> c(power + 1, 0.0);
        c[power] = coeff;
        return Polynomial(std::move(c));
    }
    /// Monic polynomial with the given roots, repeated by multiplicity.
    static Polynomial from_roots(std::span<const cplx> roots)
    {
        Polynomial p = constant(1.0);
        for (cplx r : roots)
            p = p * Polynomial({-r, 1.0});
        return p;
    }

    bool is_zero() const { return c_.empty(); }
    /// Degree of the zero polynomial is reported as -1.
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    const std::vector<cplx>& coeffs() const { return c_; }
    cplx coeff(std::size_t k) const { return k < c_.size() ? c_[k] : cplx{}; }
    cplx leading() const { return c_.empty() ? cplx{} : c_.back(); }

    cplx operator()(cplx z) const
    {
        cplx acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it)
            acc = acc * z + *it;
        return acc;
    }

    Polynomial derivative() const
    {
        if (c_.size() <= 1)
            return {};
        std::vector<cplx> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k)
            d[k - 1] = c_[k] * static_cast<double>(k);
        return Polynomial(std::move(d));
    }

    /// p^{(order)}(z) / order!, the Taylor coefficient of order `order` at z.
    cplx taylor_coeff(cplx z, int order) const
    {
        Polynomial d = *this;
        double fact = 1.0;
        for (int k = 0; k < order; ++k) {
            d = d.derivative();
            fact *= (k + 1);
        }
        return d(z) / fact;
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b)
    {
        std::vector<cplx> r(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t k = 0; k < a.c_.size(); ++k) r[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) r[k] += b.c_[k];
        return Polynomial(std::move(r));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + b * cplx(-1.0); }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b)
    {
        if (a.is_zero() || b.is_zero())
            return {};
        std::vector<cplx> r(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j)
                r[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(r));
    }
    friend Polynomial operator*(const Polynomial& a, cplx s)
    {
        std::vector<cplx> r = a.c_;
        for (auto& v : r) v *= s;
        return Polynomial(std::move(r));
    }

    Polynomial pow(unsigned e) const
    {
        Polynomial r = constant(1.0);
        for (unsigned k = 0; k < e; ++k) r = r * *this;
        return r;
    }

private:
    void trim()
    {
        while (!c_.empty() && c_.back() == cplx{})
            c_.pop_back();
    }

    std::vector<cplx> c_;
};

/// Roots by eigenvalues of the companion matrix, each polished with a few
/// Newton steps. Repeated roots come back as clusters.
inline std::vector<cplx> roots(const Polynomial& p)
{
    const int n = p.degree();
    if (n < 0)
        fail(ErrorKind::RootfindingFailure, "zero polynomial has no finite root set");
    if (n > static_cast<int>(max_degree))
        fail(ErrorKind::RootfindingFailure, "degree above the supported cap");
    if (n == 0)
        return {};
    const cplx lead = p.leading();
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i)
        companion(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i)
        companion(i, n - 1) = -p.coeff(static_cast<std::size_t>(i)) / lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::RootfindingFailure, "companion eigenvalue iteration failed");
    const Polynomial dp = p.derivative();
    std::vector<cplx> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        cplx z = es.eigenvalues()(i);
        for (int it = 0; it < 3; ++it) {
            const cplx d = dp(z);
            if (std::abs(d) < 1e-14 * std::max(1.0, std::abs(p(z))))
                break;
            const cplx step = p(z) / d;
            if (!(std::abs(step) < 1e-6 * std::max(1.0, std::abs(z))))
                break;
            z -= step;
        }
        out[static_cast<std::size_t>(i)] = z;
    }
    return out;
}

} // namespace maxmin

#endif
