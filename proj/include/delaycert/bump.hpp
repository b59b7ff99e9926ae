#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

// Smooth compactly supported bump profiles.
//
// All three shapes are assembled from the C-infinity transition
//
//     S(s) = psi(s) / (psi(s) + psi(1-s)),   psi(s) = exp(-1/s) for s > 0,
//
// which rises from exactly 0 (s <= 0) to exactly 1 (s >= 1). Derivatives of
// psi obey psi^(k)(s) = psi(s) Q_k(s) / s^(2k) with polynomials Q_k generated
// by Q_{k+1} = (1 - 2ks) Q_k + s^2 Q_k', and derivatives of the quotient S
// follow from the Leibniz rule, so every derivative up to the supported cap
// is evaluated in closed form rather than by differencing.
//
// Shapes (plateau value 1, exact cutoffs):
//   standard : even, 1 on |x| <= 1/2, 0 on |x| >= 1
//   surgery  : even, 1 on |x| <= 1/2, 0 on |x| >= 3/4
//   slope    : one-sided on [0,1], 0 outside (1/8, 7/8), 1 on [1/4, 3/4]

namespace delaycert {

namespace detail {

inline constexpr int kBumpMaxOrder = 12;

// Coefficient table for Q_0 .. Q_max, lowest degree first. Q_k has degree k.
inline const std::vector<std::vector<double>>& transition_polys() {
    static const std::vector<std::vector<double>> polys = [] {
        std::vector<std::vector<double>> q;
        q.push_back({1.0});
        for (int k = 0; k + 1 <= kBumpMaxOrder; ++k) {
            const std::vector<double>& cur = q.back();
            std::vector<double> next(cur.size() + 1, 0.0);
            for (std::size_t i = 0; i < cur.size(); ++i) {
                next[i] += cur[i];                                   // Q_k
                next[i + 1] -= 2.0 * k * cur[i];                     // -2ks Q_k
                if (i >= 1) next[i + 1] += static_cast<double>(i) * cur[i];  // s^2 Q_k'
            }
            q.push_back(std::move(next));
        }
        return q;
    }();
    return polys;
}

// psi^(k)(s) for s > 0; psi and all derivatives vanish identically for s <= 0.
inline double psi_derivative(double s, int k) {
    if (s <= 0.0) return 0.0;
    const std::vector<double>& q = transition_polys()[static_cast<std::size_t>(k)];
    double poly = 0.0;
    for (std::size_t i = q.size(); i-- > 0;) poly = poly * s + q[i];
    return std::exp(-1.0 / s) * poly / std::pow(s, 2 * k);
}

// k-th derivative of the 0->1 transition S at s.
inline double transition(double s, int k) {
    if (k < 0 || k > kBumpMaxOrder)
        throw std::domain_error("bump: derivative order beyond supported smoothness");
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return (k == 0) ? 1.0 : 0.0;
    // Derivative arrays of numerator a = psi(s) and denominator b = a + psi(1-s).
    std::array<double, kBumpMaxOrder + 1> a{}, b{}, out{};
    for (int j = 0; j <= k; ++j) {
        a[j] = psi_derivative(s, j);
        b[j] = a[j] + (j % 2 == 0 ? 1.0 : -1.0) * psi_derivative(1.0 - s, j);
    }
    // a = S b  =>  S^(n) = (a^(n) - sum_{j>=1} C(n,j) b^(j) S^(n-j)) / b.
    for (int n = 0; n <= k; ++n) {
        double acc = a[n];
        double binom = 1.0;
        for (int j = 1; j <= n; ++j) {
            binom = binom * (n - j + 1) / j;
            acc -= binom * b[j] * out[n - j];
        }
        out[n] = acc / b[0];
    }
    return out[k];
}

}  // namespace detail

enum class BumpProfile { standard, surgery, slope };

// One profile shape with closed-form derivatives and a cached primitive.
struct BumpFunction {
    BumpProfile profile = BumpProfile::standard;

    static constexpr int max_order = detail::kBumpMaxOrder;

    // k-th derivative of the profile at x.
    double eval(double x, int k = 0) const {
        if (k < 0 || k > max_order)
            throw std::domain_error("BumpFunction::eval: derivative order beyond supported smoothness");
        switch (profile) {
            case BumpProfile::standard: return even_sided(x, k, 2.0, 1.0);
            case BumpProfile::surgery: return even_sided(x, k, 4.0, 0.75);
            case BumpProfile::slope: return slope_eval(x, k);
        }
        throw std::logic_error("BumpFunction::eval: unknown profile");
    }

    double operator()(double x) const { return eval(x, 0); }

    // integral over [0, 1]; for the slope profile this is the constant c
    // entering the constructed monotone segment, and it lies in (1/2, 1).
    double integral01() const { return prefix_table().back(); }

    // integral over [0, min(max(x,0),1)].
    double primitive01(double x) const {
        const std::vector<double>& pre = prefix_table();
        const int panels = static_cast<int>(pre.size()) - 1;
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return pre.back();
        const double fx = x * panels;
        int j = static_cast<int>(fx);
        if (j >= panels) j = panels - 1;
        return pre[static_cast<std::size_t>(j)] +
               gauss8(static_cast<double>(j) / panels, x);
    }

  private:
    // Even profiles: value 1 on |x| <= 1/2, transition 1 - S(rate*(|x|-1/2))
    // ending at |x| = edge. Chain rule with |x| flips odd derivatives' sign
    // on the negative side.
    double even_sided(double x, int k, double rate, double edge) const {
        const double ax = std::fabs(x);
        if (ax <= 0.5) return (k == 0) ? 1.0 : 0.0;
        if (ax >= edge) return 0.0;
        const double u = rate * (ax - 0.5);
        double v = (k == 0) ? 1.0 - detail::transition(u, 0)
                            : -detail::transition(u, k) * std::pow(rate, k);
        if (x < 0.0 && (k % 2) != 0) v = -v;
        return v;
    }

    double slope_eval(double x, int k) const {
        if (x <= 0.125 || x >= 0.875) return 0.0;
        if (x >= 0.25 && x <= 0.75) return (k == 0) ? 1.0 : 0.0;
        if (x < 0.25) {
            const double u = 8.0 * (x - 0.125);
            return detail::transition(u, k) * std::pow(8.0, k);
        }
        const double u = 8.0 * (0.875 - x);
        return detail::transition(u, k) * std::pow(-8.0, k);
    }

    // 8-point Gauss-Legendre on [a, b].
    double gauss8(double a, double b) const {
        static constexpr std::array<double, 4> node = {
            0.18343464249564980, 0.52553240991632899,
            0.79666647741362674, 0.96028985649753623};
        static constexpr std::array<double, 4> weight = {
            0.36268378337836198, 0.31370664587788729,
            0.22238103445337447, 0.10122853629037626};
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < 4; ++i)
            acc += weight[i] * (eval(mid - half * node[i], 0) + eval(mid + half * node[i], 0));
        return acc * half;
    }

    // Prefix integrals over [0, j/panels]; built once per profile.
    const std::vector<double>& prefix_table() const {
        static const std::vector<double> tables[3] = {
            build_table(BumpProfile::standard),
            build_table(BumpProfile::surgery),
            build_table(BumpProfile::slope)};
        return tables[static_cast<int>(profile)];
    }

    static std::vector<double> build_table(BumpProfile p) {
        constexpr int panels = 2048;
        BumpFunction b{p};
        std::vector<double> pre(panels + 1, 0.0);
        for (int j = 0; j < panels; ++j)
            pre[static_cast<std::size_t>(j) + 1] =
                pre[static_cast<std::size_t>(j)] +
                b.gauss8(static_cast<double>(j) / panels, static_cast<double>(j + 1) / panels);
        return pre;
    }
};

}  // namespace delaycert
