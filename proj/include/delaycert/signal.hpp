#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "delaycert/bump.hpp"
#include "delaycert/circle.hpp"

// Periodic scalar signals on [0, T), the raw material of every certificate in
// this library. A signal is a finite trigonometric series
//
//     o(t) = a_0 + sum_k a_k cos(2 pi k t / T) + b_k sin(2 pi k t / T)
//
// optionally augmented with analytic closure terms that the perturbation
// machinery produces: sums of compactly supported pulses, and the primitive
// of an almost-constant slope used to regularize degenerate profiles. Both
// closure kinds carry exact derivatives, so o and all signals derived from it
// can be evaluated to any supported order without differencing.
//
// The metric on signals of possibly different periods compares k-th
// derivatives in the scaled parametrization s = t / T:
//
//     d_r(o, o') = max_{k<=r} sup_{0<=s<1} |o^(k)(sT) - o'^(k)(sT')| + |T - T'|
//
// and norm_r(o) = d_r(o, zero signal of the same period).

namespace delaycert {

// Sum of equally spaced standard-profile pulses of half-width h:
//   scale * sum_j coeffs[j] * bump((t - phase - j h) / h),  j = 0..n,
// with n = floor(period / h) and everything interpreted mod period.
struct PulseSumTerm {
    double period = 1.0;
    double h = 0.0;
    double phase = 0.0;
    double scale = 1.0;
    int derivative_shift = 0;
    Eigen::ArrayXd coeffs;

    double eval(double t, int k) const;
    int max_eval_order() const { return BumpFunction::max_order - derivative_shift; }
};

// Constructed monotone segment: the primitive, vanishing at t = 0, of
//   epsilon - amp * slopebump(u(t)),
// where u is the fractional position inside the arc. With
// amp = epsilon * period / (width * c), c the slope bump's integral, the
// primitive closes up over one period and the term is smooth and periodic.
struct SlopeTerm {
    CircleArc arc;
    double epsilon = 0.0;
    double amp = 0.0;
    double scale = 1.0;
    double time_offset = 0.0;  // evaluates at t + time_offset (set by shifts)
    int derivative_shift = 0;

    double eval(double t, int k) const;
    int max_eval_order() const { return BumpFunction::max_order + 1 - derivative_shift; }
    // Mismatch of the raw (unwrapped) k-th derivative across one period.
    double end_mismatch(int k) const;
};

using SignalTerm = std::variant<PulseSumTerm, SlopeTerm>;

class PeriodicSignal {
  public:
    PeriodicSignal() = default;
    PeriodicSignal(double period, Eigen::ArrayXd cos_amps, Eigen::ArrayXd sin_amps,
                   std::vector<SignalTerm> terms = {});

    static PeriodicSignal zero(double period);
    static PeriodicSignal constant(double period, double value);
    // Single mode k >= 1 plus an optional constant offset.
    static PeriodicSignal harmonic(double period, int mode, double cos_amp, double sin_amp,
                                   double offset = 0.0);

    double period() const { return period_; }
    int mode_count() const { return static_cast<int>(cos_.size()) - 1; }
    const Eigen::ArrayXd& cos_amps() const { return cos_; }
    const Eigen::ArrayXd& sin_amps() const { return sin_; }
    const std::vector<SignalTerm>& terms() const { return terms_; }

    // k-th derivative at t, interpreted mod period.
    double eval(double t, int k = 0) const;
    double operator()(double t) const { return eval(t, 0); }

    // Highest derivative order eval() supports (limited by closure terms).
    int max_derivative_order() const;

    PeriodicSignal derivative() const;
    // Signal t -> o(t + dt); margins and norms are invariant under this.
    PeriodicSignal shifted(double dt) const;
    PeriodicSignal scaled(double factor) const;
    PeriodicSignal with_term(SignalTerm term) const;

    // |o^(k)(T) - o^(k)(0)| measured on the unwrapped representation; zero
    // for exact constructions up to quadrature accuracy of the closure.
    double periodicity_residual(int k) const;

    friend PeriodicSignal operator+(const PeriodicSignal& a, const PeriodicSignal& b);
    friend PeriodicSignal operator-(const PeriodicSignal& a, const PeriodicSignal& b);

  private:
    double period_ = 1.0;
    Eigen::ArrayXd cos_ = Eigen::ArrayXd::Zero(1);  // index k; cos_[0] is the mean
    Eigen::ArrayXd sin_ = Eigen::ArrayXd::Zero(1);  // sin_[0] unused, kept 0
    std::vector<SignalTerm> terms_;
};

struct SignalDistance {
    int r = 0;
    double value = 0.0;
    int grid = 0;  // scaled-parametrization grid resolution used for the sup
};

// C^r distance between signals of possibly different periods.
SignalDistance distance_r(const PeriodicSignal& a, const PeriodicSignal& b, int r,
                          int grid = 4096);

// C^r norm, equal to distance_r against the zero signal of the same period.
double norm_r(const PeriodicSignal& o, int r, int grid = 4096);

// Least-squares-free trigonometric analysis of M uniform samples over one
// period (sample i at t = i T / M). Requires M >= 2 max_modes + 1; rejects
// content above the requested band (aliasing) so the round trip at the sample
// points is exact to rounding.
PeriodicSignal from_samples(double period, const std::vector<double>& samples, int max_modes);

}  // namespace delaycert
