#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "delaycert/circle.hpp"
#include "delaycert/delay.hpp"
#include "delaycert/signal.hpp"

namespace delaycert {

/*
 * Constructive perturbations of periodic signals.
 *
 * Two mechanisms, both built from compactly supported smooth bumps:
 *
 *   slope surgery   subtract p with p' = eps - amp * lambda((t-a)/w) on an
 *                   arc (a, a+w) where |o'| is large, and p' = eps outside.
 *                   amp = eps*T/(w*c) makes p periodic, c = int_0^1 lambda.
 *                   Moves every critical point to a simple crossing of the
 *                   level o' = eps without creating new ones inside the arc.
 *
 *   pulse trains    add sum_j c_j lambda((t - j*h)/h) with h = tau/2.  Each
 *                   pulse has a plateau of radius h/2 around its center and
 *                   support radius h, so the plateaus cover the circle and
 *                   any time lies in at most two supports.  Adjusting six
 *                   coefficients moves the two delay vectors of a colliding
 *                   pair independently.
 */

// p with p' = eps - amp*lambda on the arc and p' = eps elsewhere; p(0) = 0.
// The arc may wrap; width must lie strictly inside (0, period).  If the
// interior slope max(|eps|, |amp - eps|) reaches interior_bound, throws
// std::invalid_argument naming the largest admissible |eps|.
PeriodicSignal slope_perturbation(double period, double alpha, double beta, double epsilon,
                                  double interior_bound = 0.0);

struct RegularizeOptions {
    double budget = 1e-3;    // distance_r cap on the applied change
    int r = 2;               // metric order for the budget
    int max_attempts = 48;   // epsilon candidates tried before giving up
};

struct RegularizeResult {
    PeriodicSignal signal;
    bool changed = false;
    double epsilon = 0.0;   // slope level actually used (0 when unchanged/constant branch)
    CircleArc interval;     // surgery arc; zero width when no slope was applied
    int attempts = 0;
    double distance = 0.0;  // distance_r(input, output)
};

// Returns a signal with a regular critical-point profile within distance_r
// budget of the input.  Already-regular inputs pass through unchanged.
// Constant inputs receive a small sine; everything else gets slope surgery
// on the largest one-sign interval of o'.
RegularizeResult regularize(const PeriodicSignal& o, const RegularizeOptions& opts = {});

// Evenly spaced pulse train lambda((t - j*h)/h), j = 0..count-1, h = tau/2.
struct PulseFamily {
    double period = 1.0;
    double tau = 0.0;
    double h = 0.0;
    int count = 0;

    PulseFamily(double period, double tau);

    // Index of the pulse whose plateau contains t.  Plateaus have radius
    // h/2 and centers h apart, so this is the nearest center.
    int plateau_index(double t) const;
    double center(int j) const { return h * j; }

    // lambda_j^(k)(t), the k-th time derivative of pulse j.
    double pulse(int j, double t, int k = 0) const;

    // max over k <= r of sup|lambda^(k)| / h^k: the C^r operator norm of a
    // unit-coefficient pulse, used to convert coefficient caps to distances.
    double cr_factor(int r) const;

    PeriodicSignal applied(const PeriodicSignal& base, const Eigen::ArrayXd& coeffs) const;
};

struct RepairOptions {
    double budget = 0.05;       // distance_r cap on the total perturbation
    int r = 2;
    int max_iters = 200;
    std::uint64_t seed = 0;
    CertifyOptions certify;     // abs tolerances filled in from the cap when zero
};

struct RepairResult {
    bool success = false;
    PeriodicSignal signal;
    EmbeddingCertificate certificate;   // certificate of the returned signal
    int iterations = 0;                 // certify/draw rounds consumed
    int accepted = 0;                   // draws that passed the side conditions
    int rejected = 0;
    double distance = 0.0;              // distance_r(input, output)
    double coefficient_cap = 0.0;       // per-pulse accumulation bound
    double certify_tol = 0.0;           // absolute certification tolerance used
    std::uint64_t seed = 0;
};

// Randomized pulse-train repair of a failed embedding.  Requires a regular
// profile and tau < mu/12.  Each round certifies, reads off the closest
// pair, and redraws the six pulse coefficients owning the pair's delay
// coordinates; draws are rejected if they change the critical-point count
// or break regularity.  Coefficients stay within a per-pulse cap chosen so
// the C^r distance of the full train never exceeds the budget.
RepairResult repair(const PeriodicSignal& o, const DelayParameters& params,
                    const RepairOptions& opts = {});

}  // namespace delaycert
