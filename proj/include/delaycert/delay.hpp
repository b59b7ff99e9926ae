#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "delaycert/monotonicity.hpp"
#include "delaycert/signal.hpp"

// Certification of the three-dimensional delay map
//
//     t  ->  (o(t), o(t - tau), o(t - 2 tau))
//
// as an embedding of the circle [0, T). The certificate separates pair gaps
// into a near-diagonal band, where injectivity follows from monotone-interval
// bookkeeping whenever tau <= mu/3 and the profile is regular, and the far
// region, where the minimum separation is located by a dense torus grid with
// deterministic local refinement. Immersion is the minimum norm of the delay
// derivative over one period.

namespace delaycert {

struct DelayParameters {
    double tau = 0.0;
};

enum class Verdict { certified, refuted, inconclusive };

enum class WitnessKind { none, injectivity, immersion };

struct PairWitness {
    double t1 = 0.0;
    double t2 = 0.0;       // equals t1 for immersion witnesses
    double value = 0.0;    // separation (injectivity) or derivative norm (immersion)
};

struct CertifyOptions {
    double certify_rel_tol = 1e-7;   // margins must exceed this times norm_0(o)
    double refute_rel_tol = 1e-10;
    double certify_abs_tol = 0.0;    // nonzero overrides the relative rule
    double refute_abs_tol = 0.0;
    int pair_grid = 512;
    int immersion_grid = 4096;
    int refine_count = 32;           // best grid cells refined by Nelder-Mead
    int near_gap_grid = 64;          // gap resolution of the numerical near path
};

struct EmbeddingCertificate {
    Verdict verdict = Verdict::inconclusive;
    double tau = 0.0;
    double injectivity_margin = 0.0;   // min separation over pair gaps > near_band
    double immersion_margin = 0.0;     // min delay-derivative norm over the circle
    double near_band = 0.0;
    bool near_analytic = false;        // near band certified by the monotone argument
    double near_ratio_margin = 0.0;    // numerical near path: min separation/gap
    double mu = 0.0;
    bool profile_regular = false;
    WitnessKind witness_kind = WitnessKind::none;
    std::optional<PairWitness> witness;
    double certify_tol = 0.0;          // absolute thresholds actually applied
    double refute_tol = 0.0;
    int pair_grid = 0;
    std::string inconclusive_reason;
    std::vector<std::string> warnings;
};

// Interval of delays around a certified tau whose endpoints re-certify.
struct TauInterval {
    double lo = 0.0;
    double hi = 0.0;
};

Eigen::Vector3d delay_vector(const PeriodicSignal& o, double t, double tau);
Eigen::Vector3d delay_derivative(const PeriodicSignal& o, double t, double tau);

EmbeddingCertificate certify(const PeriodicSignal& o, const DelayParameters& params,
                             const CertifyOptions& opts = {});

// Bisect outward from a certified tau until the verdict changes or the
// analytic bounds (0, mu/3] are reached. Probes reuse the certificate's
// absolute tolerances.
TauInterval tau_robustness(const PeriodicSignal& o, const EmbeddingCertificate& cert,
                           const CertifyOptions& opts = {});

// Default delay for unattended runs: mu/24, comfortably inside every
// hypothesis the certifier and the repair loop rely on.
double auto_tau(const MonotonicityProfile& profile);

}  // namespace delaycert
