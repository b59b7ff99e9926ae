#include "delaycert/signal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "delaycert/detail/optimize.hpp"

namespace delaycert {

namespace {

const BumpFunction kStandardBump{BumpProfile::standard};
const BumpFunction kSlopeBump{BumpProfile::slope};

double checked_period(double T) {
    if (!std::isfinite(T) || !(T > 0.0))
        throw std::invalid_argument("PeriodicSignal: period must be positive and finite");
    return T;
}

int term_max_order(const SignalTerm& term) {
    return std::visit([](const auto& t) { return t.max_eval_order(); }, term);
}

double term_eval(const SignalTerm& term, double t, int k) {
    return std::visit([&](const auto& tm) { return tm.eval(t, k); }, term);
}

}  // namespace

double PulseSumTerm::eval(double t, int k) const {
    const int k_eff = k + derivative_shift;
    if (k_eff > BumpFunction::max_order)
        throw std::domain_error("PulseSumTerm: derivative order beyond supported smoothness");
    const int count = static_cast<int>(std::floor(period / h)) + 1;
    if (coeffs.size() != count)
        throw std::logic_error("PulseSumTerm: coefficient count does not match floor(period/h)+1");
    const double tr = wrap(t - phase, period);
    const int base = static_cast<int>(std::floor(tr / h));
    double acc = 0.0;
    std::array<int, 5> seen{};
    int n_seen = 0;
    for (int jj = base - 2; jj <= base + 2; ++jj) {
        int j = jj % count;
        if (j < 0) j += count;
        bool dup = false;
        for (int q = 0; q < n_seen; ++q) dup = dup || (seen[static_cast<std::size_t>(q)] == j);
        if (dup) continue;
        seen[static_cast<std::size_t>(n_seen++)] = j;
        if (coeffs[j] == 0.0) continue;
        const double x = circ_signed(j * h, tr, period) / h;
        if (std::fabs(x) < 1.0) acc += coeffs[j] * kStandardBump.eval(x, k_eff);
    }
    return scale * acc / std::pow(h, k_eff);
}

double SlopeTerm::eval(double t, int k) const {
    const int k_eff = k + derivative_shift;
    if (k_eff > BumpFunction::max_order + 1)
        throw std::domain_error("SlopeTerm: derivative order beyond supported smoothness");
    const double T = arc.period, w = arc.width, a = arc.start;
    const double tw = wrap(t + time_offset, T);
    if (k_eff >= 2)
        return scale * (-amp * kSlopeBump.eval(forward_arc(a, tw, T) / w, k_eff - 1) /
                        std::pow(w, k_eff - 1));
    if (k_eff == 1)
        return scale * (epsilon - amp * kSlopeBump.eval(forward_arc(a, tw, T) / w, 0));
    // Primitive of epsilon - amp * bump(u(s)), accumulated from s = 0. The
    // profile's fractional position resets once per period at s = a, so the
    // running integral splits there; the clamped primitive is flat beyond 1,
    // which makes both pieces smooth.
    const double u0 = (T - a) / w;
    double pulse_area;
    if (tw <= a)
        pulse_area = w * (kSlopeBump.primitive01((tw + T - a) / w) - kSlopeBump.primitive01(u0));
    else
        pulse_area = w * (kSlopeBump.integral01() - kSlopeBump.primitive01(u0)) +
                     w * kSlopeBump.primitive01((tw - a) / w);
    return scale * (epsilon * tw - amp * pulse_area);
}

double SlopeTerm::end_mismatch(int k) const {
    if (k + derivative_shift != 0) return 0.0;
    return std::fabs(scale * (epsilon * arc.period - amp * arc.width * kSlopeBump.integral01()));
}

PeriodicSignal::PeriodicSignal(double period, Eigen::ArrayXd cos_amps, Eigen::ArrayXd sin_amps,
                               std::vector<SignalTerm> terms)
    : period_(checked_period(period)), cos_(std::move(cos_amps)), sin_(std::move(sin_amps)),
      terms_(std::move(terms)) {
    if (cos_.size() == 0) cos_ = Eigen::ArrayXd::Zero(1);
    if (sin_.size() != cos_.size()) {
        Eigen::ArrayXd s = Eigen::ArrayXd::Zero(cos_.size());
        s.head(std::min(sin_.size(), s.size())) = sin_.head(std::min(sin_.size(), s.size()));
        sin_ = s;
    }
    if (!cos_.isFinite().all() || !sin_.isFinite().all())
        throw std::invalid_argument("PeriodicSignal: coefficients must be finite");
    sin_[0] = 0.0;
}

PeriodicSignal PeriodicSignal::zero(double period) {
    return PeriodicSignal(period, Eigen::ArrayXd::Zero(1), Eigen::ArrayXd::Zero(1));
}

PeriodicSignal PeriodicSignal::constant(double period, double value) {
    Eigen::ArrayXd c(1);
    c[0] = value;
    return PeriodicSignal(period, c, Eigen::ArrayXd::Zero(1));
}

PeriodicSignal PeriodicSignal::harmonic(double period, int mode, double cos_amp, double sin_amp,
                                        double offset) {
    if (mode < 1) throw std::invalid_argument("PeriodicSignal::harmonic: mode must be >= 1");
    Eigen::ArrayXd c = Eigen::ArrayXd::Zero(mode + 1), s = Eigen::ArrayXd::Zero(mode + 1);
    c[0] = offset;
    c[mode] = cos_amp;
    s[mode] = sin_amp;
    return PeriodicSignal(period, c, s);
}

int PeriodicSignal::max_derivative_order() const {
    int cap = std::numeric_limits<int>::max();
    for (const SignalTerm& term : terms_) cap = std::min(cap, term_max_order(term));
    return cap;
}

double PeriodicSignal::eval(double t, int k) const {
    if (k < 0 || k > max_derivative_order())
        throw std::domain_error("PeriodicSignal::eval: unsupported derivative order");
    const double tw = wrap(t, period_);
    const double w0 = 2.0 * M_PI / period_;
    double acc = (k == 0) ? cos_[0] : 0.0;
    for (int m = 1; m < cos_.size(); ++m) {
        double A = cos_[m], B = sin_[m];
        if (A == 0.0 && B == 0.0) continue;
        for (int i = 0; i < k; ++i) {  // (A,B) -> derivative coefficients
            const double A2 = w0 * m * B;
            B = -w0 * m * A;
            A = A2;
        }
        const double ang = w0 * m * tw;
        acc += A * std::cos(ang) + B * std::sin(ang);
    }
    for (const SignalTerm& term : terms_) acc += term_eval(term, tw, k);
    return acc;
}

PeriodicSignal PeriodicSignal::derivative() const {
    const double w0 = 2.0 * M_PI / period_;
    Eigen::ArrayXd c = Eigen::ArrayXd::Zero(cos_.size()), s = Eigen::ArrayXd::Zero(cos_.size());
    for (int m = 1; m < cos_.size(); ++m) {
        c[m] = w0 * m * sin_[m];
        s[m] = -w0 * m * cos_[m];
    }
    std::vector<SignalTerm> terms = terms_;
    for (SignalTerm& term : terms)
        std::visit([](auto& tm) { tm.derivative_shift += 1; }, term);
    return PeriodicSignal(period_, std::move(c), std::move(s), std::move(terms));
}

PeriodicSignal PeriodicSignal::shifted(double dt) const {
    const double w0 = 2.0 * M_PI / period_;
    Eigen::ArrayXd c = cos_, s = sin_;
    for (int m = 1; m < cos_.size(); ++m) {
        const double ph = w0 * m * dt;
        const double cp = std::cos(ph), sp = std::sin(ph);
        c[m] = cos_[m] * cp + sin_[m] * sp;
        s[m] = sin_[m] * cp - cos_[m] * sp;
    }
    std::vector<SignalTerm> terms = terms_;
    for (SignalTerm& term : terms) {
        if (auto* p = std::get_if<PulseSumTerm>(&term)) p->phase = wrap(p->phase - dt, period_);
        if (auto* q = std::get_if<SlopeTerm>(&term)) q->time_offset += dt;
    }
    return PeriodicSignal(period_, std::move(c), std::move(s), std::move(terms));
}

PeriodicSignal PeriodicSignal::scaled(double factor) const {
    std::vector<SignalTerm> terms = terms_;
    for (SignalTerm& term : terms)
        std::visit([&](auto& tm) { tm.scale *= factor; }, term);
    return PeriodicSignal(period_, cos_ * factor, sin_ * factor, std::move(terms));
}

PeriodicSignal PeriodicSignal::with_term(SignalTerm term) const {
    std::vector<SignalTerm> terms = terms_;
    terms.push_back(std::move(term));
    return PeriodicSignal(period_, cos_, sin_, std::move(terms));
}

double PeriodicSignal::periodicity_residual(int k) const {
    double acc = 0.0;
    for (const SignalTerm& term : terms_)
        if (const auto* q = std::get_if<SlopeTerm>(&term)) acc += q->end_mismatch(k);
    return acc;
}

namespace {

PeriodicSignal combine(const PeriodicSignal& a, const PeriodicSignal& b, double sign) {
    if (std::fabs(a.period() - b.period()) > 1e-12 * a.period())
        throw std::invalid_argument("PeriodicSignal: arithmetic requires equal periods");
    const Eigen::Index n = std::max(a.cos_amps().size(), b.cos_amps().size());
    Eigen::ArrayXd c = Eigen::ArrayXd::Zero(n), s = Eigen::ArrayXd::Zero(n);
    c.head(a.cos_amps().size()) = a.cos_amps();
    s.head(a.sin_amps().size()) = a.sin_amps();
    c.head(b.cos_amps().size()) += sign * b.cos_amps();
    s.head(b.sin_amps().size()) += sign * b.sin_amps();
    std::vector<SignalTerm> terms = a.terms();
    for (SignalTerm term : b.terms()) {
        std::visit([&](auto& tm) { tm.scale *= sign; }, term);
        terms.push_back(std::move(term));
    }
    return PeriodicSignal(a.period(), std::move(c), std::move(s), std::move(terms));
}

}  // namespace

PeriodicSignal operator+(const PeriodicSignal& a, const PeriodicSignal& b) {
    return combine(a, b, 1.0);
}

PeriodicSignal operator-(const PeriodicSignal& a, const PeriodicSignal& b) {
    return combine(a, b, -1.0);
}

SignalDistance distance_r(const PeriodicSignal& a, const PeriodicSignal& b, int r, int grid) {
    if (r < 0) throw std::invalid_argument("distance_r: order must be nonnegative");
    if (r > a.max_derivative_order() || r > b.max_derivative_order())
        throw std::domain_error("distance_r: order beyond supported smoothness");
    const double Ta = a.period(), Tb = b.period();
    double sup = 0.0;
    for (int k = 0; k <= r; ++k) {
        auto diff = [&](double s) { return std::fabs(a.eval(s * Ta, k) - b.eval(s * Tb, k)); };
        sup = std::max(sup, detail::circle_sup(diff, 1.0, grid).second);
    }
    return SignalDistance{r, sup + std::fabs(Ta - Tb), grid};
}

double norm_r(const PeriodicSignal& o, int r, int grid) {
    if (r < 0) throw std::invalid_argument("norm_r: order must be nonnegative");
    if (r > o.max_derivative_order())
        throw std::domain_error("norm_r: order beyond supported smoothness");
    double sup = 0.0;
    const double T = o.period();
    for (int k = 0; k <= r; ++k) {
        auto f = [&](double t) { return std::fabs(o.eval(t, k)); };
        sup = std::max(sup, detail::circle_sup(f, T, grid).second);
    }
    return sup;
}

PeriodicSignal from_samples(double period, const std::vector<double>& samples, int max_modes) {
    checked_period(period);
    const int M = static_cast<int>(samples.size());
    if (M == 0) throw std::invalid_argument("from_samples: no samples given");
    if (max_modes < 0) throw std::invalid_argument("from_samples: max_modes must be nonnegative");
    for (double v : samples)
        if (!std::isfinite(v)) throw std::invalid_argument("from_samples: non-finite sample");
    if (M < 2 * max_modes + 1)
        throw std::invalid_argument(
            "from_samples: underdetermined, need at least 2*max_modes+1 uniform samples");

    Eigen::ArrayXd c = Eigen::ArrayXd::Zero(max_modes + 1), s = Eigen::ArrayXd::Zero(max_modes + 1);
    for (int i = 0; i < M; ++i) c[0] += samples[static_cast<std::size_t>(i)];
    c[0] /= M;
    for (int k = 1; k <= max_modes; ++k) {
        double ak = 0.0, bk = 0.0;
        for (int i = 0; i < M; ++i) {
            const double ang = 2.0 * M_PI * k * i / M;
            ak += samples[static_cast<std::size_t>(i)] * std::cos(ang);
            bk += samples[static_cast<std::size_t>(i)] * std::sin(ang);
        }
        c[k] = 2.0 * ak / M;
        s[k] = 2.0 * bk / M;
    }
    PeriodicSignal out(period, std::move(c), std::move(s));

    double scale = 1.0, residual = 0.0;
    for (double v : samples) scale = std::max(scale, std::fabs(v));
    for (int i = 0; i < M; ++i)
        residual = std::max(residual, std::fabs(out.eval(period * i / M) -
                                                samples[static_cast<std::size_t>(i)]));
    if (residual > 1e-9 * scale)
        throw std::runtime_error(
            "from_samples: aliasing, sample content above the requested band "
            "(max round-trip residual " + std::to_string(residual) + ")");
    return out;
}

}  // namespace delaycert
