#include "delaycert/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace delaycert {

namespace {

nlohmann::json array_from(const Eigen::ArrayXd& a) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.size(); ++i) out.push_back(a[i]);
    return out;
}

Eigen::ArrayXd array_to(const nlohmann::json& j) {
    Eigen::ArrayXd a(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& v : j) a[i++] = v.get<double>();
    return a;
}

void expect_schema(const nlohmann::json& j, const std::string& name) {
    if (!j.is_object() || !j.contains("schema") || j["schema"].get<std::string>() != name) {
        throw std::runtime_error("expected JSON document with schema \"" + name + "\"");
    }
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::certified: return "certified";
        case Verdict::refuted: return "refuted";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::string witness_name(WitnessKind k) {
    switch (k) {
        case WitnessKind::none: return "none";
        case WitnessKind::injectivity: return "injectivity";
        case WitnessKind::immersion: return "immersion";
    }
    return "none";
}

void dump_value(const nlohmann::json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * depth), ' ');
    const std::string pad_in(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) { out += "{}"; return; }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                out += nlohmann::json(it.key()).dump();
                out += ": ";
                dump_value(it.value(), out, indent, depth + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) { out += "[]"; return; }
            out += "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                dump_value(v, out, indent, depth + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double d = j.get<double>();
            if (!std::isfinite(d))
                throw std::runtime_error("dump_deterministic: non-finite number in document");
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", d);
            out += buf;
            return;
        }
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

nlohmann::json signal_to_json(const PeriodicSignal& o) {
    nlohmann::json j;
    j["schema"] = "delaycert/signal/v1";
    j["period"] = o.period();
    const Eigen::ArrayXd& ca = o.cos_amps();
    const Eigen::ArrayXd& sa = o.sin_amps();
    const Eigen::Index n = std::max(ca.size(), sa.size());
    nlohmann::json modes = nlohmann::json::array();
    for (Eigen::Index k = 0; k < n; ++k)
        modes.push_back({k < ca.size() ? ca[k] : 0.0, k < sa.size() ? sa[k] : 0.0});
    j["modes"] = modes;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& term : o.terms()) {
        nlohmann::json t;
        if (const auto* pulse = std::get_if<PulseSumTerm>(&term)) {
            t["kind"] = "pulse_sum";
            t["h"] = pulse->h;
            t["phase"] = pulse->phase;
            t["scale"] = pulse->scale;
            t["derivative_shift"] = pulse->derivative_shift;
            t["coeffs"] = array_from(pulse->coeffs);
        } else if (const auto* slope = std::get_if<SlopeTerm>(&term)) {
            t["kind"] = "slope";
            t["arc_start"] = slope->arc.start;
            t["arc_width"] = slope->arc.width;
            t["epsilon"] = slope->epsilon;
            t["amp"] = slope->amp;
            t["scale"] = slope->scale;
            t["time_offset"] = slope->time_offset;
            t["derivative_shift"] = slope->derivative_shift;
        }
        terms.push_back(t);
    }
    j["bumps"] = terms;
    return j;
}

PeriodicSignal signal_from_json(const nlohmann::json& j) {
    expect_schema(j, "delaycert/signal/v1");
    const double period = j.at("period").get<double>();
    const auto& modes = j.at("modes");
    Eigen::ArrayXd ca = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(modes.size()));
    Eigen::ArrayXd sa = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(modes.size()));
    for (Eigen::Index k = 0; k < ca.size(); ++k) {
        const auto& pair = modes[static_cast<std::size_t>(k)];
        ca[k] = pair.at(0).get<double>();
        sa[k] = pair.at(1).get<double>();
    }
    std::vector<SignalTerm> terms;
    for (const auto& t : j.at("bumps")) {
        const std::string kind = t.at("kind").get<std::string>();
        if (kind == "pulse_sum") {
            PulseSumTerm pulse;
            pulse.period = period;
            pulse.h = t.at("h").get<double>();
            pulse.phase = t.at("phase").get<double>();
            pulse.scale = t.at("scale").get<double>();
            pulse.derivative_shift = t.at("derivative_shift").get<int>();
            pulse.coeffs = array_to(t.at("coeffs"));
            terms.emplace_back(pulse);
        } else if (kind == "slope") {
            SlopeTerm slope;
            slope.arc = CircleArc(t.at("arc_start").get<double>(), t.at("arc_width").get<double>(),
                                  period);
            slope.epsilon = t.at("epsilon").get<double>();
            slope.amp = t.at("amp").get<double>();
            slope.scale = t.at("scale").get<double>();
            slope.time_offset = t.at("time_offset").get<double>();
            slope.derivative_shift = t.at("derivative_shift").get<int>();
            terms.emplace_back(slope);
        } else {
            throw std::runtime_error("signal_from_json: unknown term kind \"" + kind + "\"");
        }
    }
    return PeriodicSignal(period, std::move(ca), std::move(sa), std::move(terms));
}

nlohmann::json orbit_to_json(const PeriodicOrbit& p) {
    nlohmann::json j;
    j["schema"] = "delaycert/orbit/v1";
    j["period"] = p.period();
    j["dim"] = p.dimension();
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : p.components()) comps.push_back(signal_to_json(c));
    j["components"] = comps;
    return j;
}

PeriodicOrbit orbit_from_json(const nlohmann::json& j) {
    expect_schema(j, "delaycert/orbit/v1");
    std::vector<PeriodicSignal> comps;
    for (const auto& c : j.at("components")) comps.push_back(signal_from_json(c));
    return PeriodicOrbit(std::move(comps));
}

nlohmann::json profile_to_json(const MonotonicityProfile& prof) {
    nlohmann::json j;
    j["schema"] = "delaycert/profile/v1";
    j["period"] = prof.period;
    j["points"] = prof.points;
    j["second_derivatives"] = prof.second_derivatives;
    j["tangencies"] = prof.tangencies;
    j["regular"] = prof.regular;
    j["mu"] = prof.points.empty() ? 0.0 : prof.mu();
    return j;
}

nlohmann::json certificate_to_json(const EmbeddingCertificate& cert) {
    nlohmann::json j;
    j["schema"] = "delaycert/certificate/v1";
    j["verdict"] = verdict_name(cert.verdict);
    j["tau"] = cert.tau;
    j["injectivity_margin"] = cert.injectivity_margin;
    j["immersion_margin"] = cert.immersion_margin;
    j["near_band"] = cert.near_band;
    j["near_analytic"] = cert.near_analytic;
    j["near_ratio_margin"] = cert.near_ratio_margin;
    j["mu"] = cert.mu;
    j["profile_regular"] = cert.profile_regular;
    j["witness_kind"] = witness_name(cert.witness_kind);
    if (cert.witness) {
        j["witness"] = {{"t1", cert.witness->t1}, {"t2", cert.witness->t2},
                        {"value", cert.witness->value}};
    } else {
        j["witness"] = nullptr;
    }
    j["certify_tol"] = cert.certify_tol;
    j["refute_tol"] = cert.refute_tol;
    j["pair_grid"] = cert.pair_grid;
    j["inconclusive_reason"] = cert.inconclusive_reason;
    j["warnings"] = cert.warnings;
    return j;
}

nlohmann::json tube_to_json(const TubeGeometry& tube) {
    nlohmann::json j;
    j["schema"] = "delaycert/tube/v1";
    j["m"] = tube.m;
    j["m_star"] = tube.m_star;
    j["M"] = tube.M;
    j["r_frak"] = tube.r_frak;
    j["M_star"] = tube.M_star;
    j["Delta"] = tube.Delta;
    j["Delta_lower_bound"] = tube.Delta_lower_bound;
    j["delta"] = tube.delta;
    j["uniform_epsilon"] = tube.uniform_epsilon;
    j["grid"] = tube.grid;
    return j;
}

TubeGeometry tube_from_json(const nlohmann::json& j) {
    expect_schema(j, "delaycert/tube/v1");
    TubeGeometry tube;
    tube.m = j.at("m").get<double>();
    tube.m_star = j.at("m_star").get<double>();
    tube.M = j.at("M").get<double>();
    tube.r_frak = j.at("r_frak").get<double>();
    tube.M_star = j.at("M_star").get<double>();
    tube.Delta = j.at("Delta").get<double>();
    tube.Delta_lower_bound = j.at("Delta_lower_bound").get<double>();
    tube.delta = j.at("delta").get<double>();
    tube.uniform_epsilon = j.at("uniform_epsilon").get<double>();
    tube.grid = j.at("grid").get<int>();
    return tube;
}

nlohmann::json floquet_to_json(const FloquetReport& report) {
    nlohmann::json j;
    j["schema"] = "delaycert/floquet/v1";
    nlohmann::json mults = nlohmann::json::array();
    for (Eigen::Index i = 0; i < report.multipliers.size(); ++i) {
        mults.push_back({{"re", report.multipliers[i].real()},
                         {"im", report.multipliers[i].imag()},
                         {"abs", std::abs(report.multipliers[i])}});
    }
    j["multipliers"] = mults;
    j["trivial_index"] = report.trivial_index;
    j["trivial_defect"] = report.trivial_defect;
    j["hyperbolic"] = report.hyperbolic;
    j["orbit_residual"] = report.orbit_residual;
    j["liouville_error"] = report.liouville_error;
    return j;
}

nlohmann::json surgery_report_to_json(const SurgeryReport& report) {
    nlohmann::json j;
    j["schema"] = "delaycert/surgery-report/v1";
    j["on_orbit_residual"] = report.on_orbit_residual;
    j["sup_delta_f"] = report.sup_delta_f;
    j["c0"] = report.c0;
    j["c1"] = report.c1;
    j["closure_error"] = report.closure_error;
    j["exterior_max"] = report.exterior_max;
    j["exterior_tested"] = report.exterior_tested;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.scaling) {
        rows.push_back({{"scale", row.scale},
                        {"shift_distance", row.shift_distance},
                        {"sup_delta_f", row.sup_delta_f}});
    }
    j["scaling"] = rows;
    return j;
}

VectorField make_field(const FieldSpec& spec) {
    if (spec.kind == "lorenz") return lorenz_field(spec.sigma, spec.rho, spec.beta);
    if (spec.kind == "hopf3d") return hopf3d_field();
    if (spec.kind == "linear") return linear_field(spec.matrix);
    throw std::runtime_error("make_field: unknown field kind \"" + spec.kind + "\"");
}

nlohmann::json field_spec_to_json(const FieldSpec& spec) {
    nlohmann::json j;
    j["schema"] = "delaycert/field/v1";
    j["kind"] = spec.kind;
    if (spec.kind == "lorenz") {
        j["sigma"] = spec.sigma;
        j["rho"] = spec.rho;
        j["beta"] = spec.beta;
    } else if (spec.kind == "linear") {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < spec.matrix.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < spec.matrix.cols(); ++c) row.push_back(spec.matrix(r, c));
            rows.push_back(row);
        }
        j["matrix"] = rows;
    }
    return j;
}

FieldSpec field_spec_from_json(const nlohmann::json& j) {
    expect_schema(j, "delaycert/field/v1");
    FieldSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    if (spec.kind == "lorenz") {
        spec.sigma = j.at("sigma").get<double>();
        spec.rho = j.at("rho").get<double>();
        spec.beta = j.at("beta").get<double>();
    } else if (spec.kind == "linear") {
        const auto& rows = j.at("matrix");
        const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
        spec.matrix.resize(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c)
                spec.matrix(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                                        .get<double>();
    }
    return spec;
}

std::string dump_deterministic(const nlohmann::json& j, int indent) {
    std::string out;
    dump_value(j, out, indent, 0);
    out += "\n";
    return out;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << dump_deterministic(j);
    if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << "\r\n";
    char buf[40];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out << buf;
        }
        out << "\r\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) { numeric = false; break; }
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) { first = false; continue; }  // header row
            throw std::runtime_error("read_csv: non-numeric cell in " + path);
        }
        first = false;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace delaycert
