#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delaycert/delay.hpp"
#include "delaycert/json_io.hpp"
#include "delaycert/monotonicity.hpp"
#include "delaycert/orbit.hpp"
#include "delaycert/orbit_finder.hpp"
#include "delaycert/perturb.hpp"
#include "delaycert/signal.hpp"
#include "delaycert/surgery.hpp"

// Exit codes. CLI11 reserves >= 100 for parse errors; everything here stays
// below that. certify reports its verdict through the code so scripts can
// branch without parsing JSON; pipeline gives each stage its own code so a
// failure names the stage.
namespace exit_code {
constexpr int ok = 0;
constexpr int refuted = 2;
constexpr int inconclusive = 3;
constexpr int repair_failed = 4;
constexpr int orbit_failed = 5;
constexpr int surgery_failed = 6;
constexpr int eval_failed = 7;
constexpr int pipeline_find = 10;
constexpr int pipeline_project = 11;
constexpr int pipeline_certify = 12;
constexpr int pipeline_repair = 13;
constexpr int pipeline_surgery = 14;
}  // namespace exit_code

namespace {

namespace dc = delaycert;

constexpr const char* kVersion = "0.1.0";

Eigen::VectorXd parse_vector(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw CLI::ValidationError("not a comma-separated vector: " + text);
    }
    if (vals.empty()) throw CLI::ValidationError("empty vector: " + text);
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

double resolve_tau(const std::string& tau_text, const dc::PeriodicSignal& o) {
    if (tau_text == "auto") return dc::auto_tau(dc::critical_points(o));
    std::size_t used = 0;
    const double tau = std::stod(tau_text, &used);
    if (used != tau_text.size() || tau <= 0.0)
        throw CLI::ValidationError("--tau expects a positive number or 'auto'");
    return tau;
}

nlohmann::json manifest_skeleton(const std::string& command) {
    nlohmann::json m;
    m["schema"] = "delaycert/manifest/v1";
    m["version"] = kVersion;
    m["command"] = command;
    m["parameters"] = nlohmann::json::object();
    m["artifacts"] = nlohmann::json::object();
    m["status"] = "ok";
    return m;
}

void finish_manifest(nlohmann::json& m, const std::string& path, int code,
                     const std::string& failed_stage = "") {
    if (code != exit_code::ok && code != exit_code::refuted && code != exit_code::inconclusive)
        m["status"] = "failed";
    if (!failed_stage.empty()) m["failed_stage"] = failed_stage;
    m["exit_code"] = code;
    dc::write_json_file(path, m);
}

void emit_delay_csv(const std::string& path, const dc::PeriodicSignal& o, double tau, int samples) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(samples));
    const double T = o.period();
    for (int i = 0; i < samples; ++i) {
        const double t = T * static_cast<double>(i) / samples;
        const Eigen::Vector3d v = dc::delay_vector(o, t, tau);
        rows.push_back({t, v[0], v[1], v[2]});
    }
    dc::write_csv(path, {"t", "x", "y", "z"}, rows);
}

void emit_orbit_csv(const std::string& path, const dc::PeriodicOrbit& p, int samples) {
    std::vector<std::string> header{"t"};
    for (int c = 0; c < p.dimension(); ++c) header.push_back("x" + std::to_string(c + 1));
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const double t = p.period() * static_cast<double>(i) / samples;
        const Eigen::VectorXd x = p.point(t);
        std::vector<double> row{t};
        for (Eigen::Index c = 0; c < x.size(); ++c) row.push_back(x[c]);
        rows.push_back(std::move(row));
    }
    dc::write_csv(path, header, rows);
}

dc::PeriodicSignal project_signal(const dc::PeriodicOrbit& p, const Eigen::VectorXd& a) {
    if (a.size() != p.dimension())
        throw std::invalid_argument("observation vector dimension does not match the orbit");
    dc::PeriodicSignal o = p.components()[0].scaled(a[0]);
    for (Eigen::Index i = 1; i < a.size(); ++i)
        o = o + p.components()[static_cast<std::size_t>(i)].scaled(a[i]);
    return o;
}

// Shared field selection: a named builtin with parameters, or a JSON spec
// file for the linear case.
struct FieldArgs {
    std::string name;
    double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
    std::string spec_path;

    void attach(CLI::App* cmd, bool required) {
        auto* f = cmd->add_option("--field", name, "builtin field: lorenz or hopf3d");
        cmd->add_option("--sigma", sigma, "lorenz sigma")->capture_default_str();
        cmd->add_option("--rho", rho, "lorenz rho")->capture_default_str();
        cmd->add_option("--beta", beta, "lorenz beta")->capture_default_str();
        auto* j = cmd->add_option("--field-json", spec_path, "field spec JSON (for linear fields)");
        f->excludes(j);
        if (required) {
            // one of the two must be present; checked in resolve()
            cmd->callback([this]() {
                if (name.empty() && spec_path.empty())
                    throw CLI::RequiredError("--field or --field-json");
            });
        }
    }

    dc::FieldSpec resolve() const {
        if (!spec_path.empty()) return dc::field_spec_from_json(dc::read_json_file(spec_path));
        dc::FieldSpec spec;
        spec.kind = name;
        spec.sigma = sigma;
        spec.rho = rho;
        spec.beta = beta;
        return spec;
    }
};

struct OrbitSearchArgs {
    std::string start_text;
    double period_guess = 0.0;
    double settle = 30.0;
    double scan = 60.0;
    double min_period = 0.0;  // 0 = per-field default
    double threshold = 1e-2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--start", start_text, "initial point 'x,y,...' (skips the default seed)");
        cmd->add_option("--period-guess", period_guess,
                        "period estimate; with --start skips the recurrence scan");
        cmd->add_option("--settle", settle, "transient time before recurrence scanning")
            ->capture_default_str();
        cmd->add_option("--scan", scan, "recurrence scan duration")->capture_default_str();
        cmd->add_option("--min-period", min_period,
                        "shortest period considered (default 1 for lorenz, 4 for hopf3d)");
        cmd->add_option("--recurrence-threshold", threshold, "nearest-return acceptance")
            ->capture_default_str();
    }

    dc::PeriodicOrbit run(const dc::FieldSpec& spec, const dc::VectorField& field) const {
        Eigen::VectorXd start;
        if (!start_text.empty()) {
            start = parse_vector(start_text);
        } else if (spec.kind == "lorenz") {
            start = Eigen::Vector3d(1.0, 1.0, 1.0);
        } else if (spec.kind == "hopf3d") {
            start = Eigen::Vector3d(1.0, 0.0, 0.5);
        } else {
            throw std::invalid_argument("--start is required for this field");
        }

        Eigen::VectorXd seed_point = start;
        double T_est = period_guess;
        if (!(period_guess > 0.0) || start_text.empty()) {
            dc::RecurrenceOptions ropts;
            ropts.settle_time = settle;
            ropts.scan_time = scan;
            ropts.threshold = threshold;
            ropts.min_period = min_period > 0.0 ? min_period : (spec.kind == "hopf3d" ? 4.0 : 1.0);
            const dc::RecurrenceSeed seed = dc::recurrence_seed(field, start, ropts);
            seed_point = seed.point;
            T_est = seed.period;
        }

        dc::ShootingProblem problem;
        problem.field = field;
        problem.section.point = seed_point;
        problem.section.normal = field.eval(seed_point).normalized();
        problem.guess = seed_point;
        problem.period_guess = T_est;
        return dc::find_orbit(problem);
    }
};

int cmd_certify(const std::string& in, const std::string& out, const std::string& csv,
                int csv_samples, const std::string& tau_text, const dc::CertifyOptions& copts,
                const std::string& manifest_path) {
    nlohmann::json m = manifest_skeleton("certify");
    const dc::PeriodicSignal o = dc::signal_from_json(dc::read_json_file(in));
    const double tau = resolve_tau(tau_text, o);
    m["parameters"] = {{"input", in}, {"tau", tau}, {"tau_flag", tau_text},
                       {"certify_rel_tol", copts.certify_rel_tol},
                       {"refute_rel_tol", copts.refute_rel_tol},
                       {"certify_abs_tol", copts.certify_abs_tol},
                       {"refute_abs_tol", copts.refute_abs_tol},
                       {"pair_grid", copts.pair_grid},
                       {"immersion_grid", copts.immersion_grid}};

    const dc::EmbeddingCertificate cert = dc::certify(o, dc::DelayParameters{tau}, copts);
    dc::write_json_file(out, dc::certificate_to_json(cert));
    m["artifacts"]["certificate"] = out;
    if (!csv.empty()) {
        emit_delay_csv(csv, o, tau, csv_samples);
        m["artifacts"]["curve_csv"] = csv;
    }

    int code = exit_code::ok;
    if (cert.verdict == dc::Verdict::refuted) code = exit_code::refuted;
    if (cert.verdict == dc::Verdict::inconclusive) code = exit_code::inconclusive;

    std::cout << "verdict: " << (code == 0 ? "certified" : code == 2 ? "refuted" : "inconclusive")
              << "  tau=" << tau << "  injectivity_margin=" << cert.injectivity_margin
              << "  immersion_margin=" << cert.immersion_margin << "\n";
    if (cert.witness)
        std::cout << "witness: t1=" << cert.witness->t1 << " t2=" << cert.witness->t2
                  << " value=" << cert.witness->value << "\n";

    finish_manifest(m, manifest_path, code);
    return code;
}

int cmd_repair(const std::string& in, const std::string& out, const std::string& cert_out,
               const std::string& tau_text, double budget, int max_iters, std::uint64_t seed,
               int r, const std::string& manifest_path) {
    nlohmann::json m = manifest_skeleton("repair");
    const dc::PeriodicSignal o_in = dc::signal_from_json(dc::read_json_file(in));

    // Regularity first: repair requires a regular profile, so spend up to
    // half the budget making one, then hand the remainder to the pulse loop.
    dc::RegularizeOptions ropts;
    ropts.budget = budget / 2.0;
    ropts.r = r;
    const dc::RegularizeResult reg = dc::regularize(o_in, ropts);
    const double tau = resolve_tau(tau_text, reg.signal);

    dc::RepairOptions opts;
    opts.budget = reg.changed ? budget - reg.distance : budget;
    opts.r = r;
    opts.max_iters = max_iters;
    opts.seed = seed;
    const dc::RepairResult res = dc::repair(reg.signal, dc::DelayParameters{tau}, opts);

    m["parameters"] = {{"input", in}, {"tau", tau}, {"tau_flag", tau_text}, {"budget", budget},
                       {"max_iters", max_iters}, {"seed", seed}, {"r", r},
                       {"regularized", reg.changed}, {"regularize_distance", reg.distance},
                       {"repair_budget", opts.budget}};

    dc::write_json_file(out, dc::signal_to_json(res.signal));
    dc::write_json_file(cert_out, dc::certificate_to_json(res.certificate));
    m["artifacts"]["signal"] = out;
    m["artifacts"]["certificate"] = cert_out;
    m["result"] = {{"success", res.success}, {"iterations", res.iterations},
                   {"accepted", res.accepted}, {"rejected", res.rejected},
                   {"distance", res.distance + reg.distance},
                   {"coefficient_cap", res.coefficient_cap}};

    std::cout << (res.success ? "repaired" : "repair failed") << "  iterations="
              << res.iterations << "  distance=" << res.distance + reg.distance
              << "  injectivity_margin=" << res.certificate.injectivity_margin << "\n";

    const int code = res.success ? exit_code::ok : exit_code::repair_failed;
    finish_manifest(m, manifest_path, code, res.success ? "" : "repair");
    return code;
}

int cmd_find_orbit(const FieldArgs& fargs, const OrbitSearchArgs& sargs, const std::string& out,
                   const std::string& floquet_out, const std::string& csv, int csv_samples,
                   const std::string& manifest_path) {
    nlohmann::json m = manifest_skeleton("find-orbit");
    const dc::FieldSpec spec = fargs.resolve();
    const dc::VectorField field = dc::make_field(spec);
    m["parameters"] = {{"field", dc::field_spec_to_json(spec)}, {"settle", sargs.settle},
                       {"scan", sargs.scan}, {"threshold", sargs.threshold}};

    int code = exit_code::ok;
    try {
        const dc::PeriodicOrbit orbit = sargs.run(spec, field);
        const dc::FloquetReport rep = dc::floquet(field, orbit);
        dc::write_json_file(out, dc::orbit_to_json(orbit));
        dc::write_json_file(floquet_out, dc::floquet_to_json(rep));
        m["artifacts"]["orbit"] = out;
        m["artifacts"]["floquet"] = floquet_out;
        if (!csv.empty()) {
            emit_orbit_csv(csv, orbit, csv_samples);
            m["artifacts"]["orbit_csv"] = csv;
        }
        std::cout << "orbit found  period=" << orbit.period()
                  << "  residual=" << rep.orbit_residual
                  << "  hyperbolic=" << (rep.hyperbolic ? "yes" : "no") << "\n";
    } catch (const std::exception& e) {
        std::cerr << "find-orbit: " << e.what() << "\n";
        code = exit_code::orbit_failed;
    }
    finish_manifest(m, manifest_path, code, code ? "find-orbit" : "");
    return code;
}

// The service manifest is self-contained: everything needed to rebuild f'
// exactly (field spec, base orbit, both signals, observation vector, tube).
nlohmann::json surgery_manifest(const dc::FieldSpec& spec, const dc::PeriodicOrbit& p,
                                const dc::PeriodicSignal& o_old, const dc::PeriodicSignal& o_new,
                                const Eigen::VectorXd& a, const dc::TubeGeometry& tube) {
    nlohmann::json j;
    j["schema"] = "delaycert/surgery-manifest/v1";
    j["version"] = kVersion;
    j["field"] = dc::field_spec_to_json(spec);
    j["orbit"] = dc::orbit_to_json(p);
    j["signal_old"] = dc::signal_to_json(o_old);
    j["signal_new"] = dc::signal_to_json(o_new);
    nlohmann::json av = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.size(); ++i) av.push_back(a[i]);
    j["a"] = av;
    j["tube"] = dc::tube_to_json(tube);
    return j;
}

dc::PerturbedField field_from_manifest(const nlohmann::json& j, dc::FieldSpec* spec_out = nullptr) {
    if (!j.contains("schema") || j["schema"] != "delaycert/surgery-manifest/v1")
        throw std::runtime_error("not a surgery manifest");
    const dc::FieldSpec spec = dc::field_spec_from_json(j.at("field"));
    if (spec_out) *spec_out = spec;
    const dc::VectorField f = dc::make_field(spec);
    const dc::PeriodicOrbit p = dc::orbit_from_json(j.at("orbit"));
    const dc::PeriodicSignal o_old = dc::signal_from_json(j.at("signal_old"));
    const dc::PeriodicSignal o_new = dc::signal_from_json(j.at("signal_new"));
    Eigen::VectorXd a(static_cast<Eigen::Index>(j.at("a").size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = j.at("a")[static_cast<std::size_t>(i)];
    const dc::TubeGeometry tube = dc::tube_from_json(j.at("tube"));
    const dc::PeriodicOrbit p_new = dc::lift_signal(p, o_old, o_new, a);
    return dc::build_perturbed_field(f, p_new, dc::epsilon_terms(f, p, p_new), tube);
}

int cmd_surgery(const FieldArgs& fargs, const std::string& orbit_path,
                const std::string& signal_path, const std::string& a_text, const std::string& out,
                const std::string& report_out, const dc::SurgeryVerifyOptions& vopts,
                const std::string& manifest_path) {
    nlohmann::json m = manifest_skeleton("surgery");
    int code = exit_code::ok;
    try {
        const dc::FieldSpec spec = fargs.resolve();
        const dc::VectorField field = dc::make_field(spec);
        const dc::PeriodicOrbit p = dc::orbit_from_json(dc::read_json_file(orbit_path));
        const dc::PeriodicSignal o_new = dc::signal_from_json(dc::read_json_file(signal_path));
        const Eigen::VectorXd a = parse_vector(a_text);
        const dc::PeriodicSignal o_old = project_signal(p, a);

        m["parameters"] = {{"field", dc::field_spec_to_json(spec)}, {"orbit", orbit_path},
                           {"signal", signal_path}, {"a", a_text}, {"seed", vopts.seed},
                           {"tube_samples", vopts.tube_samples},
                           {"exterior_points", vopts.exterior_points},
                           {"sweep_levels", vopts.sweep_levels}};

        const dc::PeriodicOrbit p_new = dc::lift_signal(p, o_old, o_new, a);
        const dc::TubeGeometry tube = dc::tube_constants(p_new);
        const dc::SurgeryReport rep = dc::verify_surgery(field, p, o_old, o_new, a, tube, vopts);

        dc::write_json_file(out, surgery_manifest(spec, p, o_old, o_new, a, tube));
        dc::write_json_file(report_out, dc::surgery_report_to_json(rep));
        m["artifacts"]["manifest"] = out;
        m["artifacts"]["report"] = report_out;
        std::cout << "surgery built  on_orbit_residual=" << rep.on_orbit_residual
                  << "  sup_delta_f=" << rep.sup_delta_f
                  << "  closure_error=" << rep.closure_error
                  << "  exterior_max=" << rep.exterior_max << "\n";
    } catch (const std::exception& e) {
        std::cerr << "surgery: " << e.what() << "\n";
        code = exit_code::surgery_failed;
    }
    finish_manifest(m, manifest_path, code, code ? "surgery" : "");
    return code;
}

int cmd_eval_field(const std::string& manifest_in, const std::string& points_path,
                   const std::string& out) {
    try {
        const dc::PerturbedField field = field_from_manifest(dc::read_json_file(manifest_in));
        const auto points = dc::read_csv(points_path);
        const int d = field.dimension();
        std::vector<std::string> header;
        for (int c = 0; c < d; ++c) header.push_back("x" + std::to_string(c + 1));
        for (int c = 0; c < d; ++c) header.push_back("f" + std::to_string(c + 1));
        for (int c = 0; c < d; ++c) header.push_back("df" + std::to_string(c + 1));
        std::vector<std::vector<double>> rows;
        rows.reserve(points.size());
        for (const auto& pt : points) {
            if (static_cast<int>(pt.size()) < d)
                throw std::runtime_error("points row has fewer columns than the field dimension");
            Eigen::VectorXd x(d);
            for (int c = 0; c < d; ++c) x[c] = pt[static_cast<std::size_t>(c)];
            const Eigen::VectorXd df = field.delta_f(x);
            const Eigen::VectorXd fx = field.base().eval(x) + df;
            std::vector<double> row;
            for (int c = 0; c < d; ++c) row.push_back(x[c]);
            for (int c = 0; c < d; ++c) row.push_back(fx[c]);
            for (int c = 0; c < d; ++c) row.push_back(df[c]);
            rows.push_back(std::move(row));
        }
        dc::write_csv(out, header, rows);
        std::cout << "evaluated " << rows.size() << " points\n";
        return exit_code::ok;
    } catch (const std::exception& e) {
        std::cerr << "eval-field: " << e.what() << "\n";
        return exit_code::eval_failed;
    }
}

int cmd_pipeline(const FieldArgs& fargs, const OrbitSearchArgs& sargs, const std::string& a_text,
                 const std::string& tau_text, double budget, int max_iters, std::uint64_t seed,
                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

    nlohmann::json m = manifest_skeleton("pipeline");
    nlohmann::json stages = nlohmann::json::array();
    const std::string manifest_path = at("pipeline_manifest.json");
    const auto fail = [&](int code, const std::string& stage, const std::string& what) {
        std::cerr << "pipeline stage '" << stage << "' failed: " << what << "\n";
        stages.push_back({{"stage", stage}, {"status", "failed"}, {"error", what}});
        m["stages"] = stages;
        finish_manifest(m, manifest_path, code, stage);
        return code;
    };

    dc::FieldSpec spec;
    dc::VectorField field;
    dc::PeriodicOrbit orbit;
    try {
        spec = fargs.resolve();
        field = dc::make_field(spec);
        m["parameters"] = {{"field", dc::field_spec_to_json(spec)}, {"a", a_text},
                           {"tau_flag", tau_text}, {"budget", budget}, {"max_iters", max_iters},
                           {"seed", seed}, {"out_dir", out_dir}};
        orbit = sargs.run(spec, field);
        const dc::FloquetReport rep = dc::floquet(field, orbit);
        dc::write_json_file(at("orbit.json"), dc::orbit_to_json(orbit));
        dc::write_json_file(at("floquet.json"), dc::floquet_to_json(rep));
        m["artifacts"]["orbit"] = at("orbit.json");
        m["artifacts"]["floquet"] = at("floquet.json");
        stages.push_back({{"stage", "find-orbit"}, {"status", "ok"},
                          {"period", orbit.period()}, {"hyperbolic", rep.hyperbolic}});
    } catch (const std::exception& e) {
        return fail(exit_code::pipeline_find, "find-orbit", e.what());
    }

    dc::PeriodicSignal o_proj = dc::PeriodicSignal::zero(1.0);
    dc::PeriodicSignal o_reg = o_proj;
    Eigen::VectorXd a;
    double tau = 0.0;
    double repair_budget = budget;
    try {
        a = parse_vector(a_text);
        o_proj = project_signal(orbit, a);
        dc::RegularizeOptions ropts;
        ropts.budget = budget / 2.0;
        const dc::RegularizeResult reg = dc::regularize(o_proj, ropts);
        o_reg = reg.signal;
        if (reg.changed) repair_budget = budget - reg.distance;
        tau = resolve_tau(tau_text, o_reg);
        dc::write_json_file(at("signal.json"), dc::signal_to_json(o_reg));
        m["artifacts"]["signal"] = at("signal.json");
        stages.push_back({{"stage", "project"}, {"status", "ok"}, {"tau", tau},
                          {"regularized", reg.changed}, {"regularize_distance", reg.distance}});
    } catch (const std::exception& e) {
        return fail(exit_code::pipeline_project, "project", e.what());
    }

    dc::PeriodicSignal o_new = o_reg;
    bool repaired = false;
    try {
        const dc::EmbeddingCertificate cert = dc::certify(o_reg, dc::DelayParameters{tau});
        dc::write_json_file(at("certificate.json"), dc::certificate_to_json(cert));
        m["artifacts"]["certificate"] = at("certificate.json");
        stages.push_back({{"stage", "certify"}, {"status", "ok"},
                          {"verdict", cert.verdict == dc::Verdict::certified ? "certified"
                                      : cert.verdict == dc::Verdict::refuted ? "refuted"
                                                                             : "inconclusive"}});
        if (cert.verdict != dc::Verdict::certified) {
            dc::RepairOptions opts;
            opts.budget = repair_budget;
            opts.max_iters = max_iters;
            opts.seed = seed;
            const dc::RepairResult res = dc::repair(o_reg, dc::DelayParameters{tau}, opts);
            dc::write_json_file(at("repaired.json"), dc::signal_to_json(res.signal));
            dc::write_json_file(at("repair_certificate.json"),
                                dc::certificate_to_json(res.certificate));
            m["artifacts"]["repaired"] = at("repaired.json");
            m["artifacts"]["repair_certificate"] = at("repair_certificate.json");
            stages.push_back({{"stage", "repair"}, {"status", res.success ? "ok" : "failed"},
                              {"iterations", res.iterations}, {"distance", res.distance}});
            if (!res.success) {
                m["stages"] = stages;
                finish_manifest(m, manifest_path, exit_code::pipeline_repair, "repair");
                std::cerr << "pipeline stage 'repair' failed: not certified within budget\n";
                return exit_code::pipeline_repair;
            }
            o_new = res.signal;
            repaired = true;
        }
    } catch (const std::exception& e) {
        return fail(repaired ? exit_code::pipeline_repair : exit_code::pipeline_certify,
                    repaired ? "repair" : "certify", e.what());
    }

    try {
        const dc::PeriodicOrbit p_new = dc::lift_signal(orbit, o_proj, o_new, a);
        const dc::TubeGeometry tube = dc::tube_constants(p_new);
        dc::SurgeryVerifyOptions vopts;
        vopts.seed = seed;
        const dc::SurgeryReport rep =
            dc::verify_surgery(field, orbit, o_proj, o_new, a, tube, vopts);
        dc::write_json_file(at("surgery_manifest.json"),
                            surgery_manifest(spec, orbit, o_proj, o_new, a, tube));
        dc::write_json_file(at("surgery_report.json"), dc::surgery_report_to_json(rep));
        m["artifacts"]["surgery_manifest"] = at("surgery_manifest.json");
        m["artifacts"]["surgery_report"] = at("surgery_report.json");
        stages.push_back({{"stage", "surgery"}, {"status", "ok"},
                          {"on_orbit_residual", rep.on_orbit_residual},
                          {"closure_error", rep.closure_error},
                          {"exterior_max", rep.exterior_max}});
    } catch (const std::exception& e) {
        return fail(exit_code::pipeline_surgery, "surgery", e.what());
    }

    m["stages"] = stages;
    finish_manifest(m, manifest_path, exit_code::ok);
    std::cout << "pipeline complete  artifacts in " << out_dir << "\n";
    return exit_code::ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delay-coordinate embedding certification and repair"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // certify
    std::string c_in, c_out = "certificate.json", c_csv, c_tau = "auto",
                c_manifest = "certify_manifest.json";
    int c_csv_samples = 2048;
    dc::CertifyOptions copts;
    auto* certify = app.add_subcommand("certify", "certify a delay embedding of a signal");
    certify->add_option("signal", c_in, "signal JSON")->required()->check(CLI::ExistingFile);
    certify->add_option("--tau", c_tau, "delay, or 'auto' for mu/24")->capture_default_str();
    certify->add_option("-o,--out", c_out, "certificate JSON path")->capture_default_str();
    certify->add_option("--emit-csv", c_csv, "write the embedded curve (t,x,y,z) as CSV");
    certify->add_option("--csv-samples", c_csv_samples, "rows in the curve CSV")
        ->capture_default_str();
    certify->add_option("--certify-rel-tol", copts.certify_rel_tol)->capture_default_str();
    certify->add_option("--refute-rel-tol", copts.refute_rel_tol)->capture_default_str();
    certify->add_option("--certify-abs-tol", copts.certify_abs_tol)->capture_default_str();
    certify->add_option("--refute-abs-tol", copts.refute_abs_tol)->capture_default_str();
    certify->add_option("--pair-grid", copts.pair_grid)->capture_default_str();
    certify->add_option("--immersion-grid", copts.immersion_grid)->capture_default_str();
    certify->add_option("--manifest", c_manifest, "run manifest path")->capture_default_str();

    // repair
    std::string r_in, r_out = "repaired.json", r_cert = "repair_certificate.json", r_tau = "auto",
                r_manifest = "repair_manifest.json";
    double r_budget = 0.05;
    int r_iters = 200, r_order = 2;
    std::uint64_t r_seed = 0;
    auto* repair = app.add_subcommand("repair", "perturb a signal until it certifies");
    repair->add_option("signal", r_in, "signal JSON")->required()->check(CLI::ExistingFile);
    repair->add_option("--tau", r_tau, "delay, or 'auto' for mu/24")->capture_default_str();
    repair->add_option("--budget", r_budget, "C^r distance budget")->capture_default_str();
    repair->add_option("--seed", r_seed, "RNG seed")->capture_default_str();
    repair->add_option("--max-iters", r_iters, "certify/redraw rounds")->capture_default_str();
    repair->add_option("--r", r_order, "metric order for the budget")->capture_default_str();
    repair->add_option("-o,--out", r_out, "repaired signal JSON path")->capture_default_str();
    repair->add_option("--cert", r_cert, "certificate JSON path")->capture_default_str();
    repair->add_option("--manifest", r_manifest, "run manifest path")->capture_default_str();

    // find-orbit
    FieldArgs f_field;
    OrbitSearchArgs f_search;
    std::string f_out = "orbit.json", f_floquet = "floquet.json", f_csv,
                f_manifest = "find_orbit_manifest.json";
    int f_csv_samples = 2048;
    auto* find = app.add_subcommand("find-orbit", "locate a periodic orbit by shooting");
    f_field.attach(find, true);
    f_search.attach(find);
    find->add_option("-o,--out", f_out, "orbit JSON path")->capture_default_str();
    find->add_option("--floquet", f_floquet, "Floquet report JSON path")->capture_default_str();
    find->add_option("--emit-csv", f_csv, "write the orbit samples as CSV");
    find->add_option("--csv-samples", f_csv_samples, "rows in the orbit CSV")
        ->capture_default_str();
    find->add_option("--manifest", f_manifest, "run manifest path")->capture_default_str();

    // surgery
    FieldArgs s_field;
    std::string s_orbit, s_signal, s_a = "1,0,0", s_out = "surgery_manifest.json",
                s_report = "surgery_report.json", s_manifest = "surgery_run_manifest.json";
    dc::SurgeryVerifyOptions vopts;
    auto* surgery = app.add_subcommand(
        "surgery", "build and verify the vector-field correction for a repaired signal");
    s_field.attach(surgery, true);
    surgery->add_option("--orbit", s_orbit, "orbit JSON")->required()->check(CLI::ExistingFile);
    surgery->add_option("--signal", s_signal, "repaired signal JSON")
        ->required()
        ->check(CLI::ExistingFile);
    surgery->add_option("--a", s_a, "observation vector 'a1,a2,...'")->capture_default_str();
    surgery->add_option("-o,--out", s_out, "service manifest path")->capture_default_str();
    surgery->add_option("--report", s_report, "residual report path")->capture_default_str();
    surgery->add_option("--seed", vopts.seed, "probe RNG seed")->capture_default_str();
    surgery->add_option("--tube-samples", vopts.tube_samples)->capture_default_str();
    surgery->add_option("--exterior-points", vopts.exterior_points)->capture_default_str();
    surgery->add_option("--sweep-levels", vopts.sweep_levels)->capture_default_str();
    surgery->add_option("--manifest", s_manifest, "run manifest path")->capture_default_str();

    // eval-field
    std::string e_manifest, e_points, e_out = "field_values.csv";
    auto* evalf = app.add_subcommand("eval-field", "evaluate the perturbed field at points");
    evalf->add_option("--manifest", e_manifest, "surgery service manifest")
        ->required()
        ->check(CLI::ExistingFile);
    evalf->add_option("--points", e_points, "points CSV (one point per row)")
        ->required()
        ->check(CLI::ExistingFile);
    evalf->add_option("-o,--out", e_out, "output CSV path")->capture_default_str();

    // pipeline
    FieldArgs p_field;
    OrbitSearchArgs p_search;
    std::string p_a = "1,0,0", p_tau = "auto", p_dir = "pipeline_out";
    double p_budget = 0.05;
    int p_iters = 200;
    std::uint64_t p_seed = 0;
    auto* pipeline = app.add_subcommand(
        "pipeline", "find orbit, project, certify, repair if needed, then field surgery");
    p_field.attach(pipeline, true);
    p_search.attach(pipeline);
    pipeline->add_option("--a", p_a, "observation vector 'a1,a2,...'")->capture_default_str();
    pipeline->add_option("--tau", p_tau, "delay, or 'auto' for mu/24")->capture_default_str();
    pipeline->add_option("--budget", p_budget, "repair budget")->capture_default_str();
    pipeline->add_option("--max-iters", p_iters, "repair rounds")->capture_default_str();
    pipeline->add_option("--seed", p_seed, "RNG seed")->capture_default_str();
    pipeline->add_option("--out-dir", p_dir, "artifact directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (certify->parsed())
            return cmd_certify(c_in, c_out, c_csv, c_csv_samples, c_tau, copts, c_manifest);
        if (repair->parsed())
            return cmd_repair(r_in, r_out, r_cert, r_tau, r_budget, r_iters, r_seed, r_order,
                              r_manifest);
        if (find->parsed())
            return cmd_find_orbit(f_field, f_search, f_out, f_floquet, f_csv, f_csv_samples,
                                  f_manifest);
        if (surgery->parsed())
            return cmd_surgery(s_field, s_orbit, s_signal, s_a, s_out, s_report, vopts,
                               s_manifest);
        if (evalf->parsed()) return cmd_eval_field(e_manifest, e_points, e_out);
        if (pipeline->parsed())
            return cmd_pipeline(p_field, p_search, p_a, p_tau, p_budget, p_iters, p_seed, p_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 70;
    }
    return 0;
}
