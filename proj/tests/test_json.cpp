#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaycert/delay.hpp"
#include "delaycert/json_io.hpp"
#include "delaycert/orbit.hpp"
#include "delaycert/perturb.hpp"
#include "delaycert/signal.hpp"

using namespace delaycert;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// A signal exercising every serialized piece: trig modes plus both closure
// term kinds.
PeriodicSignal loaded_signal() {
    PeriodicSignal base = PeriodicSignal::harmonic(1.0, 1, 0.3, 1.0, 0.25);
    base = base + PeriodicSignal::harmonic(1.0, 3, -0.07, 0.011);
    const PeriodicSignal sloped = base + slope_perturbation(1.0, 0.1, 0.3, 1e-3);
    PulseFamily fam(1.0, 0.06);
    Eigen::ArrayXd coeffs = Eigen::ArrayXd::Zero(fam.count);
    coeffs[2] = 4e-4;
    coeffs[17] = -2.5e-4;
    return fam.applied(sloped, coeffs);
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("delaycert_json_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("signals survive the JSON round trip bit for bit") {
    const PeriodicSignal o = loaded_signal();
    const nlohmann::json j = signal_to_json(o);
    const PeriodicSignal back = signal_from_json(j);

    CHECK(back.period() == o.period());
    for (int i = 0; i <= 333; ++i) {
        const double t = 1.0 * i / 333.0;
        for (int k = 0; k <= 2; ++k) CHECK(back.eval(t, k) == o.eval(t, k));
    }
    // Serializing the reconstruction reproduces the document exactly.
    CHECK(dump_deterministic(signal_to_json(back)) == dump_deterministic(j));
}

TEST_CASE("the signal document carries the advertised layout") {
    const PeriodicSignal o =
        PeriodicSignal::harmonic(2.0, 2, 0.5, -0.25, 1.5);  // mean 1.5, mode-2 pair
    const nlohmann::json j = signal_to_json(o);
    CHECK(j.at("schema") == "delaycert/signal/v1");
    CHECK(j.at("period") == 2.0);
    const auto& modes = j.at("modes");
    REQUIRE(modes.size() >= 3);
    CHECK(modes[0][0] == 1.5);  // constant offset rides in the mode-0 cosine slot
    CHECK(modes[0][1] == 0.0);
    CHECK(modes[2][0] == 0.5);
    CHECK(modes[2][1] == -0.25);
    CHECK(j.at("bumps").is_array());
    CHECK(j.at("bumps").empty());
}

TEST_CASE("documents with the wrong schema are refused") {
    nlohmann::json j;
    j["schema"] = "delaycert/other/v9";
    j["period"] = 1.0;
    j["modes"] = nlohmann::json::array();
    j["bumps"] = nlohmann::json::array();
    CHECK_THROWS_AS(signal_from_json(j), std::runtime_error);
    CHECK_THROWS_AS(orbit_from_json(j), std::runtime_error);
    CHECK_THROWS_AS(tube_from_json(j), std::runtime_error);
}

TEST_CASE("orbits and tubes round trip through their documents") {
    const PeriodicOrbit p({PeriodicSignal::harmonic(2.0 * kPi, 1, 1.0, 0.0),
                           PeriodicSignal::harmonic(2.0 * kPi, 1, 0.0, 1.0),
                           PeriodicSignal::zero(2.0 * kPi)});
    const PeriodicOrbit q = orbit_from_json(orbit_to_json(p));
    CHECK(q.dimension() == 3);
    CHECK(q.period() == p.period());
    for (int i = 0; i < 50; ++i) {
        const double t = p.period() * i / 50.0;
        CHECK((q.point(t) - p.point(t)).norm() == 0.0);
    }

    const TubeGeometry tube = tube_constants(p);
    const TubeGeometry back = tube_from_json(tube_to_json(tube));
    CHECK(back.m == tube.m);
    CHECK(back.m_star == tube.m_star);
    CHECK(back.M == tube.M);
    CHECK(back.r_frak == tube.r_frak);
    CHECK(back.M_star == tube.M_star);
    CHECK(back.Delta == tube.Delta);
    CHECK(back.Delta_lower_bound == tube.Delta_lower_bound);
    CHECK(back.delta == tube.delta);
    CHECK(back.uniform_epsilon == tube.uniform_epsilon);
    CHECK(back.grid == tube.grid);
}

TEST_CASE("certificates serialize their verdict, margins, and witness") {
    const PeriodicSignal o = PeriodicSignal::harmonic(1.0, 2, 0.0, 1.0);  // sin(4 pi t)
    const EmbeddingCertificate cert = certify(o, DelayParameters{0.05});
    REQUIRE(cert.verdict == Verdict::refuted);
    const nlohmann::json j = certificate_to_json(cert);
    CHECK(j.at("schema") == "delaycert/certificate/v1");
    CHECK(j.at("verdict") == "refuted");
    CHECK(j.at("tau") == 0.05);
    CHECK(j.contains("injectivity_margin"));
    CHECK(j.contains("immersion_margin"));
    CHECK(j.at("witness").contains("t1"));
    CHECK(j.at("witness").contains("t2"));
    CHECK(j.at("witness").contains("value"));

    // Determinism: certify and serialize twice, compare bytes.
    const EmbeddingCertificate cert2 = certify(o, DelayParameters{0.05});
    CHECK(dump_deterministic(certificate_to_json(cert2)) == dump_deterministic(j));
}

TEST_CASE("the dumper is deterministic, sorted, and full precision") {
    nlohmann::json j;
    j["zeta"] = 1.0;
    j["alpha"] = 0.1 + 0.2;
    j["mid"] = nlohmann::json::array({1e-300, -0.0, 123456789012345.6789});
    const std::string s = dump_deterministic(j);
    CHECK(s == dump_deterministic(j));
    CHECK(s.find("\"alpha\"") < s.find("\"mid\""));
    CHECK(s.find("\"mid\"") < s.find("\"zeta\""));
    CHECK(s.find("0.30000000000000004") != std::string::npos);
    CHECK(s.back() == '\n');

    nlohmann::json bad;
    bad["x"] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(dump_deterministic(bad), std::runtime_error);
    bad["x"] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(dump_deterministic(bad), std::runtime_error);
}

TEST_CASE("JSON files round trip on disk") {
    TempDir tmp;
    const PeriodicSignal o = loaded_signal();
    const std::string path = tmp.file("signal.json");
    write_json_file(path, signal_to_json(o));
    const PeriodicSignal back = signal_from_json(read_json_file(path));
    for (int i = 0; i < 64; ++i) {
        const double t = i / 64.0;
        CHECK(back.eval(t) == o.eval(t));
    }
    CHECK_THROWS_AS(read_json_file(tmp.file("missing.json")), std::runtime_error);
}

TEST_CASE("field specs rebuild the same vector field") {
    FieldSpec lor;
    lor.kind = "lorenz";
    lor.sigma = 9.5;
    lor.rho = 27.0;
    lor.beta = 2.5;
    const FieldSpec lor2 = field_spec_from_json(field_spec_to_json(lor));
    const Eigen::Vector3d x(0.3, -1.1, 4.0);
    CHECK((make_field(lor2).eval(x) - make_field(lor).eval(x)).norm() == 0.0);
    CHECK(lor2.sigma == 9.5);

    FieldSpec lin;
    lin.kind = "linear";
    lin.matrix = Eigen::MatrixXd(2, 2);
    lin.matrix << 0.0, 1.0, -1.0, -0.1;
    const FieldSpec lin2 = field_spec_from_json(field_spec_to_json(lin));
    const Eigen::Vector2d y(1.0, 2.0);
    CHECK((make_field(lin2).eval(y) - make_field(lin).eval(y)).norm() == 0.0);

    FieldSpec bogus;
    bogus.kind = "vanderpol";
    CHECK_THROWS_AS(make_field(bogus), std::runtime_error);
}

TEST_CASE("CSV files use CRLF, keep full precision, and tolerate a header") {
    TempDir tmp;
    const std::string path = tmp.file("table.csv");
    const std::vector<std::vector<double>> rows = {
        {0.0, 0.1 + 0.2, -1e-300}, {1.5, 123456789.123456789, 0.0}};
    write_csv(path, {"t", "value", "extra"}, rows);

    std::ifstream in(path, std::ios::binary);
    const std::string raw((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    CHECK(raw.find("\r\n") != std::string::npos);
    CHECK(raw.find("t,value,extra") == 0);

    const auto back = read_csv(path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(back[i].size() == rows[i].size());
        for (std::size_t c = 0; c < rows[i].size(); ++c) CHECK(back[i][c] == rows[i][c]);
    }

    // Headerless numeric files read every row.
    const std::string plain = tmp.file("plain.csv");
    write_csv(plain, {}, rows);
    CHECK(read_csv(plain).size() == 2);
}
