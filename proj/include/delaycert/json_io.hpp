#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "delaycert/delay.hpp"
#include "delaycert/field.hpp"
#include "delaycert/monotonicity.hpp"
#include "delaycert/orbit.hpp"
#include "delaycert/orbit_finder.hpp"
#include "delaycert/signal.hpp"
#include "delaycert/surgery.hpp"

// File formats. Every JSON document carries a versioned "schema" field, and
// serialization goes through a fixed-format dumper (17 significant digits,
// sorted keys, two-space indent) so identical inputs produce byte-identical
// artifacts. CSV output follows RFC 4180 with CRLF line ends.

namespace delaycert {

nlohmann::json signal_to_json(const PeriodicSignal& o);
PeriodicSignal signal_from_json(const nlohmann::json& j);

nlohmann::json orbit_to_json(const PeriodicOrbit& p);
PeriodicOrbit orbit_from_json(const nlohmann::json& j);

nlohmann::json profile_to_json(const MonotonicityProfile& prof);
nlohmann::json certificate_to_json(const EmbeddingCertificate& cert);
nlohmann::json tube_to_json(const TubeGeometry& tube);
TubeGeometry tube_from_json(const nlohmann::json& j);
nlohmann::json floquet_to_json(const FloquetReport& report);
nlohmann::json surgery_report_to_json(const SurgeryReport& report);

// Named field construction, shared by the CLI and the surgery manifest.
struct FieldSpec {
    std::string kind;  // "lorenz", "hopf3d", "linear"
    double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
    Eigen::MatrixXd matrix;  // for "linear"
};
VectorField make_field(const FieldSpec& spec);
nlohmann::json field_spec_to_json(const FieldSpec& spec);
FieldSpec field_spec_from_json(const nlohmann::json& j);

std::string dump_deterministic(const nlohmann::json& j, int indent = 2);
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_csv(const std::string& path);

}  // namespace delaycert
