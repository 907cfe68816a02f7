#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "motcal/measures.hpp"
#include "motcal/mot_dual.hpp"
#include "motcal/sb_dual.hpp"
#include "motcal/svm.hpp"
#include "motcal/vix.hpp"

namespace motcal::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

json measure_to_json(const GridMeasure& m);

/// Accepts {"nodes": [...], "weights": [...]} or {"atoms": [[x, w], ...]}
/// or {"dirac": x}; when a target grid is supplied, atoms are deposited
/// onto it mean-preservingly.
GridMeasure measure_from_json(const json& j);
GridMeasure measure_from_json(const json& j, const Grid1D& target);

Grid1D grid_from_json(const json& j);  // {"nodes": [...]} or {"min","max","n"[,"snap"]}

// ---------------------------------------------------------------------------
// Models and instances
// ---------------------------------------------------------------------------

SvmSpec model_from_json(const json& j);
json model_to_json_echo(const json& j);  // config echo for reports

struct MotSetup {
    MotInstance instance;
    AscendConfig ascent;
};
MotSetup mot_setup_from_json(const json& j);

struct SbSetup {
    SbInstance instance;
    SbAscendConfig ascent;
    json model_echo;
};
SbSetup sb_setup_from_json(const json& j);

struct VixSetup {
    VixInstance instance;
    std::vector<double> u1, u2;  // on instance.x_grid
    ConvexPL u3;
    json model_echo;
};
VixSetup vix_setup_from_json(const json& j);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Reads "strike,price" rows (header required, UTF-8).
CallCurve read_call_curve_csv(const std::string& path, double maturity);

void write_flow_csv(const std::string& path, const FlowResult1D& flow);
void write_solution_csv(const std::string& path, const HjSolution1D& sol);
void write_trace_csv(const std::string& path, const std::vector<IterRecord>& trace);
void write_sb_trace_csv(const std::string& path, const std::vector<SbIterRecord>& trace);

// ---------------------------------------------------------------------------
// Minimal structural schema check
// ---------------------------------------------------------------------------

/// Supports the subset {type, required, properties, items} of JSON
/// Schema; returns human-readable violations (empty = valid).
std::vector<std::string> schema_violations(const json& value, const json& schema,
                                           const std::string& where = "$");

json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

}  // namespace motcal::io
