#include "motcal/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace motcal::io {

namespace {

std::vector<double> doubles(const json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

json measure_to_json(const GridMeasure& m) {
    return json{{"nodes", m.grid().nodes()}, {"weights", m.weights()}};
}

Grid1D grid_from_json(const json& j) {
    if (j.contains("nodes")) return Grid1D(doubles(j["nodes"]));
    Grid1D g = Grid1D::uniform(j.at("min").get<double>(), j.at("max").get<double>(),
                               j.at("n").get<std::size_t>());
    if (j.contains("snap")) {
        // move the nearest node onto each requested point (instance grids
        // often need exact atom locations)
        std::vector<double> nodes = g.nodes();
        for (const auto& sv : j["snap"]) {
            double s = sv.get<double>();
            std::size_t best = 0;
            for (std::size_t i = 1; i < nodes.size(); ++i)
                if (std::abs(nodes[i] - s) < std::abs(nodes[best] - s)) best = i;
            nodes[best] = s;
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        return Grid1D(std::move(nodes));
    }
    return g;
}

namespace {

std::vector<std::pair<double, double>> atoms_of(const json& j) {
    std::vector<std::pair<double, double>> atoms;
    if (j.contains("dirac")) {
        atoms.emplace_back(j["dirac"].get<double>(), 1.0);
    } else if (j.contains("atoms")) {
        for (const auto& a : j["atoms"])
            atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    } else {
        auto nodes = doubles(j.at("nodes"));
        auto weights = doubles(j.at("weights"));
        if (nodes.size() != weights.size())
            throw DomainError("measure json: nodes/weights length mismatch");
        for (std::size_t i = 0; i < nodes.size(); ++i)
            atoms.emplace_back(nodes[i], weights[i]);
    }
    return atoms;
}

}  // namespace

GridMeasure measure_from_json(const json& j) {
    if (j.contains("nodes"))
        return GridMeasure(Grid1D(doubles(j["nodes"])), doubles(j.at("weights")));
    // atom lists get their own grid
    auto atoms = atoms_of(j);
    std::sort(atoms.begin(), atoms.end());
    std::vector<double> nodes, weights;
    for (const auto& [x, w] : atoms) {
        if (!nodes.empty() && x == nodes.back()) {
            weights.back() += w;
        } else {
            nodes.push_back(x);
            weights.push_back(w);
        }
    }
    while (nodes.size() < 3) {  // Grid1D wants >= 3 nodes
        nodes.push_back(nodes.back() + 1.0);
        weights.push_back(0.0);
    }
    return GridMeasure(Grid1D(nodes), weights);
}

GridMeasure measure_from_json(const json& j, const Grid1D& target) {
    auto atoms = atoms_of(j);
    std::vector<double> w(target.size(), 0.0);
    for (const auto& [x, mass] : atoms) {
        if (mass == 0.0) continue;
        if (x <= target.front()) {
            w.front() += mass;
        } else if (x >= target.back()) {
            w.back() += mass;
        } else {
            std::size_t c = target.cell_of(x);
            double theta = (x - target[c]) / (target[c + 1] - target[c]);
            w[c] += mass * (1.0 - theta);
            w[c + 1] += mass * theta;
        }
    }
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
    return GridMeasure(target, std::move(w));
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

SvmSpec model_from_json(const json& j) {
    std::string kind = j.at("model").get<std::string>();
    double x0 = j.value("x0", 1.0);
    double y0 = j.value("y0", 0.0);
    if (kind == "heston") {
        auto trunc = doubles(j.at("trunc"));
        return make_heston(j.at("kappa").get<double>(), j.at("theta").get<double>(),
                           j.at("xi").get<double>(), j.at("rho").get<double>(), trunc.at(0),
                           trunc.at(1), x0, j.value("y0", j.at("theta").get<double>()));
    }
    if (kind == "sabr") {
        auto trunc = doubles(j.at("trunc"));
        return make_sabr(j.at("tau2").get<double>(), trunc.at(0), trunc.at(1), x0, y0);
    }
    if (kind == "custom-tabulated") {
        SvmSpec s;
        s.name = "custom-tabulated";
        auto ys = doubles(j.at("sigma_tilde").at("y"));
        auto vs = doubles(j.at("sigma_tilde").at("v"));
        if (ys.size() != vs.size() || ys.size() < 2)
            throw DomainError("custom model: sigma_tilde table needs >= 2 rows");
        s.trunc_lo = ys.front();
        s.trunc_hi = ys.back();
        s.x0 = x0;
        s.y0 = y0;
        s.sigma_tilde = [ys, vs](double y) {
            if (y <= ys.front()) return vs.front();
            if (y >= ys.back()) return vs.back();
            auto it = std::upper_bound(ys.begin(), ys.end(), y);
            std::size_t i = static_cast<std::size_t>(it - ys.begin()) - 1;
            double t = (y - ys[i]) / (ys[i + 1] - ys[i]);
            return (1.0 - t) * vs[i] + t * vs[i + 1];
        };
        double bc = j.value("b_const", 0.0);
        double t1c = j.value("tau1_const", 0.0);
        double t2c = j.value("tau2_const", 0.0);
        s.b = [bc](double, double) { return bc; };
        s.tau1 = [t1c](double, double) { return t1c; };
        s.tau2 = [t2c](double, double) { return t2c; };
        return s;
    }
    throw DomainError("unknown model kind: " + kind);
}

json model_to_json_echo(const json& j) { return j; }

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

MotSetup mot_setup_from_json(const json& j) {
    Grid1D grid = grid_from_json(j.at("grid"));
    LagrangianSpec L = LagrangianSpec::from_key(
        j.value("lagrangian", json{{"key", "quadratic"}}).value("key", "quadratic"),
        j.value("lagrangian", json{{"key", "quadratic"}}).value("param", 1.0));

    MotSetup s{MotInstance{grid,
                           measure_from_json(j.at("mu0"), grid).weights(),
                           measure_from_json(j.at("mu1"), grid).weights(),
                           measure_from_json(j.at("mu2"), grid).weights(),
                           j.value("T0", 0.0), j.value("T1", 1.0), j.value("T2", 2.0),
                           std::move(L)},
               AscendConfig{}};
    s.instance.lagrangian_key =
        j.value("lagrangian", json{{"key", "quadratic"}}).value("key", "quadratic");
    s.instance.lagrangian_param =
        j.value("lagrangian", json{{"key", "quadratic"}}).value("param", 1.0);
    if (j.contains("hamiltonian")) {
        const auto& h = j["hamiltonian"];
        s.instance.a_max = h.value("a_max", s.instance.a_max);
        s.instance.n_a = h.value("n_a", s.instance.n_a);
        s.instance.b_max = h.value("b_max", s.instance.b_max);
        s.instance.n_b = h.value("n_b", s.instance.n_b);
    }
    if (j.contains("ascent")) {
        const auto& a = j["ascent"];
        s.ascent.step = a.value("step", s.ascent.step);
        s.ascent.max_iters = a.value("max_iters", s.ascent.max_iters);
        s.ascent.tol = a.value("tol", s.ascent.tol);
        s.ascent.M = a.value("M", s.ascent.M);
        s.ascent.Lambda = a.value("Lambda", s.ascent.Lambda);
    }
    return s;
}

SbSetup sb_setup_from_json(const json& j) {
    SvmSpec model = model_from_json(j.at("model"));
    Grid1D gx = grid_from_json(j.at("grid").at("x"));
    Grid1D gy = grid_from_json(j.at("grid").at("y"));
    Grid2D grid(gx, gy);
    SbSetup s{SbInstance{std::move(model), grid,
                         measure_from_json(j.at("mu1"), gx).weights(),
                         measure_from_json(j.at("mu2"), gx).weights(),
                         j.value("t0", 0.0), j.value("T1", 0.5), j.value("T2", 1.0),
                         j.value("steps_pre", std::size_t(0)),
                         j.value("steps_post", std::size_t(0))},
              SbAscendConfig{}, j.at("model")};
    if (j.contains("ascent")) {
        const auto& a = j["ascent"];
        s.ascent.step = a.value("step", s.ascent.step);
        s.ascent.max_iters = a.value("max_iters", s.ascent.max_iters);
        s.ascent.tol = a.value("tol", s.ascent.tol);
        s.ascent.M = a.value("M", s.ascent.M);
        s.ascent.Lambda = a.value("Lambda", s.ascent.Lambda);
    }
    return s;
}

VixSetup vix_setup_from_json(const json& j) {
    SvmSpec model = model_from_json(j.at("model"));
    Grid1D xg = grid_from_json(j.at("x_grid"));
    Grid2D wy(grid_from_json(j.at("wy_grid").at("w")), grid_from_json(j.at("wy_grid").at("y")));
    GridMeasure mu3 = measure_from_json(j.at("mu3"));

    VixInstance inst{model,
                     xg,
                     measure_from_json(j.at("mu1"), xg).weights(),
                     measure_from_json(j.at("mu2"), xg).weights(),
                     std::move(mu3),
                     j.value("t0", 0.0),
                     j.value("T1", 0.5),
                     j.value("T2", 0.5 + 30.0 / 365.0),
                     wy,
                     {},
                     {},
                     j.value("steps_pre", std::size_t(0)),
                     j.value("steps_post", std::size_t(0))};
    if (j.contains("delta_grid")) {
        const auto& d = j["delta_grid"];
        if (d.is_array()) inst.delta_grid = doubles(d);
        else inst.delta_grid = linspace(-d.value("max", 5.0), d.value("max", 5.0),
                                        d.value("n", std::size_t(101)));
    }
    if (j.contains("v_grid")) inst.v_grid = doubles(j["v_grid"]);

    std::vector<double> u1(xg.size(), 0.0), u2(xg.size(), 0.0);
    auto fill_potential = [&](const char* key, std::vector<double>& u) {
        if (!j.contains(key)) return;
        auto vals = doubles(j.at(key).at("values"));
        auto nodes = doubles(j.at(key).at("nodes"));
        if (vals.size() != nodes.size()) throw DomainError("potential nodes/values mismatch");
        for (std::size_t i = 0; i < xg.size(); ++i) {
            double x = std::clamp(xg[i], nodes.front(), nodes.back());
            auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
            std::size_t c = it == nodes.begin() ? 0
                                                : std::min<std::size_t>(it - nodes.begin() - 1,
                                                                        nodes.size() - 2);
            double t = (x - nodes[c]) / (nodes[c + 1] - nodes[c]);
            u[i] = (1.0 - t) * vals[c] + t * vals[c + 1];
        }
    };
    fill_potential("u1", u1);
    fill_potential("u2", u2);

    ConvexPL u3 = ConvexPL::zero(1.0);
    if (j.contains("u3")) {
        const auto& cj = j["u3"];
        u3 = ConvexPL(doubles(cj.at("knots")), cj.value("value0", 0.0),
                      doubles(cj.at("slopes")));
    }
    return VixSetup{std::move(inst), std::move(u1), std::move(u2), std::move(u3),
                    j.at("model")};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

CallCurve read_call_curve_csv(const std::string& path, double maturity) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DomainError("empty CSV: " + path);
    // normalize the header (strip BOM / whitespace / CR)
    std::string header;
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 128)
            header += static_cast<char>(std::tolower(c));
    if (header != "strike,price")
        throw DomainError("CSV header must be 'strike,price', got '" + line + "'");

    CallCurve curve;
    curve.maturity = maturity;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw DomainError("bad CSV row at line " + std::to_string(lineno));
        curve.strikes.push_back(std::stod(a));
        curve.prices.push_back(std::stod(b));
    }
    return curve;
}

void write_flow_csv(const std::string& path, const FlowResult1D& flow) {
    std::ofstream out(path);
    out << "t,node,mass\n";
    out.precision(17);
    for (std::size_t k = 0; k < flow.masses.size(); ++k) {
        double t = flow.tg.node(k);
        for (std::size_t i = 0; i < flow.grid.size(); ++i)
            out << t << ',' << flow.grid[i] << ',' << flow.masses[k][i] << '\n';
    }
}

void write_solution_csv(const std::string& path, const HjSolution1D& sol) {
    std::ofstream out(path);
    out << "t,x,u\n";
    out.precision(17);
    auto dump = [&](double t, const std::vector<double>& layer) {
        for (std::size_t i = 0; i < sol.grid.size(); ++i)
            out << t << ',' << sol.grid[i] << ',' << layer[i] << '\n';
    };
    for (std::size_t k = 0; k < sol.pre.size(); ++k)
        dump(sol.tg.t0() + sol.tg.dt_pre() * static_cast<double>(k), sol.pre[k]);
    for (std::size_t k = 0; k < sol.post.size(); ++k)
        dump(sol.tg.start_post() + sol.tg.dt_post() * static_cast<double>(k), sol.post[k]);
}

void write_trace_csv(const std::string& path, const std::vector<IterRecord>& trace) {
    std::ofstream out(path);
    out << "iter,value,res1_sup,res2_sup,res1_l1,res2_l1,step\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << i << ',' << trace[i].value << ',' << trace[i].res1_sup << ','
            << trace[i].res2_sup << ',' << trace[i].res1_l1 << ',' << trace[i].res2_l1 << ','
            << trace[i].step << '\n';
}

void write_sb_trace_csv(const std::string& path, const std::vector<SbIterRecord>& trace) {
    std::ofstream out(path);
    out << "iter,value,res1_sup,res2_sup,res1_l1,res2_l1,entropy,step\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << i << ',' << trace[i].value << ',' << trace[i].res1_sup << ','
            << trace[i].res2_sup << ',' << trace[i].res1_l1 << ',' << trace[i].res2_l1 << ','
            << trace[i].entropy << ',' << trace[i].step << '\n';
}

// ---------------------------------------------------------------------------
// Schema subset
// ---------------------------------------------------------------------------

namespace {

bool type_matches(const json& v, const std::string& t) {
    if (t == "number") return v.is_number();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "array") return v.is_array();
    if (t == "object") return v.is_object();
    if (t == "integer") return v.is_number_integer();
    return false;
}

}  // namespace

std::vector<std::string> schema_violations(const json& value, const json& schema,
                                           const std::string& where) {
    std::vector<std::string> out;
    if (schema.contains("type")) {
        std::string t = schema["type"].get<std::string>();
        if (!type_matches(value, t)) {
            out.push_back(where + ": expected " + t);
            return out;
        }
    }
    if (schema.contains("required"))
        for (const auto& r : schema["required"]) {
            std::string key = r.get<std::string>();
            if (!value.contains(key)) out.push_back(where + ": missing '" + key + "'");
        }
    if (schema.contains("properties") && value.is_object())
        for (const auto& [key, sub] : schema["properties"].items())
            if (value.contains(key)) {
                auto sv = schema_violations(value[key], sub, where + "." + key);
                out.insert(out.end(), sv.begin(), sv.end());
            }
    if (schema.contains("items") && value.is_array())
        for (std::size_t i = 0; i < value.size(); ++i) {
            auto sv = schema_violations(value[i], schema["items"],
                                        where + "[" + std::to_string(i) + "]");
            out.insert(out.end(), sv.begin(), sv.end());
            if (out.size() > 20) return out;  // enough
        }
    return out;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace motcal::io
