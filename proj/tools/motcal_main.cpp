// motcal: batch calibration pipeline for martingale transport and
// Schrodinger bridge duals. Subcommands: ingest, calibrate, verify,
// simulate, check-order. Exit codes: 0 success, 2 plateau, 3 infeasible
// input, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

#include "motcal/fokker_planck.hpp"
#include "motcal/io.hpp"
#include "motcal/mot_dual.hpp"
#include "motcal/oracle.hpp"
#include "motcal/sb_dual.hpp"
#include "motcal/vix.hpp"

namespace fs = std::filesystem;
using motcal::io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPlateau = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

json merge_config(json base, const std::string& config_path) {
    if (config_path.empty()) return base;
    json overrides = motcal::io::load_json_file(config_path);
    for (auto& [k, v] : overrides.items()) base[k] = v;
    return base;
}

void ensure_outdir(const std::string& out) {
    if (!out.empty()) fs::create_directories(out);
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

int cmd_ingest(const std::vector<std::string>& csvs, const std::vector<double>& maturities,
               const std::string& grid_json, const std::string& out) {
    if (csvs.size() != maturities.size() || csvs.empty()) {
        std::cerr << "ingest: need one --maturity per --csv\n";
        return kExitInfeasible;
    }
    ensure_outdir(out);
    motcal::Grid1D grid = motcal::io::grid_from_json(json::parse(grid_json));

    std::vector<motcal::GridMeasure> marginals;
    for (std::size_t i = 0; i < csvs.size(); ++i) {
        motcal::CallCurve curve = motcal::io::read_call_curve_csv(csvs[i], maturities[i]);
        marginals.push_back(motcal::breeden_litzenberger(curve, grid));
        json mj = motcal::io::measure_to_json(marginals.back());
        mj["maturity"] = maturities[i];
        motcal::io::write_json_file(out + "/marginal_" + std::to_string(i) + ".json", mj);
    }
    json report{{"marginals", marginals.size()}, {"convex_order", json::array()}};
    bool all_ordered = true;
    for (std::size_t i = 0; i + 1 < marginals.size(); ++i) {
        auto rep = motcal::convex_order(marginals[i], marginals[i + 1]);
        report["convex_order"].push_back(json{{"pair", {i, i + 1}},
                                              {"holds", rep.holds},
                                              {"worst_violation", rep.worst_violation}});
        all_ordered = all_ordered && rep.holds;
    }
    motcal::io::write_json_file(out + "/ingest_report.json", report);
    std::cout << report.dump(2) << '\n';
    return all_ordered ? kExitOk : kExitInfeasible;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

int calibrate_mot(const json& j, const std::string& out) {
    auto setup = motcal::io::mot_setup_from_json(j);
    motcal::DualState st = motcal::ascend(setup.instance, setup.ascent);
    json result{{"kind", "mot"},
                {"dual_value", st.dual_value},
                {"iterations", st.iterations},
                {"converged", st.converged},
                {"plateau", st.plateau},
                {"residual_norms",
                 {{"res1_sup", motcal::sup_norm(st.residual1)},
                  {"res2_sup", motcal::sup_norm(st.residual2)}}},
                {"potentials",
                 {{"nodes", setup.instance.grid.nodes()}, {"u1", st.u1}, {"u2", st.u2}}}};
    if (!out.empty()) {
        ensure_outdir(out);
        motcal::io::write_json_file(out + "/calibrate_mot.json", result);
        motcal::io::write_trace_csv(out + "/trace.csv", st.trace);
    }
    std::cout << result.dump(2) << '\n';
    if (st.converged) return kExitOk;
    return kExitPlateau;
}

int calibrate_sb(const json& j, const std::string& out) {
    auto setup = motcal::io::sb_setup_from_json(j);
    motcal::SbDualState st = motcal::sb_ascend(setup.instance, setup.ascent);
    json result{{"kind", "sb"},
                {"dual_value", st.dual_value},
                {"entropy", st.entropy},
                {"iterations", st.iterations},
                {"converged", st.converged},
                {"plateau", st.plateau},
                {"residual_norms",
                 {{"res1_sup", motcal::sup_norm(st.residual1)},
                  {"res2_sup", motcal::sup_norm(st.residual2)}}},
                {"potentials",
                 {{"nodes", setup.instance.grid.x.nodes()}, {"u1", st.u1}, {"u2", st.u2}}}};
    if (!out.empty()) {
        ensure_outdir(out);
        motcal::io::write_json_file(out + "/calibrate_sb.json", result);
        motcal::io::write_sb_trace_csv(out + "/trace.csv", st.trace);
    }
    std::cout << result.dump(2) << '\n';
    if (st.converged) return kExitOk;
    return kExitPlateau;
}

int calibrate_vix(const json& j, const std::string& out) {
    auto setup = motcal::io::vix_setup_from_json(j);
    motcal::VixDualReport rep =
        motcal::vix_dual_value(setup.instance, setup.u1, setup.u2, setup.u3);
    json result{{"kind", "vix"},
                {"dual_value", rep.dual_value},
                {"u_t0", rep.u_t0},
                {"phi_bounds_check", rep.phi_bounds_ok},
                {"delta_concave", rep.concavity.concave},
                {"delta_worst_bulge", rep.concavity.worst_bulge},
                {"delta_grid", rep.family.deltas},
                {"continuity_margin", rep.family.continuity_margin}};
    if (!out.empty()) {
        ensure_outdir(out);
        motcal::io::write_json_file(out + "/calibrate_vix.json", result);
    }
    std::cout << result.dump(2) << '\n';
    return rep.phi_bounds_ok && rep.concavity.concave ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int verify_mot(const json& j, const std::string& out, double gap_tol) {
    auto setup = motcal::io::mot_setup_from_json(j);

    json oj = j.at("oracle");
    motcal::Grid1D ogrid = motcal::io::grid_from_json(oj.at("grid"));
    motcal::DiscreteMotInstance oracle{
        ogrid.nodes(),
        motcal::io::measure_from_json(j.at("mu0"), ogrid).weights(),
        motcal::io::measure_from_json(j.at("mu2"), ogrid).weights(),
        {},
        oj.value("steps_pre", std::size_t(1)),
        oj.value("steps_post", std::size_t(1)),
        setup.instance.T0,
        setup.instance.T1,
        setup.instance.T2,
        setup.instance.lagrangian};
    if (setup.instance.has_intermediate())
        oracle.mu1 = motcal::io::measure_from_json(j.at("mu1"), ogrid).weights();

    motcal::DiscreteMotResult prim = motcal::solve_discrete_mot(oracle);
    json result{{"kind", "mot"}};
    if (!prim.feasible) {
        result["pass"] = false;
        result["infeasible"] = prim.infeasibility;
        std::cout << result.dump(2) << '\n';
        if (!out.empty()) {
            ensure_outdir(out);
            motcal::io::write_json_file(out + "/verify.json", result);
        }
        return kExitInfeasible;
    }

    motcal::DualState st = motcal::ascend(setup.instance, setup.ascent);
    double gap = prim.value - st.dual_value;
    double rel = std::abs(gap) / std::max(std::abs(prim.value), 1e-12);
    result["dual"] = st.dual_value;
    result["primal"] = prim.value;
    result["gap"] = gap;
    result["relative_gap"] = rel;
    result["pass"] = rel <= gap_tol || std::abs(gap) <= 1e-9;
    result["lp_reduced_cost_violation"] = prim.max_reduced_cost_violation;
    if (!out.empty()) {
        ensure_outdir(out);
        motcal::io::write_json_file(out + "/verify.json", result);
    }
    std::cout << result.dump(2) << '\n';
    return result["pass"].get<bool>() ? kExitOk : kExitNumerical;
}

int verify_sb(const json& j, const std::string& out, double gap_tol) {
    auto setup = motcal::io::sb_setup_from_json(j);

    json oj = j.at("oracle");
    motcal::PathTree tree = motcal::PathTree::trinomial(
        setup.instance.model, oj.value("depth_T1", std::size_t(1)),
        oj.value("depth_total", std::size_t(2)), oj.value("dt", 0.25));
    auto law_of = [](const json& lj) {
        motcal::ValueLaw law;
        for (const auto& v : lj.at("values")) law.values.push_back(v.get<double>());
        for (const auto& p : lj.at("probs")) law.probs.push_back(p.get<double>());
        return law;
    };
    motcal::DiscreteSbResult prim =
        motcal::solve_discrete_sb(tree, law_of(oj.at("mu1")), law_of(oj.at("mu2")));

    json result{{"kind", "sb"}};
    if (!prim.feasible) {
        result["pass"] = false;
        result["infeasible"] = prim.infeasibility;
        if (!out.empty()) {
            ensure_outdir(out);
            motcal::io::write_json_file(out + "/verify.json", result);
        }
        std::cout << result.dump(2) << '\n';
        return kExitInfeasible;
    }

    motcal::SbDualState st = motcal::sb_ascend(setup.instance, setup.ascent);
    double gap = prim.value - st.dual_value;
    double rel = std::abs(gap) / std::max(std::abs(prim.value), 1e-12);
    result["dual"] = st.dual_value;
    result["primal"] = prim.value;
    result["gap"] = gap;
    result["relative_gap"] = rel;
    result["pass"] = rel <= gap_tol || std::abs(gap) <= 1e-9;
    result["oracle_duality_gap"] = prim.duality_gap;
    if (!out.empty()) {
        ensure_outdir(out);
        motcal::io::write_json_file(out + "/verify.json", result);
    }
    std::cout << result.dump(2) << '\n';
    return result["pass"].get<bool>() ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const json& j, std::uint64_t seed, std::size_t n_paths,
                 const std::string& out, unsigned workers) {
    motcal::SvmSpec model = motcal::io::model_from_json(j.at("model"));
    motcal::TimeGrid tg(j.value("t0", 0.0), j.value("T1", 0.5), j.value("T2", 1.0),
                        j.value("steps_pre", std::size_t(100)),
                        j.value("steps_post", std::size_t(100)));
    motcal::SimulateOptions opt;
    opt.workers = workers;
    motcal::PathEnsemble paths = motcal::simulate(model, nullptr, n_paths, tg, seed, opt);

    auto m_t1 = paths.x_moment(paths.cp_T1());
    auto m_t2 = paths.x_moment(paths.cp_T2());
    json result{{"kind", "simulate"},
                {"model", j.at("model")},
                {"paths", n_paths},
                {"seed", seed},
                {"x_mean_T1", m_t1.mean},
                {"x_mean_T1_se", m_t1.se},
                {"x_mean_T2", m_t2.mean},
                {"x_mean_T2_se", m_t2.se},
                {"mean_weight", paths.mean_weight().mean},
                {"effective_sample_size", paths.effective_sample_size()}};
    if (!out.empty()) {
        ensure_outdir(out);
        motcal::io::write_json_file(out + "/simulate.json", result);
    }
    std::cout << result.dump(2) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// check-order
// ---------------------------------------------------------------------------

int cmd_check_order(const std::string& mu_path, const std::string& nu_path, bool lower,
                    const std::string& out) {
    motcal::GridMeasure mu = motcal::io::measure_from_json(motcal::io::load_json_file(mu_path));
    motcal::GridMeasure nu = motcal::io::measure_from_json(motcal::io::load_json_file(nu_path));
    motcal::OrderReport rep = lower ? motcal::convex_order_lower(mu, nu)
                                    : motcal::convex_order(mu, nu);
    json result{{"kind", lower ? "convex_order_lower" : "convex_order"},
                {"holds", rep.holds},
                {"worst_violation", rep.worst_violation},
                {"at", rep.where},
                {"detail", rep.detail}};
    if (!out.empty()) {
        ensure_outdir(out);
        motcal::io::write_json_file(out + "/check_order.json", result);
    }
    std::cout << result.dump(2) << '\n';
    return rep.holds ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"martingale transport / Schrodinger bridge calibration"};
    app.require_subcommand(1);

    std::string instance_path, config_path, out_dir;
    std::uint64_t seed = 1;
    double tol = -1.0;
    long max_iters = -1;
    unsigned workers = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--instance", instance_path, "instance JSON file");
        cmd->add_option("--config", config_path, "JSON overrides merged over the instance");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--tol", tol, "residual tolerance override");
        cmd->add_option("--max-iters", max_iters, "iteration cap override");
        cmd->add_option("--threads", workers, "worker threads (0 = hardware)");
    };

    // ingest
    auto* ingest = app.add_subcommand("ingest", "call-price CSVs to marginal JSONs");
    std::vector<std::string> csvs;
    std::vector<double> maturities;
    std::string grid_spec = R"({"min":0.2,"max":3.0,"n":121})";
    ingest->add_option("--csv", csvs, "CSV file (strike,price)")->required();
    ingest->add_option("--maturity", maturities, "maturity (years) per CSV")->required();
    ingest->add_option("--grid", grid_spec, "grid JSON");
    add_common(ingest);

    auto* calibrate = app.add_subcommand("calibrate", "run a dual calibration");
    std::string kind = "mot";
    calibrate->add_option("--kind", kind, "mot | sb | vix");
    add_common(calibrate);

    auto* verify = app.add_subcommand("verify", "dual vs discrete-oracle gap report");
    std::string vkind = "mot";
    double gap_tol = 0.05;
    verify->add_option("--kind", vkind, "mot | sb");
    verify->add_option("--gap-tol", gap_tol, "relative gap threshold");
    add_common(verify);

    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo under the reference model");
    std::size_t n_paths = 10000;
    simulate_cmd->add_option("--paths", n_paths, "number of paths");
    add_common(simulate_cmd);

    auto* check = app.add_subcommand("check-order", "convex order test between two measures");
    std::string mu_path, nu_path;
    bool lower = false;
    check->add_option("--mu", mu_path, "left measure JSON")->required();
    check->add_option("--nu", nu_path, "right measure JSON")->required();
    check->add_flag("--lower", lower, "use the convex-lower order on [0, inf)");
    add_common(check);

    CLI11_PARSE(app, argc, argv);

    try {
        auto load_instance = [&]() {
            if (instance_path.empty()) throw motcal::DomainError("--instance is required");
            json j = merge_config(motcal::io::load_json_file(instance_path), config_path);
            if (tol > 0.0) {
                j["ascent"]["tol"] = tol;
            }
            if (max_iters > 0) j["ascent"]["max_iters"] = max_iters;
            return j;
        };

        if (ingest->parsed())
            return cmd_ingest(csvs, maturities, grid_spec, out_dir.empty() ? "." : out_dir);
        if (calibrate->parsed()) {
            json j = load_instance();
            if (kind == "mot") return calibrate_mot(j, out_dir);
            if (kind == "sb") return calibrate_sb(j, out_dir);
            if (kind == "vix") return calibrate_vix(j, out_dir);
            throw motcal::DomainError("calibrate: unknown kind " + kind);
        }
        if (verify->parsed()) {
            json j = load_instance();
            if (vkind == "mot") return verify_mot(j, out_dir, gap_tol);
            if (vkind == "sb") return verify_sb(j, out_dir, gap_tol);
            throw motcal::DomainError("verify: unknown kind " + vkind);
        }
        if (simulate_cmd->parsed()) return cmd_simulate(load_instance(), seed, n_paths, out_dir, workers);
        if (check->parsed()) return cmd_check_order(mu_path, nu_path, lower, out_dir);
    } catch (const motcal::DomainError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const motcal::NumericsError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
