// Command line driver.  Subcommands:
//   pstokes eoc   - manufactured-solution convergence study, writes eoc.csv
//   pstokes stab  - projection stability sweep, writes stab.csv
//   pstokes solve - single run at one level, prints step diagnostics
// Exit codes: 0 success, 2 solver failure, 3 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "pstokes/study.hpp"

namespace {

using namespace pstokes;

void add_common(CLI::App* cmd, StudyConfig& cfg, std::string& bc_name,
                std::string& config_path) {
    cmd->add_option("--config", config_path, "config file with key value pairs");
    cmd->add_option("-p,--power", cfg.p, "power-law exponent p in (1, inf)");
    cmd->add_option("--alpha", cfg.alpha, "regularity parameter of the manufactured pair");
    cmd->add_option("--bc", bc_name, "boundary condition mode: strong or weak");
    cmd->add_option("--nu0", cfg.nu0, "viscosity scale");
    cmd->add_option("--delta", cfg.delta, "regularization shift");
    cmd->add_option("--cq", cfg.c_q, "pressure amplitude (0 selects the default for p)");
    cmd->add_option("--T", cfg.T, "final time");
    cmd->add_option("--tol-abs", cfg.tol_abs, "Newton absolute tolerance");
    cmd->add_option("--tol-rel", cfg.tol_rel, "Newton relative tolerance");
    cmd->add_option("-o,--out", cfg.out_dir, "output directory");
    cmd->add_flag("-v,--verbose", cfg.verbose, "print per-level progress to stderr");
}

StudyConfig finalize_config(const CLI::App* cmd, StudyConfig cli_cfg,
                            const std::string& bc_name, const std::string& config_path) {
    StudyConfig cfg = cli_cfg;
    if (!config_path.empty()) {
        cfg = parse_config_file(config_path);
        // explicit command-line options win over the file
        auto taken = [&](const std::string& name) { return cmd->count(name) > 0; };
        if (taken("--power")) cfg.p = cli_cfg.p;
        if (taken("--alpha")) cfg.alpha = cli_cfg.alpha;
        if (taken("--nu0")) cfg.nu0 = cli_cfg.nu0;
        if (taken("--delta")) cfg.delta = cli_cfg.delta;
        if (taken("--cq")) cfg.c_q = cli_cfg.c_q;
        if (taken("--T")) cfg.T = cli_cfg.T;
        if (taken("--tol-abs")) cfg.tol_abs = cli_cfg.tol_abs;
        if (taken("--tol-rel")) cfg.tol_rel = cli_cfg.tol_rel;
        if (taken("--out")) cfg.out_dir = cli_cfg.out_dir;
        cfg.verbose = cli_cfg.verbose;
        cfg.plot = cli_cfg.plot;
        cfg.level_min = cli_cfg.level_min;
        cfg.level_max = cli_cfg.level_max;
        cfg.stab_imax = cli_cfg.stab_imax;
        if (!taken("--bc") && cmd->count("--config") > 0) return cfg;
    }
    if (bc_name == "strong") cfg.bc = BcMode::Strong;
    else if (bc_name == "weak") cfg.bc = BcMode::Weak;
    else throw std::runtime_error("bc must be strong or weak");
    return cfg;
}

void validate(const StudyConfig& cfg) {
    cfg.params().validate();
    if (cfg.T <= 0.0) throw std::runtime_error("T must be positive");
    if (cfg.level_min < 0 || cfg.level_max < cfg.level_min)
        throw std::runtime_error("levels must satisfy 0 <= min <= max");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Taylor-Hood laboratory for the unsteady p-Stokes equations"};
    app.require_subcommand(1);

    StudyConfig cfg;
    std::string bc_name = "strong";
    std::string config_path;

    CLI::App* eoc = app.add_subcommand("eoc", "space-time convergence study");
    add_common(eoc, cfg, bc_name, config_path);
    eoc->add_option("--levels", cfg.level_max, "finest refinement level");
    eoc->add_option("--level-min", cfg.level_min, "coarsest refinement level");
    eoc->add_flag("--plot", cfg.plot, "also write eoc.svg");

    CLI::App* stab = app.add_subcommand("stab", "projection stability sweep");
    add_common(stab, cfg, bc_name, config_path);
    stab->add_option("--imax", cfg.stab_imax, "finest mesh index (i x i squares)");

    CLI::App* solve = app.add_subcommand("solve", "single manufactured run");
    add_common(solve, cfg, bc_name, config_path);
    int solve_level = 2;
    solve->add_option("--level", solve_level, "refinement level");

    CLI11_PARSE(app, argc, argv);
    CLI::App* cmd = app.get_subcommands().front();

    StudyConfig run_cfg;
    try {
        run_cfg = finalize_config(cmd, cfg, bc_name, config_path);
        validate(run_cfg);
        std::filesystem::create_directories(run_cfg.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 3;
    }

    try {
        const std::filesystem::path out(run_cfg.out_dir);
        if (cmd == eoc) {
            const auto rows = pstokes::run_eoc(run_cfg);
            pstokes::write_eoc_csv(rows, (out / "eoc.csv").string());
            std::cout << "wrote " << (out / "eoc.csv").string() << " (" << rows.size()
                      << " rows)\n";
            if (run_cfg.plot) {
                pstokes::PlotSeries sv{"err_v", {}, {}}, sq{"err_q_lp'", {}, {}};
                for (const auto& r : rows) {
                    sv.x.push_back(r.tau + r.h);
                    sv.y.push_back(r.err.err_v);
                    sq.x.push_back(r.tau + r.h);
                    sq.y.push_back(r.err.err_q_lpprime);
                }
                pstokes::write_svg_loglog({sv, sq}, (out / "eoc.svg").string());
                std::cout << "wrote " << (out / "eoc.svg").string() << '\n';
            }
        } else if (cmd == stab) {
            std::vector<int> i_list;
            for (int i = 1; i <= run_cfg.stab_imax; ++i) i_list.push_back(i);
            const auto rows = pstokes::run_stab(run_cfg, i_list);
            pstokes::write_stab_csv(rows, (out / "stab.csv").string());
            std::cout << "wrote " << (out / "stab.csv").string() << " (" << 2 * rows.size()
                      << " data rows)\n";
        } else {
            run_cfg.level_min = run_cfg.level_max = solve_level;
            std::vector<pstokes::StepStats> stats;
            const auto rows = pstokes::run_eoc(run_cfg, &stats);
            const auto& r = rows.front();
            std::cout << "level " << r.level << ": h=" << r.h << " tau=" << r.tau << '\n'
                      << "err_v=" << r.err.err_v << " (L2 part " << r.err.err_v_l2
                      << ", F part " << r.err.err_v_f << ")\n"
                      << "err_q_lp'=" << r.err.err_q_lpprime << " err_q_l2=" << r.err.err_q_l2
                      << '\n';
            int total_newton = 0;
            for (const auto& s : stats) total_newton += s.newton_iterations;
            std::cout << stats.size() << " steps, " << total_newton
                      << " Newton iterations total\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
