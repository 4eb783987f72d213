#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pstokes/errors.hpp"
#include "pstokes/leray.hpp"
#include "pstokes/solver.hpp"

// Study drivers: EOC tables over the refinement hierarchy, the projection
// stability sweep, CSV emission, and a minimal SVG log-log plotter.

namespace pstokes {

struct StudyConfig {
    double p = 1.5;
    double alpha = 1.0;
    BcMode bc = BcMode::Strong;
    double nu0 = 1.0;
    double delta = 1.0e-5;
    double c_q = 0.0;  // 0 = paper default for the chosen p
    double T = 0.1;
    int level_min = 0;
    int level_max = 5;
    int stab_imax = 16;
    double tol_abs = 1.0e-10;
    double tol_rel = 1.0e-8;
    std::string out_dir = ".";
    bool plot = false;
    bool verbose = false;

    double resolved_cq() const { return c_q != 0.0 ? c_q : (p <= 2.0 ? 1.0e-3 : 1.0e3); }
    PowerLawParams params() const { return {nu0, delta, p}; }
};

struct EocRow {
    int level = 0;
    double h = 0.0;
    double tau = 0.0;
    ErrorReport err;
    // EOC between this level and its predecessor; NaN on the first row
    double eoc_v = std::nan("");
    double eoc_q_lpprime = std::nan("");
    double eoc_q_l2 = std::nan("");
};

inline std::vector<EocRow> run_eoc(const StudyConfig& cfg,
                                   std::vector<StepStats>* all_stats = nullptr) {
    const QuadratureRule rule = default_quadrature();
    const PowerLawParams pl = cfg.params();
    const ManufacturedCase mc(pl, cfg.alpha, cfg.resolved_cq(), cfg.T);
    NewtonOptions nopts;
    nopts.tol_abs = cfg.tol_abs;
    nopts.tol_rel = cfg.tol_rel;

    std::vector<EocRow> rows;
    Triangulation mesh = build_square_mesh(1);
    for (int i = 0; i < cfg.level_min; ++i) mesh = refine_uniform(mesh);
    for (int i = cfg.level_min; i <= cfg.level_max; ++i) {
        const FeSystem fe = build_fe_system(
            mesh, cfg.bc,
            [&](const Eigen::Vector2d& x) { return exact_velocity(mc, 0.0, x); }, true);
        TimeGrid grid;
        grid.T = cfg.T;
        grid.M = 1 << (i + 2);  // tau_i = T 2^{-i-2}
        std::vector<StepStats> stats;
        const auto states = time_march(fe, pl, grid, mc, rule, {}, nopts, &stats);
        if (all_stats) all_stats->insert(all_stats->end(), stats.begin(), stats.end());

        EocRow row;
        row.level = i;
        row.h = mesh.h;
        row.tau = grid.tau();
        row.err = compute_errors(states, mc, grid, fe, rule);
        if (!rows.empty()) {
            const EocRow& prev = rows.back();
            row.eoc_v = compute_eoc(prev.err.err_v, row.err.err_v, prev.tau, row.tau, prev.h,
                                    row.h);
            row.eoc_q_lpprime = compute_eoc(prev.err.err_q_lpprime, row.err.err_q_lpprime,
                                            prev.tau, row.tau, prev.h, row.h);
            row.eoc_q_l2 = compute_eoc(prev.err.err_q_l2, row.err.err_q_l2, prev.tau, row.tau,
                                       prev.h, row.h);
        }
        rows.push_back(row);
        if (cfg.verbose)
            std::cerr << "level " << i << ": err_v=" << row.err.err_v
                      << " err_q_lp'=" << row.err.err_q_lpprime
                      << " err_q_l2=" << row.err.err_q_l2 << " eoc_v=" << row.eoc_v << '\n';
        if (i < cfg.level_max) mesh = refine_uniform(mesh);
    }
    return rows;
}

struct StabRow {
    int i = 0;
    double r = 0.0;
    double c_stab_ph = 0.0;
    double c_stab_ph_perp = 0.0;
};

inline std::vector<StabRow> run_stab(const StudyConfig& cfg, const std::vector<int>& i_list) {
    const QuadratureRule rule = default_quadrature();
    const double p = cfg.p;
    const std::vector<double> r_list{2.0, p, p / (p - 1.0)};
    std::vector<StabRow> rows;
    for (int i : i_list) {
        const Triangulation mesh = build_square_mesh(i);
        const FeSystem fe = build_fe_system(mesh, cfg.bc);
        LerayOperators ops(fe, rule);
        for (const StabilityRow& s : stability_constants(ops, r_list)) {
            rows.push_back({i, s.r, s.c_stab_ph, s.c_stab_ph_perp});
            if (cfg.verbose)
                std::cerr << "i=" << i << " r=" << s.r << " c_stab(Ph)=" << s.c_stab_ph
                          << " c_stab(Ph^perp)=" << s.c_stab_ph_perp
                          << (s.skipped ? " (skipped " + std::to_string(s.skipped) + ")" : "")
                          << '\n';
        }
    }
    return rows;
}

// CSV schemas: eoc.csv = (i,h,tau,err_v,eoc_v,err_q_lpprime,eoc_q_lpprime,
// err_q_l2,eoc_q_l2); stab.csv = (i,r,proj,value).  EOC on row i is
// measured between levels i-1 and i.
inline void write_eoc_csv(const std::vector<EocRow>& rows, const std::string& path) {
    std::ofstream out(path);
    out.precision(12);
    out << "i,h,tau,err_v,eoc_v,err_q_lpprime,eoc_q_lpprime,err_q_l2,eoc_q_l2\n";
    for (const EocRow& r : rows)
        out << r.level << ',' << r.h << ',' << r.tau << ',' << r.err.err_v << ',' << r.eoc_v
            << ',' << r.err.err_q_lpprime << ',' << r.eoc_q_lpprime << ',' << r.err.err_q_l2
            << ',' << r.eoc_q_l2 << '\n';
}

inline void write_stab_csv(const std::vector<StabRow>& rows, const std::string& path) {
    std::ofstream out(path);
    out.precision(12);
    out << "i,r,proj,value\n";
    for (const StabRow& r : rows) {
        out << r.i << ',' << r.r << ",Ph," << r.c_stab_ph << '\n';
        out << r.i << ',' << r.r << ",Ph_perp," << r.c_stab_ph_perp << '\n';
    }
}

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

/// Minimal log-log SVG: one polyline per series, no external dependency.
inline void write_svg_loglog(const std::vector<PlotSeries>& series, const std::string& path,
                             bool log_y = true) {
    const int w = 640, hgt = 480, margin = 60;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    auto tx = [&](double v) { return std::log10(v); };
    for (const PlotSeries& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (s.x[k] <= 0.0 || s.y[k] <= 0.0) continue;
            xmin = std::min(xmin, tx(s.x[k]));
            xmax = std::max(xmax, tx(s.x[k]));
            const double yv = log_y ? tx(s.y[k]) : s.y[k];
            ymin = std::min(ymin, yv);
            ymax = std::max(ymax, yv);
        }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ofstream out(path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << hgt
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    auto px = [&](double v) {
        return margin + (tx(v) - xmin) / (xmax - xmin) * (w - 2 * margin);
    };
    auto py = [&](double v) {
        const double yv = log_y ? tx(v) : v;
        return hgt - margin - (yv - ymin) / (ymax - ymin) * (hgt - 2 * margin);
    };
    int ci = 0;
    for (const PlotSeries& s : series) {
        out << "<polyline fill='none' stroke='" << colors[ci % 6] << "' stroke-width='1.5' points='";
        for (std::size_t k = 0; k < s.x.size(); ++k)
            if (s.x[k] > 0.0 && s.y[k] > 0.0) out << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
        out << "'/>\n<text x='" << (w - margin + 4) << "' y='" << (margin + 16 * ci)
            << "' font-size='11'>" << s.label << "</text>\n";
        ++ci;
    }
    out << "<line x1='" << margin << "' y1='" << (hgt - margin) << "' x2='" << (w - margin)
        << "' y2='" << (hgt - margin) << "' stroke='black'/>\n";
    out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << (hgt - margin) << "' stroke='black'/>\n</svg>\n";
}

/// Flat key/value config file: `key value` or `key=value`, '#' comments.
inline StudyConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    StudyConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        for (char& ch : line)
            if (ch == '=') ch = ' ';
        std::istringstream ss(line);
        std::string key, value;
        if (!(ss >> key >> value)) continue;
        if (key == "p") cfg.p = std::stod(value);
        else if (key == "alpha") cfg.alpha = std::stod(value);
        else if (key == "bc") {
            if (value == "strong") cfg.bc = BcMode::Strong;
            else if (value == "weak") cfg.bc = BcMode::Weak;
            else throw std::runtime_error("config: bc must be strong or weak");
        }
        else if (key == "nu0") cfg.nu0 = std::stod(value);
        else if (key == "delta") cfg.delta = std::stod(value);
        else if (key == "cq") cfg.c_q = std::stod(value);
        else if (key == "T") cfg.T = std::stod(value);
        else if (key == "levels") {
            const auto dots = value.find("..");
            if (dots == std::string::npos) throw std::runtime_error("config: levels must be a..b");
            cfg.level_min = std::stoi(value.substr(0, dots));
            cfg.level_max = std::stoi(value.substr(dots + 2));
        }
        else if (key == "tol_abs") cfg.tol_abs = std::stod(value);
        else if (key == "tol_rel") cfg.tol_rel = std::stod(value);
        else if (key == "out") cfg.out_dir = value;
        else throw std::runtime_error("config: unknown key " + key);
    }
    return cfg;
}

}  // namespace pstokes
