// cansys: command-line front end for the canonical-system toolkit.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "cansys/criteria.hpp"
#include "cansys/dyadic.hpp"
#include "cansys/eigen_oracle.hpp"
#include "cansys/errors.hpp"
#include "cansys/gallery.hpp"
#include "cansys/operator_lab.hpp"

using namespace cansys;
using nlohmann::json;

namespace {

enum Exit { ok = 0, fails = 1, input = 2, unsupported = 3, numerical = 4 };

struct RunConfig {
    std::string spec;
    int depth = kDefaultDepth;
    int grid = 1024;
    double window = 200;
    std::string growth;
    std::string out;
    std::string format = "json";
};

// Writes `text` to <out>/<name>, or to stdout when no output directory is set.
void emit(const RunConfig& cfg, const std::string& name, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::filesystem::create_directories(cfg.out);
    auto path = std::filesystem::path(cfg.out) / name;
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path.string());
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string dump(const json& j) { return j.dump(2); }

std::optional<GrowthFunction> growth_of(const RunConfig& cfg) {
    if (cfg.growth.empty()) return std::nullopt;
    return parse_growth(cfg.growth);
}

int cmd_validate(const RunConfig& cfg) {
    auto H = load_hamiltonian(cfg.spec);
    auto rep = validate(H);
    json j = rep.to_json();
    j["hamiltonian"] = H.describe();
    emit(cfg, "validate.json", dump(j));
    return rep.ok() ? ok : fails;
}

int cmd_analyze(const RunConfig& cfg) {
    auto H = load_hamiltonian(cfg.spec);
    auto g = growth_of(cfg);
    std::vector<CriterionReport> reps{discreteness(H, cfg.depth), bounded_invertibility(H, cfg.depth)};
    if (g) {
        reps.push_back(summability(H, *g, cfg.depth));
        reps.push_back(limsup_distribution(H, *g, cfg.depth));
    }
    json j = {{"hamiltonian", H.describe()}, {"depth", cfg.depth}};
    if (g) j["growth"] = g->to_json();
    json arr = json::array();
    bool any_fail = false, any_inconclusive = false;
    for (auto& r : reps) {
        arr.push_back(r.to_json());
        any_fail |= r.verdict == Verdict::fails;
        any_inconclusive |= r.verdict == Verdict::inconclusive;
    }
    j["reports"] = arr;
    if (any_inconclusive) j["warning"] = "at least one verdict is inconclusive";
    if (cfg.format == "csv") {
        std::string csv = "criterion,index,x,value\n";
        for (auto& r : reps) {
            auto add = [&](const Trajectory& t, const char* kind) {
                for (auto& [x, v] : t)
                    csv += r.criterion + "," + kind + "," + json(x).dump() + "," + json(v).dump() + "\n";
            };
            add(r.trajectory, "continuous");
            add(r.sequential_trajectory, "sequential");
        }
        emit(cfg, "analyze.csv", csv);
        if (!cfg.out.empty()) emit(cfg, "analyze.json", dump(j));
    } else {
        emit(cfg, "analyze.json", dump(j));
    }
    return any_fail ? fails : ok;
}

int cmd_dyadic(const RunConfig& cfg) {
    auto H = load_hamiltonian(cfg.spec);
    auto p = dyadic_profile(H, cfg.depth);
    if (cfg.format == "csv") {
        emit(cfg, "dyadic.csv", profile_csv(p));
        return ok;
    }
    json pts = json::array();
    for (auto& c : p.points) pts.push_back({{"t", c.t}, {"gap", std::isinf(c.gap) ? json(nullptr) : json(c.gap)}});
    json j = {{"hamiltonian", H.describe()}, {"depth", p.depth}, {"mass", p.mass}, {"points", pts},
              {"omega", p.omega}, {"cell_h2", p.cell_h2}, {"provenance", p.provenance}};
    emit(cfg, "dyadic.json", dump(j));
    return ok;
}

Point truncation_point(const Hamiltonian& H, std::optional<double> c, int k) {
    if (c) {
        if (!(*c > H.a() && *c <= H.b())) throw DomainError("--c must lie in (a, b]");
        return H.at(*c);
    }
    if (!H.b_infinite() && !H.source().singular_end()) return H.at(H.b());
    if (H.normalized()) return invert_tail(H, std::ldexp(tail_h1(H, H.start()), -k));
    throw InputError("choose a truncation point with --c");
}

int cmd_spectrum(const RunConfig& cfg, std::optional<double> c, int trunc, double beta, int cells) {
    auto H = load_hamiltonian(cfg.spec);
    auto g = growth_of(cfg);
    Point cp = truncation_point(H, c, trunc);
    auto est = eigenvalues(H, cp, cfg.window, beta, cells);
    json j = {{"hamiltonian", H.describe()}, {"spectrum", est.to_json()}};
    if (est.eigenvalues.size() >= 16) {
        auto rep = counting_report(est, g ? &*g : nullptr);
        j["counting"] = rep.to_json();
    } else {
        j["warning"] = "fewer than 16 eigenvalues: no counting report";
    }
    if (cfg.format == "csv") {
        emit(cfg, "spectrum.csv", spectrum_csv(est));
        if (!cfg.out.empty()) emit(cfg, "counting.csv", counting_csv(est));
    } else {
        emit(cfg, "spectrum.json", dump(j));
        if (!cfg.out.empty()) {
            emit(cfg, "spectrum.csv", spectrum_csv(est));
            emit(cfg, "counting.csv", counting_csv(est));
        }
    }
    return ok;
}

Grid operator_grid(const Hamiltonian& H, int cells, int depth) {
    if (H.normalized() && (H.b_infinite() || H.source().singular_end())) {
        int sub = std::max(1, cells / depth);
        return dyadic_grid(H, depth, sub, cells - sub * (depth - 1));
    }
    if (H.b_infinite()) throw InputError("operator grids on [a, inf) need h1 integrable");
    return uniform_grid(H, H.at(H.b()), cells);
}

int cmd_operator(const RunConfig& cfg, const std::string& kernel, const std::string& rule,
                 const std::string& dump_path) {
    auto H = load_hamiltonian(cfg.spec);
    Grid grid = operator_grid(H, cfg.grid, cfg.depth);
    DiagonalRule dr = rule == "half" ? DiagonalRule::half : DiagonalRule::strict;
    DenseMatrix A = kernel == "T" ? discretize_T(H, grid, dr).matrix : discretize_KH(H, grid, dr);
    if (!dump_path.empty()) write_matrix_binary(dump_path, A);
    auto s = singular_values(A);
    if (cfg.format == "csv") {
        emit(cfg, "singular.csv", singular_csv(s));
        return ok;
    }
    json j = {{"hamiltonian", H.describe()}, {"kernel", kernel}, {"rule", rule},
              {"cells", grid.cells()}, {"size", A.rows}, {"singular_values", s}};
    emit(cfg, "operator.json", dump(j));
    return ok;
}

int cmd_independence(const RunConfig& cfg, size_t lo, size_t hi) {
    auto H = load_hamiltonian(cfg.spec);
    auto rep = independence_check(H, independence_grid(H, cfg.grid), lo, hi);
    if (cfg.format == "csv") {
        std::string csv = "n,sigma_full,sigma_diag\n";
        for (size_t i = 0; i < rep.singular_full.size(); ++i)
            csv += std::to_string(i + 1) + "," + json(rep.singular_full[i]).dump() + "," +
                   json(rep.singular_diag[i]).dump() + "\n";
        emit(cfg, "independence.csv", csv);
        return ok;
    }
    json j = rep.to_json();
    j["hamiltonian"] = H.describe();
    emit(cfg, "independence.json", dump(j));
    return ok;
}

int cmd_gallery(const RunConfig& cfg, const std::string& only, bool window_set) {
    GalleryConfig gc;
    gc.depth = cfg.depth;
    gc.grid = cfg.grid;
    if (window_set) gc.window = cfg.window;
    std::vector<CaseResult> res;
    if (only.empty()) res = run_all(gc);
    else res.push_back(run_case(registry_case(only), gc));
    emit(cfg, "gallery.json", dump(gallery_json(res)));
    for (auto& r : res)
        if (!r.pass) return fails;
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral analysis of two-dimensional canonical systems"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sc, bool spec) {
        if (spec) sc->add_option("spec", cfg.spec, "Hamiltonian spec (JSON)")->required();
        sc->add_option("--depth", cfg.depth, "dyadic depth N")->check(CLI::Range(1, 200));
        sc->add_option("--grid", cfg.grid, "operator grid cells M")->check(CLI::Range(8, 8192));
        sc->add_option("--out", cfg.out, "output directory (default: stdout)");
        sc->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    };

    auto* v = app.add_subcommand("validate", "check a Hamiltonian spec");
    common(v, true);

    auto* an = app.add_subcommand("analyze", "run the criterion engines");
    common(an, true);
    an->add_option("--growth", cfg.growth, "growth function: file or inline \"rho=2,betas=[...]\"");

    auto* dy = app.add_subcommand("dyadic", "dyadic profile c_n, omega_n");
    common(dy, true);

    auto* sp = app.add_subcommand("spectrum", "eigenvalues of the truncated problem");
    common(sp, true);
    std::optional<double> c;
    int trunc = 12, cells = kDefaultMonodromyCells;
    double beta = std::numbers::pi / 2;
    auto* wopt_sp = sp->add_option("--window", cfg.window, "window R");
    sp->add_option("--c", c, "truncation point");
    sp->add_option("--truncation", trunc, "truncate where the h1 tail is 2^-k of its total")->check(CLI::Range(1, 200));
    sp->add_option("--beta", beta, "boundary angle at c");
    sp->add_option("--cells", cells, "resampling cells for families")->check(CLI::Range(2, 1 << 20));
    sp->add_option("--growth", cfg.growth, "growth function for partial sums");
    (void)wopt_sp;

    auto* op = app.add_subcommand("operator", "singular values of a discretized kernel");
    common(op, true);
    std::string kernel = "KH", rule = "strict", dump_path;
    op->add_option("--kernel", kernel, "KH or T")->check(CLI::IsMember({"KH", "T"}));
    op->add_option("--rule", rule, "diagonal cell rule")->check(CLI::IsMember({"strict", "half"}));
    op->add_option("--dump", dump_path, "binary matrix dump");

    auto* ci = app.add_subcommand("compare-independence", "decay slopes of K_H for H and diag H");
    common(ci, true);
    size_t lo = 3, hi = 12;
    ci->add_option("--fit-lo", lo, "first index of the slope fit");
    ci->add_option("--fit-hi", hi, "last index of the slope fit");

    auto* ga = app.add_subcommand("gallery", "run the example gallery");
    common(ga, false);
    std::string only;
    auto* wopt_ga = ga->add_option("--window", cfg.window, "oracle window R (default 1e4)");
    ga->add_option("--case", only, "run a single case");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return input;
    }

    try {
        if (*v) return cmd_validate(cfg);
        if (*an) return cmd_analyze(cfg);
        if (*dy) return cmd_dyadic(cfg);
        if (*sp) return cmd_spectrum(cfg, c, trunc, beta, cells);
        if (*op) return cmd_operator(cfg, kernel, rule, dump_path);
        if (*ci) return cmd_independence(cfg, lo, hi);
        if (*ga) return cmd_gallery(cfg, only, wopt_ga->count() > 0);
    } catch (const UnsupportedOrderError& e) {
        std::cerr << "unsupported order: " << e.what() << "\n";
        return unsupported;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return input;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return input;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    }
    return ok;
}
