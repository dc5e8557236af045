// boundkit command-line frontend.
//
// Exit codes: 0 ok, 2 malformed input or violated precondition, 3 solver
// failure, 4 certificate failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "boundkit.hpp"

namespace {

using namespace boundkit;
using io::json;

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kSolverFailure = 3;
constexpr int kCertificateFailure = 4;

void emit(const json& j, const std::string& path) {
    if (path.empty()) std::cout << j.dump(2) << '\n';
    else io::write_file(path, j);
}

Domain make_domain(const std::string& domain, const std::string& bc, double x) {
    if (domain == "whole") return Domain::whole_line(x);
    if (domain == "half") {
        if (bc == "dirichlet") return Domain::half_dirichlet(x);
        if (bc == "neumann") return Domain::half_neumann(x);
        throw InvalidArgument("--bc must be dirichlet or neumann");
    }
    throw InvalidArgument("--domain must be whole or half");
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("cannot parse number \"" + tok + "\"");
        }
        if (used != tok.size()) throw InvalidArgument("cannot parse number \"" + tok + "\"");
        out.push_back(v);
    }
    return out;
}

/// Runs f(i) for i in [0, n) on `workers` threads; results land by index.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
    const auto w = static_cast<std::size_t>(std::clamp(workers, 1, 64));
    if (w == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(w);
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += w) f(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

/// Turns the --config JSON object into flags placed ahead of the user's own,
/// so flags given on the command line win.
std::vector<std::string> config_args(const std::string& path) {
    const auto j = io::read_file(path);
    if (!j.is_object()) throw io::FormatError("config must be a JSON object");
    if (!j.contains("schema") || j.at("schema") != io::kSchema) throw io::FormatError("config needs \"schema\": 1");
    std::vector<std::string> out;
    for (const auto& [k, v] : j.items()) {
        if (k == "schema") continue;
        if (v.is_boolean()) {
            if (v.get<bool>()) out.push_back("--" + k);
        } else if (v.is_string()) {
            out.push_back("--" + k);
            out.push_back(v.get<std::string>());
        } else if (v.is_number()) {
            out.push_back("--" + k);
            out.push_back(v.dump());
        } else if (v.is_array()) {
            std::string s;
            for (const auto& e : v) s += (s.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
            out.push_back("--" + k);
            out.push_back(s);
        } else {
            throw io::FormatError("config value for \"" + k + "\" has an unsupported type");
        }
    }
    return out;
}

std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        std::size_t span = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            span = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            span = 1;
        } else {
            continue;
        }
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + span));
        const auto extra = config_args(path);
        // right after the subcommand name
        const std::size_t at = args.empty() ? 0 : 1;
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
        break;
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundkit: bound states, W'+Q decompositions, trace formulas"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::string seed = "none";
    std::string config;
    auto common = [&](CLI::App* c) {
        c->add_option("--seed", seed, "only \"none\" is accepted; the core is deterministic");
        c->add_option("--config", config, "JSON file of flag values (\"schema\": 1)");
    };

    // eigs
    std::string pot_file, domain = "whole", bc = "dirichlet", out;
    double floor = 1e-6, tol = 1e-10, X = 0.0;
    auto* eigs = app.add_subcommand("eigs", "merged negative spectrum of -d^2 +/- V");
    eigs->add_option("potential", pot_file, "potential JSON")->required();
    eigs->add_option("--domain", domain, "whole or half");
    eigs->add_option("--bc", bc, "dirichlet or neumann (half line)");
    eigs->add_option("--floor", floor, "E_floor");
    eigs->add_option("--tol", tol, "relative eigenvalue tolerance");
    eigs->add_option("--X", X, "minimum truncation");
    eigs->add_option("--out", out, "output file (default stdout)");
    common(eigs);

    // decompose
    std::string replay;
    double h = 1e-3;
    auto* dec = app.add_subcommand("decompose", "W'+Q decomposition with certificates");
    dec->add_option("potential", pot_file, "potential JSON")->required();
    dec->add_option("--domain", domain, "whole or half");
    dec->add_option("--bc", bc, "dirichlet or neumann (half line)");
    dec->add_option("--floor", floor, "E_floor");
    dec->add_option("--X", X, "minimum truncation");
    dec->add_option("--step", h, "grid step near the support of V");
    dec->add_option("--out", out, "write the decomposition JSON here");
    dec->add_option("--replay", replay, "verify a stored decomposition instead of building one");
    common(dec);

    // ilt
    double p = 0.5, e0 = 1.0;
    std::string variant = "a";
    auto* ilt = app.add_subcommand("ilt", "inverse Lieb-Thirring comparison");
    ilt->add_option("potential", pot_file, "potential JSON")->required();
    ilt->add_option("--p", p, "moment");
    ilt->add_option("--variant", variant, "a or b");
    ilt->add_option("--E0", e0, "ground-state bound (variant b)");
    ilt->add_option("--domain", domain, "whole or half");
    ilt->add_option("--bc", bc, "dirichlet or neumann (half line)");
    ilt->add_option("--floor", floor, "E_floor");
    ilt->add_option("--X", X, "minimum truncation");
    ilt->add_option("--out", out, "output file (default stdout)");
    common(ilt);

    // sparse
    std::string targets_file, kind = "square";
    double rho = 10.0, slack = 0.1;
    auto* sp = app.add_subcommand("sparse", "sparse bump construction");
    sp->add_option("targets", targets_file, "JSON array of targets, or {\"targets\": [...]}")->required();
    sp->add_option("--kind", kind, "square or dipole");
    sp->add_option("--rho", rho, "growth ratio of the positions");
    sp->add_option("--slack", slack, "relative slack");
    sp->add_option("--out", out, "write the potential JSON here");
    common(sp);

    // scatter
    std::string w_file, csv;
    double kmax = 50.0;
    int nk = 200, workers = 1;
    auto* sc = app.add_subcommand("scatter", "reflection coefficient and trace-formula residual for W'+W^2");
    sc->add_option("W", w_file, "W profile JSON with \"support\"")->required();
    sc->add_option("--kmax", kmax, "upper end of the k integral");
    sc->add_option("--nk", nk, "number of quadrature panels");
    sc->add_option("--csv", csv, "write the |r(k)| sweep here");
    sc->add_option("--workers", workers, "threads for the k sweep");
    sc->add_option("--out", out, "residual JSON (default stdout)");
    common(sc);

    // prufer
    std::string dec_file, kgrid = "0.5,1,2,4";
    auto* pr = app.add_subcommand("prufer", "angle-increment scan over a stored decomposition");
    pr->add_option("decomposition", dec_file, "decomposition JSON")->required();
    pr->add_option("--kgrid", kgrid, "comma-separated k values");
    pr->add_option("--workers", workers, "threads over k");
    pr->add_option("--out", out, "CSV output (default stdout)");
    common(pr);

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kBadInput;
    }

    try {
        if (seed != "none") throw InvalidArgument("--seed accepts only \"none\"");

        if (eigs->parsed()) {
            const auto v = io::potential_from_json(io::read_file(pot_file));
            const auto rd = resolve_domain(make_domain(domain, bc, X), v, floor);
            emit(io::spectrum_report(merged_spectrum(v, rd.interval, rd.bc, floor, tol)), out);
        } else if (dec->parsed()) {
            const auto v = io::potential_from_json(io::read_file(pot_file));
            Decomposition d;
            if (!replay.empty()) {
                d = io::decomposition_from_json(io::read_file(replay));
            } else {
                DecomposeOptions opt;
                opt.h = h;
                opt.strict = false;
                d = run_decomposition(v, make_domain(domain, bc, X), floor, opt);
                if (!out.empty()) io::write_file(out, io::to_json(d));
            }
            const auto rep = verify_decomposition(v, d, decomposition_spectrum(v, d));
            std::cout << io::to_json(rep).dump(2) << '\n';
            if (!rep.all_pass()) {
                const auto f = rep.failures();
                if (f.empty()) std::cerr << "certificate failure: partition does not tile the domain\n";
                else
                    std::cerr << "certificate failure: " << f.front().name << " on [" << f.front().where.lo << ", "
                              << f.front().where.hi << "]\n";
                return kCertificateFailure;
            }
        } else if (ilt->parsed()) {
            const auto v = io::potential_from_json(io::read_file(pot_file));
            const auto dm = make_domain(domain, bc, X);
            if (variant == "a") emit(io::to_json(ilt_check_a(v, p, dm, floor)), out);
            else if (variant == "b") emit(io::to_json(ilt_check_b(v, p, e0, dm, floor)), out);
            else throw InvalidArgument("--variant must be a or b");
        } else if (sp->parsed()) {
            const auto j = io::read_file(targets_file);
            std::vector<double> t;
            const auto& arr = j.is_object() ? io::detail::field(j, "targets") : j;
            if (!arr.is_array()) throw io::FormatError("targets must be an array");
            for (const auto& e : arr) {
                if (!e.is_number()) throw io::FormatError("targets must be numbers");
                t.push_back(e.get<double>());
            }
            const auto b = place_bumps(t, io::bump_kind_from(kind), rho, slack);
            const auto rep = verify_sparse(b.V, b.targets, b.kind, b.box);
            if (!out.empty()) io::write_file(out, io::to_json(b.V));
            auto j_out = io::to_json(b, rep);
            j_out["potential"] = io::to_json(b.V);
            std::cout << j_out.dump(2) << '\n';
            if (!rep.pass) return kSolverFailure;
        } else if (sc->parsed()) {
            const auto w = io::w_profile_from_json(io::read_file(w_file));
            const auto r = trace_formula_residual(w, kmax, nk);
            emit(io::to_json(r), out);
            if (!csv.empty()) {
                std::vector<io::ScatterRow> rows(static_cast<std::size_t>(nk));
                parallel_for(rows.size(), workers, [&](std::size_t i) {
                    const double k = kmax * static_cast<double>(i + 1) / nk;
                    const auto s = factored_scattering(w, k);
                    rows[i] = {k, std::abs(s.r()), -2.0 * std::log(std::abs(s.a))};
                });
                std::ofstream f(csv);
                if (!f) throw Error("cannot write " + csv);
                io::write_scatter_csv(f, rows);
            }
        } else if (pr->parsed()) {
            const auto d = io::decomposition_from_json(io::read_file(dec_file));
            const auto ks = parse_list(kgrid);
            std::vector<std::vector<AngleRow>> parts(ks.size());
            parallel_for(ks.size(), workers, [&](std::size_t i) { parts[i] = angle_increment_scan(d, {ks[i]}); });
            std::vector<AngleRow> rows;
            for (auto& v : parts) rows.insert(rows.end(), v.begin(), v.end());
            if (out.empty()) io::write_angle_csv(std::cout, rows);
            else {
                std::ofstream f(out);
                if (!f) throw Error("cannot write " + out);
                io::write_angle_csv(f, rows);
            }
        }
    } catch (const CertificateFailure& e) {
        std::cerr << "certificate failure: " << e.what() << '\n';
        return kCertificateFailure;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const Error& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    }
    return kOk;
}
