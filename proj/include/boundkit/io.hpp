#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundkit/decompose.hpp"
#include "boundkit/eigensolve.hpp"
#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"
#include "boundkit/inequalities.hpp"
#include "boundkit/potential.hpp"
#include "boundkit/scattering.hpp"
#include "boundkit/sparse.hpp"

namespace boundkit::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchema = 1;

/// Malformed input document.
class FormatError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace detail {
inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

inline double number(const json& j, const char* key) {
    const auto& f = field(j, key);
    if (!f.is_number()) throw FormatError(std::string("field \"") + key + "\" must be a number");
    return f.get<double>();
}

inline double number_or(const json& j, const char* key, double def) {
    return j.contains(key) ? number(j, key) : def;
}

inline std::vector<double> numbers(const json& j, const char* key) {
    const auto& f = field(j, key);
    if (!f.is_array()) throw FormatError(std::string("field \"") + key + "\" must be an array");
    std::vector<double> out;
    out.reserve(f.size());
    for (const auto& e : f) {
        if (!e.is_number()) throw FormatError(std::string("field \"") + key + "\" must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::string text(const json& j, const char* key) {
    const auto& f = field(j, key);
    if (!f.is_string()) throw FormatError(std::string("field \"") + key + "\" must be a string");
    return f.get<std::string>();
}

inline void check_schema(const json& j) {
    if (j.is_object() && j.contains("schema") && j.at("schema") != kSchema)
        throw FormatError("unsupported schema version");
}

inline json interval(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

inline Interval interval_from(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw FormatError("interval must be [lo, hi]");
    const double lo = j[0].get<double>(), hi = j[1].get<double>();
    if (!(lo < hi)) throw FormatError("interval needs lo < hi");
    return {lo, hi};
}
}  // namespace detail

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- grids

inline json to_json(const GridFunction& g) {
    json j;
    j["interp"] = g.interp() == Interp::PiecewiseLinear ? "linear" : "constant";
    j["x"] = std::vector<double>(g.breakpoints().begin(), g.breakpoints().end());
    j["v"] = std::vector<double>(g.values().begin(), g.values().end());
    return j;
}

inline GridFunction grid_from_json(const json& j) {
    const auto s = detail::text(j, "interp");
    if (s != "linear" && s != "constant") throw FormatError("interp must be \"linear\" or \"constant\"");
    auto x = detail::numbers(j, "x");
    auto v = detail::numbers(j, "v");
    return GridFunction(std::move(x), std::move(v), s == "linear" ? Interp::PiecewiseLinear : Interp::PiecewiseConstant);
}

// ---------------------------------------------------------------- potentials

inline BumpKind bump_kind_from(const std::string& s) {
    if (s == "square") return BumpKind::Square;
    if (s == "dipole") return BumpKind::Dipole;
    throw FormatError("bump kind must be \"square\" or \"dipole\"");
}

inline json to_json(const Potential& v, bool top = true) {
    json j;
    if (top) j["schema"] = kSchema;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, pot::Zero>) {
                j["kind"] = "zero";
            } else if constexpr (std::is_same_v<T, pot::SquareBump>) {
                j["kind"] = "square";
                j["g"] = n.g;
                j["center"] = n.center;
            } else if constexpr (std::is_same_v<T, pot::DipoleBump>) {
                j["kind"] = "dipole";
                j["g"] = n.g;
                j["center"] = n.center;
            } else if constexpr (std::is_same_v<T, pot::SparseSum>) {
                j["kind"] = "sparse";
                j["bumps"] = json::array();
                for (const auto& b : n.bumps) j["bumps"].push_back({{"kind", to_string(b.kind)}, {"g", b.g}, {"x", b.x}});
            } else if constexpr (std::is_same_v<T, pot::Sampled>) {
                j["kind"] = "sampled";
                j["grid"] = to_json(n.grid);
            } else if constexpr (std::is_same_v<T, pot::Scaled>) {
                j["kind"] = "scaled";
                j["g"] = n.g;
                j["inner"] = to_json(*n.inner, false);
            } else {
                j["kind"] = "negated";
                j["inner"] = to_json(*n.inner, false);
            }
        },
        v.node());
    return j;
}

inline Potential potential_from_json(const json& j) {
    detail::check_schema(j);
    const auto kind = detail::text(j, "kind");
    if (kind == "zero") return Potential::zero();
    if (kind == "square") return Potential::square(detail::number(j, "g"), detail::number_or(j, "center", 0.0));
    if (kind == "dipole") return Potential::dipole(detail::number(j, "g"), detail::number_or(j, "center", 0.0));
    if (kind == "sparse") {
        const auto& arr = detail::field(j, "bumps");
        if (!arr.is_array()) throw FormatError("\"bumps\" must be an array");
        std::vector<pot::Bump> bumps;
        for (const auto& b : arr)
            bumps.push_back({bump_kind_from(detail::text(b, "kind")), detail::number(b, "g"), detail::number(b, "x")});
        return Potential::sparse(std::move(bumps));
    }
    if (kind == "sampled") return Potential::sampled(grid_from_json(detail::field(j, "grid")));
    if (kind == "scaled") return rescale(potential_from_json(detail::field(j, "inner")), detail::number(j, "g"));
    if (kind == "negated") return negate(potential_from_json(detail::field(j, "inner")));
    throw FormatError("unknown potential kind \"" + kind + "\"");
}

// ---------------------------------------------------------------- spectra

inline json to_json(const EigenvalueList& l) {
    json arr = json::array();
    for (const auto& e : l.entries) arr.push_back({{"E", e.E}, {"sign", e.sign > 0 ? "+" : "-"}, {"digits", e.digits}});
    return arr;
}

/// The list with its floor bookkeeping.
inline json spectrum_report(const EigenvalueList& l) {
    return {{"schema", kSchema},
            {"floor", l.floor},
            {"below_floor_plus", l.below_floor_plus},
            {"below_floor_minus", l.below_floor_minus},
            {"eigenvalues", to_json(l)}};
}

// ---------------------------------------------------------------- decompositions

inline json to_json(const Certificate& c) {
    return {{"name", c.name}, {"interval", detail::interval(c.where)}, {"measured", c.measured}, {"bound", c.bound},
            {"pass", c.pass()}};
}

inline Domain::Kind domain_kind_from(const std::string& s) {
    if (s == "whole") return Domain::Kind::WholeLine;
    if (s == "half_dirichlet") return Domain::Kind::HalfDirichlet;
    if (s == "half_neumann") return Domain::Kind::HalfNeumann;
    throw FormatError("unknown domain kind \"" + s + "\"");
}

inline json to_json(const Decomposition& d) {
    json j;
    j["schema"] = kSchema;
    j["domain"] = {{"kind", to_string(d.kind)}, {"interval", detail::interval(d.domain)}};
    j["e_floor"] = d.e_floor;
    j["h"] = d.h;
    j["partition"] = json::array();
    for (const auto& p : d.partition)
        j["partition"].push_back({{"interval", detail::interval(p.interval)},
                                  {"n", p.label.n},
                                  {"k", p.label.k},
                                  {"certified", p.certified}});
    j["families"] = json::array();
    for (const auto& f : d.families)
        j["families"].push_back({{"n", f.n},
                                 {"core", detail::interval(f.core)},
                                 {"base_length", f.base_length},
                                 {"ext_left", f.ext_left},
                                 {"ext_right", f.ext_right},
                                 {"kind", f.kind},
                                 {"removal_case", f.removal_case},
                                 {"step", f.step},
                                 {"modifications", f.modifications},
                                 {"eps", f.eps}});
    j["steps"] = json::array();
    for (const auto& s : d.steps) {
        json r{{"step", s.step},
               {"eps", s.eps},
               {"sign", s.sign > 0 ? "+" : "-"},
               {"component", detail::interval(s.component)},
               {"case", s.removal_case},
               {"L", s.L}};
        r["removed"] = s.removed ? detail::interval(*s.removed) : json(nullptr);
        j["steps"].push_back(std::move(r));
    }
    j["zero_nodes"] = d.zero_nodes;
    j["W"] = to_json(d.W);
    j["Q"] = to_json(d.Q);
    j["stage_certificates"] = json::array();
    for (const auto& c : d.stage_certificates) j["stage_certificates"].push_back(to_json(c));
    return j;
}

inline Decomposition decomposition_from_json(const json& j) {
    detail::check_schema(j);
    Decomposition d;
    const auto& dom = detail::field(j, "domain");
    d.kind = domain_kind_from(detail::text(dom, "kind"));
    d.domain = detail::interval_from(detail::field(dom, "interval"));
    d.e_floor = detail::number(j, "e_floor");
    d.h = detail::number(j, "h");
    for (const auto& p : detail::field(j, "partition")) {
        PartitionEntry e;
        e.interval = detail::interval_from(detail::field(p, "interval"));
        e.label = {static_cast<int>(detail::number(p, "n")), static_cast<int>(detail::number(p, "k"))};
        e.certified = p.value("certified", true);
        d.partition.push_back(e);
    }
    for (const auto& f : detail::field(j, "families")) {
        FamilyInfo fi;
        fi.n = static_cast<int>(detail::number(f, "n"));
        fi.core = detail::interval_from(detail::field(f, "core"));
        fi.base_length = detail::number(f, "base_length");
        fi.ext_left = detail::number(f, "ext_left");
        fi.ext_right = detail::number(f, "ext_right");
        fi.kind = detail::text(f, "kind");
        fi.removal_case = f.value("removal_case", "");
        fi.step = f.value("step", 0);
        fi.modifications = f.value("modifications", 0);
        fi.eps = detail::number_or(f, "eps", 0.0);
        d.families.push_back(fi);
    }
    if (j.contains("zero_nodes")) d.zero_nodes = detail::numbers(j, "zero_nodes");
    d.W = grid_from_json(detail::field(j, "W"));
    d.Q = grid_from_json(detail::field(j, "Q"));
    return d;
}

inline json to_json(const VerifyReport& r) {
    json j;
    j["schema"] = kSchema;
    j["all_pass"] = r.all_pass();
    j["tiled"] = r.tiled;
    j["w_continuous"] = r.w_continuous;
    j["residual_l1"] = r.residual_l1;
    j["w_l2sq_total"] = r.w_l2sq_total;
    j["q_l1_total"] = r.q_l1_total;
    j["sqrt_moment"] = r.sqrt_moment;
    j["certificate_count"] = r.certificates.size();
    j["failures"] = json::array();
    for (const auto& c : r.failures()) j["failures"].push_back(to_json(c));
    j["certificates"] = json::array();
    for (const auto& c : r.certificates) j["certificates"].push_back(to_json(c));
    return j;
}

// ---------------------------------------------------------------- reports

inline json to_json(const IltReport& r) {
    return {{"schema", kSchema},
            {"p", r.p},
            {"lhs", r.lhs},
            {"rhs", r.rhs},
            {"ratio", r.ratio ? json(*r.ratio) : json(nullptr)},
            {"truncation", detail::interval(r.truncation)},
            {"spectrum", spectrum_report(r.spectrum)}};
}

inline json to_json(const SparseBuild& b, const SparseReport& r) {
    json pl = json::array();
    for (const auto& p : b.placements)
        pl.push_back({{"n", p.n}, {"x", p.x}, {"g", p.g}, {"candidates", p.candidates}, {"eigenvalues", p.eigenvalues}});
    json pr = json::array();
    for (const auto& s : r.problems) pr.push_back(s);
    return {{"schema", kSchema},
            {"kind", to_string(b.kind)},
            {"targets", b.targets},
            {"box", detail::interval(b.box)},
            {"placements", pl},
            {"pass", r.pass},
            {"expected", r.expected},
            {"problems", pr},
            {"spectrum", spectrum_report(r.spectrum)}};
}

inline json to_json(const TraceFormulaReport& r) {
    return {{"schema", kSchema},  {"lhs", r.lhs},           {"rhs", r.rhs},
            {"residual", r.residual}, {"tail_bound", r.tail_bound}, {"r_at_kmax", r.r_at_kmax},
            {"r_at_zero", r.r_at_zero}};
}

// ---------------------------------------------------------------- csv

namespace detail {
inline std::string num(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}
}  // namespace detail

inline void write_angle_csv(std::ostream& out, const std::vector<AngleRow>& rows) {
    out << "k,index,n,kk,length,error,bound\n";
    for (const auto& r : rows)
        out << detail::num(r.k) << ',' << r.index << ',' << r.label.n << ',' << r.label.k << ','
            << detail::num(r.length) << ',' << detail::num(r.error) << ',' << detail::num(r.bound) << '\n';
}

struct ScatterRow {
    double k = 0.0;
    double abs_r = 0.0;
    double log_one_minus_r2 = 0.0;
};

inline void write_scatter_csv(std::ostream& out, const std::vector<ScatterRow>& rows) {
    out << "k,abs_r,log_one_minus_r2\n";
    for (const auto& r : rows)
        out << detail::num(r.k) << ',' << detail::num(r.abs_r) << ',' << detail::num(r.log_one_minus_r2) << '\n';
}

/// W profile file: {"support": [a, b], "x": [...], "w": [...]}, linear between
/// samples and zero outside the support.
inline GridFunction w_profile_from_json(const json& j) {
    detail::check_schema(j);
    if (!j.is_object() || !j.contains("support")) throw FormatError("W file needs \"support\" bounds");
    const auto s = detail::interval_from(j.at("support"));
    auto x = detail::numbers(j, "x");
    auto w = detail::numbers(j, "w");
    if (x.size() < 2 || x.size() != w.size()) throw FormatError("\"x\" and \"w\" must have equal length >= 2");
    if (x.front() < s.lo || x.back() > s.hi) throw FormatError("W samples lie outside \"support\"");
    if (x.front() > s.lo) {
        x.insert(x.begin(), s.lo);
        w.insert(w.begin(), 0.0);
    }
    if (x.back() < s.hi) {
        x.push_back(s.hi);
        w.push_back(0.0);
    }
    return GridFunction(std::move(x), std::move(w), Interp::PiecewiseLinear);
}

}  // namespace boundkit::io
