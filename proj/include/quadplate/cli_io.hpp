#pragma once

// Case files, built-in plate cases, report assembly and CSV / JSON / plot
// emission for the command-line front end.

#include <quadplate/errors.hpp>
#include <quadplate/geometry.hpp>
#include <quadplate/mapping.hpp>
#include <quadplate/modal.hpp>
#include <quadplate/plate_element.hpp>
#include <quadplate/quadrature.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace quadplate::io {

using nlohmann::json;

class IoError : public Error {
public:
    using Error::Error;
};

inline std::string_view to_string(Normalization n) { return n == Normalization::plain ? "plain" : "per_pi2"; }

inline Normalization parse_normalization(std::string_view s) {
    if (s == "plain") return Normalization::plain;
    if (s == "per_pi2") return Normalization::per_pi2;
    throw InputError("unknown normalization '" + std::string(s) + "' (expected plain or per_pi2)");
}

struct AnalysisSettings {
    SchemeKind scheme = SchemeKind::pascal6;
    int gauss = 3;
    int modes = 6;
    Normalization normalization = Normalization::plain;
    bool rotary = false;
};

struct QuadGenerator {
    std::array<Point, 4> vertices{};
    std::vector<std::pair<int, int>> divisions; ///< one m x n mesh per entry
};

struct TriangleGenerator {
    std::array<Point, 3> vertices{};
    std::vector<int> levels; ///< 3 level^2 elements per entry
};

struct BoundaryAssignment {
    std::string set;
    BoundaryCondition condition = BoundaryCondition::free;
};

struct LabeledMesh {
    std::string label;
    Mesh mesh;
};

/// A plate problem: material, exactly one geometry source, supports and analysis settings.
struct CaseFile {
    std::string name;
    PlateMaterial material = PlateMaterial::normalized();
    std::optional<double> reference_length;
    std::optional<Mesh> mesh;
    std::optional<QuadGenerator> quad;
    std::optional<TriangleGenerator> triangle;
    std::vector<BoundaryAssignment> boundary;
    AnalysisSettings analysis;

    void validate() const {
        const int sources = int(mesh.has_value()) + int(quad.has_value()) + int(triangle.has_value());
        if (sources != 1) throw InputError("case '" + name + "': exactly one geometry source is required");
        material.validate();
        if (reference_length && !(*reference_length > 0.0))
            throw InputError("case '" + name + "': reference_length must be positive");
        if (analysis.modes < 1) throw InputError("case '" + name + "': modes must be >= 1");
        gauss_rule(analysis.gauss);
        if (mesh) mesh->validate();
        if (quad) {
            if (quad->divisions.empty()) throw InputError("case '" + name + "': quad generator needs divisions");
            QuadGeometry::from_vertices(quad->vertices);
        }
        if (triangle && triangle->levels.empty())
            throw InputError("case '" + name + "': triangle generator needs levels");
    }

    /// a in omega a^2 sqrt(rho t / D). Defaults: first quad edge, triangle altitude over edge AB, else 1.
    double reference() const {
        if (reference_length) return *reference_length;
        if (quad) return (quad->vertices[1] - quad->vertices[0]).norm();
        if (triangle) {
            const auto& v = triangle->vertices;
            return std::abs(cross2(v[1] - v[0], v[2] - v[0])) / (v[1] - v[0]).norm();
        }
        return 1.0;
    }

    /// Every mesh of the case with supports applied, in run order.
    std::vector<LabeledMesh> meshes() const {
        validate();
        std::vector<LabeledMesh> out;
        if (mesh) out.push_back({"mesh", *mesh});
        if (quad)
            for (auto [m, n] : quad->divisions)
                out.push_back({std::to_string(m) + "x" + std::to_string(n), mesh_quad(quad->vertices, m, n)});
        if (triangle)
            for (int l : triangle->levels)
                out.push_back({std::to_string(3 * l * l) + "el", mesh_triangle(triangle->vertices, l)});
        for (auto& lm : out)
            for (const auto& b : boundary) {
                BoundarySet* set = lm.mesh.find_set(b.set);
                if (!set) throw InputError("case '" + name + "': no boundary set named '" + b.set + "'");
                set->condition = b.condition;
            }
        return out;
    }
};

// ---------------------------------------------------------------- case JSON

namespace detail {

template <class T>
T get_field(const json& j, const char* key, std::string_view where) {
    if (!j.contains(key)) throw InputError(std::string(where) + ": missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string(where) + ": bad '" + key + "': " + e.what());
    }
}

inline Point get_point(const json& j, std::string_view where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InputError(std::string(where) + ": a point must be [x, y]");
    return Point(j[0].get<double>(), j[1].get<double>());
}

template <std::size_t N>
std::array<Point, N> get_vertices(const json& j, std::string_view where) {
    if (!j.is_array() || j.size() != N)
        throw InputError(std::string(where) + ": expected " + std::to_string(N) + " vertices");
    std::array<Point, N> v;
    for (std::size_t k = 0; k < N; ++k) v[k] = get_point(j[k], where);
    return v;
}

inline json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

} // namespace detail

inline CaseFile case_from_json(const json& j) {
    if (!j.is_object()) throw InputError("case file: top level must be an object");
    CaseFile c;
    c.name = j.value("name", std::string("case"));
    if (j.contains("material")) {
        const json& m = j.at("material");
        c.material = {detail::get_field<double>(m, "E", "material"), detail::get_field<double>(m, "nu", "material"),
                      detail::get_field<double>(m, "t", "material"), detail::get_field<double>(m, "rho", "material")};
    }
    if (j.contains("reference_length")) c.reference_length = detail::get_field<double>(j, "reference_length", "case");
    const json& g = j.contains("geometry") ? j.at("geometry") : throw InputError("case file: missing 'geometry'");
    if (g.contains("mesh")) {
        const json& m = g.at("mesh");
        Mesh mesh;
        for (const auto& p : detail::get_field<json>(m, "nodes", "mesh")) mesh.nodes.push_back(detail::get_point(p, "mesh.nodes"));
        for (const auto& e : detail::get_field<json>(m, "elements", "mesh")) {
            if (!e.is_array() || e.size() != 4) throw InputError("mesh.elements: each element needs 4 node indices");
            mesh.elements.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>()});
        }
        if (m.contains("boundary_sets"))
            for (const auto& s : m.at("boundary_sets"))
                mesh.boundary_sets.push_back({detail::get_field<std::string>(s, "name", "boundary_sets"),
                                              BoundaryCondition::free,
                                              detail::get_field<std::vector<int>>(s, "nodes", "boundary_sets")});
        c.mesh = std::move(mesh);
    }
    if (g.contains("quad")) {
        const json& q = g.at("quad");
        QuadGenerator gen;
        gen.vertices = detail::get_vertices<4>(detail::get_field<json>(q, "vertices", "quad"), "quad.vertices");
        for (const auto& d : detail::get_field<json>(q, "divisions", "quad")) {
            if (!d.is_array() || d.size() != 2) throw InputError("quad.divisions: each entry must be [m, n]");
            gen.divisions.emplace_back(d[0].get<int>(), d[1].get<int>());
        }
        c.quad = std::move(gen);
    }
    if (g.contains("triangle")) {
        const json& t = g.at("triangle");
        TriangleGenerator gen;
        gen.vertices = detail::get_vertices<3>(detail::get_field<json>(t, "vertices", "triangle"), "triangle.vertices");
        gen.levels = detail::get_field<std::vector<int>>(t, "levels", "triangle");
        c.triangle = std::move(gen);
    }
    if (j.contains("boundary"))
        for (const auto& b : j.at("boundary"))
            c.boundary.push_back({detail::get_field<std::string>(b, "set", "boundary"),
                                  parse_boundary_condition(detail::get_field<std::string>(b, "condition", "boundary"))});
    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        if (a.contains("scheme")) c.analysis.scheme = parse_scheme(detail::get_field<std::string>(a, "scheme", "analysis"));
        if (a.contains("gauss")) c.analysis.gauss = detail::get_field<int>(a, "gauss", "analysis");
        if (a.contains("modes")) c.analysis.modes = detail::get_field<int>(a, "modes", "analysis");
        if (a.contains("normalization"))
            c.analysis.normalization = parse_normalization(detail::get_field<std::string>(a, "normalization", "analysis"));
        if (a.contains("rotary")) c.analysis.rotary = detail::get_field<bool>(a, "rotary", "analysis");
    }
    c.validate();
    return c;
}

inline json case_to_json(const CaseFile& c) {
    json j;
    j["name"] = c.name;
    j["material"] = {{"E", c.material.E}, {"nu", c.material.nu}, {"t", c.material.t}, {"rho", c.material.rho}};
    if (c.reference_length) j["reference_length"] = *c.reference_length;
    json g = json::object();
    if (c.mesh) {
        json m;
        m["nodes"] = json::array();
        for (const auto& p : c.mesh->nodes) m["nodes"].push_back(detail::point_json(p));
        m["elements"] = c.mesh->elements;
        m["boundary_sets"] = json::array();
        for (const auto& s : c.mesh->boundary_sets) m["boundary_sets"].push_back({{"name", s.name}, {"nodes", s.nodes}});
        g["mesh"] = m;
    }
    if (c.quad) {
        json v = json::array();
        for (const auto& p : c.quad->vertices) v.push_back(detail::point_json(p));
        json d = json::array();
        for (auto [m, n] : c.quad->divisions) d.push_back({m, n});
        g["quad"] = {{"vertices", v}, {"divisions", d}};
    }
    if (c.triangle) {
        json v = json::array();
        for (const auto& p : c.triangle->vertices) v.push_back(detail::point_json(p));
        g["triangle"] = {{"vertices", v}, {"levels", c.triangle->levels}};
    }
    j["geometry"] = g;
    j["boundary"] = json::array();
    for (const auto& b : c.boundary) j["boundary"].push_back({{"set", b.set}, {"condition", to_string(b.condition)}});
    j["analysis"] = {{"scheme", to_string(c.analysis.scheme)},
                     {"gauss", c.analysis.gauss},
                     {"modes", c.analysis.modes},
                     {"normalization", to_string(c.analysis.normalization)},
                     {"rotary", c.analysis.rotary}};
    return j;
}

inline CaseFile parse_case(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("case file: ") + e.what());
    }
    return case_from_json(j);
}

// ---------------------------------------------------------------- built-ins

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names{"skew-quad", "cantilever-isosceles", "clamped-isosceles",
                                                "clamped-equilateral", "clamped-quad", "cantilever-quad"};
    return names;
}

/**
 * Built-in plates in the normalized material (D = 1, rho t = 1).
 *
 * The isosceles triangle has altitude a normal to the clamped edge AB on
 * x1 = 0 and base 0.5 a; the equilateral triangle has side a.
 */
inline std::optional<CaseFile> builtin_case(std::string_view name) {
    CaseFile c;
    c.name = std::string(name);
    c.material = PlateMaterial::normalized();
    auto all_clamped = [](std::initializer_list<const char*> sets) {
        std::vector<BoundaryAssignment> b;
        for (const char* s : sets) b.push_back({s, BoundaryCondition::clamped});
        return b;
    };
    const std::array<Point, 3> isosceles{Point(0.0, 0.25), Point(0.0, -0.25), Point(1.0, 0.0)};
    if (name == "skew-quad") {
        c.quad = QuadGenerator{{Point(0, 0), Point(8, 0), Point(4, 3), Point(0, 5)}, {{1, 1}}};
        c.analysis.modes = 3;
    } else if (name == "cantilever-isosceles") {
        c.triangle = TriangleGenerator{isosceles, {1, 2, 3}};
        c.reference_length = 1.0;
        c.boundary = all_clamped({"edgeAB"});
    } else if (name == "clamped-isosceles") {
        c.triangle = TriangleGenerator{isosceles, {1, 2, 3}};
        c.reference_length = 1.0;
        c.boundary = all_clamped({"edgeAB", "edgeBC", "edgeCA"});
        c.analysis.normalization = Normalization::per_pi2;
    } else if (name == "clamped-equilateral") {
        c.triangle = TriangleGenerator{{Point(0.0, 0.5), Point(0.0, -0.5), Point(std::sqrt(3.0) / 2.0, 0.0)}, {1, 2, 3}};
        c.reference_length = 1.0;
        c.boundary = all_clamped({"edgeAB", "edgeBC", "edgeCA"});
        c.analysis.normalization = Normalization::per_pi2;
    } else if (name == "clamped-quad") {
        c.quad = QuadGenerator{{Point(0, 0), Point(1, 0), Point(0.7929, 0.7727), Point(0.2394, 0.6577)},
                               {{2, 2}, {4, 4}, {6, 6}, {8, 8}}};
        c.boundary = all_clamped({"edge12", "edge23", "edge34", "edge41"});
        c.analysis.normalization = Normalization::per_pi2;
    } else if (name == "cantilever-quad") {
        c.quad = QuadGenerator{{Point(0, 0), Point(1, 0), Point(1, 1), Point(0.433, 0.75)},
                               {{2, 2}, {4, 4}, {6, 6}, {8, 8}}};
        c.boundary = all_clamped({"edge12"});
        c.analysis.normalization = Normalization::per_pi2;
    } else {
        return std::nullopt;
    }
    return c;
}

/**
 * Random convex quadrilateral, counterclockwise, with interior angles of at
 * least 20 degrees and opposite edges at least 5 degrees from parallel.
 */
inline std::array<Point, 4> random_convex_quad(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi), rad(0.5, 1.5), off(-5.0, 5.0);
    const double min_turn = std::sin(20.0 * std::numbers::pi / 180.0);
    const double min_skew = std::sin(5.0 * std::numbers::pi / 180.0);
    for (;;) {
        std::array<double, 4> a{ang(rng), ang(rng), ang(rng), ang(rng)};
        std::sort(a.begin(), a.end());
        const Point shift(off(rng), off(rng));
        std::array<Point, 4> v;
        for (std::size_t k = 0; k < 4; ++k) {
            const double r = rad(rng);
            v[k] = shift + r * Point(std::cos(a[k]), std::sin(a[k]));
        }
        bool ok = true;
        for (std::size_t k = 0; k < 4 && ok; ++k) {
            const Eigen::Vector2d e0 = (v[(k + 1) % 4] - v[k]).normalized();
            const Eigen::Vector2d e1 = (v[(k + 2) % 4] - v[(k + 1) % 4]).normalized();
            ok = cross2(e0, e1) >= min_turn;
        }
        for (std::size_t k = 0; k < 2 && ok; ++k) {
            const Eigen::Vector2d e0 = (v[k + 1] - v[k]).normalized();
            const Eigen::Vector2d e1 = (v[(k + 3) % 4] - v[k + 2]).normalized();
            ok = std::abs(cross2(e0, e1)) >= min_skew;
        }
        if (ok) return v;
    }
}

/// Single random convex quadrilateral case, reproducible from the seed.
inline CaseFile random_quad_case(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    CaseFile c;
    c.name = "random-" + std::to_string(seed);
    c.quad = QuadGenerator{random_convex_quad(rng), {{1, 1}}};
    c.boundary = {{"edge12", BoundaryCondition::clamped}};
    return c;
}

/// Built-in name or path to a JSON case file.
inline CaseFile load_case(const std::string& spec) {
    if (auto c = builtin_case(spec)) return *c;
    std::ifstream in(spec);
    if (!in) throw InputError("'" + spec + "' is neither a built-in case nor a readable file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

// ---------------------------------------------------------------- reports

struct SectionRow {
    std::string scheme;
    bool fell_back = false;
    double area = 0, I_x1 = 0, I_x2 = 0, I_x1x2 = 0;
    double d_area = 0, d_I_x1 = 0, d_I_x2 = 0, d_I_x1x2 = 0; ///< computed minus exact
    bool operator==(const SectionRow&) const = default;
};

struct PoleRow {
    bool parallel = false;
    std::array<double, 2> xy{};
    std::array<double, 2> natural{};
    double roundtrip = 0; ///< |x_bilinear(natural) - xy|
    bool operator==(const PoleRow&) const = default;
};

struct SchemeCheckRow {
    std::string scheme;
    bool fell_back = false;
    std::string fallback_reason;
    double condition = 0;
    double partition_of_unity = 0;
    double kronecker = 0;
    double max_deviation = 0; ///< vs the bilinear map on a 9 x 9 grid
    bool operator==(const SchemeCheckRow&) const = default;
};

struct FrequencyRow {
    std::string mesh;
    std::string scheme;
    int mode = 0;
    double omega = 0, param_plain = 0, param_per_pi2 = 0;
    bool operator==(const FrequencyRow&) const = default;
};

struct ModeShape {
    std::string mesh;
    std::string scheme;
    int mode = 0;
    std::vector<std::array<double, 3>> points; ///< x y deflection
    bool operator==(const ModeShape&) const = default;
};

struct ComparisonRow {
    std::string mesh;
    int mode = 0;
    double first = 0, second = 0, rel_diff = 0;
    bool operator==(const ComparisonRow&) const = default;
};

struct Report {
    std::string command;
    std::string case_name;
    std::string scheme;
    int gauss = 3;
    std::string normalization = "plain";
    double reference_length = 1;
    std::vector<std::string> warnings;
    std::vector<SectionRow> sections;
    std::vector<PoleRow> poles;
    std::vector<SchemeCheckRow> checks;
    std::vector<FrequencyRow> frequencies;
    std::vector<ModeShape> shapes;
    std::vector<ComparisonRow> comparison;
    bool operator==(const Report&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SectionRow, scheme, fell_back, area, I_x1, I_x2, I_x1x2, d_area, d_I_x1, d_I_x2,
                                   d_I_x1x2)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PoleRow, parallel, xy, natural, roundtrip)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SchemeCheckRow, scheme, fell_back, fallback_reason, condition, partition_of_unity,
                                   kronecker, max_deviation)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FrequencyRow, mesh, scheme, mode, omega, param_plain, param_per_pi2)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ModeShape, mesh, scheme, mode, points)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ComparisonRow, mesh, mode, first, second, rel_diff)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Report, command, case_name, scheme, gauss, normalization, reference_length, warnings,
                                   sections, poles, checks, frequencies, shapes, comparison)

/// Overrides taken from the command line.
struct RunOptions {
    std::optional<SchemeKind> scheme;
    std::optional<int> gauss;
    std::optional<int> modes;
    unsigned threads = 1;
    bool shapes = false;
};

namespace detail {

inline AnalysisSettings effective(const CaseFile& c, const RunOptions& opt) {
    AnalysisSettings a = c.analysis;
    if (opt.scheme) a.scheme = *opt.scheme;
    if (opt.gauss) a.gauss = *opt.gauss;
    if (opt.modes) a.modes = *opt.modes;
    gauss_rule(a.gauss);
    if (a.modes < 1) throw InputError("modes must be >= 1");
    return a;
}

inline Report header(const std::string& command, const CaseFile& c, const AnalysisSettings& a) {
    Report r;
    r.command = command;
    r.case_name = c.name;
    r.scheme = std::string(to_string(a.scheme));
    r.gauss = a.gauss;
    r.normalization = std::string(to_string(a.normalization));
    r.reference_length = c.reference();
    return r;
}

/// The single quadrilateral of a case; multi-element input is rejected.
inline QuadGeometry single_quad(const CaseFile& c, Report& r) {
    std::optional<std::array<Point, 4>> v;
    if (c.quad && c.quad->divisions.size() == 1 && c.quad->divisions[0] == std::pair<int, int>{1, 1})
        v = c.quad->vertices;
    if (c.mesh && c.mesh->elements.size() == 1) {
        for (int idx : c.mesh->elements[0])
            if (idx < 0 || static_cast<std::size_t>(idx) >= c.mesh->nodes.size())
                throw InputError("element 0 references missing node " + std::to_string(idx));
        v = c.mesh->element_vertices(0);
    }
    if (!v) throw InputError("case '" + c.name + "' must describe exactly one quadrilateral element");
    const QuadGeometry q = QuadGeometry::from_vertices(*v);
    if (q.was_reordered()) r.warnings.push_back("clockwise vertices reordered to counterclockwise");
    return q;
}

/// Exact polygon area and second moments about the origin.
inline std::array<double, 4> polygon_moments(const std::array<Point, 4>& v) {
    double a = 0, ixx = 0, iyy = 0, ixy = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const Point& p = v[k];
        const Point& q = v[(k + 1) % 4];
        const double c = cross2(p, q);
        a += c / 2;
        ixx += c * (p.y() * p.y() + p.y() * q.y() + q.y() * q.y()) / 12;
        iyy += c * (p.x() * p.x() + p.x() * q.x() + q.x() * q.x()) / 12;
        ixy += c * (2 * p.x() * p.y() + p.x() * q.y() + q.x() * p.y() + 2 * q.x() * q.y()) / 24;
    }
    return {a, ixx, iyy, ixy};
}

} // namespace detail

inline constexpr std::array<SchemeKind, 3> all_schemes{SchemeKind::bilinear, SchemeKind::serendipity8,
                                                       SchemeKind::pascal6};

/// Area and second moments of a single quadrilateral under every interpolation scheme.
inline Report run_sectprops(const CaseFile& c, const RunOptions& opt = {}) {
    const AnalysisSettings a = detail::effective(c, opt);
    Report r = detail::header("sectprops", c, a);
    const QuadGeometry q = detail::single_quad(c, r);
    const auto exact = detail::polygon_moments(q.vertices());
    const GaussRule rule = gauss_rule(a.gauss);
    for (SchemeKind k : all_schemes) {
        const MappingScheme s = MappingScheme::build(q, k);
        const SectionProperties sp = section_properties(s, rule);
        r.sections.push_back({std::string(to_string(k)), s.fell_back(), sp.area, sp.I_x1, sp.I_x2, sp.I_x1x2,
                              sp.area - exact[0], sp.I_x1 - exact[1], sp.I_x2 - exact[2], sp.I_x1x2 - exact[3]});
        if (s.fell_back())
            r.warnings.push_back(std::string(to_string(k)) + " fell back to bilinear: " + s.fallback_reason());
    }
    return r;
}

/// Pole data, interpolation conditioning and shape-function residuals of a single quadrilateral.
inline Report run_mapcheck(const CaseFile& c, const RunOptions& opt = {}) {
    const AnalysisSettings a = detail::effective(c, opt);
    Report r = detail::header("mapcheck", c, a);
    const QuadGeometry q = detail::single_quad(c, r);
    const PoleSet cart = compute_poles_cartesian(q);
    PoleSet ps = cart;
    try {
        ps = compute_poles(q);
    } catch (const NumericalError& e) {
        r.warnings.push_back(std::string("pole natural coordinates: ") + e.what());
    }
    const GeneralizedParams g = bilinear_params(q);
    auto pole_row = [&](bool parallel, const Point& xy, const NaturalPoint& nat) {
        PoleRow row;
        row.parallel = parallel;
        if (!parallel) {
            row.xy = {xy.x(), xy.y()};
            if (ps.naturals_set) {
                row.natural = {nat.x(), nat.y()};
                row.roundtrip = (g.evaluate(nat) - xy).norm();
            }
        }
        return row;
    };
    r.poles.push_back(pole_row(ps.parallel[0], ps.p5_xy, ps.p5_nat));
    r.poles.push_back(pole_row(ps.parallel[1], ps.p6_xy, ps.p6_nat));
    if (ps.any_parallel()) r.warnings.push_back("opposite edges are parallel; pascal6 falls back to bilinear");

    const MappingScheme bil = MappingScheme::build(q, SchemeKind::bilinear);
    for (SchemeKind k : all_schemes) {
        const MappingScheme s = MappingScheme::build(q, k);
        SchemeCheckRow row;
        row.scheme = std::string(to_string(k));
        row.fell_back = s.fell_back();
        row.fallback_reason = s.fallback_reason();
        row.condition = s.condition();
        row.partition_of_unity = s.shapes().partition_of_unity_residual();
        row.kronecker = s.shapes().kronecker_residual();
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) {
                const NaturalPoint t(-1.0 + i * 0.25, -1.0 + j * 0.25);
                row.max_deviation =
                    std::max(row.max_deviation, (map_point_by_shapes(s, t) - map_point(bil, t)).norm());
            }
        r.checks.push_back(row);
    }
    return r;
}

namespace detail {

/// Deflection samples of one mode on a 5 x 5 natural grid per element.
inline std::vector<std::array<double, 3>> sample_mode(const Mesh& mesh, const Eigen::VectorXd& full,
                                                      SchemeKind kind) {
    std::vector<std::array<double, 3>> pts;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const MappingScheme s = MappingScheme::build(QuadGeometry::from_vertices(mesh.element_vertices(e)), kind);
        Vec12 global;
        for (int p = 0; p < 4; ++p)
            for (int c = 0; c < 3; ++c)
                global(3 * p + c) = full(3 * mesh.elements[e][static_cast<std::size_t>(p)] + c);
        const Vec12 natural = element_frame_transform(s) * global;
        for (int j = 0; j < 5; ++j)
            for (int i = 0; i < 5; ++i) {
                const NaturalPoint t(-1.0 + 0.5 * i, -1.0 + 0.5 * j);
                const Point x = map_point(s, t);
                pts.push_back({x.x(), x.y(), deflection_field_row(t).dot(natural)});
            }
    }
    return pts;
}

inline void modal_rows(const CaseFile& c, const AnalysisSettings& a, const RunOptions& opt, Report& r) {
    const double ref = c.reference();
    AssemblyOptions ao;
    ao.scheme = a.scheme;
    ao.gauss_order = a.gauss;
    ao.rotary = a.rotary;
    ao.threads = opt.threads;
    const std::string scheme(to_string(a.scheme));
    for (const auto& lm : c.meshes()) {
        AssemblyInfo info;
        const GlobalSystem full = assemble(lm.mesh, c.material, ao, &info);
        const GlobalSystem red = apply_bcs(full, lm.mesh);
        if (red.size() == 0) {
            r.warnings.push_back(lm.label + ": every DOF is constrained");
            continue;
        }
        const int k = static_cast<int>(std::min<Eigen::Index>(a.modes, red.size()));
        if (k < a.modes)
            r.warnings.push_back(lm.label + ": only " + std::to_string(k) + " DOFs, " + std::to_string(k) +
                                 " modes reported");
        if (info.fallbacks > 0)
            r.warnings.push_back(lm.label + ": " + std::to_string(info.fallbacks) +
                                 " element(s) fell back to bilinear");
        const ModalSpectrum sp = solve_modes(red, k);
        if (sp.infinite > 0)
            r.warnings.push_back(lm.label + ": " + std::to_string(sp.infinite) +
                                 " requested mode(s) lie at infinite frequency (singular mass)");
        for (Eigen::Index m = 0; m < sp.count(); ++m) {
            const double w = sp.omega(m);
            r.frequencies.push_back({lm.label, scheme, static_cast<int>(m + 1), w,
                                     frequency_parameter(w, ref, c.material, Normalization::plain),
                                     frequency_parameter(w, ref, c.material, Normalization::per_pi2)});
            if (opt.shapes)
                r.shapes.push_back({lm.label, scheme, static_cast<int>(m + 1),
                                    sample_mode(lm.mesh, red.expand(sp.modes.col(m)), a.scheme)});
        }
    }
}

} // namespace detail

/// Natural frequencies of every mesh in the case.
inline Report run_modal(const CaseFile& c, const RunOptions& opt = {}) {
    const AnalysisSettings a = detail::effective(c, opt);
    Report r = detail::header("modal", c, a);
    detail::modal_rows(c, a, opt, r);
    return r;
}

/// Modal runs under two schemes, matched by mesh and mode.
inline Report compare(const CaseFile& c, SchemeKind first, SchemeKind second, const RunOptions& opt = {}) {
    AnalysisSettings a = detail::effective(c, opt);
    Report r = detail::header("compare", c, a);
    r.scheme = std::string(to_string(first)) + "," + std::string(to_string(second));
    a.scheme = first;
    detail::modal_rows(c, a, opt, r);
    const std::size_t n1 = r.frequencies.size();
    a.scheme = second;
    detail::modal_rows(c, a, opt, r);
    const bool per_pi2 = a.normalization == Normalization::per_pi2;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = n1; j < r.frequencies.size(); ++j) {
            const auto& f1 = r.frequencies[i];
            const auto& f2 = r.frequencies[j];
            if (f1.mesh != f2.mesh || f1.mode != f2.mode) continue;
            const double p1 = per_pi2 ? f1.param_per_pi2 : f1.param_plain;
            const double p2 = per_pi2 ? f2.param_per_pi2 : f2.param_plain;
            const double scale = std::max(std::abs(p1), std::abs(p2));
            r.comparison.push_back({f1.mesh, f1.mode, p1, p2, scale > 0 ? (p2 - p1) / scale : 0.0});
        }
    return r;
}

// ---------------------------------------------------------------- emission

enum class Format { csv, json, plot };

inline Format parse_format(std::string_view s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    if (s == "plot") return Format::plot;
    throw InputError("unknown format '" + std::string(s) + "' (expected csv, json or plot)");
}

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

inline std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

} // namespace detail

inline void write_csv(const Report& r, std::ostream& os) {
    if (r.command == "sectprops") {
        os << "scheme,area,I_x1,I_x2,I_x1x2\n";
        for (const auto& s : r.sections)
            os << s.scheme << ',' << detail::fixed6(s.area) << ',' << detail::fixed6(s.I_x1) << ','
               << detail::fixed6(s.I_x2) << ',' << detail::fixed6(s.I_x1x2) << '\n';
        return;
    }
    if (r.command == "mapcheck") {
        os << "scheme,fell_back,condition,partition_of_unity,kronecker,max_deviation\n";
        for (const auto& s : r.checks)
            os << s.scheme << ',' << (s.fell_back ? 1 : 0) << ',' << detail::sci(s.condition) << ','
               << detail::sci(s.partition_of_unity) << ',' << detail::sci(s.kronecker) << ','
               << detail::sci(s.max_deviation) << '\n';
        return;
    }
    const bool tagged = r.command == "compare";
    os << "mesh,mode,omega,param_plain,param_per_pi2\n";
    for (const auto& f : r.frequencies)
        os << f.mesh << (tagged ? "/" + f.scheme : std::string()) << ',' << f.mode << ',' << detail::fixed6(f.omega)
           << ',' << detail::fixed6(f.param_plain) << ',' << detail::fixed6(f.param_per_pi2) << '\n';
}

inline void write_json(const Report& r, std::ostream& os) { os << json(r).dump(2) << '\n'; }

inline Report report_from_json(std::string_view text) {
    try {
        return json::parse(text).get<Report>();
    } catch (const json::exception& e) {
        throw InputError(std::string("report: ") + e.what());
    }
}

/// One "x y z" block per mode, blocks separated by blank lines.
inline void write_plot(const Report& r, std::ostream& os) {
    bool first = true;
    for (const auto& s : r.shapes) {
        if (!first) os << "\n\n";
        first = false;
        os << "# mesh " << s.mesh << " scheme " << s.scheme << " mode " << s.mode << '\n';
        for (const auto& p : s.points)
            os << detail::sci(p[0]) << ' ' << detail::sci(p[1]) << ' ' << detail::sci(p[2]) << '\n';
    }
}

inline void emit(const Report& r, Format f, std::ostream& os) {
    switch (f) {
    case Format::csv: write_csv(r, os); break;
    case Format::json: write_json(r, os); break;
    case Format::plot: write_plot(r, os); break;
    }
    if (!os) throw IoError("failed to write report");
}

/// Writes to `path`, or to standard output when path is empty or "-".
inline void emit(const Report& r, Format f, const std::string& path) {
    if (path.empty() || path == "-") {
        emit(r, f, std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    emit(r, f, out);
    out.close();
    if (!out) throw IoError("failed to write '" + path + "'");
}

} // namespace quadplate::io
