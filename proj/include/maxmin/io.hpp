#ifndef MAXMIN_IO_HPP
#define MAXMIN_IO_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "maxmin/contour.hpp"
#include "maxmin/equilibrium.hpp"
#include "maxmin/error.hpp"
#include "maxmin/field.hpp"
#include "maxmin/grid.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { fail(ErrorKind::ConfigError, what); }

inline const json& need(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key))
        config_error(where + ": missing key '" + key + "'");
    return j.at(key);
}

} // namespace detail

/// [re, im] or a bare real number.
inline cplx complex_from_json(const json& j)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    detail::config_error("expected a number or [re, im], got " + j.dump());
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline std::vector<cplx> complex_list(const json& j)
{
    if (!j.is_array())
        detail::config_error("expected an array of points, got " + j.dump());
    std::vector<cplx> out;
    for (const auto& v : j)
        out.push_back(complex_from_json(v));
    return out;
}

inline json complex_list_to_json(std::span<const cplx> zs)
{
    json a = json::array();
    for (cplx z : zs)
        a.push_back(complex_to_json(z));
    return a;
}

// ---- field ----

/// {"P": [c0, c1, ...], "poles": [{"at": z, "order": m}], "logs": [{"at": z, "weight": rho}],
///  "allow_real_log_weights": bool}
inline ExternalField field_from_json(const json& j)
{
    if (!j.is_object())
        detail::config_error("field must be an object");
    std::vector<cplx> p = j.contains("P") ? complex_list(j.at("P")) : std::vector<cplx>{};
    std::vector<PoleFactor> poles;
    if (j.contains("poles"))
        for (const auto& q : j.at("poles")) {
            const int order = q.value("order", 1);
            poles.push_back({complex_from_json(detail::need(q, "at", "field.poles")), order});
        }
    std::vector<LogTerm> logs;
    if (j.contains("logs"))
        for (const auto& l : j.at("logs"))
            logs.push_back({complex_from_json(detail::need(l, "at", "field.logs")),
                            complex_from_json(detail::need(l, "weight", "field.logs"))});
    FieldOptions opt;
    opt.allow_real_log_weights = j.value("allow_real_log_weights", false);
    return ExternalField(std::move(p), std::move(poles), std::move(logs), opt);
}

inline json field_to_json(const ExternalField& f)
{
    json j;
    j["P"] = complex_list_to_json(f.p().coeffs());
    j["poles"] = json::array();
    for (const auto& q : f.poles())
        j["poles"].push_back({{"at", complex_to_json(q.location)}, {"order", q.order}});
    j["logs"] = json::array();
    for (const auto& l : f.log_terms())
        j["logs"].push_back({{"at", complex_to_json(l.location)}, {"weight", complex_to_json(l.weight)}});
    return j;
}

// ---- triple ----

/// {"C": [z, ...], "P_C": [[i, ...], ...], "Psi": {"block": [sector, ...]}, "P_Theta": [[j, ...], ...]}.
/// Blocks of P_C without a Psi entry map to no sector.
inline AdmissibleTriple triple_from_json(const json& j, std::vector<cplx>* fixed = nullptr)
{
    if (!j.is_object())
        detail::config_error("triple must be an object");
    auto partition = [&](const char* key) {
        Partition p;
        if (!j.contains(key))
            return p;
        const json& v = j.at(key);
        if (!v.is_array())
            detail::config_error(std::string("triple.") + key + " must be an array of blocks");
        for (const auto& b : v) {
            if (!b.is_array())
                detail::config_error(std::string("triple.") + key + " blocks must be arrays of indices");
            Block blk;
            for (const auto& x : b) {
                if (!x.is_number_integer())
                    detail::config_error(std::string("triple.") + key + " indices must be integers");
                blk.push_back(x.get<int>());
            }
            p.push_back(std::move(blk));
        }
        return p;
    };
    AdmissibleTriple t;
    t.c_partition = partition("P_C");
    t.theta_partition = partition("P_Theta");
    t.psi.assign(t.c_partition.size(), {});
    if (j.contains("Psi")) {
        const json& psi = j.at("Psi");
        if (!psi.is_object())
            detail::config_error("triple.Psi must map block indices to sector lists");
        for (const auto& [key, val] : psi.items()) {
            std::size_t b = 0;
            try {
                b = std::stoul(key);
            }
            catch (const std::exception&) {
                detail::config_error("triple.Psi key '" + key + "' is not a block index");
            }
            if (b >= t.psi.size())
                detail::config_error("triple.Psi refers to missing block " + key);
            for (const auto& x : val) {
                if (!x.is_number_integer())
                    detail::config_error("triple.Psi sectors must be integers");
                t.psi[b].push_back(x.get<int>());
            }
        }
    }
    if (fixed && j.contains("C"))
        *fixed = complex_list(j.at("C"));
    return t;
}

inline json triple_to_json(const AdmissibleTriple& t, std::span<const cplx> fixed)
{
    json j;
    j["C"] = complex_list_to_json(fixed);
    j["P_C"] = t.c_partition;
    j["Psi"] = json::object();
    for (std::size_t b = 0; b < t.psi.size(); ++b)
        if (!t.psi[b].empty())
            j["Psi"][std::to_string(b)] = t.psi[b];
    j["P_Theta"] = t.theta_partition;
    return j;
}

// ---- contour ----

inline Component component_from_json(const json& j)
{
    Component c;
    c.vertices = complex_list(detail::need(j, "vertices", "contour component"));
    auto ray = [&](const char* key) -> std::optional<RayTail> {
        if (!j.contains(key) || j.at(key).is_null())
            return std::nullopt;
        const json& r = j.at(key);
        return RayTail{complex_from_json(detail::need(r, "direction", key)), r.value("sector", -1)};
    };
    c.head = ray("head");
    c.tail = ray("tail");
    if (j.contains("pins"))
        for (const auto& p : j.at("pins")) {
            if (!p.is_array() || p.size() != 2)
                detail::config_error("pins are [vertex, fixed point] pairs");
            c.pins.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
        }
    return c;
}

/// A JSON array of components; {"segment": [a, b], "pieces": n} stands for the
/// straight polyline with n pieces, and its pins use that polyline's vertex indices.
inline Contour contour_from_json(const json& j)
{
    if (!j.is_array())
        detail::config_error("contour must be an array of components");
    Contour g;
    for (const auto& c : j) {
        if (c.is_object() && c.contains("segment")) {
            const auto ends = complex_list(c.at("segment"));
            if (ends.size() != 2)
                detail::config_error("segment needs two end points");
            json expanded = c;
            expanded.erase("segment");
            expanded.erase("pieces");
            expanded["vertices"] = complex_list_to_json(segment(ends[0], ends[1], c.value("pieces", std::size_t{1})).vertices);
            g.components.push_back(component_from_json(expanded));
        }
        else
            g.components.push_back(component_from_json(c));
    }
    return g;
}

inline json contour_to_json(const Contour& g)
{
    json a = json::array();
    for (const auto& c : g.components) {
        json j;
        j["vertices"] = complex_list_to_json(c.vertices);
        for (const auto& [key, r] : {std::pair{"head", &c.head}, std::pair{"tail", &c.tail}})
            if (*r)
                j[key] = {{"direction", complex_to_json((*r)->direction)}, {"sector", (*r)->sector}};
        if (!c.pins.empty()) {
            j["pins"] = json::array();
            for (const auto& p : c.pins)
                j["pins"].push_back({p.vertex, p.fixed});
        }
        a.push_back(std::move(j));
    }
    return a;
}

// ---- config ----

struct SolverConfig {
    std::size_t n = 400;
    double tol_crit = 1e-3;
    std::size_t max_iter = 200;
    int basis_size = 20;
    std::vector<int> refine_sizes;
    double gram_shift = 1e-2;
};

struct Config {
    json raw;
    std::optional<ExternalField> field;
    std::vector<cplx> fixed_points;
    std::optional<AdmissibleTriple> triple;
    std::optional<Contour> contour;
    SolverConfig solver;
    std::optional<Window> window;
    double forbidden_m = 0.0;
    double forbidden_margin = 8.0;
    bool has_forbidden = false;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    /// Quadratic differential given directly as numerator / denominator coefficients.
    std::optional<std::pair<std::vector<cplx>, std::vector<cplx>>> quadratic;
};

inline Config config_from_json(const json& j)
{
    if (!j.is_object())
        detail::config_error("config must be a JSON object");
    static const std::vector<std::string> known{"field",     "fixed_points", "triple", "solver",    "window",
                                                "forbidden", "seed",         "contour", "epsilon", "quadratic",
                                                "comment"};
    for (const auto& [key, val] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            detail::config_error("unknown config key '" + key + "'");
    Config c;
    c.raw = j;
    if (j.contains("field"))
        c.field = field_from_json(j.at("field"));
    if (j.contains("fixed_points"))
        c.fixed_points = complex_list(j.at("fixed_points"));
    if (j.contains("triple")) {
        std::vector<cplx> from_triple;
        const bool has_c = j.at("triple").is_object() && j.at("triple").contains("C");
        c.triple = triple_from_json(j.at("triple"), &from_triple);
        if (has_c) {
            if (j.contains("fixed_points") && from_triple != c.fixed_points)
                detail::config_error("triple.C and fixed_points disagree");
            c.fixed_points = from_triple;
        }
    }
    if (j.contains("contour"))
        c.contour = contour_from_json(j.at("contour"));
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        c.solver.n = s.value("n", c.solver.n);
        c.solver.tol_crit = s.value("tol_crit", c.solver.tol_crit);
        c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
        c.solver.basis_size = s.value("basis_size", c.solver.basis_size);
        c.solver.refine_sizes = s.value("refine_sizes", c.solver.refine_sizes);
        c.solver.gram_shift = s.value("gram_shift", c.solver.gram_shift);
        if (c.solver.n < 4 || !(c.solver.tol_crit > 0.0))
            detail::config_error("solver needs n >= 4 and tol_crit > 0");
    }
    if (j.contains("window")) {
        const json& w = j.at("window");
        Window win;
        win.xmin = detail::need(w, "xmin", "window").get<double>();
        win.xmax = detail::need(w, "xmax", "window").get<double>();
        win.ymin = detail::need(w, "ymin", "window").get<double>();
        win.ymax = detail::need(w, "ymax", "window").get<double>();
        win.resolution = w.value("resolution", 200);
        win.validate();
        c.window = win;
    }
    if (j.contains("forbidden")) {
        c.has_forbidden = true;
        c.forbidden_m = detail::need(j.at("forbidden"), "M", "forbidden").get<double>();
        c.forbidden_margin = j.at("forbidden").value("margin", 8.0);
    }
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("quadratic")) {
        const json& q = j.at("quadratic");
        c.quadratic = std::pair{complex_list(detail::need(q, "numerator", "quadratic")),
                                q.contains("denominator") ? complex_list(q.at("denominator"))
                                                          : std::vector<cplx>{1.0}};
    }
    if (c.field) {
        const double half = pi / (2.0 * c.field->n());
        c.epsilon = j.value("epsilon", 0.25 * half);
    }
    return c;
}

inline Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        detail::config_error("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    }
    catch (const json::exception& e) {
        detail::config_error(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return config_from_json(j);
    }
    catch (const json::exception& e) {
        detail::config_error(std::string("config has a value of the wrong type: ") + e.what());
    }
}

// ---- files ----

inline std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i)
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return out.str();
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Writes files into one directory and remembers their hashes.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    const std::filesystem::path& path() const { return dir_; }

    void write(const std::string& name, const std::string& content)
    {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << content;
        if (!out)
            fail(ErrorKind::ConfigError, "cannot write " + (dir_ / name).string());
        files_.push_back({name, sha256_hex(content)});
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    json file_list() const
    {
        json a = json::array();
        for (const auto& [name, hash] : files_)
            a.push_back({{"name", name}, {"sha256", hash}});
        return a;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

inline std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

inline std::string contour_csv(const Contour& g, double ray_length = 0.0)
{
    std::ostringstream s;
    s << "x,y,component_id\n";
    for (std::size_t k = 0; k < g.components.size(); ++k) {
        const auto& c = g.components[k];
        if (c.head && ray_length > 0.0) {
            const cplx z = c.vertices.front() + ray_length * c.head_direction();
            s << fmt(z.real()) << ',' << fmt(z.imag()) << ',' << k << '\n';
        }
        for (cplx z : c.vertices)
            s << fmt(z.real()) << ',' << fmt(z.imag()) << ',' << k << '\n';
        if (c.tail && ray_length > 0.0) {
            const cplx z = c.vertices.back() + ray_length * c.tail_direction();
            s << fmt(z.real()) << ',' << fmt(z.imag()) << ',' << k << '\n';
        }
    }
    return s.str();
}

inline std::string measure_csv(const DiscreteMeasure& mu)
{
    std::ostringstream s;
    s << "x,y,weight\n";
    for (std::size_t k = 0; k < mu.size(); ++k)
        s << fmt(mu.nodes[k].real()) << ',' << fmt(mu.nodes[k].imag()) << ',' << fmt(mu.weights[k]) << '\n';
    return s.str();
}

inline std::string level_set_csv(const std::vector<LevelCurve>& curves)
{
    std::ostringstream s;
    s << "x,y,curve_id,kind\n";
    for (std::size_t k = 0; k < curves.size(); ++k)
        for (cplx z : curves[k].points)
            s << fmt(z.real()) << ',' << fmt(z.imag()) << ',' << k << ',' << to_string(curves[k].kind) << '\n';
    return s.str();
}

/// Minimal SVG canvas in plane coordinates (y up).
class Svg {
public:
    Svg(double xmin, double xmax, double ymin, double ymax, int pixels = 600)
        : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), px_(pixels)
    {
        scale_ = px_ / std::max(xmax_ - xmin_, ymax_ - ymin_);
    }

    explicit Svg(const Window& w, int pixels = 600) : Svg(w.xmin, w.xmax, w.ymin, w.ymax, pixels) {}

    void polyline(std::span<const cplx> pts, const std::string& colour, double width = 1.5, bool closed = false)
    {
        if (pts.empty())
            return;
        body_ << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"" << width << "\" points=\"";
        for (cplx z : pts)
            body_ << x(z) << ',' << y(z) << ' ';
        if (closed)
            body_ << x(pts.front()) << ',' << y(pts.front());
        body_ << "\"/>\n";
    }

    void dot(cplx z, double r, const std::string& colour)
    {
        body_ << "<circle cx=\"" << x(z) << "\" cy=\"" << y(z) << "\" r=\"" << r << "\" fill=\"" << colour << "\"/>\n";
    }

    void cross(cplx z, double r, const std::string& colour)
    {
        body_ << "<path stroke=\"" << colour << "\" stroke-width=\"1.5\" d=\"M" << x(z) - r << ',' << y(z) - r << " L"
              << x(z) + r << ',' << y(z) + r << " M" << x(z) - r << ',' << y(z) + r << " L" << x(z) + r << ','
              << y(z) - r << "\"/>\n";
    }

    void cell(cplx z, double w, double h, const std::string& colour)
    {
        body_ << "<rect x=\"" << x(z) - 0.5 * w * scale_ << "\" y=\"" << y(z) - 0.5 * h * scale_ << "\" width=\""
              << w * scale_ << "\" height=\"" << h * scale_ << "\" fill=\"" << colour << "\"/>\n";
    }

    void contour(const Contour& g, const std::string& colour, double ray_length)
    {
        for (const auto& c : g.components) {
            polyline(c.vertices, colour);
            if (c.head)
                polyline(std::vector<cplx>{c.vertices.front(), c.vertices.front() + ray_length * c.head_direction()},
                         colour);
            if (c.tail)
                polyline(std::vector<cplx>{c.vertices.back(), c.vertices.back() + ray_length * c.tail_direction()},
                         colour);
        }
    }

    std::string str() const
    {
        std::ostringstream s;
        const double w = (xmax_ - xmin_) * scale_;
        const double h = (ymax_ - ymin_) * scale_;
        s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
          << w << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
          << body_.str() << "</svg>\n";
        return s.str();
    }

private:
    double x(cplx z) const { return (z.real() - xmin_) * scale_; }
    double y(cplx z) const { return (ymax_ - z.imag()) * scale_; }

    double xmin_, xmax_, ymin_, ymax_;
    int px_;
    double scale_ = 1.0;
    std::ostringstream body_;
};

} // namespace maxmin

#endif
