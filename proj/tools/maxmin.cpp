#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "maxmin/io.hpp"
#include "maxmin/maxmin.hpp"

using namespace maxmin;

namespace {

constexpr const char* version = "0.1.0";

struct Thresholds {
    double el = 5e-3;
    double s_property = 5e-3;
    double spectral = 5e-2;
    double lead = 5e-2;
    double tv = 2e-2;
};

struct Run {
    Config cfg;
    std::string config_text;
    std::string command;
    OutputDir out;
    json result = json::object();
    int threads = 1;

    const ExternalField& field() const
    {
        if (!cfg.field)
            fail(ErrorKind::ConfigError, "config has no field");
        return *cfg.field;
    }
    SectorSet sectors() const { return admissible_sectors(field(), cfg.epsilon); }
    const AdmissibleTriple& triple() const
    {
        if (!cfg.triple)
            fail(ErrorKind::ConfigError, "config has no triple");
        return *cfg.triple;
    }
    const Contour& contour() const
    {
        if (!cfg.contour)
            fail(ErrorKind::ConfigError, "config has no contour");
        return *cfg.contour;
    }
    const Window& window() const
    {
        if (!cfg.window)
            fail(ErrorKind::ConfigError, "config has no window");
        return *cfg.window;
    }
    double ray_length() const
    {
        if (cfg.window)
            return 2.0 * std::max({std::abs(cfg.window->xmin), std::abs(cfg.window->xmax), std::abs(cfg.window->ymin),
                                   std::abs(cfg.window->ymax)});
        return 10.0;
    }
    Svg canvas() const
    {
        if (cfg.window)
            return Svg(*cfg.window);
        return Svg(-5, 5, -5, 5);
    }
};

/// Fails with a config error naming every violated condition.
void check_triple(Run& run)
{
    const FixedPointSet fixed(run.cfg.fixed_points, run.field());
    const Report r = validate_triple(run.triple(), run.sectors(), fixed);
    if (r.ok())
        return;
    std::string names;
    for (const auto& v : r.violations)
        names += (names.empty() ? "" : ", ") + v.condition;
    fail(ErrorKind::ConfigError, "triple is not admissible: " + names);
}

json violations_json(const Report& r)
{
    json a = json::array();
    for (const auto& v : r.violations)
        a.push_back({{"condition", v.condition}, {"detail", v.detail}});
    return a;
}

json measure_summary(const EquilibriumResult& e, const ExternalField* field)
{
    const auto el = euler_lagrange_residual(e.mu, e.ell, field);
    std::size_t active = 0;
    for (double w : e.mu.weights)
        active += w > 0.0;
    return {{"energy", e.energy},
            {"weighted_energy", e.weighted_energy},
            {"ell", e.ell},
            {"iterations", e.iterations},
            {"nodes", e.mu.size()},
            {"active_nodes", active},
            {"el_residual_on_support", el.sup_on_support},
            {"el_deficit_off_support", el.deficit_off_support}};
}

AscentOptions ascent_options(const Run& run, const GridMask* forbidden)
{
    AscentOptions opt;
    opt.n = run.cfg.solver.n;
    opt.tol_crit = run.cfg.solver.tol_crit;
    opt.max_iter = run.cfg.solver.max_iter;
    opt.basis_size = run.cfg.solver.basis_size;
    opt.refine_sizes = run.cfg.solver.refine_sizes;
    opt.gram_shift = run.cfg.solver.gram_shift;
    opt.forbidden = forbidden;
    return opt;
}

struct Stage {
    EquilibriumResult eq;
    std::optional<AscentResult> ascent;
    Contour contour;
};

/// The ascent when a triple is given, otherwise the plain solve on the contour.
Stage measure_stage(Run& run, bool write)
{
    Stage st;
    const ExternalField& f = run.field();
    if (run.cfg.triple) {
        check_triple(run);
        std::optional<GridMask> forbidden;
        if (run.cfg.has_forbidden)
            forbidden = forbidden_region(f, run.sectors(), run.cfg.forbidden_m, run.cfg.forbidden_margin, run.window());
        AscentResult a = maxmin_ascent(run.triple(), f, run.cfg.fixed_points, run.sectors(), run.contour(),
                                       ascent_options(run, forbidden ? &*forbidden : nullptr));
        st.eq = a.equilibrium;
        st.contour = a.contour;
        if (write) {
            std::string log;
            for (const auto& s : a.log) {
                json line = {{"iter", s.iter},          {"I_phi", s.energy},     {"criticality", s.criticality},
                             {"el_residual", s.el_residual}, {"step", s.step}, {"basis_size", s.basis_size},
                             {"mesh", s.mesh}};
                log += line.dump() + "\n";
            }
            run.out.write("ascent.jsonl", log);
        }
        st.ascent = std::move(a);
    }
    else {
        run.contour().validate(run.cfg.fixed_points);
        SolveOptions so;
        st.eq = equilibrium_measure(run.contour(), &f, run.cfg.solver.n, so);
        st.contour = run.contour();
    }
    if (write) {
        run.out.write("measure.csv", measure_csv(st.eq.mu));
        run.out.write("contour.csv", contour_csv(st.contour, run.ray_length()));
        run.out.write_json("contour.json", contour_to_json(st.contour));
        Svg svg = run.canvas();
        svg.contour(st.contour, "#888888", run.ray_length());
        double wmax = 0.0;
        for (double w : st.eq.mu.weights)
            wmax = std::max(wmax, w);
        for (std::size_t k = 0; k < st.eq.mu.size(); ++k)
            if (st.eq.mu.weights[k] > 0.0)
                svg.dot(st.eq.mu.nodes[k], 1.0 + 2.0 * st.eq.mu.weights[k] / wmax, "#c03030");
        for (cplx c : run.cfg.fixed_points)
            svg.cross(c, 4, "black");
        run.out.write(run.cfg.triple ? "maxmin.svg" : "equilibrium.svg", svg.str());
    }
    return st;
}

json ascent_summary(const Stage& st, const ExternalField& f)
{
    json j = measure_summary(st.eq, &f);
    if (st.ascent) {
        j["criticality"] = st.ascent->criticality;
        j["converged"] = st.ascent->converged;
        j["stop_reason"] = st.ascent->stop_reason;
        j["outer_iterations"] = st.ascent->log.size();
        j["s_property"] = s_property_residual(st.eq.mu, &f).residual;
    }
    return j;
}

json curve_json(const SpectralCurve& c, const DiscreteMeasure& mu, const ExternalField& f, std::span<const cplx> fixed)
{
    json j;
    j["numerator"] = complex_list_to_json(c.numerator.coeffs());
    j["denominator"] = complex_list_to_json(c.denominator.coeffs());
    j["poles"] = json::array();
    for (const auto& p : c.poles)
        j["poles"].push_back({{"at", complex_to_json(p.location)}, {"order", p.order},
                              {"fitted_order", c.pole_order(p.location)}});
    j["fit_residual"] = c.fit_residual;
    j["condition"] = c.condition;
    j["leading"] = complex_to_json(c.leading());
    j["expected_leading"] = complex_to_json(c.expected_lead);
    j["leading_error"] = leading_coefficient_error(c);
    j["residual"] = spectral_residual(c, mu, &f, spectral_probes(mu, &f, fixed));
    return j;
}

int cmd_validate(Run& run)
{
    const FixedPointSet fixed(run.cfg.fixed_points, run.field());
    const Report r = validate_triple(run.triple(), run.sectors(), fixed);
    run.result["valid"] = r.ok();
    run.result["violations"] = violations_json(r);
    run.result["triple"] = triple_to_json(run.triple(), run.cfg.fixed_points);
    for (const auto& v : r.violations)
        std::cerr << "violated: " << v.condition << " (" << v.detail << ")\n";
    return r.ok() ? 0 : 2;
}

int cmd_sectors(Run& run)
{
    const SectorSet s = run.sectors();
    run.result["N"] = s.size();
    run.result["angles"] = s.angles;
    run.result["half_width"] = s.half_width;
    run.result["epsilon"] = s.epsilon;
    run.result["growth_verified"] = s.growth_verified;
    Svg svg = run.canvas();
    for (int j = 0; j < s.size(); ++j)
        for (double side : {-1.0, 0.0, 1.0}) {
            const cplx d = std::polar(1.0, s.angles[static_cast<std::size_t>(j)] + side * s.half_width);
            svg.polyline(std::vector<cplx>{0.0, run.ray_length() * d}, side == 0.0 ? "#c03030" : "#3060c0",
                         side == 0.0 ? 1.5 : 0.75);
        }
    run.out.write("sectors.svg", svg.str());
    return 0;
}

int cmd_levelset(Run& run, double m)
{
    const auto curves = level_set(run.field(), run.sectors(), m, run.window());
    run.out.write("levelset.csv", level_set_csv(curves));
    json a = json::array();
    std::size_t unbounded = 0;
    for (const auto& c : curves) {
        unbounded += c.kind == CurveKind::Unbounded;
        a.push_back({{"kind", to_string(c.kind)},
                     {"closed", c.closed},
                     {"points", c.points.size()},
                     {"sector_a", c.sector_a},
                     {"sector_b", c.sector_b}});
    }
    run.result["M"] = m;
    run.result["curves"] = a;
    run.result["unbounded_curves"] = unbounded;
    Svg svg(run.window());
    for (const auto& c : curves)
        svg.polyline(c.points, c.kind == CurveKind::Unbounded ? "#3060c0" : "#c03030", 1.5, c.closed);
    run.out.write("levelset.svg", svg.str());
    return 0;
}

int cmd_measure(Run& run)
{
    const Stage st = measure_stage(run, true);
    run.result = ascent_summary(st, run.field());
    return 0;
}

int cmd_spectral(Run& run)
{
    const Stage st = measure_stage(run, true);
    const auto curve = fit_from_measure(st.eq.mu, run.field(), run.cfg.fixed_points);
    run.result["measure"] = ascent_summary(st, run.field());
    run.result["curve"] = curve_json(curve, st.eq.mu, run.field(), run.cfg.fixed_points);
    return 0;
}

int cmd_trace(Run& run)
{
    SpectralCurve curve;
    if (run.cfg.quadratic)
        curve = rational_curve(Polynomial(run.cfg.quadratic->first), Polynomial(run.cfg.quadratic->second));
    else {
        const Stage st = measure_stage(run, false);
        curve = fit_from_measure(st.eq.mu, run.field(), run.cfg.fixed_points);
        run.result["curve"] = curve_json(curve, st.eq.mu, run.field(), run.cfg.fixed_points);
    }
    const CriticalGraph g = critical_graph(curve);
    std::string csv = "x,y,trajectory_id\n";
    json index = json::array();
    for (std::size_t k = 0; k < g.trajectories.size(); ++k) {
        const auto& t = g.trajectories[k];
        for (cplx z : t.points)
            csv += fmt(z.real()) + "," + fmt(z.imag()) + "," + std::to_string(k) + "\n";
        index.push_back({{"id", k},
                         {"start", complex_to_json(t.points.front())},
                         {"end", complex_to_json(t.points.back())},
                         {"end_kind", to_string(t.end)},
                         {"start_point", t.start_point},
                         {"end_point", t.end_point},
                         {"escape_direction", t.escape_direction},
                         {"length", t.length},
                         {"drift", t.drift}});
    }
    json pts = json::array();
    for (const auto& p : g.classification.points)
        pts.push_back({{"at", complex_to_json(p.point)},
                       {"order", p.order},
                       {"kind", to_string(p.kind)},
                       {"directions", p.directions},
                       {"regime", to_string(p.regime)}});
    run.out.write("trajectories.csv", csv);
    run.result["critical_points"] = pts;
    run.result["infinity_order"] = g.classification.infinity_order;
    run.result["infinity_directions"] = g.classification.infinity_directions;
    run.result["trajectories"] = index;
    run.result["finite_trajectories"] = g.finite().size();
    run.result["escaping_trajectories"] = g.escaping();
    Svg svg = run.canvas();
    for (const auto& t : g.trajectories)
        svg.polyline(t.points, t.end == TraceEnd::Escape ? "#3060c0" : "#c03030");
    for (const auto& p : g.classification.points) {
        if (p.order > 0)
            svg.dot(p.point, 3, "black");
        else
            svg.cross(p.point, 4, "black");
    }
    run.out.write("graph.svg", svg.str());
    return 0;
}

struct Reconstruction {
    LambdaRegion lambda;
    Contour gamma0;
    Report membership;
    EquilibriumResult resolved;
    double tv = 0.0;
};

Reconstruction reconstruct(Run& run, const Stage& st, bool write)
{
    const ExternalField& f = run.field();
    Reconstruction r;
    r.lambda = lambda_region(st.eq.mu, st.eq.ell, f, run.sectors(), run.window());
    r.gamma0 = build_gamma0(r.lambda.mask, st.eq.mu, run.triple(), run.sectors(), run.cfg.fixed_points,
                            r.lambda.radius);
    r.membership = membership(r.gamma0, run.triple(), run.sectors(), run.cfg.fixed_points,
                              r.gamma0.clearance_radius());
    double len0 = 0.0;
    double len1 = 0.0;
    for (const auto& c : st.contour.components)
        len0 += c.length();
    for (const auto& c : r.gamma0.components)
        len1 += c.length();
    // same cell length as the measure being rebuilt
    const std::size_t n1 = std::max<std::size_t>(
        8, static_cast<std::size_t>(std::lround(static_cast<double>(run.cfg.solver.n) * len1 / len0)));
    r.resolved = equilibrium_measure(r.gamma0, &f, n1);
    r.tv = node_total_variation(st.eq.mu, r.resolved.mu, 2.0 * len0 / static_cast<double>(run.cfg.solver.n));
    if (write) {
        run.out.write_json("gamma0.json", contour_to_json(r.gamma0));
        run.out.write("gamma0.csv", contour_csv(r.gamma0, run.ray_length()));
        Svg svg(run.window());
        const Window& w = run.window();
        for (int j = 0; j < w.ny(); ++j)
            for (int i = 0; i < w.nx(); ++i)
                if (r.lambda.mask.at(i, j))
                    svg.cell(w.point(i, j), w.dx(), w.dy(), "#dde8f8");
        svg.contour(r.gamma0, "#c03030", run.ray_length());
        run.out.write("gamma0.svg", svg.str());
    }
    return r;
}

int cmd_construct(Run& run)
{
    const Stage st = measure_stage(run, true);
    const Reconstruction r = reconstruct(run, st, true);
    run.result["measure"] = ascent_summary(st, run.field());
    run.result["lambda_radius"] = r.lambda.radius;
    run.result["lambda_components"] = r.lambda.components;
    run.result["gamma0_components"] = r.gamma0.components.size();
    run.result["member"] = r.membership.ok();
    run.result["violations"] = violations_json(r.membership);
    run.result["resolved"] = measure_summary(r.resolved, &run.field());
    run.result["total_variation"] = r.tv;
    return r.membership.ok() ? 0 : 1;
}

int cmd_verify(Run& run)
{
    const Thresholds th;
    const ExternalField& f = run.field();
    const Stage st = measure_stage(run, true);
    json checks = json::array();
    bool all = true;
    auto check = [&](const std::string& name, double value, double limit) {
        const bool ok = std::isfinite(value) && value <= limit;
        all = all && ok;
        checks.push_back({{"name", name}, {"value", value}, {"threshold", limit}, {"pass", ok}});
    };
    const auto el = euler_lagrange_residual(st.eq.mu, st.eq.ell, &f);
    check("el_residual", el.sup_on_support, th.el);
    if (st.ascent) {
        check("criticality", st.ascent->criticality, run.cfg.solver.tol_crit);
        check("s_property", s_property_residual(st.eq.mu, &f).residual, th.s_property);
    }
    const auto curve = fit_from_measure(st.eq.mu, f, run.cfg.fixed_points);
    check("spectral_residual", spectral_residual(curve, st.eq.mu, &f, spectral_probes(st.eq.mu, &f, run.cfg.fixed_points)),
          th.spectral);
    check("leading_coefficient", leading_coefficient_error(curve), th.lead);
    if (run.cfg.triple && run.cfg.window) {
        const Reconstruction r = reconstruct(run, st, true);
        checks.push_back({{"name", "gamma0_membership"}, {"pass", r.membership.ok()}});
        all = all && r.membership.ok();
        check("reconstruction_tv", r.tv, th.tv);
    }
    run.result["checks"] = checks;
    run.result["pass"] = all;
    return all ? 0 : 1;
}

bool config_kind(ErrorKind k)
{
    switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidField:
    case ErrorKind::BadEpsilon:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::InvalidFixedPoints:
    case ErrorKind::InvalidContour:
    case ErrorKind::InitInvalid:
    case ErrorKind::SingularPoint: return true;
    default: return false;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Max-min contours for logarithmic energy in semiclassical external fields"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = "out";
    int threads = 1;
    double level = 15.0;
    app.add_option("--threads", threads, "Worker cap for grid evaluations")->check(CLI::PositiveNumber);
    const std::vector<std::pair<std::string, std::string>> commands{
        {"validate", "Check the admissible triple"},
        {"sectors", "Admissible sectors at infinity"},
        {"levelset", "Level curves phi = -M and their types"},
        {"equilibrium", "Equilibrium measure on the configured contour"},
        {"maxmin", "Steepest ascent of the equilibrium energy"},
        {"spectral", "Fit of the spectral curve"},
        {"trace", "Critical graph of the quadratic differential"},
        {"construct", "Rebuild the contour through the strict region"},
        {"verify", "All residual checks with a single verdict"}};
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* s = app.add_subcommand(name, help);
        s->add_option("config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
        s->add_option("-o,--out", out_dir, "Output directory");
        if (name == "levelset")
            s->add_option("--M", level, "Level depth M > 0");
        subs.push_back(s);
    }
    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    std::string command;
    for (auto* s : subs)
        if (s->parsed())
            command = s->get_name();

    thread_limit() = threads;
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<Run> run;
    int code = 0;
    try {
        run.emplace(Run{load_config(config_path), read_file(config_path), command, OutputDir(out_dir)});
        run->threads = threads;
        if (command == "validate")
            code = cmd_validate(*run);
        else if (command == "sectors")
            code = cmd_sectors(*run);
        else if (command == "levelset")
            code = cmd_levelset(*run, level);
        else if (command == "equilibrium" || command == "maxmin")
            code = cmd_measure(*run);
        else if (command == "spectral")
            code = cmd_spectral(*run);
        else if (command == "trace")
            code = cmd_trace(*run);
        else if (command == "construct")
            code = cmd_construct(*run);
        else
            code = cmd_verify(*run);
    }
    catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = config_kind(e.kind()) ? 2 : 3;
        if (run)
            run->result = {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
        else {
            std::filesystem::create_directories(out_dir);
            std::ofstream(std::filesystem::path(out_dir) / "diagnostic.json")
                << json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}.dump(2) << "\n";
            return code;
        }
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run->out.write_json(code >= 2 ? "diagnostic.json" : "result.json", run->result);
    json manifest = {{"command", command},
                     {"config", config_path},
                     {"config_sha256", sha256_hex(run->config_text)},
                     {"parameters", run->cfg.raw},
                     {"version", version},
                     {"threads", threads},
                     {"exit_code", code},
                     {"wall_time_seconds", wall},
                     {"files", run->out.file_list()}};
    if (command == "levelset")
        manifest["M"] = level;
    std::ofstream(run->out.path() / "manifest.json") << manifest.dump(2) << "\n";
    return code;
}
