#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "maxmin/io.hpp"

using namespace maxmin;

namespace {

ErrorKind kind_of(const std::function<void()>& fn)
{
    try {
        fn();
    }
    catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::NonConvergence;
}

} // namespace

TEST(Config, ParsesAFullConfig)
{
    const json j = json::parse(R"({
        "field": {"P": [0, 0, 1]},
        "triple": {"C": [], "P_C": [], "Psi": {}, "P_Theta": [[0, 1]]},
        "contour": [{"segment": [-2, 2], "pieces": 4, "head": {"direction": -1, "sector": 1},
                     "tail": {"direction": 1, "sector": 0}}],
        "solver": {"n": 300, "tol_crit": 1e-4, "refine_sizes": [30, 40]},
        "window": {"xmin": -5, "xmax": 5, "ymin": -4, "ymax": 4, "resolution": 101},
        "seed": 7,
        "comment": "anything"
    })");
    const Config c = config_from_json(j);
    ASSERT_TRUE(c.field && c.triple && c.contour && c.window);
    EXPECT_EQ(c.field->n(), 2);
    EXPECT_EQ(c.triple->theta_partition.size(), 1u);
    EXPECT_EQ(c.contour->components[0].vertices.size(), 5u);
    EXPECT_EQ(c.solver.n, 300u);
    EXPECT_EQ(c.solver.refine_sizes, (std::vector<int>{30, 40}));
    EXPECT_EQ(c.window->resolution, 101);
    EXPECT_EQ(c.seed, 7u);
    // default epsilon is a quarter of the half-opening pi / (2n)
    EXPECT_DOUBLE_EQ(c.epsilon, 0.25 * pi / 4.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    EXPECT_EQ(kind_of([] { config_from_json(json::parse(R"({"feild": {}})")); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { config_from_json(json::parse("[1, 2]")); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { config_from_json(json::parse(R"({"solver": {"n": 2}})")); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { config_from_json(json::parse(R"({"window": {"xmin": 1, "xmax": 0, "ymin": 0,
                                                                       "ymax": 1}})")); }),
              ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { complex_from_json(json::parse(R"("1+2i")")); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { triple_from_json(json::parse(R"({"P_C": [[0]], "Psi": {"3": [0]}})")); }),
              ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([] { triple_from_json(json::parse(R"({"P_Theta": [[0.5]]})")); }), ErrorKind::ConfigError);
}

TEST(Config, FixedPointsMustAgreeWithTheTriple)
{
    const json bad = json::parse(R"({"fixed_points": [0.5], "triple": {"C": [1.5], "P_C": [[0]]}})");
    EXPECT_EQ(kind_of([&] { config_from_json(bad); }), ErrorKind::ConfigError);
    const json good = json::parse(R"({"fixed_points": [[0.5, 1]], "triple": {"C": [[0.5, 1]], "P_C": [[0]]}})");
    EXPECT_EQ(config_from_json(good).fixed_points, (std::vector<cplx>{cplx(0.5, 1.0)}));
    const json only = json::parse(R"({"triple": {"C": [2], "P_C": [[0]]}})");
    EXPECT_EQ(config_from_json(only).fixed_points, (std::vector<cplx>{2.0}));
}

TEST(Config, FilesAndMalformedJson)
{
    const auto dir = std::filesystem::temp_directory_path() / "maxmin_io_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "broken.json") << "{\"field\": ";
        std::ofstream(dir / "typed.json") << R"({"window": {"xmin": "a", "xmax": 1, "ymin": 0, "ymax": 1}})";
        std::ofstream(dir / "ok.json") << R"({"field": {"P": [0, 1]}})";
    }
    EXPECT_EQ(kind_of([&] { load_config(dir / "broken.json"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([&] { load_config(dir / "typed.json"); }), ErrorKind::ConfigError);
    EXPECT_EQ(kind_of([&] { load_config(dir / "missing.json"); }), ErrorKind::ConfigError);
    EXPECT_EQ(load_config(dir / "ok.json").field->n(), 1);
    std::filesystem::remove_all(dir);
}

TEST(RoundTrip, Field)
{
    const ExternalField f({cplx(0.5, -1), 0.0, 2.0, 1.0}, {{cplx(1, 1), 2}}, {{cplx(-1, 0), cplx(0.3, 0.7)}});
    const ExternalField g = field_from_json(json::parse(field_to_json(f).dump()));
    EXPECT_EQ(g.p().coeffs(), f.p().coeffs());
    ASSERT_EQ(g.poles().size(), 1u);
    EXPECT_EQ(g.poles()[0].location, cplx(1, 1));
    EXPECT_EQ(g.poles()[0].order, 2);
    ASSERT_EQ(g.log_terms().size(), 1u);
    EXPECT_EQ(g.log_terms()[0].weight, cplx(0.3, 0.7));
    for (cplx z : {cplx(0.3, 0.2), cplx(-2, 1)})
        EXPECT_EQ(g.phi(z), f.phi(z));
}

TEST(RoundTrip, ContourAndTriple)
{
    Component a;
    a.vertices = {cplx(0.1, 0.2), 1.0, cplx(2, -1)};
    a.pins = {{1, 0}};
    a.tail = RayTail{cplx(0, 1), 2};
    Component b = segment(-1.0, -3.0, 3);
    b.head = RayTail{-1.0, 0};
    const Contour g{{a, b}};
    const Contour h = contour_from_json(json::parse(contour_to_json(g).dump()));
    ASSERT_EQ(h.components.size(), 2u);
    EXPECT_EQ(h.components[0].vertices, a.vertices);
    EXPECT_EQ(h.components[0].pins[0].vertex, 1u);
    EXPECT_EQ(h.components[0].tail->sector, 2);
    EXPECT_FALSE(h.components[0].head);
    EXPECT_EQ(h.components[1].vertices, b.vertices);
    EXPECT_EQ(h.components[1].head->direction, cplx(-1.0));

    const AdmissibleTriple t{{{0, 1}, {2}}, {{3}, {}}, {{0, 3}, {1}, {2}}};
    const std::vector<cplx> fixed{0.0, 1.0, cplx(0, 1)};
    std::vector<cplx> back;
    const AdmissibleTriple u = triple_from_json(json::parse(triple_to_json(t, fixed).dump()), &back);
    EXPECT_EQ(u.c_partition, t.c_partition);
    EXPECT_EQ(u.psi, t.psi);
    EXPECT_EQ(u.theta_partition, t.theta_partition);
    EXPECT_EQ(back, fixed);
}

TEST(RoundTrip, SegmentShorthandKeepsPins)
{
    const Contour g = contour_from_json(json::parse(R"([{"segment": [0.5, 8], "pieces": 3, "pins": [[0, 0]]}])"));
    const auto& c = g.components[0];
    ASSERT_EQ(c.vertices.size(), 4u);
    EXPECT_EQ(c.vertices.front(), cplx(0.5));
    EXPECT_EQ(c.vertices.back(), cplx(8.0));
    EXPECT_EQ(c.pins[0].fixed, 0u);
    EXPECT_EQ(kind_of([] { contour_from_json(json::parse(R"([{"segment": [1]}])")); }), ErrorKind::ConfigError);
}

TEST(Files, Sha256AndManifest)
{
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const auto dir = std::filesystem::temp_directory_path() / "maxmin_out_test";
    OutputDir out(dir);
    out.write("a.txt", "abc");
    const json list = out.file_list();
    ASSERT_EQ(list.size(), 1u);
    EXPECT_EQ(list[0]["name"], "a.txt");
    EXPECT_EQ(list[0]["sha256"], sha256_hex(read_file(dir / "a.txt")));
    std::filesystem::remove_all(dir);
}

TEST(Csv, ContourAndMeasure)
{
    Component c = segment(0.0, 1.0, 2);
    c.tail = RayTail{1.0, 0};
    const std::string s = contour_csv(Contour{{c}}, 5.0);
    EXPECT_EQ(s.substr(0, s.find('\n')), "x,y,component_id");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
    EXPECT_NE(s.find("\n6,0,0\n"), std::string::npos);
    const DiscreteMeasure mu = atomic_measure({0.0, 1.0}, {0.25, 0.75});
    EXPECT_EQ(measure_csv(mu), "x,y,weight\n0,0,0.25\n1,0,0.75\n");
}
