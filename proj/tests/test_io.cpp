#include "capimg/config.hpp"
#include "capimg/error.hpp"
#include "capimg/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

using namespace capimg;

namespace {

std::filesystem::path scratch() {
    auto d = std::filesystem::temp_directory_path() / "capimg_test_io";
    std::filesystem::create_directories(d);
    return d;
}

std::string bundled(const char* name) { return std::string(CAPIMG_SOURCE_DIR) + "/configs/" + name; }

// Minimal P5 reader written against the netpbm description.
struct Pgm {
    std::size_t w = 0, h = 0;
    unsigned maxval = 0;
    std::vector<unsigned> px;
};

Pgm read_pgm(const std::vector<std::uint8_t>& bytes) {
    std::string head(bytes.begin(), bytes.begin() + std::min<std::size_t>(bytes.size(), 64));
    std::istringstream is(head);
    std::string magic;
    Pgm p;
    is >> magic >> p.w >> p.h >> p.maxval;
    REQUIRE(magic == "P5");
    const auto data = static_cast<std::size_t>(is.tellg()) + 1;  // one whitespace byte
    const std::size_t bpp = p.maxval > 255 ? 2 : 1;
    REQUIRE(bytes.size() == data + p.w * p.h * bpp);
    for (std::size_t k = 0; k < p.w * p.h; ++k) {
        const std::size_t o = data + k * bpp;
        p.px.push_back(bpp == 2 ? (bytes[o] << 8) | bytes[o + 1] : bytes[o]);
    }
    return p;
}

std::string config_text(const std::string& probe_params, const std::string& extra_plan = "") {
    return R"({"sample": {"width": 0.1, "length": 0.1, "thickness": 0.01, "eps_r": [2.7, -0.027]},
               "probe": {"kind": "back_to_back", "params": )" +
           probe_params + R"(},
               "plan": {"x0": 0.05, "y0": 0.05, "dx": 0.002, "dy": 0.002, "nx_points": 2, "ny_points": 2,
                        "lift_off": 0.003)" +
           extra_plan + "}}";
}

}  // namespace

TEST_CASE("format_double round-trips") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int t = 0; t < 1000; ++t) {
        const double v = u(rng) * std::pow(10.0, (t % 40) - 20);
        CHECK(std::stod(io::format_double(v)) == v);
    }
    CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("image CSV round trip is exact") {
    ScanImage img(Channel::DELTA, 5, 3, {0.02, 0.01, 0.004, 0.003, "1"});
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd(0, 1);
    for (auto& v : img.values) v = nd(rng) * 1e-7;
    const auto path = (scratch() / "img.csv").string();
    io::write_image_csv(img, path);
    const auto back = io::read_image_csv(path);
    CHECK(back.warnings.empty());
    CHECK(back.image.values == img.values);
    CHECK(back.image.channel == Channel::DELTA);
    CHECK(back.image.nx == 5);
    CHECK(back.image.ny == 3);
    CHECK(back.image.meta.x0 == 0.02);
    CHECK(back.image.meta.dy == 0.003);
    CHECK(back.image.meta.units == "1");
    const std::string text = io::image_csv_text(img);
    CHECK(text.rfind("# channel=DELTA\n# nx=5,ny=3,", 0) == 0);
}

TEST_CASE("image CSV parse errors and defaults") {
    const auto d = io::parse_image_csv("1,2,3\n4,5,6\n");
    CHECK(d.image.meta.dx == 1.0);
    CHECK(d.image.meta.units == "arb");
    CHECK(d.warnings.size() >= 3);

    try {
        io::parse_image_csv("# channel=R\n1,2\n3,x\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 3);
        CHECK(e.col() == 2);
    }
    try {
        io::parse_image_csv("1,2\n3\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 2);
    }
    CHECK_THROWS_AS(io::parse_image_csv("# nx=3,ny=1\n1,2\n"), ParseError);
    CHECK_THROWS_AS(io::parse_image_csv("# only a comment\n"), ParseError);
    CHECK_THROWS_AS(io::read_image_csv((scratch() / "missing.csv").string()), IoError);
}

TEST_CASE("PGM bytes") {
    ScanImage img(Channel::R, 2, 2);
    img.values = {0.0, 1.0, 1.0, 0.0};
    const auto b = io::pgm_bytes(img, 8);
    const std::string head = "P5\n2 2\n255\n";
    REQUIRE(b.size() == head.size() + 4);
    CHECK(std::string(b.begin(), b.begin() + static_cast<long>(head.size())) == head);
    CHECK(b[head.size() + 0] == 0);
    CHECK(b[head.size() + 1] == 255);
    CHECK(b[head.size() + 2] == 255);
    CHECK(b[head.size() + 3] == 0);

    const Pgm p16 = read_pgm(io::pgm_bytes(img, 16));
    CHECK(p16.maxval == 65535);
    CHECK(p16.px == std::vector<unsigned>{0, 65535, 65535, 0});

    ScanImage flat(Channel::R, 3, 1);
    flat.values = {2, 2, 2};
    std::string warning;
    const Pgm pf = read_pgm(io::pgm_bytes(flat, 8, &warning));
    CHECK(pf.px == std::vector<unsigned>{0, 0, 0});
    CHECK(!warning.empty());

    CHECK_THROWS_AS(io::pgm_bytes(img, 12), Error);
    img.values[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(io::pgm_bytes(img, 8), Error);
}

TEST_CASE("PGM quantization stays within one level") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-3, 7);
    ScanImage img(Channel::XI, 13, 9);
    for (auto& v : img.values) v = u(rng);
    const double lo = *std::min_element(img.values.begin(), img.values.end());
    const double hi = *std::max_element(img.values.begin(), img.values.end());
    for (int bits : {8, 16}) {
        const auto path = (scratch() / ("q" + std::to_string(bits) + ".pgm")).string();
        CHECK(io::export_pgm(img, path, bits).empty());
        const std::string raw = io::read_text(path);
        const Pgm p = read_pgm(std::vector<std::uint8_t>(raw.begin(), raw.end()));
        CHECK(p.w == 13);
        CHECK(p.h == 9);
        for (std::size_t k = 0; k < img.size(); ++k) {
            const double t = (img.values[k] - lo) / (hi - lo);
            CHECK(std::abs(p.px[k] / static_cast<double>(p.maxval) - t) <= 0.5 / p.maxval + 1e-12);
        }
    }
}

TEST_CASE("time series CSV") {
    TimeSeries ts;
    ts.fs = 1e6;
    for (int n = 0; n < 50; ++n) ts.samples.push_back(std::sin(0.1 * n));
    const auto path = (scratch() / "ts.csv").string();
    io::write_timeseries_csv(ts, path);
    const TimeSeries back = io::read_timeseries_csv(path);
    CHECK(back.samples == ts.samples);
    CHECK(back.fs == doctest::Approx(1e6).epsilon(1e-9));
    io::write_text(path, "t,v\n0,1\n1e-6,2\n3e-6,3\n");
    CHECK_THROWS_AS(io::read_timeseries_csv(path), ParseError);
    io::write_text(path, "t,v\n0,1\n1e-6,abc\n");
    CHECK_THROWS_AS(io::read_timeseries_csv(path), ParseError);
}

TEST_CASE("volume CSV layout") {
    std::vector<double> v(2 * 3 * 2);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(k);
    const auto path = (scratch() / "vol.csv").string();
    io::write_volume_csv(path, "S", 2, 3, 2, 0.002, v);
    const std::string t = io::read_text(path);
    CHECK(t.rfind("# volume=S\n# nx=2,ny=3,nz=2,h=0.002\n# k=0\n0,1\n2,3\n4,5\n# k=1\n6,7\n", 0) == 0);
    CHECK_THROWS_AS(io::write_volume_csv(path, "S", 2, 2, 2, 0.002, v), DimensionError);
}

TEST_CASE("bundled configs parse and round-trip") {
    for (const char* name : {"perspex_benchmark.json", "gfrp_like.json"}) {
        CAPTURE(name);
        const RunConfig a = parse_config(bundled(name));
        const std::string text = serialize_config(a);
        const RunConfig b = parse_config_text(text);
        CHECK(serialize_config(b) == text);
        CHECK(b.sample.defects.size() == a.sample.defects.size());
        CHECK(b.plan.noise.seed == a.plan.noise.seed);
    }
    const RunConfig p = parse_config(bundled("perspex_benchmark.json"));
    CHECK(p.probes.size() == 1);
    CHECK(p.plan.f_in == 15000.0);
    CHECK(p.plan.lift_off == 0.003);
    CHECK(p.sample.defects.size() == 4);
    const RunConfig g = parse_config(bundled("gfrp_like.json"));
    CHECK(g.probes.size() == 2);
    CHECK(g.probes[1].kind == ProbeKind::concentric);
    CHECK(g.sample.defects.at(0).kind == DefectKind::ellipsoid_blob);
}

TEST_CASE("config errors name the offending key") {
    CHECK_NOTHROW(parse_config_text(config_text(R"({"s": 0.004, "b": 0.016, "h": 0.019})")));
    try {
        parse_config_text(config_text(R"({"s": -1, "b": 0.016, "h": 0.019})"));
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "probe.params.s");
    }
    try {
        parse_config_text(config_text(R"({"s": 0.004, "b": 0.016, "h": 0.019, "w": 1})"));
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "probe.params.w");
    }
    try {
        parse_config_text(config_text(R"({"s": 0.004, "b": 0.016, "h": 0.019})", R"(, "fs": 20000)"));
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "plan.fs");
    }
    CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
}

TEST_CASE("config defaults") {
    const RunConfig c = parse_config_text(config_text(R"({"s": 0.004, "b": 0.016, "h": 0.019})"));
    CHECK(c.plan.noise.kind == NoiseKind::none);
    CHECK(c.plan.f_in == 15e3);
    CHECK(c.plan.v_drive == 10.0);
    CHECK(c.plan.gain == 1e12);
    CHECK(c.fusion.mode == FusionMode::delta);
    CHECK(c.output.pgm_bit_depth == 8);
    CHECK(c.analysis.footprints.empty());
    // One probe width of 16 mm over 2 mm pixels.
    CHECK(effective_dilation(c, c.probes[0]) == 8);
}
