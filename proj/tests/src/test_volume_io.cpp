#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctperf/volume_io.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace ctperf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// parse, mutate, rewrite a volume header in place
void tamper(const fs::path& header, const std::function<void(nlohmann::json&)>& fn) {
    auto h = nlohmann::json::parse(slurp(header));
    fn(h);
    write_file_atomic(header, h.dump(2) + "\n");
}

template <typename F>
void check_throws_with(F&& f, const std::string& needle) {
    const std::string msg = th::thrown_message(std::forward<F>(f));
    INFO("exception message: ", msg);
    CHECK(msg.find(needle) != std::string::npos);
}

bool dir_has_tmp_files(const fs::path& dir) {
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".tmp") return true;
    return false;
}

Volume3<double> sample_volume() {
    Volume3<double> v({3, 2, 2});
    for (std::size_t i = 0; i < v.size(); ++i)
        v.data[i] = 0.25 * static_cast<double>(i) - 1.5;  // exact in f32
    return v;
}

}  // namespace

TEST_SUITE_BEGIN("volume_io");

TEST_CASE("volume round trip") {
    const auto dir = th::tmp_dir("vio-volume");
    const auto header = dir / "vol.json";
    const auto v = sample_volume();
    write_volume(header, v, {1.5, 2.0, 2.5});

    CHECK(fs::exists(dir / "vol.raw"));
    CHECK(fs::file_size(dir / "vol.raw") == v.size() * 4);
    CHECK_FALSE(dir_has_tmp_files(dir));

    Vec3 vs{};
    const auto back = read_volume(header, &vs);
    CHECK(back.shape == v.shape);
    CHECK(back.data == v.data);
    CHECK(vs == Vec3{1.5, 2.0, 2.5});
    CHECK_NOTHROW(read_volume(header));  // voxel size out-param is optional
}

TEST_CASE("payload precision is 32-bit float") {
    const auto dir = th::tmp_dir("vio-f32");
    Volume3<double> v({1, 1, 1}, 0.1);
    write_volume(dir / "v.json", v, {1, 1, 1});
    const auto back = read_volume(dir / "v.json");
    CHECK(back.data[0] == static_cast<double>(static_cast<float>(0.1)));
    CHECK(back.data[0] != 0.1);
}

TEST_CASE("mask round trip") {
    const auto dir = th::tmp_dir("vio-mask");
    Mask3 m({4, 3, 2}, 0);
    for (std::size_t i = 0; i < m.size(); i += 3) m.data[i] = 1;
    write_mask(dir / "m.json", m, {2, 2, 2});

    CHECK(fs::file_size(dir / "m.raw") == m.size());
    const auto h = nlohmann::json::parse(slurp(dir / "m.json"));
    CHECK(h.at("dtype") == "u8");
    CHECK(h.at("format") == "ctperf-volume");

    Vec3 vs{};
    const auto back = read_mask(dir / "m.json", &vs);
    CHECK(back.shape == m.shape);
    CHECK(back.data == m.data);
    CHECK(vs == Vec3{2.0, 2.0, 2.0});
}

TEST_CASE("series round trip") {
    const auto dir = th::tmp_dir("vio-series");
    CtpSeries s;
    s.data = Volume4<double>({2, 2, 1}, 3);
    for (std::size_t i = 0; i < s.data.size(); ++i)
        s.data.data[i] = 0.5 * static_cast<double>(i);
    s.grid = TimeGrid{5.0, 0.5, 3};
    s.voxel_size = {1.0, 2.0, 3.0};
    write_series(dir / "s.json", s);

    const auto back = read_series(dir / "s.json");
    CHECK(back.grid == s.grid);
    CHECK(back.voxel_size == s.voxel_size);
    CHECK(back.data.shape == s.data.shape);
    CHECK(back.data.n_t == 3);
    CHECK(back.data.data == s.data.data);
}

TEST_CASE("irf round trip keeps method and lambda") {
    const auto dir = th::tmp_dir("vio-irf");
    IrfMap irf;
    irf.data = Volume4<double>({2, 1, 1}, 4);
    for (std::size_t i = 0; i < irf.data.size(); ++i)
        irf.data.data[i] = static_cast<double>(i) * 0.125;
    irf.grid = TimeGrid{0.0, 1.0, 4};
    irf.method = DeconvMethod::ssvd;
    irf.lambda_rel = 0.15;
    write_irf(dir / "irf.json", irf, {2, 2, 2});

    const auto back = read_irf(dir / "irf.json");
    CHECK(back.method == DeconvMethod::ssvd);
    CHECK(back.lambda_rel == 0.15);
    CHECK(back.grid == irf.grid);
    CHECK(back.data.data == irf.data.data);

    irf.method = DeconvMethod::csvd;
    write_irf(dir / "irf2.json", irf, {2, 2, 2});
    CHECK(read_irf(dir / "irf2.json").method == DeconvMethod::csvd);
}

TEST_CASE("header validation names the offending field") {
    const auto dir = th::tmp_dir("vio-headers");
    const auto fresh = [&](const std::string& name) {
        const auto header = dir / name;
        write_volume(header, sample_volume(), {1, 1, 1});
        return header;
    };

    auto p = fresh("dtype.json");
    tamper(p, [](nlohmann::json& h) { h["dtype"] = "f64"; });
    check_throws_with([&] { read_volume(p); }, "dtype");
    check_throws_with([&] { read_volume(p); }, "f64");

    p = fresh("version.json");
    tamper(p, [](nlohmann::json& h) { h["version"] = 2; });
    check_throws_with([&] { read_volume(p); }, "version");

    p = fresh("format.json");
    tamper(p, [](nlohmann::json& h) { h["format"] = "something-else"; });
    check_throws_with([&] { read_volume(p); }, "format");

    p = fresh("order.json");
    tamper(p, [](nlohmann::json& h) { h["order"] = "y-fastest"; });
    check_throws_with([&] { read_volume(p); }, "order");

    p = fresh("shape.json");
    tamper(p, [](nlohmann::json& h) { h["shape"] = {3, 2, 4}; });
    check_throws_with([&] { read_volume(p); }, "shape requires");

    p = fresh("missing.json");
    tamper(p, [](nlohmann::json& h) { h.erase("voxel_size_mm"); });
    check_throws_with([&] { read_volume(p); }, "missing field 'voxel_size_mm'");

    p = fresh("payload.json");
    fs::remove(dir / "payload.raw");
    check_throws_with([&] { read_volume(p); }, "cannot open payload");

    write_file_atomic(dir / "garbage.json", "{ this is not json\n");
    check_throws_with([&] { read_volume(dir / "garbage.json"); }, "invalid JSON");

    check_throws_with([&] { read_volume(dir / "nonexistent.json"); }, "cannot open file");

    CHECK_THROWS_AS(read_volume(dir / "nonexistent.json"), std::runtime_error);
}

TEST_CASE("series and irf headers are cross-checked") {
    const auto dir = th::tmp_dir("vio-cross");

    CtpSeries s;
    s.data = Volume4<double>({2, 1, 1}, 3, 1.0);
    s.grid = TimeGrid{0.0, 1.0, 3};
    write_series(dir / "s.json", s);
    tamper(dir / "s.json", [](nlohmann::json& h) { h["grid"]["n_samples"] = 4; });
    check_throws_with([&] { read_series(dir / "s.json"); }, "does not match shape[3]");

    // a 3-D header is not a series
    write_volume(dir / "v.json", sample_volume(), {1, 1, 1});
    check_throws_with([&] { read_series(dir / "v.json"); }, "shape");

    IrfMap irf;
    irf.data = Volume4<double>({2, 1, 1}, 3, 1.0);
    irf.grid = TimeGrid{0.0, 1.0, 3};
    write_irf(dir / "irf.json", irf, {1, 1, 1});
    tamper(dir / "irf.json", [](nlohmann::json& h) { h["lambda_rel"] = 1.0; });
    check_throws_with([&] { read_irf(dir / "irf.json"); }, "lambda_rel");

    write_irf(dir / "irf2.json", irf, {1, 1, 1});
    tamper(dir / "irf2.json", [](nlohmann::json& h) { h["method"] = "magic"; });
    check_throws_with([&] { read_irf(dir / "irf2.json"); }, "method");
}

TEST_CASE("writers reject degenerate input") {
    const auto dir = th::tmp_dir("vio-writers");
    CHECK_THROWS_AS(write_volume(dir / "e.json", Volume3<double>{}, {1, 1, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(write_mask(dir / "e.json", Mask3{}, {1, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(write_volume(dir / "e.json", sample_volume(), {0.0, 1.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(write_volume(dir / "e.json", sample_volume(), {1.0, -2.0, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("atomic writes replace and leave no temporaries") {
    const auto dir = th::tmp_dir("vio-atomic");
    write_file_atomic(dir / "f.txt", "first\n");
    write_file_atomic(dir / "f.txt", "second\n");
    CHECK(slurp(dir / "f.txt") == "second\n");
    write_volume(dir / "v.json", sample_volume(), {1, 1, 1});
    write_volume(dir / "v.json", sample_volume(), {1, 1, 1});
    CHECK_FALSE(dir_has_tmp_files(dir));
}

TEST_CASE("curve csv round trip") {
    const auto dir = th::tmp_dir("vio-csv");

    Curve tiny = make_curve({0.0, 0.5}, TimeGrid{0.0, 2.0, 2});
    write_curve_csv(dir / "tiny.csv", tiny);
    CHECK(slurp(dir / "tiny.csv") == "t_s,value\n0,0\n2,0.5\n");

    Curve c = make_curve({0.1, -2.25, 1.0 / 3.0, 0.001, 4.75},
                         TimeGrid{1.5, 0.25, 5});
    write_curve_csv(dir / "c.csv", c);
    const auto back = read_curve_csv(dir / "c.csv");
    CHECK(back.grid == c.grid);
    CHECK(back.samples == c.samples);  // text form round-trips doubles exactly
}

TEST_CASE("curve csv validation") {
    const auto dir = th::tmp_dir("vio-csv-bad");
    const auto write = [&](const std::string& name, const std::string& text) {
        write_file_atomic(dir / name, text);
        return dir / name;
    };

    auto p = write("header.csv", "time,value\n0,1\n1,2\n");
    check_throws_with([&] { read_curve_csv(p); }, "first line");

    p = write("short.csv", "t_s,value\n0,1\n");
    check_throws_with([&] { read_curve_csv(p); }, "at least 2");

    p = write("spacing.csv", "t_s,value\n0,1\n1,2\n2.5,3\n");
    check_throws_with([&] { read_curve_csv(p); }, "not uniformly spaced");

    p = write("order.csv", "t_s,value\n0,1\n-1,2\n");
    check_throws_with([&] { read_curve_csv(p); }, "must increase");

    p = write("token.csv", "t_s,value\n0,abc\n1,2\n");
    check_throws_with([&] { read_curve_csv(p); }, "is not a number");

    p = write("comma.csv", "t_s,value\n0 1\n1,2\n");
    check_throws_with([&] { read_curve_csv(p); }, "no comma");

    check_throws_with([&] { read_curve_csv(dir / "missing.csv"); }, "cannot open");
}

TEST_CASE("pgm slices are exact bytes") {
    const auto dir = th::tmp_dir("vio-pgm");
    Volume3<double> v({3, 2, 1});
    v.data = {0.0, 0.5, 1.0, -1.0, 2.0, 0.25};
    write_pgm_slice(dir / "s.pgm", v, 0, 0.0, 1.0);

    std::string expected = "P5\n3 2\n255\n";
    for (int byte : {0, 128, 255, 0, 255, 64}) expected.push_back(static_cast<char>(byte));
    CHECK(slurp(dir / "s.pgm") == expected);

    // degenerate window renders black
    write_pgm_slice(dir / "flat.pgm", v, 0, 3.0, 3.0);
    const auto flat = slurp(dir / "flat.pgm");
    CHECK(flat.substr(flat.size() - 6) == std::string(6, '\0'));

    Mask3 m({2, 1, 1}, 0);
    m.at(1, 0, 0) = 1;
    write_pgm_slice(dir / "m.pgm", m, 0);
    std::string mask_expected = "P5\n2 1\n255\n";
    mask_expected.push_back(static_cast<char>(0));
    mask_expected.push_back(static_cast<char>(255));
    CHECK(slurp(dir / "m.pgm") == mask_expected);

    CHECK_THROWS_AS(write_pgm_slice(dir / "z.pgm", v, 1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(write_pgm_slice(dir / "z.pgm", v, -1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(write_pgm_slice(dir / "z.pgm", v, 0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("digest and decimal rendering") {
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64_hex("a", 1) == "af63dc4c8601ec8c");
    CHECK(fnv1a64_hex("", 0).size() == 16);

    CHECK(format_double(0.0) == "0");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.25) == "-2.25");
    CHECK(format_double(0.001) == "0.001");
    for (double x : {1.0 / 3.0, 2.0 / 7.0, 123456.789, 1e-12})
        CHECK(std::stod(format_double(x)) == x);
}

TEST_SUITE_END();
