// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include "support/dng_fixtures.hpp"

#include "cli.hpp"

#include <doctest.h>
#include <wbpref/datakit.hpp>
#include <wbpref/estimators.hpp>
#include <wbpref/evalkit.hpp>
#include <wbpref/mapping.hpp>
#include <wbpref/text_io.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace wbpref;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run wb(std::vector<std::string> args) {
    args.insert(args.begin(), "wbpref");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {rc, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("wbpref_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) { return text::read_file(p); }

void write_ppm(const std::string& p, double r, double g, double b) {
    RawImage img;
    img.width = 4;
    img.height = 3;
    for (int i = 0; i < 12; ++i) {
        const double s = 0.3 + 0.05 * i;
        img.pixels.insert(img.pixels.end(), {r * s, g * s, b * s});
    }
    save_raw_image(img, p);
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(wb({"--help"}).code == 0);
    for (const char* sub : {"estimate", "train", "apply", "eval", "synth", "inspect-dng"}) {
        const auto r = wb({sub, "--help"});
        CHECK(r.code == 0);
        CHECK(r.out.find("--") != std::string::npos);
    }
    CHECK(wb({"synth", "sensors", "--help"}).out.find("--scale") != std::string::npos);
    CHECK(wb({}).code == 1);
    CHECK(wb({"synth", "nonsense"}).code == 1);
    CHECK(wb({"frobnicate"}).code == 1);
    CHECK(wb({"train", "--dataset", "x", "--out", "y", "--epochs", "0"}).code == 1);
    CHECK(wb({"estimate", "--images", ".", "--out", "p", "--method", "magic"}).code == 1);
}

TEST_CASE("estimate") {
    TempDir d("estimate");
    fs::create_directories(d.path / "img");
    write_ppm(d / "img/b.ppm", 0.5, 1.0, 0.7);
    write_ppm(d / "img/a.ppm", 0.4, 0.9, 0.6);
    write_ppm(d / "img/c.ppm", 0.3, 0.8, 0.9);
    std::ofstream(d / "img/notes.txt") << "ignored";
    const auto r = wb({"estimate", "--images", d / "img", "--out", d / "p1.txt"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("images=3 ok=3") != std::string::npos);
    const auto preds = load_external_predictions(d / "p1.txt");
    CHECK(preds.size() == 3);
    CHECK(angular_error_degrees(ColorVec(preds.at("a"), ColorSpace::raw("x")),
                                ColorVec(0.4, 0.9, 0.6, ColorSpace::raw("x"))) < 0.01);
    std::istringstream lines(slurp(d / "p1.txt"));
    std::vector<std::string> ids;
    for (std::string l; std::getline(lines, l);)
        if (!l.empty() && l[0] != '#') ids.push_back(l.substr(0, l.find(' ')));
    CHECK(ids == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(wb({"estimate", "--images", d / "img", "--out", d / "p2.txt"}).code == 0);
    CHECK(slurp(d / "p1.txt") == slurp(d / "p2.txt"));

    fs::create_directories(d.path / "empty");
    const auto e = wb({"estimate", "--images", d / "empty", "--out", d / "p3.txt"});
    CHECK(e.code == 2);
    CHECK(e.err.find("no .ppm") != std::string::npos);
    CHECK_FALSE(fs::exists(d.path / "p3.txt"));

    std::ofstream(d / "empty/bad.ppm") << "P6\n2 2\n255\nxx";
    CHECK(wb({"estimate", "--images", d / "empty", "--out", d / "p3.txt"}).code == 2);
}

TEST_CASE("train, apply and eval") {
    TempDir d("train");
    REQUIRE(wb({"synth", "dataset", "--out-dir", d / "ds", "--n", "200", "--seed", "3"}).code == 0);
    REQUIRE(wb({"synth", "dataset", "--out-dir", d / "ev", "--n", "200", "--seed", "4"}).code == 0);
    const std::string ds = d / "ds/A.dataset";
    const std::string profile = d / "ds/A.profile";

    const auto t1 = wb({"train", "--dataset", ds, "--out", d / "m1.model"});
    REQUIRE(t1.code == 0);
    CHECK(t1.out.find("parameters=539") != std::string::npos);
    CHECK(t1.out.find("epochs 2000") != std::string::npos);
    const auto m = load_model(d / "m1.model");
    CHECK(m.kind_name() == "mlp");
    CHECK(m.space == TrainingSpace::Xyz);
    CHECK(count_parameters(std::get<PreferenceMlp>(m.g)).total == 539);
    CHECK(fs::exists(d.path / "m1.model.log"));

    REQUIRE(wb({"train", "--dataset", ds, "--out", d / "m2.model", "--epochs", "30"}).code == 0);
    REQUIRE(wb({"train", "--dataset", ds, "--out", d / "m3.model", "--epochs", "30"}).code == 0);
    CHECK(slurp(d / "m2.model") == slurp(d / "m3.model"));

    REQUIRE(wb({"train", "--dataset", ds, "--out", d / "raw.model", "--epochs", "30", "--space", "raw"}).code == 0);
    CHECK(load_model(d / "raw.model").space == TrainingSpace::Raw);

    const auto ev = wb({"eval", "--dataset", d / "ev/A.dataset", "--model", d / "m1.model", "--out-prefix", d / "rep"});
    REQUIRE(ev.code == 0);
    const auto rows = parse_csv(slurp(d / "rep.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].row.mapping == "mlp");
    CHECK(rows[1].row.mapping == "none");
    CHECK(rows[0].row.stats.mean < rows[1].row.stats.mean);
    CHECK(slurp(d / "rep.txt").find("Mean") < slurp(d / "rep.txt").find("Max"));

    const auto ev2 = wb({"eval", "--dataset", d / "ev/A.dataset", "--model", d / "m1.model", "--model",
                          d / "raw.model", "--out-prefix", d / "rep2"});
    REQUIRE(ev2.code == 0);
    CHECK(ev2.out.find("mlp-raw") != std::string::npos);

    // Identity-fit model: a 3x3 fitted on a dataset without preference.
    REQUIRE(wb({"synth", "dataset", "--out-dir", d / "flat", "--n", "200", "--lambda", "0"}).code == 0);
    REQUIRE(wb({"train", "--dataset", d / "flat/A.dataset", "--kind", "three-by-three", "--out", d / "id.model"}).code == 0);
    {
        const Dataset flat = read_dataset(d / "flat/A.dataset");
        std::ofstream f(d / "in.txt");
        f.precision(17);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& v = flat.records[i * 50].neutral_estimates.at("synthetic");
            f << "x" << i + 1 << " " << v.values()[0] << " " << v.values()[1] << " " << v.values()[2] << "\n";
        }
    }
    const std::vector<std::string> apply{"apply", "--model", d / "id.model", "--profile", profile, "--predictions",
                                         d / "in.txt", "--out"};
    auto a1 = apply, a2 = apply;
    a1.push_back(d / "o1.txt");
    a2.push_back(d / "o2.txt");
    { const auto ar = wb(a1); INFO(ar.err); REQUIRE(ar.code == 0); }
    REQUIRE(wb(a2).code == 0);
    CHECK(slurp(d / "o1.txt") == slurp(d / "o2.txt"));
    const auto in = load_external_predictions(d / "in.txt");
    const auto outp = load_external_predictions(d / "o1.txt");
    for (const auto& [id, v] : in)
        CHECK(angular_error_degrees(ColorVec(v, ColorSpace::raw("A")), ColorVec(outp.at(id), ColorSpace::raw("A"))) < 0.2);

    CHECK(wb({"apply", "--model", d / "id.model", "--profile", d / "nope.profile", "--predictions", d / "in.txt",
               "--out", d / "o3.txt"})
              .code == 2);

    write_ppm(d / "x1.ppm", 0.5, 1, 0.6);
    auto a3 = a1;
    a3.back() = d / "o4.txt";
    a3.insert(a3.end(), {"--render", d / "x1.ppm", d / "x1_wb.ppm"});
    const auto rr = wb(a3);
    REQUIRE(rr.code == 0);
    CHECK(rr.out.find("display only") != std::string::npos);
    CHECK(load_raw_image(d / "x1_wb.ppm").width == 4);
}

TEST_CASE("synth sensors") {
    TempDir d("sensors");
    const auto r = wb({"synth", "sensors", "--n", "3", "--seed", "7", "--out-dir", d / "a"});
    REQUIRE(r.code == 0);
    REQUIRE(wb({"synth", "sensors", "--n", "3", "--seed", "7", "--out-dir", d / "b"}).code == 0);
    for (const char* n : {"sensor0.profile", "sensor1.profile", "sensor2.profile"}) {
        CHECK(slurp(d / (std::string("a/") + n)) == slurp(d / (std::string("b/") + n)));
        CHECK_NOTHROW(load_profile(d / (std::string("a/") + n)));
    }
    CHECK(std::distance(fs::directory_iterator(d.path / "a"), fs::directory_iterator{}) == 3);
}

TEST_CASE("inspect-dng") {
    TempDir d("dng");
    testing::FixtureOptions o;
    o.identity = true;
    const auto bytes = testing::make_dng_fixture(o);
    std::ofstream(d / "id.dng", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                        static_cast<std::streamsize>(bytes.size()));
    const auto r = wb({"inspect-dng", d / "id.dng", "--profile-out", d / "id.profile"});
    REQUIRE(r.code == 0);
    const auto meta = dng::parse_dng_metadata(bytes);
    CHECK(r.out.find(dng::describe(meta)) == 0);
    CHECK(r.out.find("17") != std::string::npos);
    CHECK(r.out.find("21") != std::string::npos);
    const auto p = load_profile(d / "id.profile");
    CHECK(p.sensor_name() == "Virtual_Camera_9000");
    const Mat3 cst = interpolate_cst(p, 0.5, CstMode::ForwardThenInvert);
    for (int i = 0; i < 9; ++i) CHECK(cst.m[static_cast<std::size_t>(i)] == doctest::Approx(Mat3::identity().m[static_cast<std::size_t>(i)]).epsilon(1e-12));

    std::ofstream(d / "text.dng") << "hello, not a tiff";
    const auto bad = wb({"inspect-dng", d / "text.dng"});
    CHECK(bad.code == 2);
    CHECK_FALSE(bad.err.empty());
    auto trunc = bytes;
    trunc.resize(40);
    std::ofstream(d / "t.dng", std::ios::binary).write(reinterpret_cast<const char*>(trunc.data()), 40);
    CHECK(wb({"inspect-dng", d / "t.dng"}).code == 2);
    CHECK(wb({"inspect-dng", d / "missing.dng"}).code == 2);
}
