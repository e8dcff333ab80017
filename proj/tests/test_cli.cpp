#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kBin = CONVEXDECOMP_CLI_PATH;

struct RunResult {
    int code;
};

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "convexdecomp_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run(const std::string& args) {
    const std::string cmd = kBin + " " + args + " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_spec(const std::string& name, const std::string& body) {
    fs::path p = scratch_dir() / name;
    std::ofstream out(p);
    out << body;
    return p;
}

} // namespace

TEST_CASE("decompose exit code and report fields") {
    fs::path spec = write_spec("quad.json",
                               R"({"kind":"quadratic","A":[[2,0],[0,0]],"b":[1,1],"c":0})");
    fs::path out = scratch_dir() / "quad_report.json";
    auto r = run("decompose " + spec.string() + " --output " + out.string());
    CHECK(r.code == 0);
    const std::string report = slurp(out);
    CHECK(report.find("\"x_basis\":[[1.0,0.0]]") != std::string::npos);
    CHECK(report.find("\"y_basis\":[[0.0,1.0]]") != std::string::npos);
    CHECK(report.find("\"v\":[0.0,1.0]") != std::string::npos);
    CHECK(report.find("\"input_digest\":\"fnv1a64:") != std::string::npos);
}

TEST_CASE("affine spec: empty x basis, full y basis, exit 0") {
    fs::path spec = write_spec(
        "affine.json",
        R"({"kind":"affine_plus","base":{"kind":"quadratic","A":[[0,0],[0,0]],"b":[0,0],"c":0},"l":[1,2],"c0":3})");
    fs::path out = scratch_dir() / "affine_report.json";
    auto r = run("decompose " + spec.string() + " --output " + out.string());
    CHECK(r.code == 0);
    const std::string report = slurp(out);
    CHECK(report.find("\"x_basis\":[]") != std::string::npos);
    CHECK(report.find("\"y_basis\":[[1.0,0.0],[0.0,1.0]]") != std::string::npos);
}

TEST_CASE("malformed spec exits 2 with a diagnostic naming the field") {
    fs::path spec = write_spec("bad.json", R"({"kind":"quadratic","A":[[2,0],[0,0]]})");
    fs::path err = scratch_dir() / "bad.err";
    const std::string cmd =
        kBin + " decompose " + spec.string() + " 2>" + err.string() + " >/dev/null";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
    CHECK(slurp(err).find("'b'") != std::string::npos);

    fs::path garbage = write_spec("garbage.json", "not json at all {");
    CHECK(run("decompose " + garbage.string()).code == 2);
    CHECK(run("decompose " + (scratch_dir() / "missing.json").string()).code == 2);
}

TEST_CASE("unknown flags exit 2") {
    CHECK(run("decompose --no-such-flag").code == 2);
    CHECK(run("frobnicate").code == 2);
}

TEST_CASE("coercivity statuses for the three reference shapes") {
    fs::path certified =
        write_spec("id.json", R"({"kind":"quadratic","A":[[1,0],[0,1]],"b":[0,0],"c":0})");
    fs::path refuted = write_spec(
        "theta.json",
        R"({"kind":"scalar_composite","terms":[{"w":1,"kernel":"relu_square","a":[1],"s":0}]})");
    fs::path evidence = write_spec(
        "cosh.json",
        R"({"kind":"scalar_composite","terms":[{"w":1,"kernel":"exp","a":[1],"s":0},{"w":1,"kernel":"exp","a":[-1],"s":0}]})");

    fs::path out = scratch_dir() / "verdict.json";
    CHECK(run("coercivity " + certified.string() + " --output " + out.string()).code == 0);
    CHECK(slurp(out).find("\"status\":\"certified\"") != std::string::npos);

    CHECK(run("coercivity " + refuted.string() + " --output " + out.string()).code == 0);
    const std::string rep = slurp(out);
    CHECK(rep.find("\"status\":\"refuted\"") != std::string::npos);
    CHECK(rep.find("\"v\":[-1.0]") != std::string::npos);

    CHECK(run("coercivity " + evidence.string() + " --output " + out.string()).code == 0);
    CHECK(slurp(out).find("\"status\":\"evidence\"") != std::string::npos);
}

TEST_CASE("witness for theta reproduces the hand construction; affine exits 5") {
    fs::path theta = write_spec(
        "theta2.json",
        R"({"kind":"scalar_composite","terms":[{"w":1,"kernel":"relu_square","a":[1],"s":0}]})");
    fs::path out = scratch_dir() / "witness.json";
    CHECK(run("witness " + theta.string() + " --terms 1 --output " + out.string()).code == 0);
    const std::string rep = slurp(out);
    CHECK(rep.find("\"xi\":[0.25]") != std::string::npos);
    CHECK(rep.find("\"weight\":0.125") != std::string::npos);
    CHECK(rep.find("\"separation_rank\":1") != std::string::npos);

    fs::path affine = write_spec(
        "affine2.json",
        R"({"kind":"affine_plus","base":{"kind":"quadratic","A":[[0]],"b":[0],"c":0},"l":[2],"c0":0})");
    CHECK(run("witness " + affine.string()).code == 5);
}

TEST_CASE("corpus command writes specs plus manifest, deterministically") {
    fs::path dir_a = scratch_dir() / "corpus_a";
    fs::path dir_b = scratch_dir() / "corpus_b";
    CHECK(run("corpus --out-dir " + dir_a.string() + " --seed 7").code == 0);
    CHECK(run("corpus --out-dir " + dir_b.string() + " --seed 7").code == 0);

    std::size_t specs = 0;
    for (const auto& e : fs::directory_iterator(dir_a)) {
        if (e.path().extension() == ".json") ++specs;
    }
    CHECK(specs >= 40);
    const std::string ma = slurp(dir_a / "manifest.csv");
    CHECK(ma == slurp(dir_b / "manifest.csv"));
    CHECK(ma.find("example33_n8") != std::string::npos);
    CHECK(ma.find("no-strict-min-limit") != std::string::npos);

    // spec files for the same entry are byte-identical across runs
    CHECK(slurp(dir_a / "example_gamma_n4.json") == slurp(dir_b / "example_gamma_n4.json"));
}

TEST_CASE("sweep emits one finite row per N with increasing minimizer norms") {
    fs::path csv = scratch_dir() / "sweep.csv";
    CHECK(run("sweep --family example33 --n-list 1 2 4 8 --out " + csv.string()).code == 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "family,N,witness_norm,minimizer_norm,flat_half_length,runtime_s");
    double prev_min = 0.0;
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) {
        REQUIRE(!line.empty());
        std::stringstream ss(line);
        std::string family, n, wn, mn, fh, rt;
        std::getline(ss, family, ',');
        std::getline(ss, n, ',');
        std::getline(ss, wn, ',');
        std::getline(ss, mn, ',');
        std::getline(ss, fh, ',');
        std::getline(ss, rt, ',');
        CHECK(family == "example33");
        const double minimizer = std::stod(mn);
        CHECK(minimizer > prev_min);
        prev_min = minimizer;
        CHECK(std::stod(fh) == doctest::Approx(std::stod(n)));
        CHECK(std::stod(wn) > 0.0);
        ++rows;
    }
    CHECK(rows == 4);

    fs::path gcsv = scratch_dir() / "sweep_gamma.csv";
    CHECK(run("sweep --family gamma --n-list 1 2 --out " + gcsv.string()).code == 0);
    std::ifstream gin(gcsv);
    std::string gheader;
    std::getline(gin, gheader);
    for (std::string line; std::getline(gin, line);) {
        // flat-segment column is zero for the gamma family
        std::stringstream ss(line);
        std::string tok;
        for (int i = 0; i < 5; ++i) std::getline(ss, tok, ',');
        CHECK(std::stod(tok) == 0.0);
    }
}

TEST_CASE("different inputs never share a digest") {
    fs::path a = write_spec("dig_a.json", R"({"kind":"quadratic","A":[[1]],"b":[0],"c":0})");
    fs::path b = write_spec("dig_b.json", R"({"kind":"quadratic","A":[[2]],"b":[0],"c":0})");
    fs::path oa = scratch_dir() / "dig_a_report.json";
    fs::path ob = scratch_dir() / "dig_b_report.json";
    REQUIRE(run("decompose " + a.string() + " --output " + oa.string()).code == 0);
    REQUIRE(run("decompose " + b.string() + " --output " + ob.string()).code == 0);
    auto digest_of = [](const std::string& report) {
        const auto pos = report.find("fnv1a64:");
        REQUIRE(pos != std::string::npos);
        return report.substr(pos, 24);
    };
    CHECK(digest_of(slurp(oa)) != digest_of(slurp(ob)));
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
    fs::path spec = write_spec(
        "gamma4.json",
        R"({"kind":"scalar_composite","terms":[{"w":1,"kernel":"relu_square","a":[1,0,0,0],"s":0},{"w":1,"kernel":"relu_square","a":[0,1,0,0],"s":0},{"w":1,"kernel":"relu_square","a":[0,0,1,0],"s":0},{"w":1,"kernel":"relu_square","a":[0,0,0,1],"s":0}]})");
    fs::path o1 = scratch_dir() / "r1.json";
    fs::path o2 = scratch_dir() / "r2.json";
    fs::path o8 = scratch_dir() / "r8.json";
    CHECK(run("witness " + spec.string() + " --seed 5 --threads 1 --output " + o1.string()).code == 0);
    CHECK(run("witness " + spec.string() + " --seed 5 --threads 1 --output " + o2.string()).code == 0);
    CHECK(run("witness " + spec.string() + " --seed 5 --threads 8 --output " + o8.string()).code == 0);
    const std::string r1 = slurp(o1);
    CHECK(r1 == slurp(o2));
    CHECK(r1 == slurp(o8));
}
