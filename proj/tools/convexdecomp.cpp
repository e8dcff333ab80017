// convexdecomp: canonical decomposition of convex functions, coercivity
// verdicts, coercivizing witnesses, strict-minimum probes and corpus tools.
//
// Exit codes: 0 ok, 2 parse error, 3 inconclusive sampling, 4 oracle or
// consistency failure, 5 precondition violation.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "convexdecomp/coercive.hpp"
#include "convexdecomp/corpus.hpp"
#include "convexdecomp/decomp.hpp"
#include "convexdecomp/errors.hpp"
#include "convexdecomp/funcrepr_json.hpp"

namespace cd = convexdecomp;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string digest_string(const std::string& bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016" PRIx64, fnv1a64(bytes));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cd::ParseError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_real(double x) {
    // 17 significant digits round-trip binary64 exactly
    if (!std::isfinite(x)) {
        if (std::isnan(x)) return "null";
        return x > 0 ? "1e999" : "-1e999";
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    std::string s = buf;
    // keep the token a JSON number
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

void dump_json(std::ostream& os, const json& j) {
    switch (j.type()) {
        case json::value_t::object: {
            os << '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',';
                first = false;
                os << json(it.key()).dump() << ':';
                dump_json(os, it.value());
            }
            os << '}';
            break;
        }
        case json::value_t::array: {
            os << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ',';
                dump_json(os, j[i]);
            }
            os << ']';
            break;
        }
        case json::value_t::number_float:
            os << format_real(j.get<double>());
            break;
        default:
            os << j.dump();
    }
}

json vector_json(const cd::Vector& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(x);
    return arr;
}

json basis_json(const cd::Subspace& s) {
    json rows = json::array();
    for (const auto& b : s.basis) rows.push_back(vector_json(b));
    return rows;
}

json report_shell(const std::string& command, const std::string& digest, std::uint64_t seed) {
    json r;
    r["command"] = command;
    r["version"] = kVersion;
    r["input_digest"] = digest;
    r["seed"] = seed;
    return r;
}

void emit_report(const json& report, const std::string& output_path) {
    std::ostringstream ss;
    dump_json(ss, report);
    ss << '\n';
    if (output_path.empty() || output_path == "-") {
        std::cout << ss.str();
    } else {
        std::ofstream out(output_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write output file: " + output_path);
        out << ss.str();
    }
}

json verdict_json(const cd::CoercivityVerdict& v) {
    json j;
    switch (v.status) {
        case cd::CoercivityStatus::Certified: j["status"] = "certified"; break;
        case cd::CoercivityStatus::Refuted: j["status"] = "refuted"; break;
        case cd::CoercivityStatus::Evidence: j["status"] = "evidence"; break;
    }
    if (v.refuting_ray) {
        j["refuting_ray"] = json{{"x", vector_json(v.refuting_ray->x)},
                                 {"v", vector_json(v.refuting_ray->v)}};
    }
    if (v.evidence) {
        j["evidence"] = json{{"rays_checked", v.evidence->rays_checked},
                             {"max_t", v.evidence->max_t},
                             {"min_terminal_slope", v.evidence->min_terminal_slope}};
    }
    return j;
}

unsigned env_threads() {
    if (const char* e = std::getenv("CONVEXDECOMP_THREADS")) {
        const long v = std::strtol(e, nullptr, 10);
        if (v >= 1 && v <= 256) return static_cast<unsigned>(v);
    }
    return 1;
}

struct CommonArgs {
    std::string input;
    std::string output;
    std::uint64_t seed = 0;
    unsigned threads = 0; // 0: take CONVEXDECOMP_THREADS or 1
    unsigned resolved_threads() const { return threads ? threads : env_threads(); }
};

int run_decompose(const CommonArgs& common, std::size_t samples, double tol_rank) {
    const std::string bytes = read_file(common.input);
    cd::ConvexFunction f = cd::load_function_spec_file(common.input);

    cd::DecompConfig cfg;
    cfg.samples = samples;
    cfg.seed = common.seed;
    cfg.tol_rank = tol_rank;
    cfg.threads = common.resolved_threads();
    auto r = cd::decompose(f, cfg);
    auto check = cd::verify_decomposition(f, r.decomposition, 1000, common.seed);

    json report = report_shell("decompose", digest_string(bytes), common.seed);
    json results;
    results["dim"] = f.dim();
    results["conclusive"] = r.conclusive;
    results["samples_used"] = r.samples_used;
    results["x_basis"] = basis_json(r.decomposition.x_space);
    results["y_basis"] = basis_json(r.decomposition.y_space);
    results["v"] = vector_json(r.decomposition.v);
    results["xi0"] = vector_json(r.decomposition.xi0);
    results["a"] = r.decomposition.a;
    results["residuals"] = json{{"reconstruction_abs", check.reconstruction_abs},
                                {"reconstruction_rel", check.reconstruction_rel},
                                {"quotient_shift_abs", check.quotient_shift_abs},
                                {"quotient_shift_rel", check.quotient_shift_rel},
                                {"subgrad_y_coupling", check.subgrad_y_coupling}};
    report["results"] = std::move(results);
    emit_report(report, common.output);
    return r.conclusive ? 0 : 3;
}

int run_coercivity(const CommonArgs& common, std::size_t rays, double max_t) {
    const std::string bytes = read_file(common.input);
    cd::ConvexFunction f = cd::load_function_spec_file(common.input);

    cd::VerdictConfig cfg;
    cfg.rays = rays;
    cfg.seed = common.seed;
    cfg.max_t = max_t;
    cfg.threads = common.resolved_threads();
    auto verdict = cd::directional_verdict(f, cfg);

    json report = report_shell("coercivity", digest_string(bytes), common.seed);
    json results = verdict_json(verdict);
    results["dim"] = f.dim();
    report["results"] = std::move(results);
    emit_report(report, common.output);
    return 0;
}

int run_witness(const CommonArgs& common, std::size_t terms, std::size_t verify_rays) {
    const std::string bytes = read_file(common.input);
    cd::ConvexFunction f = cd::load_function_spec_file(common.input);
    if (terms == 0) terms = 2 * f.dim();

    cd::Witness w = cd::build_witness(f, terms, common.seed);
    auto check = cd::verify_witness(f, w, verify_rays, common.seed, 1e4,
                                    common.resolved_threads());

    json report = report_shell("witness", digest_string(bytes), common.seed);
    json results;
    results["dim"] = f.dim();
    results["xi"] = vector_json(w.xi);
    results["xi0"] = vector_json(w.xi0);
    results["f0"] = w.f0;
    results["level"] = w.level;
    results["separation_rank"] = cd::separation_rank(w);
    json trace = json::array();
    for (const auto& t : w.trace) {
        trace.push_back(json{{"x", vector_json(t.x)},
                             {"xi", vector_json(t.xi)},
                             {"weight", t.weight}});
    }
    results["trace"] = std::move(trace);
    json skipped = json::array();
    for (const auto& v : w.skipped_rays) skipped.push_back(vector_json(v));
    results["skipped_rays"] = std::move(skipped);
    json verify = verdict_json(check.verdict);
    verify["envelope_violation"] = check.envelope_violation;
    results["verify"] = std::move(verify);
    report["results"] = std::move(results);
    emit_report(report, common.output);
    return 0;
}

int run_corpus(const std::string& out_dir, std::uint64_t seed, const std::string& output) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto corpus = cd::make_graded_corpus(seed);

    std::ostringstream manifest;
    manifest << "name,dim,tags,truth_x_dim,truth_y_dim,truth_v_norm\n";
    for (const auto& e : corpus) {
        const json doc = cd::function_spec_to_json(e.f);
        std::ofstream spec(fs::path(out_dir) / (e.name + ".json"), std::ios::binary);
        if (!spec) throw std::runtime_error("cannot write spec file for " + e.name);
        std::ostringstream ss;
        dump_json(ss, doc);
        ss << '\n';
        spec << ss.str();

        manifest << e.name << ',' << e.f.dim() << ',';
        for (std::size_t i = 0; i < e.tags.size(); ++i) {
            manifest << (i ? ";" : "") << e.tags[i];
        }
        manifest << ',';
        if (e.truth) {
            manifest << e.truth->x_space.dim() << ',' << e.truth->y_space.dim() << ','
                     << format_real(cd::norm(e.truth->v));
        } else {
            manifest << ",,";
        }
        manifest << '\n';
    }
    const std::string manifest_bytes = manifest.str();
    {
        std::ofstream mf(fs::path(out_dir) / "manifest.csv", std::ios::binary);
        if (!mf) throw std::runtime_error("cannot write manifest.csv");
        mf << manifest_bytes;
    }

    json report = report_shell("corpus", digest_string("corpus:seed=" + std::to_string(seed)),
                               seed);
    report["results"] = json{{"out_dir", out_dir},
                             {"entries", corpus.size()},
                             {"manifest", "manifest.csv"},
                             {"manifest_digest", digest_string(manifest_bytes)}};
    emit_report(report, output);
    return 0;
}

// Per-coordinate strict-minimum probe for the separable sweep families. The
// dyadic grid step keeps the expected minimizer on a grid point.
double sweep_minimizer_norm(const std::string& family, std::size_t n) {
    double sq = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double w = std::ldexp(1.0, -static_cast<int>(k));
        const double shift = family == "example33" ? static_cast<double>(k) : 0.0;
        cd::ConvexFunction fk =
            cd::ConvexFunction::scalar_composite({{w, cd::Kernel::ReluSquare, {1.0}, shift}});
        const double radius = shift + 2.0;
        auto mk = cd::strict_minimizer_for_slope(fk, {w}, 32 * static_cast<std::size_t>(radius),
                                                 radius);
        if (mk) sq += (*mk)[0] * (*mk)[0];
    }
    return std::sqrt(sq);
}

int run_sweep(const std::string& family, const std::vector<std::size_t>& n_list,
              const std::string& out, std::uint64_t seed, const std::string& output) {
    if (family != "gamma" && family != "example33") {
        throw cd::ParseError("sweep family must be 'gamma' or 'example33'");
    }
    std::ostringstream csv;
    csv << "family,N,witness_norm,minimizer_norm,flat_half_length,runtime_s\n";
    for (std::size_t n : n_list) {
        if (n < 1) throw cd::ParseError("sweep N values must be positive");
        const auto started = std::chrono::steady_clock::now();
        cd::CorpusEntry entry =
            family == "gamma" ? cd::make_example_gamma(n) : cd::make_example33(n);

        cd::Witness w = cd::build_witness(entry.f, 2 * n, seed);
        const double witness_norm = cd::norm(w.xi);
        const double minimizer_norm = sweep_minimizer_norm(family, n);

        // flat half-length at the origin along e_m is max(0, s_m - 0); the
        // segment checker confirms the nonzero ones
        double flat_half = 0.0;
        const auto& terms = std::get<cd::ScalarCompositeNode>(entry.f.node().repr).terms;
        for (std::size_t m = 1; m <= n; ++m) {
            const double h = std::max(0.0, terms[m - 1].s);
            if (h > 0.0 && !cd::flat_segment_check(entry.f, cd::zeros(n), m)) continue;
            flat_half = std::max(flat_half, h);
        }
        const double runtime =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        csv << family << ',' << n << ',' << format_real(witness_norm) << ','
            << format_real(minimizer_norm) << ',' << format_real(flat_half) << ','
            << format_real(runtime) << '\n';
    }
    {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write sweep CSV: " + out);
        f << csv.str();
    }
    std::string digest_src = "sweep:family=" + family + ":n=";
    for (std::size_t n : n_list) digest_src += std::to_string(n) + ";";
    json report = report_shell("sweep", digest_string(digest_src), seed);
    report["results"] = json{{"family", family}, {"rows", n_list.size()}, {"out", out}};
    emit_report(report, output);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"canonical decomposition and coercivity analysis of convex functions"};
    app.require_subcommand(1);

    CommonArgs common;
    std::size_t samples = 0;
    double tol_rank = 1e-9;
    std::size_t rays = 200;
    double max_t = 1e4;
    std::size_t terms = 0;
    std::size_t verify_rays = 200;
    std::string out_dir;
    std::string family;
    std::vector<std::size_t> n_list;
    std::string sweep_out;

    auto add_common = [&](CLI::App* sub, bool with_input) {
        if (with_input) sub->add_option("input", common.input, "function spec file")->required();
        sub->add_option("--seed", common.seed, "RNG seed");
        sub->add_option("--threads", common.threads,
                        "worker threads (0: CONVEXDECOMP_THREADS or 1); never changes output");
        sub->add_option("--output", common.output, "report path (default stdout)");
    };

    CLI::App* cmd_decompose = app.add_subcommand("decompose", "compute the decomposition");
    add_common(cmd_decompose, true);
    cmd_decompose->add_option("--samples", samples, "sampling budget (0: 64*dim)");
    cmd_decompose->add_option("--tol-rank", tol_rank, "rank tolerance");

    CLI::App* cmd_coercivity = app.add_subcommand("coercivity", "directional verdict");
    add_common(cmd_coercivity, true);
    cmd_coercivity->add_option("--rays", rays, "random rays to scan");
    cmd_coercivity->add_option("--max-t", max_t, "ray horizon");

    CLI::App* cmd_witness = app.add_subcommand("witness", "coercivizing functional");
    add_common(cmd_witness, true);
    cmd_witness->add_option("--terms", terms, "boundary terms (0: 2*dim)");
    cmd_witness->add_option("--verify-rays", verify_rays, "rays in the verification scan");

    CLI::App* cmd_corpus = app.add_subcommand("corpus", "write the graded corpus");
    add_common(cmd_corpus, false);
    cmd_corpus->add_option("--out-dir", out_dir, "output directory")->required();

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "truncation sweep for a family");
    add_common(cmd_sweep, false);
    cmd_sweep->add_option("--family", family, "gamma or example33")->required();
    cmd_sweep->add_option("--n-list", n_list, "truncation sizes")->required();
    cmd_sweep->add_option("--out", sweep_out, "CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(cmd_decompose)) return run_decompose(common, samples, tol_rank);
        if (app.got_subcommand(cmd_coercivity)) return run_coercivity(common, rays, max_t);
        if (app.got_subcommand(cmd_witness)) return run_witness(common, terms, verify_rays);
        if (app.got_subcommand(cmd_corpus)) return run_corpus(out_dir, common.seed, common.output);
        if (app.got_subcommand(cmd_sweep)) {
            return run_sweep(family, n_list, sweep_out, common.seed, common.output);
        }
    } catch (const cd::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cd::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const cd::OracleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
