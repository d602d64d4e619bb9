#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "ktsp/cli.hpp"
#include "ktsp/oracle.hpp"

using namespace ktsp;
using namespace ktsp::cli;

namespace {

void write_out(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path);
    f << text;
}

int threads_from_env() {
    const char* s = std::getenv("KTSP_THREADS");
    if (!s) return 1;
    int t = std::atoi(s);
    return t < 1 ? 1 : t;
}

// Runs every file; results keep the input order.
std::vector<RunOutcome> run_batch(const std::vector<std::string>& files, const RunConfig& cfg) {
    std::vector<std::optional<RunOutcome>> out(files.size());
    std::vector<std::exception_ptr> err(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < files.size();) {
            try {
                out[i] = run_instance(read_instance_file(files[i]), files[i], cfg);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    int nt = std::min<int>(threads_from_env(), static_cast<int>(files.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    std::vector<RunOutcome> res;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (err[i]) std::rethrow_exception(err[i]);
        res.push_back(std::move(*out[i]));
    }
    return res;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Euclidean k-TSP approximation"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::vector<std::string> files;
    std::string mode = "derandomized", emit = "json", out_path;
    int k = 0;
    auto* run = app.add_subcommand("run", "solve instance files");
    run->add_option("files", files, "instance files")->required()->check(CLI::ExistingFile);
    run->add_option("--k", k, "override k from the file");
    run->add_option("--epsilon", cfg.solve.epsilon, "accuracy parameter")->check(CLI::PositiveNumber);
    run->add_option("--mode", mode, "randomized or derandomized")->check(CLI::IsMember({"randomized", "derandomized"}));
    run->add_option("--seed", cfg.solve.seed, "seed for randomized mode");
    run->add_flag("--oracle", cfg.oracle, "compare against the exact solver");
    run->add_option("--r", cfg.solve.r, "override r")->check(CLI::Range(1, 64));
    run->add_option("--m-tilde", cfg.solve.m_tilde, "override m_tilde")->check(CLI::Range(1, 1 << 20));
    run->add_option("--max-ports", cfg.solve.max_ports, "portal labels per cell")->check(CLI::Range(2, 16));
    run->add_option("--shifts-per-axis", cfg.solve.shifts_per_axis, "derandomized shift values per axis")
        ->check(CLI::Range(1, 1 << 16));
    run->add_option("--max-candidates", cfg.solve.max_candidates, "DP candidate guard");
    run->add_option("--c-T", cfg.solve.partition_constants.c_T, "coarse grid constant")->check(CLI::PositiveNumber);
    run->add_option("--c-b", cfg.solve.partition_constants.c_b, "bounding box constant")->check(CLI::PositiveNumber);
    run->add_option("--emit", emit, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    run->add_option("--out", out_path, "output file (default stdout)");
    run->add_flag("--timing", cfg.timing, "include wall time in JSON");

    std::string inst_path, tour_path;
    auto* val = app.add_subcommand("validate", "check a tour against an instance");
    val->add_option("instance", inst_path)->required()->check(CLI::ExistingFile);
    val->add_option("tour", tour_path)->required()->check(CLI::ExistingFile);

    int gn = 0, gd = 2, gk = 2;
    std::uint64_t gseed = 0;
    std::string gdist = "uniform", gout;
    auto* gen = app.add_subcommand("gen", "generate an instance");
    gen->add_option("--n", gn)->required()->check(CLI::Range(1, 1 << 24));
    gen->add_option("--d", gd)->check(CLI::Range(1, 16));
    gen->add_option("--k", gk)->check(CLI::Range(1, 1 << 24));
    gen->add_option("--dist", gdist)->check(CLI::IsMember({"uniform", "clustered", "collinear", "grid"}));
    gen->add_option("--seed", gseed);
    gen->add_option("--out", gout);

    std::string okind = "tsp", ofile, oout;
    int ok = 0;
    auto* orc = app.add_subcommand("oracle", "exact k-TSP, k-ball (d=2) or k-cube");
    orc->add_option("file", ofile)->required()->check(CLI::ExistingFile);
    orc->add_option("--kind", okind)->check(CLI::IsMember({"tsp", "ball", "cube"}));
    orc->add_option("--k", ok, "override k from the file");
    orc->add_option("--out", oout);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*run) {
            if (k > 0) cfg.k = k;
            cfg.solve.mode = parse_mode(mode);
            auto results = run_batch(files, cfg);
            std::string text;
            if (emit == "csv") {
                text = csv_header() + "\n";
                for (const auto& r : results) text += csv_row(r, cfg) + "\n";
            } else if (results.size() == 1) {
                text = report_json(results[0], cfg).dump(2) + "\n";
            } else {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& r : results) arr.push_back(report_json(r, cfg));
                text = arr.dump(2) + "\n";
            }
            write_out(out_path, text);
        } else if (*val) {
            auto raw = read_instance_file(inst_path);
            auto tour = read_tour_file(tour_path);
            auto c = validate_tour(raw, tour.order, tour.cost);
            if (c.ok) {
                std::cout << "PASS visits=" << c.distinct << " cost=" << c.recomputed << "\n";
                return kExitOk;
            }
            std::cout << "FAIL " << c.reason << "\n";
            return kExitValidationFailed;
        } else if (*gen) {
            write_out(gout, format_instance(generate(gn, gd, gk, parse_distribution(gdist), gseed)));
        } else if (*orc) {
            auto raw = read_instance_file(ofile);
            if (ok > 0) raw.k = ok;
            if (raw.k < 1 || raw.k > static_cast<int>(raw.points.size())) throw InvalidArgument("need 1 <= k <= n");
            OracleResult res;
            nlohmann::json j;
            if (okind == "tsp") {
                res = exact_k_tsp(raw.points, raw.k);
                j["tour"] = res.tour;
            } else if (okind == "ball") {
                if (raw.d != 2) throw InvalidArgument("the exact k-ball oracle needs d = 2");
                res = exact_k_ball_2d(raw.points, raw.k);
                j["center"] = res.anchor;
            } else {
                res = exact_k_cube(raw.points, raw.k);
                j["corner"] = res.anchor;
            }
            j["kind"] = okind;
            j["k"] = raw.k;
            j["value"] = res.value;
            write_out(oout, j.dump(2) + "\n");
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const Infeasible& e) {
        std::cerr << "infeasible at truncation: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const CapExceeded& e) {
        if (*orc) {
            std::cerr << "input error: " << e.what() << "\n";
            return kExitInputError;
        }
        std::cerr << "infeasible at truncation: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
