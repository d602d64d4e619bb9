#include "ktsp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ktsp/oracle.hpp"

namespace ktsp::cli {

namespace {

std::string strip_comment(const std::string& line) {
    auto h = line.find('#');
    return h == std::string::npos ? line : line.substr(0, h);
}

std::vector<std::string> tokens(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string t; is >> t;) out.push_back(t);
    return out;
}

bool to_double(const std::string& t, double& x) {
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    return ec == std::errc() && p == t.data() + t.size() && std::isfinite(x);
}

bool to_int(const std::string& t, long long& x) {
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    return ec == std::errc() && p == t.data() + t.size();
}

std::string num(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return in;
}

}  // namespace

ParseError::ParseError(const std::string& source, int line_no, const std::string& what)
    : InputError(source + ":" + std::to_string(line_no) + ": " + what), line(line_no) {}

RawInstance parse_instance(std::istream& in, const std::string& source) {
    RawInstance raw;
    std::string line;
    int line_no = 0;
    long long n = -1;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = tokens(strip_comment(line));
        if (t.empty()) continue;
        if (n < 0) {
            long long d = 0, k = 0;
            if (t.size() != 3 || !to_int(t[0], n) || !to_int(t[1], d) || !to_int(t[2], k))
                throw ParseError(source, line_no, "expected header `n d k`");
            if (n < 1 || d < 1 || d > 16 || k < 1) throw ParseError(source, line_no, "header values out of range");
            raw.d = static_cast<int>(d);
            raw.k = static_cast<int>(k);
            continue;
        }
        if (static_cast<long long>(raw.points.size()) == n)
            throw ParseError(source, line_no, "more than " + std::to_string(n) + " points");
        if (static_cast<int>(t.size()) != raw.d)
            throw ParseError(source, line_no,
                             "expected " + std::to_string(raw.d) + " coordinates, got " + std::to_string(t.size()));
        RealPoint p(raw.d);
        for (int a = 0; a < raw.d; ++a)
            if (!to_double(t[a], p[a])) throw ParseError(source, line_no, "bad number `" + t[a] + "`");
        raw.points.push_back(std::move(p));
    }
    if (n < 0) throw ParseError(source, line_no, "missing header");
    if (static_cast<long long>(raw.points.size()) != n)
        throw ParseError(source, line_no,
                         "expected " + std::to_string(n) + " points, got " + std::to_string(raw.points.size()));
    return raw;
}

RawInstance read_instance_file(const std::string& path) {
    auto in = open_or_throw(path);
    return parse_instance(in, path);
}

std::string format_instance(const RawInstance& inst) {
    std::string s = std::to_string(inst.points.size()) + " " + std::to_string(inst.d) + " " + std::to_string(inst.k) + "\n";
    for (const auto& p : inst.points) {
        for (std::size_t a = 0; a < p.size(); ++a) s += (a ? " " : "") + num(p[a]);
        s += "\n";
    }
    return s;
}

TourFile parse_tour(std::istream& in, const std::string& source) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    TourFile tf;
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(source + ": " + e.what());
        }
        if (!j.contains("tour") || !j["tour"].is_array()) throw InputError(source + ": report has no tour");
        for (const auto& x : j["tour"]) {
            if (!x.is_number_integer()) throw InputError(source + ": tour entries must be integers");
            tf.order.push_back(x.get<int>());
        }
        if (j.contains("cost") && j["cost"].is_number()) tf.cost = j["cost"].get<double>();
        return tf;
    }
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto t = tokens(strip_comment(line));
        if (t.empty()) continue;
        if (t[0] == "cost") {
            double c = 0;
            if (t.size() != 2 || !to_double(t[1], c)) throw ParseError(source, line_no, "expected `cost <value>`");
            tf.cost = c;
            continue;
        }
        for (const auto& x : t) {
            long long v = 0;
            if (!to_int(x, v) || v < 0 || v > 1'000'000'000)
                throw ParseError(source, line_no, "bad point index `" + x + "`");
            tf.order.push_back(static_cast<int>(v));
        }
    }
    return tf;
}

TourFile read_tour_file(const std::string& path) {
    auto in = open_or_throw(path);
    return parse_tour(in, path);
}

TourCheck validate_tour(const RawInstance& inst, const std::vector<int>& order_in,
                        std::optional<double> reported_cost) {
    TourCheck c;
    std::vector<int> order = order_in;
    if (order.size() > 1 && order.front() == order.back()) order.pop_back();
    const int n = static_cast<int>(inst.points.size());
    for (int i : order)
        if (i < 0 || i >= n) {
            c.ok = false;
            c.reason = "index " + std::to_string(i) + " out of range";
            return c;
        }
    c.distinct = static_cast<int>(std::set<int>(order.begin(), order.end()).size());
    c.recomputed = cycle_cost(inst.points, order);
    if (c.distinct < inst.k) {
        c.ok = false;
        c.reason = "insufficient visits: " + std::to_string(c.distinct) + " distinct points, k = " + std::to_string(inst.k);
        return c;
    }
    if (reported_cost &&
        std::abs(*reported_cost - c.recomputed) > kCostTolerance * std::max(1.0, std::abs(c.recomputed))) {
        c.ok = false;
        c.reason = "cost mismatch: reported " + num(*reported_cost) + ", recomputed " + num(c.recomputed);
    }
    return c;
}

Distribution parse_distribution(const std::string& s) {
    if (s == "uniform") return Distribution::Uniform;
    if (s == "clustered") return Distribution::Clustered;
    if (s == "collinear") return Distribution::Collinear;
    if (s == "grid") return Distribution::Grid;
    throw InvalidArgument("unknown distribution `" + s + "`");
}

RawInstance generate(int n, int d, int k, Distribution dist, std::uint64_t seed) {
    if (n < 1 || d < 1 || k < 1) throw InvalidArgument("gen: n, d and k must be positive");
    RawInstance raw;
    raw.d = d;
    raw.k = k;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Six decimals keep the text form short and exact on re-read.
    auto q = [](double x) { return std::round(x * 1e6) / 1e6; };
    switch (dist) {
        case Distribution::Uniform:
            for (int i = 0; i < n; ++i) {
                RealPoint p(d);
                for (auto& x : p) x = q(100.0 * u(rng));
                raw.points.push_back(p);
            }
            break;
        case Distribution::Clustered:
            // Two clusters of radius 5 whose centres are 1000 apart.
            for (int i = 0; i < n; ++i) {
                RealPoint p(d);
                for (int a = 0; a < d; ++a) p[a] = (a == 0 && i % 2 ? 1000.0 : 0.0) + 10.0 * u(rng) - 5.0;
                for (auto& x : p) x = q(x);
                raw.points.push_back(p);
            }
            break;
        case Distribution::Collinear: {
            std::normal_distribution<double> g;
            RealPoint dir(d);
            double len = 0;
            while (len < 1e-3) {
                len = 0;
                for (auto& x : dir) {
                    x = g(rng);
                    len += x * x;
                }
                len = std::sqrt(len);
            }
            // Integer steps along a lattice direction keep the points exactly collinear.
            GridPoint step(d);
            for (int a = 0; a < d; ++a) step[a] = static_cast<std::int64_t>(std::lround(4.0 * dir[a] / len));
            if (std::all_of(step.begin(), step.end(), [](std::int64_t x) { return x == 0; })) step[0] = 1;
            for (int i = 0; i < n; ++i) {
                auto t = static_cast<std::int64_t>(std::floor(100.0 * u(rng)));
                RealPoint p(d);
                for (int a = 0; a < d; ++a) p[a] = static_cast<double>(t * step[a]);
                raw.points.push_back(p);
            }
            break;
        }
        case Distribution::Grid: {
            int side = 1;
            while (ipow(side, d) < n) ++side;
            for (int i = 0; i < n; ++i) {
                RealPoint p(d);
                int v = i;
                for (int a = 0; a < d; ++a) {
                    p[a] = v % side;
                    v /= side;
                }
                raw.points.push_back(p);
            }
            break;
        }
    }
    return raw;
}

std::string mode_name(Mode m) { return m == Mode::Randomized ? "randomized" : "derandomized"; }

Mode parse_mode(const std::string& s) {
    if (s == "randomized") return Mode::Randomized;
    if (s == "derandomized") return Mode::Derandomized;
    throw InvalidArgument("unknown mode `" + s + "`");
}

RunOutcome run_instance(const RawInstance& raw_in, const std::string& name, const RunConfig& cfg) {
    RunOutcome out;
    out.instance = name;
    out.raw = raw_in;
    if (cfg.k) out.raw.k = *cfg.k;
    auto t0 = std::chrono::steady_clock::now();
    out.report = solve(out.raw, cfg.solve);
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!out.report.feasible) throw Infeasible("no feasible tour under the configured parameters");
    auto check = validate_tour(out.raw, out.report.tour, out.report.cost);
    if (!check.ok) throw InternalError("emitted tour fails validation: " + check.reason);
    if (cfg.oracle) {
        if (static_cast<int>(out.raw.points.size()) > kExactTspCap)
            throw InvalidArgument("--oracle supports at most " + std::to_string(kExactTspCap) + " points");
        out.oracle_cost = exact_k_tsp(out.raw.points, out.raw.k).value;
    }
    return out;
}

nlohmann::json report_json(const RunOutcome& out, const RunConfig& cfg) {
    const SolveReport& r = out.report;
    nlohmann::json j;
    j["instance"] = out.instance;
    j["n"] = out.raw.points.size();
    j["d"] = out.raw.d;
    j["k"] = out.raw.k;
    j["epsilon"] = cfg.solve.epsilon;
    j["mode"] = mode_name(cfg.solve.mode);
    if (cfg.solve.mode == Mode::Randomized) j["seed"] = cfg.solve.seed;
    j["tour"] = r.tour;
    j["cost"] = r.cost;
    if (out.oracle_cost) {
        j["oracle_cost"] = *out.oracle_cost;
        j["ratio"] = *out.oracle_cost > 0 ? r.cost / *out.oracle_cost : 1.0;
    }
    j["chosen_s"] = r.chosen_s;
    j["params"] = {{"r", r.params.r},
                   {"m_tilde", r.params.m_tilde},
                   {"grid_cap", r.params.grid_cap},
                   {"facet_cross_cap", r.params.facet_cross_cap}};
    j["partition"] = {{"A", r.A}, {"rho", r.rho}, {"partitions", r.partitions}, {"subinstances", r.subinstances}};
    nlohmann::json runs = nlohmann::json::array();
    std::size_t candidates = 0;
    int cells = 0;
    for (const auto& rec : r.runs) {
        candidates += rec.stats.candidates;
        cells += rec.stats.cells;
        nlohmann::json x;
        x["subinstance"] = rec.subinstance;
        x["shift"] = rec.shift;
        x["feasible"] = rec.feasible;
        if (rec.feasible) {
            x["cost"] = rec.cost;
            x["chosen_s"] = rec.chosen_s;
        }
        x["cap_factor"] = rec.cap_factor;
        x["cells"] = rec.stats.cells;
        x["groups"] = rec.stats.groups;
        x["entries"] = rec.stats.entries;
        x["candidates"] = rec.stats.candidates;
        runs.push_back(std::move(x));
    }
    j["dp"] = {{"cells", cells},
               {"states", r.dp_states},
               {"thresholds", r.thresholds},
               {"candidates", candidates},
               {"reduce_shrink", candidates ? static_cast<double>(r.dp_states) / static_cast<double>(candidates) : 1.0},
               {"runs", runs}};
    if (cfg.timing) j["wall_ms"] = out.wall_ms;
    return j;
}

std::string csv_header() { return "instance,n,d,k,epsilon,mode,cost,oracle_cost,ratio,chosen_s,dp_states,wall_ms"; }

std::string csv_row(const RunOutcome& out, const RunConfig& cfg) {
    const SolveReport& r = out.report;
    std::string s = out.instance + "," + std::to_string(out.raw.points.size()) + "," + std::to_string(out.raw.d) + "," +
                    std::to_string(out.raw.k) + "," + num(cfg.solve.epsilon) + "," + mode_name(cfg.solve.mode) + "," +
                    num(r.cost) + ",";
    if (out.oracle_cost) {
        s += num(*out.oracle_cost) + "," + num(*out.oracle_cost > 0 ? r.cost / *out.oracle_cost : 1.0);
    } else {
        s += ",";
    }
    s += "," + std::to_string(r.chosen_s) + "," + std::to_string(r.dp_states) + "," + num(std::round(out.wall_ms * 1000) / 1000);
    return s;
}

}  // namespace ktsp::cli
