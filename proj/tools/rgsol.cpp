// Command-line front end for the rotationally invariant soliton library.
//
// Subcommands: integrate | sweep | bisect | classify | reconstruct | verify.
// Numeric series go to CSV, run metadata to JSON manifests. Output is
// deterministic: identical config and seed produce byte-identical files, and
// every manifest embeds the effective config, its hash, and the tool version.
//
// Exit codes: 0 success, 1 verification failure, 2 config error,
// 3 numerical failure (step underflow).

#include <shrinksol/shrinksol.hpp>

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace po = boost::program_options;
using json = nlohmann::ordered_json;
using namespace shrinksol;

namespace {

constexpr const char* tool_name = "rgsol";
constexpr const char* tool_version = "1.0.0";

struct ConfigError {
    std::string message;
};

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    int n = 2;
    double lambda = 1.0;
    bool steady = false;

    std::optional<double> theta;                   // seed-circle angle
    double delta = 1e-6;                           // seed-circle radius
    std::optional<PhasePoint<double>> initial;     // explicit start, exclusive with theta

    double t0 = 0.0;
    double t1 = 60.0;
    double horizon_backward = 8.0;
    double rtol = 1e-10;
    double atol = 1e-12;
    std::vector<EventSpec<double>> events;

    double theta_lo = 0.0;                         // sweep / bisect bracket
    double theta_hi = 0.0;
    bool bracket_set = false;
    int count = 21;
    int iters = 60;
    double f0 = 0.0;
    double max_dr = 0.0;

    std::uint64_t seed = default_property_seed;
    std::string out = ".";
    bool gnuplot = false;
};

const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::XCrosses: return "XCrosses";
        case EventKind::DxDtCrossesZero: return "DxDtCrossesZero";
        case EventKind::YCrossesZero: return "YCrossesZero";
        case EventKind::ProximityP1: return "ProximityP1";
        case EventKind::OmegaBelowFloor: return "OmegaBelowFloor";
        case EventKind::AbsXAboveCeiling: return "AbsXAboveCeiling";
    }
    return "?";
}

EventKind kind_from(const std::string& s) {
    for (auto k : {EventKind::XCrosses, EventKind::DxDtCrossesZero, EventKind::YCrossesZero,
                   EventKind::ProximityP1, EventKind::OmegaBelowFloor,
                   EventKind::AbsXAboveCeiling})
        if (s == kind_name(k)) return k;
    throw ConfigError{"key 'events.kind': unknown event kind '" + s + "'"};
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::HorizonReached: return "HorizonReached";
        case Termination::EventStop: return "EventStop";
        case Termination::BlowupDetected: return "BlowupDetected";
        case Termination::CollapseDetected: return "CollapseDetected";
        case Termination::StepUnderflow: return "StepUnderflow";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// JSON config file

double as_number(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError{"key '" + key + "' must be a number"};
    return j.get<double>();
}

void apply_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError{"cannot read config file '" + path + "'"};
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError{std::string("config file is not valid JSON: ") + e.what()};
    }
    if (!j.is_object()) throw ConfigError{"config file must hold a JSON object"};

    for (const auto& [key, val] : j.items()) {
        if (key == "n") {
            if (!val.is_number_integer()) throw ConfigError{"key 'n' must be an integer"};
            c.n = val.get<int>();
        } else if (key == "lambda") {
            c.lambda = as_number(val, key);
        } else if (key == "steady") {
            if (!val.is_boolean()) throw ConfigError{"key 'steady' must be a boolean"};
            c.steady = val.get<bool>();
        } else if (key == "theta") {
            c.theta = as_number(val, key);
        } else if (key == "delta") {
            c.delta = as_number(val, key);
        } else if (key == "initial") {
            if (!val.is_array() || val.size() != 3 || !val[0].is_number() ||
                !val[1].is_number() || !val[2].is_number())
                throw ConfigError{"key 'initial' must be an array [omega, x, y]"};
            c.initial = PhasePoint<double>{val[0].get<double>(), val[1].get<double>(),
                                           val[2].get<double>()};
        } else if (key == "t0") {
            c.t0 = as_number(val, key);
        } else if (key == "t1") {
            c.t1 = as_number(val, key);
        } else if (key == "horizon_backward") {
            c.horizon_backward = as_number(val, key);
        } else if (key == "rtol") {
            c.rtol = as_number(val, key);
        } else if (key == "atol") {
            c.atol = as_number(val, key);
        } else if (key == "events") {
            if (!val.is_array()) throw ConfigError{"key 'events' must be an array"};
            for (const auto& ev : val) {
                if (!ev.is_object() || !ev.contains("kind") || !ev["kind"].is_string())
                    throw ConfigError{"key 'events': each entry needs a string 'kind'"};
                EventSpec<double> spec;
                spec.kind = kind_from(ev["kind"].get<std::string>());
                for (const auto& [ek, evv] : ev.items()) {
                    if (ek == "kind") continue;
                    if (ek == "threshold") spec.threshold = as_number(evv, "events.threshold");
                    else if (ek == "direction") {
                        const std::string d = evv.is_string() ? evv.get<std::string>() : "";
                        if (d == "rising") spec.direction = EventDirection::Rising;
                        else if (d == "falling") spec.direction = EventDirection::Falling;
                        else if (d == "any") spec.direction = EventDirection::Any;
                        else
                            throw ConfigError{
                                "key 'events.direction' must be \"rising\", \"falling\", or "
                                "\"any\""};
                    } else if (ek == "stop") {
                        if (!evv.is_boolean())
                            throw ConfigError{"key 'events.stop' must be a boolean"};
                        spec.stop = evv.get<bool>();
                    } else {
                        throw ConfigError{"key 'events." + ek + "' is not recognized"};
                    }
                }
                c.events.push_back(spec);
            }
        } else if (key == "theta_lo") {
            c.theta_lo = as_number(val, key);
            c.bracket_set = true;
        } else if (key == "theta_hi") {
            c.theta_hi = as_number(val, key);
            c.bracket_set = true;
        } else if (key == "count") {
            if (!val.is_number_integer()) throw ConfigError{"key 'count' must be an integer"};
            c.count = val.get<int>();
        } else if (key == "iters") {
            if (!val.is_number_integer()) throw ConfigError{"key 'iters' must be an integer"};
            c.iters = val.get<int>();
        } else if (key == "f0") {
            c.f0 = as_number(val, key);
        } else if (key == "max_dr") {
            c.max_dr = as_number(val, key);
        } else if (key == "seed") {
            if (!val.is_number_integer() || val.get<double>() < 0)
                throw ConfigError{"key 'seed' must be a nonnegative integer"};
            c.seed = val.get<std::uint64_t>();
        } else if (key == "out") {
            if (!val.is_string()) throw ConfigError{"key 'out' must be a string"};
            c.out = val.get<std::string>();
        } else if (key == "gnuplot") {
            if (!val.is_boolean()) throw ConfigError{"key 'gnuplot' must be a boolean"};
            c.gnuplot = val.get<bool>();
        } else {
            throw ConfigError{"key '" + key + "' is not recognized"};
        }
    }
}

void apply_flags(RunConfig& c, const po::variables_map& vm) {
    if (vm.count("n")) c.n = vm["n"].as<int>();
    if (vm.count("lambda")) c.lambda = vm["lambda"].as<double>();
    if (vm["steady"].as<bool>()) c.steady = true;
    if (vm.count("theta")) c.theta = vm["theta"].as<double>();
    if (vm.count("delta")) c.delta = vm["delta"].as<double>();
    if (vm.count("omega") || vm.count("x") || vm.count("y")) {
        if (!(vm.count("omega") && vm.count("x") && vm.count("y")))
            throw ConfigError{"keys 'omega', 'x', 'y' must be given together"};
        c.initial = PhasePoint<double>{vm["omega"].as<double>(), vm["x"].as<double>(),
                                       vm["y"].as<double>()};
    }
    if (vm.count("t0")) c.t0 = vm["t0"].as<double>();
    if (vm.count("t1")) c.t1 = vm["t1"].as<double>();
    if (vm.count("rtol")) c.rtol = vm["rtol"].as<double>();
    if (vm.count("atol")) c.atol = vm["atol"].as<double>();
    if (vm.count("theta-lo")) { c.theta_lo = vm["theta-lo"].as<double>(); c.bracket_set = true; }
    if (vm.count("theta-hi")) { c.theta_hi = vm["theta-hi"].as<double>(); c.bracket_set = true; }
    if (vm.count("count")) c.count = vm["count"].as<int>();
    if (vm.count("iters")) c.iters = vm["iters"].as<int>();
    if (vm.count("seed")) c.seed = vm["seed"].as<std::uint64_t>();
    if (vm.count("out")) c.out = vm["out"].as<std::string>();
    if (vm["gnuplot"].as<bool>()) c.gnuplot = true;
}

void validate_config(const RunConfig& c) {
    if (c.n < 2) throw ConfigError{"key 'n': dimension must be at least 2"};
    if (!(c.lambda > 0)) throw ConfigError{"key 'lambda': must be positive"};
    if (!(c.rtol >= 100 * std::numeric_limits<double>::epsilon()))
        throw ConfigError{"key 'rtol': must be at least 100 * machine epsilon"};
    if (!(c.atol > 0)) throw ConfigError{"key 'atol': must be positive"};
    if (c.theta && c.initial)
        throw ConfigError{"keys 'theta' and 'initial' are exclusive; give one start"};
    if (c.count < 2) throw ConfigError{"key 'count': sweep needs at least 2 seeds"};
    if (c.iters < 1) throw ConfigError{"key 'iters': must be at least 1"};
    if (c.initial && !(c.initial->omega > 0) && !c.steady)
        throw ConfigError{"key 'initial': omega must be positive unless 'steady' is set"};
}

SolitonParams<double> make_params(const RunConfig& c) {
    return SolitonParams<double>{c.n, c.lambda, c.steady};
}

AugmentedState<double> resolve_start(const RunConfig& c, const SolitonParams<double>& params) {
    if (c.initial) return {*c.initial, 0.0, 0.0};
    if (c.theta) return {unstable_seed(params, *c.theta, c.delta), 0.0, 0.0};
    throw ConfigError{"key 'theta' or 'initial': one starting point is required"};
}

IntegrateOptions<double> make_options(const RunConfig& c) {
    IntegrateOptions<double> opts;
    opts.tol = {c.rtol, c.atol};
    opts.events = c.events;
    return opts;
}

// ---------------------------------------------------------------------------
// Output plumbing

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(const json& config) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(config.dump())));
    return buf;
}

json config_json(const RunConfig& c) {
    json j;
    j["n"] = c.n;
    j["lambda"] = c.lambda;
    j["steady"] = c.steady;
    if (c.theta) j["theta"] = *c.theta;
    j["delta"] = c.delta;
    if (c.initial) j["initial"] = {c.initial->omega, c.initial->x, c.initial->y};
    j["t0"] = c.t0;
    j["t1"] = c.t1;
    j["horizon_backward"] = c.horizon_backward;
    j["rtol"] = c.rtol;
    j["atol"] = c.atol;
    if (!c.events.empty()) {
        json evs = json::array();
        for (const auto& e : c.events)
            evs.push_back({{"kind", kind_name(e.kind)},
                           {"threshold", e.threshold},
                           {"direction", e.direction == EventDirection::Rising    ? "rising"
                                         : e.direction == EventDirection::Falling ? "falling"
                                                                                  : "any"},
                           {"stop", e.stop}});
        j["events"] = evs;
    }
    if (c.bracket_set) {
        j["theta_lo"] = c.theta_lo;
        j["theta_hi"] = c.theta_hi;
    }
    j["count"] = c.count;
    j["iters"] = c.iters;
    j["f0"] = c.f0;
    j["max_dr"] = c.max_dr;
    j["seed"] = c.seed;
    j["out"] = c.out;
    return j;
}

json manifest_base(const RunConfig& c) {
    json m;
    m["tool"] = tool_name;
    m["version"] = tool_version;
    const json cfg = config_json(c);
    m["config"] = cfg;
    m["config_hash"] = hash_hex(cfg);
    return m;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError{"cannot open '" + path.string() + "' for writing"};
    out << body;
    if (!out) throw ConfigError{"write to '" + path.string() + "' failed"};
}

std::filesystem::path out_dir(const RunConfig& c) {
    std::filesystem::path dir(c.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError{"cannot create output directory '" + c.out + "'"};
    return dir;
}

std::string trajectory_csv(const Trajectory<double>& traj) {
    std::string body = "t,omega,x,y,r,f\n";
    for (const auto& s : traj.samples) {
        body += fmt(s.t) + ',' + fmt(s.state.p.omega) + ',' + fmt(s.state.p.x) + ',' +
                fmt(s.state.p.y) + ',' + fmt(s.state.r) + ',' + fmt(s.state.f) + '\n';
    }
    return body;
}

std::string trajectory_dat(const Trajectory<double>& traj) {
    std::string body = "# t omega x y r f\n";
    for (const auto& s : traj.samples) {
        body += fmt(s.t) + ' ' + fmt(s.state.p.omega) + ' ' + fmt(s.state.p.x) + ' ' +
                fmt(s.state.p.y) + ' ' + fmt(s.state.r) + ' ' + fmt(s.state.f) + '\n';
    }
    return body;
}

json trajectory_summary(const Trajectory<double>& traj) {
    json t;
    t["termination"] = termination_name(traj.termination);
    t["accepted_steps"] = traj.samples.empty() ? 0 : traj.samples.size() - 1;
    t["samples"] = traj.samples.size();
    t["t_end"] = traj.samples.empty() ? 0.0 : traj.samples.back().t;
    if (!traj.samples.empty()) {
        const auto& s = traj.samples.back().state;
        t["final"] = {{"omega", s.p.omega}, {"x", s.p.x}, {"y", s.p.y}, {"r", s.r}, {"f", s.f}};
    }
    json evs = json::array();
    for (const auto& hit : traj.events)
        evs.push_back({{"kind", kind_name(hit.spec.kind)}, {"t", hit.t}});
    t["events"] = evs;
    return t;
}

int exit_for(const Trajectory<double>& traj) {
    if (traj.termination == Termination::StepUnderflow) {
        std::cerr << "numerical failure: step underflow at t = "
                  << (traj.samples.empty() ? 0.0 : traj.samples.back().t) << "\n";
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_integrate(const RunConfig& c) {
    const auto params = make_params(c);
    const auto traj = integrate(params, resolve_start(c, params), c.t0, c.t1, make_options(c));

    const auto dir = out_dir(c);
    write_text(dir / "trajectory.csv", trajectory_csv(traj));
    if (c.gnuplot) write_text(dir / "trajectory.dat", trajectory_dat(traj));

    json m = manifest_base(c);
    m["command"] = "integrate";
    m["trajectory"] = trajectory_summary(traj);
    m["outputs"] = c.gnuplot ? json::array({"trajectory.csv", "trajectory.dat"})
                             : json::array({"trajectory.csv"});
    write_text(dir / "manifest.json", m.dump(2) + "\n");

    std::cout << "wrote " << (dir / "trajectory.csv").string() << " (" << traj.samples.size()
              << " samples, " << termination_name(traj.termination) << ")\n";
    return exit_for(traj);
}

int cmd_sweep(const RunConfig& c) {
    const auto params = make_params(c);
    const double lo = c.bracket_set ? c.theta_lo : 0.0;
    const double hi = c.bracket_set ? c.theta_hi : flat_angle_hint(params, c.delta) * 1.5;

    SweepOptions<double> opts;
    opts.horizon_forward = c.t1;
    opts.horizon_backward = c.horizon_backward;
    opts.tol = {c.rtol, c.atol};
    const auto results = sweep_unstable(params, lo, hi, c.count, c.delta, opts);

    std::string csv = "theta,tag\n";
    json rows = json::array();
    for (const auto& [theta, cls] : results) {
        csv += fmt(theta) + ',' + to_string(cls.tag) + '\n';
        json ev;
        for (const auto& [name, value] : cls.evidence) ev[name] = value;
        rows.push_back({{"theta", theta}, {"tag", to_string(cls.tag)}, {"evidence", ev}});
    }

    const auto dir = out_dir(c);
    write_text(dir / "sweep.csv", csv);
    json m = manifest_base(c);
    m["command"] = "sweep";
    m["theta_lo"] = lo;
    m["theta_hi"] = hi;
    m["results"] = rows;
    m["outputs"] = json::array({"sweep.csv"});
    write_text(dir / "manifest.json", m.dump(2) + "\n");

    std::cout << "wrote " << (dir / "sweep.csv").string() << " (" << results.size()
              << " seeds)\n";
    return 0;
}

int cmd_bisect(const RunConfig& c) {
    const auto params = make_params(c);
    const auto def = default_bisect_bracket(params, c.delta);
    const double lo = c.bracket_set ? c.theta_lo : def.first;
    const double hi = c.bracket_set ? c.theta_hi : def.second;

    BisectOptions<double> opts;
    opts.delta = c.delta;
    const auto res = bisect_heteroclinic(params, lo, hi, c.iters, opts);

    const double n = static_cast<double>(params.n);
    double line_dev = 0, locus_dev = 0, omega_max = 0;
    for (const auto& s : res.orbit.samples) {
        const auto& q = s.state.p;
        line_dev = std::max(line_dev, std::abs(q.y - n * q.x));
        locus_dev = std::max(locus_dev,
                             std::abs(n * q.x * q.x + params.lambda * q.omega * q.omega - n));
        omega_max = std::max(omega_max, q.omega);
    }
    const auto& back = res.orbit.samples.back().state.p;
    const double end_distance = std::hypot(back.omega, back.x + 1.0, back.y + n);

    const auto dir = out_dir(c);
    write_text(dir / "trajectory.csv", trajectory_csv(res.orbit));
    if (c.gnuplot) write_text(dir / "trajectory.dat", trajectory_dat(res.orbit));

    json m = manifest_base(c);
    m["command"] = "bisect";
    m["theta_lo"] = lo;
    m["theta_hi"] = hi;
    m["theta_star"] = res.theta_star;
    m["iterations"] = res.iterations;
    m["line_deviation"] = line_dev;
    m["ellipse_deviation"] = locus_dev;
    m["omega_max"] = omega_max;
    m["end_distance"] = end_distance;
    m["trajectory"] = trajectory_summary(res.orbit);
    m["outputs"] = c.gnuplot ? json::array({"trajectory.csv", "trajectory.dat"})
                             : json::array({"trajectory.csv"});
    write_text(dir / "manifest.json", m.dump(2) + "\n");

    std::cout << "theta* = " << fmt(res.theta_star) << " after " << res.iterations
              << " iterations; ellipse deviation " << fmt(locus_dev) << ", end distance "
              << fmt(end_distance) << "\n";
    return exit_for(res.orbit);
}

int cmd_classify(const RunConfig& c) {
    const auto params = make_params(c);
    const auto a0 = resolve_start(c, params);
    const auto opts = make_options(c);
    const auto fwd = integrate(params, a0, c.t0, c.t0 + std::abs(c.t1 - c.t0), opts);
    const auto bwd = integrate(params, a0, c.t0, c.t0 - c.horizon_backward, opts);
    const auto cls = classify(fwd, bwd);

    json m = manifest_base(c);
    m["command"] = "classify";
    m["tag"] = to_string(cls.tag);
    json ev;
    for (const auto& [name, value] : cls.evidence) ev[name] = value;
    m["evidence"] = ev;
    m["forward"] = trajectory_summary(fwd);
    m["backward"] = trajectory_summary(bwd);

    const auto dir = out_dir(c);
    write_text(dir / "classify.json", m.dump(2) + "\n");
    std::cout << to_string(cls.tag) << "\n";

    if (const int code = exit_for(fwd)) return code;
    return exit_for(bwd);
}

int cmd_reconstruct(const RunConfig& c) {
    const auto params = make_params(c);
    const auto traj = integrate(params, resolve_start(c, params), c.t0, c.t1, make_options(c));
    const auto prof = reconstruct_profile(params, traj, c.f0, c.max_dr);

    const double n = static_cast<double>(params.n);
    std::string csv = "r,omega,x,fprime,f,nu1,nu2,R,identity\n";
    std::string dat = "# r omega x fprime f nu1 nu2 R identity\n";
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double identity =
            prof.R[i] - (2.0 * n * prof.nu1[i] + n * (n - 1.0) * prof.nu2[i]);
        const std::string cols[] = {fmt(prof.r[i]),  fmt(prof.omega[i]), fmt(prof.x[i]),
                                    fmt(prof.fprime[i]), fmt(prof.f[i]),  fmt(prof.nu1[i]),
                                    fmt(prof.nu2[i]), fmt(prof.R[i]),    fmt(identity)};
        for (int k = 0; k < 9; ++k) {
            csv += cols[k];
            dat += cols[k];
            csv += (k == 8) ? '\n' : ',';
            dat += (k == 8) ? '\n' : ' ';
        }
    }

    const auto dir = out_dir(c);
    write_text(dir / "profile.csv", csv);
    if (c.gnuplot) write_text(dir / "profile.dat", dat);

    json m = manifest_base(c);
    m["command"] = "reconstruct";
    m["trajectory"] = trajectory_summary(traj);
    m["profile_points"] = prof.size();
    m["r_min"] = prof.r.front();
    m["r_max"] = prof.r.back();
    m["outputs"] = c.gnuplot ? json::array({"profile.csv", "profile.dat"})
                             : json::array({"profile.csv"});
    write_text(dir / "manifest.json", m.dump(2) + "\n");

    std::cout << "wrote " << (dir / "profile.csv").string() << " (" << prof.size()
              << " points)\n";
    return exit_for(traj);
}

// Full property suite: region preservation, sign propagation, Q monotonicity,
// the finite-horizon surrogate of the no-negative-x-tail claim, blow-up rate
// bounds, y divergence on the stationary line, the three invariant loci, and
// the reflection duality of classification tags.
int cmd_verify(const RunConfig& c) {
    const auto params = make_params(c);
    const double n = static_cast<double>(params.n);
    json checks = json::array();
    bool all_pass = true;

    auto record = [&](const std::string& name, bool pass, json detail) {
        checks.push_back({{"name", name}, {"pass", pass}, {"detail", std::move(detail)}});
        all_pass = all_pass && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << name << "\n";
    };

    {
        bool pass = true;
        json detail = json::array();
        for (const auto& rc : preserved_region_cases<double>()) {
            const auto rep = check_region_preserved(params, rc, 100, 5.0, c.seed);
            pass = pass && rep.exits == 0;
            detail.push_back({{"region", rep.region},
                              {"direction", rc.direction == FlowDirection::Forward ? "forward"
                                                                                   : "backward"},
                              {"samples", rep.samples},
                              {"exits", rep.exits}});
        }
        record("regions_preserved", pass, detail);
    }

    {
        const auto rep = check_x_sign_propagation(params, 50, c.seed);
        record("x_sign_propagation", rep.reached == rep.samples,
               {{"samples", rep.samples},
                {"reached", rep.reached},
                {"max_crossing_t", rep.max_crossing_t}});
    }

    {
        std::mt19937_64 rng(c.seed);
        std::uniform_real_distribution<double> W(0.1, 2.0), X(-1.0, 1.0), Y(-3.0, 3.0);
        int used = 0, violations = 0;
        double worst_rise = -1e300;
        for (int k = 0; k < 100; ++k) {
            const AugmentedState<double> a0{{W(rng), X(rng), Y(rng)}, 0.0, 0.0};
            const auto traj = integrate(params, a0, 0.0, 5.0, make_options(c));
            if (traj.samples.size() < 2) continue;
            bool positive = true;
            for (const auto& s : traj.samples)
                if (!(s.state.p.omega > 0)) positive = false;
            if (!positive) continue;
            ++used;
            const auto rep = check_Q_monotone(traj);
            if (!rep.monotone) ++violations;
            worst_rise = std::max(worst_rise, rep.max_rise);
        }
        record("Q_monotone", used > 0 && violations == 0,
               {{"trajectories", used}, {"violations", violations}, {"worst_rise", worst_rise}});
    }

    {
        // No forward run of infinite length may hold x below -0.05 over its
        // final unit of time. The stationary line is the designated witness;
        // random bounded-x starts usually end in a blow-up and pass vacuously.
        std::mt19937_64 rng(c.seed + 1);
        std::uniform_real_distribution<double> W(0.1, 2.0), X(-0.9, 0.9), Y(-3.0, 3.0);
        std::vector<Trajectory<double>> runs;
        const double omega0 = std::sqrt((n - 1.0) / params.lambda);
        runs.push_back(integrate(params, {{omega0, 0.0, 0.0}, 0.0, 0.0}, 0.0, 1100.0,
                                 make_options(c)));
        for (int k = 0; k < 20; ++k)
            runs.push_back(integrate(params, {{W(rng), X(rng), Y(rng)}, 0.0, 0.0}, 0.0, 30.0,
                                     make_options(c)));
        int infinite = 0, held_negative = 0;
        for (const auto& traj : runs) {
            const auto est = estimate_completeness(traj, FlowDirection::Forward);
            if (est.verdict != LengthVerdict::InfiniteLength) continue;
            ++infinite;
            if (late_x_max(traj) <= -0.05) ++held_negative;
        }
        record("no_negative_x_tail", infinite > 0 && held_negative == 0,
               {{"infinite_length_runs", infinite}, {"violations", held_negative}});
    }

    {
        const auto traj = integrate(params, {{0.1, 1.5, -1.0}, 0.0, 0.0}, 0.0, 60.0,
                                    make_options(c));
        bool pass = traj.termination == Termination::BlowupDetected;
        json detail{{"termination", termination_name(traj.termination)}};
        if (pass) {
            const auto rep = check_blowup_bound(traj);
            pass = rep.determined && rep.max_x_gap <= 0.9 && std::isfinite(rep.r_final);
            detail["T"] = rep.T;
            detail["max_x_gap"] = rep.max_x_gap;
            detail["max_omega_scaled"] = rep.max_omega_scaled;
            detail["r_final"] = rep.r_final;
        }
        record("blowup_rate_bound", pass, detail);
    }

    {
        const double omega0 = std::sqrt((n - 1.0) / params.lambda);
        const double horizon = 100.0 / (n - 1.0);
        const auto traj = integrate(params, {{omega0, 0.0, 0.0}, 0.0, 0.0}, 0.0, horizon,
                                    make_options(c));
        const auto rep = check_y_divergence(traj);
        record("y_divergence", rep.below_threshold && rep.x_bounded,
               {{"horizon", horizon}, {"y_final", rep.y_final}, {"x_bounded", rep.x_bounded}});
    }

    {
        bool pass = true;
        json detail = json::array();
        for (int cc : {-1, 0, 1}) {
            const double aux = cc == 0 ? 0.0 : 0.01;
            const auto rep = check_invariant_locus(params, cc, aux);
            const bool ok = rep.max_x_deviation < 1e-8 && rep.max_locus_deviation < 1e-8;
            pass = pass && ok;
            detail.push_back({{"c", cc},
                              {"max_x_deviation", rep.max_x_deviation},
                              {"max_locus_deviation", rep.max_locus_deviation}});
        }
        record("invariant_loci", pass, detail);
    }

    {
        std::mt19937_64 rng(c.seed + 2);
        std::uniform_real_distribution<double> W(0.1, 2.0), X(-1.0, 1.0), Y(-3.0, 3.0);
        int mirrored = 0;
        const int total = 20;
        for (int k = 0; k < total; ++k) {
            const PhasePoint<double> p{W(rng), X(rng), Y(rng)};
            const AugmentedState<double> a{p, 0.0, 0.0};
            const AugmentedState<double> b{reflect(p), 0.0, 0.0};
            const auto opts = make_options(c);
            const auto ta = classify(integrate(params, a, 0.0, 8.0, opts),
                                     integrate(params, a, 0.0, -8.0, opts));
            const auto tb = classify(integrate(params, b, 0.0, 8.0, opts),
                                     integrate(params, b, 0.0, -8.0, opts));
            if (tb.tag == reflected_tag(ta.tag)) ++mirrored;
        }
        record("reflection_duality", mirrored == total,
               {{"samples", total}, {"mirrored", mirrored}});
    }

    json m = manifest_base(c);
    m["command"] = "verify";
    m["checks"] = checks;
    m["all_pass"] = all_pass;
    const auto dir = out_dir(c);
    write_text(dir / "verify.json", m.dump(2) + "\n");

    std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
    return all_pass ? 0 : 1;
}

void usage(const po::options_description& desc) {
    std::cout << "usage: rgsol <command> [options]\n\n"
                 "commands:\n"
                 "  integrate    run one trajectory, write trajectory.csv + manifest.json\n"
                 "  sweep        classify seeds across a theta range, write sweep.csv\n"
                 "  bisect       locate the orbit joining the two saddles\n"
                 "  classify     tag one trajectory by its asymptotic geometry\n"
                 "  reconstruct  export the metric profile (r, omega, curvatures, potential)\n"
                 "  verify       run the full property suite, write verify.json\n\n"
              << desc
              << "\nconfig file keys mirror the flags; flags take precedence.\n"
                 "exit codes: 0 success, 1 verification failure, 2 config error,\n"
                 "3 numerical failure (step underflow)\n";
}

} // namespace

int main(int argc, char** argv) {
    po::options_description desc("options");
    // clang-format off
    desc.add_options()
        ("help,h", "show this help")
        ("n", po::value<int>(), "sphere fiber dimension (>= 2)")
        ("lambda", po::value<double>(), "soliton constant (> 0)")
        ("steady", po::bool_switch()->default_value(false), "allow omega <= 0 (steady slices)")
        ("theta", po::value<double>(), "seed angle on the unstable circle of P0")
        ("delta", po::value<double>(), "seed circle radius (default 1e-6)")
        ("omega", po::value<double>(), "initial omega (with --x, --y)")
        ("x", po::value<double>(), "initial x")
        ("y", po::value<double>(), "initial y")
        ("t0", po::value<double>(), "start time (default 0)")
        ("t1", po::value<double>(), "end time / forward horizon (default 60)")
        ("rtol", po::value<double>(), "relative tolerance (default 1e-10)")
        ("atol", po::value<double>(), "absolute tolerance (default 1e-12)")
        ("theta-lo", po::value<double>(), "lower theta (sweep range / bisect bracket)")
        ("theta-hi", po::value<double>(), "upper theta")
        ("count", po::value<int>(), "number of sweep seeds (default 21)")
        ("iters", po::value<int>(), "bisection iteration cap (default 60)")
        ("seed", po::value<std::uint64_t>(), "RNG seed for property suites")
        ("out", po::value<std::string>(), "output directory (default .)")
        ("config", po::value<std::string>(), "JSON config file; flags override it")
        ("gnuplot", po::bool_switch()->default_value(false),
         "also write whitespace-separated .dat files");
    // clang-format on

    if (argc < 2) {
        usage(desc);
        return 2;
    }
    const std::string command = argv[1];
    if (command == "help" || command == "--help" || command == "-h") {
        usage(desc);
        return 0;
    }

    try {
        po::variables_map vm;
        po::store(po::parse_command_line(argc - 1, argv + 1, desc), vm);
        po::notify(vm);
        if (vm.count("help")) {
            usage(desc);
            return 0;
        }

        RunConfig config;
        if (vm.count("config")) apply_config_file(config, vm["config"].as<std::string>());
        apply_flags(config, vm);
        validate_config(config);

        if (command == "integrate") return cmd_integrate(config);
        if (command == "sweep") return cmd_sweep(config);
        if (command == "bisect") return cmd_bisect(config);
        if (command == "classify") return cmd_classify(config);
        if (command == "reconstruct") return cmd_reconstruct(config);
        if (command == "verify") return cmd_verify(config);
        std::cerr << "config error: unknown command '" << command << "'\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.message << "\n";
        return 2;
    } catch (const po::error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
