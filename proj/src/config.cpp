#include "bandgapsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "bandgapsim/errors.hpp"
#include "bandgapsim/presets.hpp"
#include "bandgapsim/units.hpp"
#include "json.hpp"

namespace bgs {

using json = nlohmann::json;

std::string to_string(const Diagnostic& d) {
    return fmt::format("{}: {}: {}", d.severity == Diagnostic::Severity::error ? "error" : "warning", d.field,
                       d.message);
}

bool ParsedConfig::ok() const {
    for (const auto& d : diagnostics)
        if (d.severity == Diagnostic::Severity::error) return false;
    return true;
}

namespace {

template <class T>
constexpr const char* expected_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_same_v<T, std::vector<double>>) return "a list of numbers";
    else if constexpr (std::is_same_v<T, std::vector<int>>) return "a list of integers";
    else if constexpr (std::is_same_v<T, std::vector<std::string>>) return "a list of strings";
    else return "a list of lists of numbers";
}

template <class T>
bool matches(const json& j) {
    if constexpr (std::is_same_v<T, bool>) return j.is_boolean();
    else if constexpr (std::is_integral_v<T>) return j.is_number_integer();
    else if constexpr (std::is_floating_point_v<T>) return j.is_number();
    else if constexpr (std::is_same_v<T, std::string>) return j.is_string();
    else {
        if (!j.is_array()) return false;
        for (const auto& e : j)
            if (!matches<typename T::value_type>(e)) return false;
        return true;
    }
}

// View on one JSON object that remembers which keys were consumed, so leftovers
// can be reported as unknown.
class Node {
public:
    Node(const json* j, std::string path, std::vector<Diagnostic>* diags)
        : j_(j), path_(std::move(path)), diags_(diags) {
        if (j_ && !j_->is_object()) {
            error("", "expected an object");
            j_ = nullptr;
        }
    }

    bool has(const std::string& key) const { return j_ && j_->contains(key); }
    std::string field(const std::string& key) const {
        if (key.empty()) return path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    void error(const std::string& key, const std::string& msg) const {
        diags_->push_back({Diagnostic::Severity::error, field(key), msg});
    }
    void warn(const std::string& key, const std::string& msg) const {
        diags_->push_back({Diagnostic::Severity::warning, field(key), msg});
    }

    const json* raw(const std::string& key) {
        if (!has(key)) return nullptr;
        used_.insert(key);
        return &j_->at(key);
    }

    Node child(const std::string& key) { return Node(raw(key), field(key), diags_); }

    template <class T>
    std::optional<T> opt(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!matches<T>(*v)) {
            error(key, std::string("expected ") + expected_name<T>());
            return std::nullopt;
        }
        return v->get<T>();
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        return opt<T>(key).value_or(std::move(fallback));
    }

    template <class T>
    T req(const std::string& key, T fallback) {
        if (!has(key)) {
            if (j_) error(key, "required");
            return fallback;
        }
        return get<T>(key, std::move(fallback));
    }

    // Checks a numeric value against a predicate and reports the first failure.
    template <class T, class Pred>
    T checked(const std::string& key, T fallback, Pred ok, const char* what) {
        const bool present = has(key);
        const T v = get<T>(key, fallback);
        if (present && !ok(v)) {
            error(key, what);
            return fallback;
        }
        return v;
    }

    void finish() const {
        if (!j_) return;
        for (const auto& [k, _] : j_->items())
            if (!used_.count(k)) error(k, "unknown key");
    }

    explicit operator bool() const { return j_ != nullptr; }

private:
    const json* j_;
    std::string path_;
    std::vector<Diagnostic>* diags_;
    std::set<std::string> used_;
};

const auto positive = [](double v) { return v > 0.0; };
const auto positive_int = [](auto v) { return v > 0; };
const auto non_negative = [](auto v) { return v >= 0; };

// A list of values or {start, stop, count|step}, both ends included.
std::vector<double> grid(Node& parent, const std::string& key) {
    const json* v = parent.raw(key);
    if (!v) return {};
    if (v->is_array()) {
        if (!matches<std::vector<double>>(*v)) {
            parent.error(key, "expected a list of numbers");
            return {};
        }
        return v->get<std::vector<double>>();
    }
    if (!v->is_object()) {
        parent.error(key, "expected a list or {start, stop, count|step}");
        return {};
    }
    Node n = parent.child(key);
    const double start = n.req<double>("start", 0.0);
    const double stop = n.req<double>("stop", 0.0);
    std::vector<double> out;
    if (n.has("count") == n.has("step")) {
        n.error("", "give exactly one of count and step");
    } else if (n.has("count")) {
        const int count = n.checked<int>("count", 0, [](int c) { return c >= 2; }, "must be at least 2");
        for (int i = 0; i < count; ++i) out.push_back(start + (stop - start) * i / (count - 1));
    } else {
        const double step = n.checked<double>("step", 0.0, positive, "must be positive");
        if (step > 0.0 && stop >= start) {
            const long long count = std::llround(std::floor((stop - start) / step + 1e-9)) + 1;
            for (long long i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
        } else if (step > 0.0) {
            n.error("stop", "must not be below start");
        }
    }
    n.finish();
    return out;
}

double mhz(double v) { return units::mhz_to_radns(v); }

// Scalar or per-site list.
Eigen::VectorXd per_site(Node& n, const std::string& key, int sites, double fallback) {
    const json* v = n.raw(key);
    Eigen::VectorXd out = Eigen::VectorXd::Constant(sites, fallback);
    if (!v) return out;
    if (v->is_number()) return Eigen::VectorXd::Constant(sites, mhz(v->get<double>()));
    if (!matches<std::vector<double>>(*v)) {
        n.error(key, "expected a number or a list of numbers");
        return out;
    }
    const auto list = v->get<std::vector<double>>();
    if (static_cast<int>(list.size()) != sites) {
        n.error(key, fmt::format("expected {} entries, got {}", sites, list.size()));
        return out;
    }
    for (int i = 0; i < sites; ++i) out(i) = mhz(list[i]);
    return out;
}

std::optional<BoseHubbardParams> parse_bose_hubbard(Node n) {
    BoseHubbardParams p;
    p.n_sites = n.checked<int>("n_sites", 0, positive_int, "must be positive");
    if (!n.has("n_sites")) n.error("n_sites", "required");
    p.max_occupancy = n.checked<int>("max_occupancy", 1, [](int m) { return m == 1 || m == 2; }, "must be 1 or 2");
    if (p.n_sites < 1) {
        n.finish();
        return std::nullopt;
    }
    const int s = p.n_sites;
    p.eps = per_site(n, "eps_MHz", s, 0.0);
    if (p.hardcore() && n.has("U_MHz")) n.warn("U_MHz", "ignored in the hardcore sector");
    if (!p.hardcore() && !n.has("U_MHz")) n.error("U_MHz", "required when max_occupancy > 1");
    p.U = per_site(n, "U_MHz", s, 0.0);
    p.J = Eigen::MatrixXd::Zero(s, s);

    if (n.has("J_MHz") == n.has("J_profile")) n.error("", "give exactly one of J_MHz and J_profile");
    if (auto m = n.opt<std::vector<std::vector<double>>>("J_MHz")) {
        bool shape = static_cast<int>(m->size()) == s;
        for (const auto& row : *m) shape = shape && static_cast<int>(row.size()) == s;
        if (!shape) {
            n.error("J_MHz", fmt::format("expected a {0}x{0} matrix", s));
        } else {
            for (int i = 0; i < s; ++i)
                for (int j = 0; j < s; ++j) {
                    const double v = (*m)[i][j];
                    if (i == j && v != 0.0) n.error(fmt::format("J_MHz[{}][{}]", i, j), "diagonal must be zero");
                    if (j < i && v != (*m)[j][i])
                        n.error(fmt::format("J_MHz[{}][{}]", i, j), fmt::format("differs from J_MHz[{}][{}]", j, i));
                    p.J(i, j) = i == j ? 0.0 : mhz(v);
                }
            p.J = 0.5 * (p.J + p.J.transpose()).eval();
        }
    } else if (Node prof = n.child("J_profile")) {
        const double nn = prof.req<double>("nn_MHz", 0.0);
        const double xi = prof.checked<double>("xi", 1.0, positive, "must be positive");
        if (!prof.has("xi")) prof.error("xi", "required");
        const bool alternating = prof.get<bool>("alternating", true);
        const int range = prof.checked<int>("range", s - 1, positive_int, "must be positive");
        for (int i = 0; i < s; ++i)
            for (int j = i + 1; j < s && j - i <= range; ++j) {
                const int d = j - i;
                const double sign = alternating && d % 2 == 0 ? -1.0 : 1.0;
                p.J(i, j) = p.J(j, i) = sign * mhz(nn) * std::exp(-(d - 1) / xi);
            }
        prof.finish();
    }
    n.finish();
    try {
        p.validate();
    } catch (const Error& e) {
        n.error("", e.what());
    }
    return p;
}

std::optional<CircuitSpec> parse_circuit(Node n) {
    CircuitSpec s;
    s.n_cells = n.req<int>("n_cells", 0);
    s.L0 = n.req<double>("L0", 0.0);
    s.C0 = n.req<double>("C0", 0.0);
    s.Ct = n.req<std::vector<double>>("Ct", {});
    s.M = n.get<std::vector<double>>("M", {});
    s.Cg = n.get<std::vector<double>>("Cg", {});
    s.Cqq = n.get<std::vector<double>>("Cqq", {});
    s.Cq = n.get<double>("Cq", 0.0);
    s.EJ = n.get<std::vector<double>>("EJ", {});
    s.qubit_cells = n.get<std::vector<int>>("qubit_cells", {});
    s.idle_qubit_loading = n.get<bool>("idle_qubit_loading", true);
    if (const auto cutoff = n.opt<int>("tail_cutoff")) s = longrange_tail_fill(s, *cutoff);
    n.finish();
    return s;
}

std::optional<CircuitSpec> parse_preset(Node n) {
    const std::string name = n.req<std::string>("name", "fitted_device");
    if (name != "fitted_device") n.error("name", "unknown preset '" + name + "'");
    const int cells = n.checked<int>("n_cells", 50, [](int c) { return c >= 3; }, "must be at least 3");
    const int cutoff = n.checked<int>("tail_cutoff", 10, [](int c) { return c >= 4; }, "must be at least 4");
    CircuitSpec s = presets::fitted_device(cells, cutoff);
    if (auto q = n.opt<std::vector<int>>("qubit_cells")) s.qubit_cells = *q;
    if (auto e = n.opt<std::vector<double>>("EJ")) s.EJ = *e;
    else if (s.EJ.size() != s.qubit_cells.size()) s.EJ.assign(s.qubit_cells.size(), 15.0);
    n.finish();
    return s;
}

void parse_device(Node n, RunConfig& c) {
    const int kinds = n.has("circuit") + n.has("preset") + n.has("bose_hubbard");
    if (kinds == 0) n.error("", "needs one of circuit, preset, bose_hubbard");
    if (n.has("circuit") && n.has("preset")) n.error("", "circuit and preset are exclusive");
    if (n.has("circuit")) c.circuit = parse_circuit(n.child("circuit"));
    if (n.has("preset")) c.circuit = parse_preset(n.child("preset"));
    if (c.circuit) {
        try {
            c.circuit->validate();
        } catch (const Error& e) {
            n.error(n.has("circuit") ? "circuit" : "preset", e.what());
        }
    }
    if (n.has("bose_hubbard")) c.bose_hubbard = parse_bose_hubbard(n.child("bose_hubbard"));
    n.finish();
}

InitialStates parse_initial_states(Node& parent, const std::string& key) {
    InitialStates out;
    const json* v = parent.raw(key);
    if (!v) {
        parent.error(key, "required");
        return out;
    }
    if (v->is_array()) {
        if (!matches<std::vector<std::string>>(*v) || v->empty()) {
            parent.error(key, "expected a non-empty list of bit-strings");
            return out;
        }
        out.labels = v->get<std::vector<std::string>>();
        std::optional<int> ones;
        for (const auto& l : out.labels) {
            if (l.empty() || l.find_first_not_of("01") != std::string::npos) {
                parent.error(key, "'" + l + "' is not a bit-string");
                continue;
            }
            const int k = static_cast<int>(std::count(l.begin(), l.end(), '1'));
            if (ones && *ones != k) parent.error(key, "initial states differ in excitation number");
            if (l.size() != out.labels.front().size()) parent.error(key, "initial states differ in length");
            ones = k;
        }
        return out;
    }
    Node r = parent.child(key);
    if (!r) return out;
    Node rand = r.child("random");
    if (!rand) r.error("random", "required");
    out.count = rand.checked<int>("count", 1, positive_int, "must be positive");
    out.excitations = rand.checked<int>("excitations", 1, non_negative, "must be non-negative");
    if (!rand.has("count")) rand.error("count", "required");
    if (!rand.has("excitations")) rand.error("excitations", "required");
    rand.finish();
    r.finish();
    return out;
}

GreedyOptions parse_greedy(Node n, GreedyOptions g) {
    g.rounds = n.checked<int>("rounds", g.rounds, positive_int, "must be positive");
    g.grid_points = n.checked<int>("grid_points", g.grid_points, [](int v) { return v >= 3; }, "must be at least 3");
    g.line_iterations = n.checked<int>("line_iterations", g.line_iterations, positive_int, "must be positive");
    g.min_improvement = n.checked<double>("min_improvement", g.min_improvement, non_negative, "must be non-negative");
    g.curvature_step = n.checked<double>("curvature_step", g.curvature_step, positive, "must be positive");
    n.finish();
    return g;
}

CircuitBlock parse_circuit_block(Node n) {
    CircuitBlock b;
    b.omega01_ghz = n.opt<double>("omega01_GHz");
    b.max_distance = n.checked<int>("max_distance", b.max_distance, positive_int, "must be positive");
    b.n_periodic = n.checked<int>("n_periodic", b.n_periodic, [](int v) { return v >= 3; }, "must be at least 3");
    n.finish();
    return b;
}

BoundStatesBlock parse_bound_states(Node n) {
    BoundStatesBlock b;
    b.omega01_ghz = grid(n, "omega01_GHz");
    if (b.omega01_ghz.empty()) n.error("omega01_GHz", "required and non-empty");
    if (auto d = n.opt<std::vector<int>>("distances")) {
        b.scan.distances = *d;
        for (int x : *d)
            if (x < 1) n.error("distances", "entries must be positive");
    }
    b.scan.compute_U = n.get<bool>("compute_U", true);
    b.scan.compute_J = n.get<bool>("compute_J", true);
    b.scan.truncation.resonator_photons =
        n.checked<int>("resonator_photons", 2, positive_int, "must be positive");
    b.scan.truncation.qubit_levels = n.checked<int>("qubit_levels", 3, [](int v) { return v >= 3; }, "must be at least 3");
    n.finish();
    return b;
}

QuenchBlock parse_quench(Node n) {
    QuenchBlock b;
    b.z_init = parse_initial_states(n, "z_init");
    b.times_ns = grid(n, "times_ns");
    if (b.times_ns.empty()) n.error("times_ns", "required and non-empty");
    for (double t : b.times_ns)
        if (t < 0.0) {
            n.error("times_ns", "times must be non-negative");
            break;
        }
    b.shots = n.checked<long long>("shots", 0, non_negative, "must be non-negative");
    if (Node noise = n.child("noise")) {
        b.t2_us = noise.checked<double>("T2_us", 1.0, positive, "must be positive");
        if (!noise.has("T2_us")) noise.error("T2_us", "required");
        b.n_traj = noise.checked<int>("n_traj", b.n_traj, positive_int, "must be positive");
        noise.finish();
    }
    b.interaction_frequencies_ghz = n.get<std::vector<double>>("interaction_frequencies_GHz", {});
    b.n_sites = n.checked<int>("n_sites", b.n_sites, [](int v) { return v >= 2; }, "must be at least 2");
    b.max_occupancy = n.checked<int>("max_occupancy", b.max_occupancy, [](int m) { return m == 1 || m == 2; },
                                     "must be 1 or 2");
    n.finish();
    return b;
}

LearnBlock parse_learn(Node n) {
    LearnBlock b;
    b.dataset = n.req<std::string>("dataset", "");
    b.start = n.get<std::string>("start", b.start);
    if (b.start != "device" && b.start != "all_positive" && b.start != "explicit")
        n.error("start", "must be device, all_positive or explicit");
    b.x0_mhz = n.get<std::vector<double>>("x0_MHz", {});
    if (b.start == "explicit" && b.x0_mhz.empty()) n.error("x0_MHz", "required when start is explicit");
    if (b.start != "explicit" && !b.x0_mhz.empty()) n.warn("x0_MHz", "ignored unless start is explicit");
    b.bounds_scale = n.checked<double>("bounds_scale", b.bounds_scale, positive, "must be positive");
    if (n.has("greedy")) b.greedy = parse_greedy(n.child("greedy"), b.greedy);
    if (Node prof = n.child("profiles")) {
        b.profile_params = prof.get<std::vector<std::string>>("params", {});
        b.profile_points = prof.checked<int>("points", b.profile_points, [](int v) { return v >= 2; },
                                             "must be at least 2");
        prof.finish();
    }
    n.finish();
    return b;
}

PurcellBlock parse_purcell(Node n) {
    PurcellBlock b;
    auto& s = b.sweep;
    s.f_min_ghz = n.checked<double>("f_min_GHz", s.f_min_ghz, positive, "must be positive");
    s.f_max_ghz = n.checked<double>("f_max_GHz", s.f_max_ghz, positive, "must be positive");
    if (s.f_max_ghz <= s.f_min_ghz) n.error("f_max_GHz", "must exceed f_min_GHz");
    s.points = n.checked<int>("points", s.points, [](int v) { return v >= 2; }, "must be at least 2");
    s.g_mhz = n.checked<double>("g_MHz", s.g_mhz, positive, "must be positive");
    s.kappa_r_mhz = n.checked<double>("kappa_r_MHz", s.kappa_r_mhz, positive, "must be positive");
    s.f_r_ghz = n.checked<double>("f_r_GHz", s.f_r_ghz, positive, "must be positive");
    s.q_filter = n.checked<double>("Q_filter", s.q_filter, positive, "must be positive");
    s.cq_sigma_ff = n.checked<double>("CqSigma_fF", s.cq_sigma_ff, positive, "must be positive");
    if (Node net = n.child("network")) {
        auto& r = b.network;
        r.tapered = net.get<bool>("tapered", r.tapered);
        r.Lr = net.checked<double>("Lr_nH", r.Lr, positive, "must be positive");
        r.Cr = net.checked<double>("Cr_fF", r.Cr, positive, "must be positive");
        r.Cqr = net.checked<double>("Cqr_fF", r.Cqr, positive, "must be positive");
        r.Crw = net.checked<double>("Crw_fF", r.Crw, positive, "must be positive");
        r.Z0 = net.checked<double>("Z0_ohm", r.Z0, positive, "must be positive");
        const int cells = net.checked<int>("n_cells", r.metamaterial.n_cells, [](int v) { return v >= 3; },
                                           "must be at least 3");
        const int qcell = net.checked<int>("qubit_cell", r.metamaterial.qubit_cells.at(0), positive_int,
                                           "must be positive");
        if (cells != r.metamaterial.n_cells) r.metamaterial = presets::fitted_device(cells);
        r.metamaterial.qubit_cells = {qcell};
        r.metamaterial.EJ = {15.0};
        net.finish();
        try {
            r.validate();
        } catch (const Error& e) {
            net.error("", e.what());
        }
    }
    n.finish();
    return b;
}

MitigateBlock parse_mitigate(Node n) {
    MitigateBlock b;
    Node a = n.child("assignment");
    if (!a) n.error("assignment", "required");
    const int kinds = a.has("csv") + a.has("json") + a.has("uniform");
    if (a && kinds != 1) a.error("", "give exactly one of csv, json, uniform");
    b.assignment_csv = a.get<std::string>("csv", "");
    b.assignment_json = a.get<std::string>("json", "");
    if (Node u = a.child("uniform")) {
        b.uniform_qubits = u.checked<int>("n_qubits", 1, [](int v) { return v >= 1 && v <= 12; }, "must be in [1, 12]");
        const auto prob = [](double v) { return v >= 0.0 && v < 0.5; };
        const double e10 = u.checked<double>("e10", 0.0, prob, "must lie in [0, 0.5)");
        const double e01 = u.checked<double>("e01", 0.0, prob, "must lie in [0, 0.5)");
        for (const char* k : {"n_qubits", "e10", "e01"})
            if (!u.has(k)) u.error(k, "required");
        b.uniform_errors = std::array<double, 2>{e10, e01};
        u.finish();
    }
    a.finish();

    Node c = n.child("counts");
    if (!c) n.error("counts", "required");
    if (c && c.has("csv") == c.has("synthetic")) c.error("", "give exactly one of csv and synthetic");
    b.counts_csv = c.get<std::string>("csv", "");
    if (Node s = c.child("synthetic")) {
        b.synthetic_shots = s.checked<long long>("shots", 0, positive_int, "must be positive");
        if (!s.has("shots")) s.error("shots", "required");
        const json* truth = s.raw("truth");
        if (!truth || !truth->is_object() || truth->empty()) {
            s.error("truth", "expected an object of bit-string probabilities");
        } else {
            double total = 0.0;
            for (const auto& [k, v] : truth->items()) {
                if (!v.is_number() || v.get<double>() < 0.0 || k.empty() || k.find_first_not_of("01") != std::string::npos) {
                    s.error("truth." + k, "expected a bit-string key with a non-negative probability");
                    continue;
                }
                b.synthetic_truth[k] = v.get<double>();
                total += v.get<double>();
            }
            if (std::abs(total - 1.0) > 1e-9) s.error("truth", fmt::format("probabilities sum to {}", total));
        }
        s.finish();
    }
    c.finish();

    b.options.max_condition = n.checked<double>("max_condition", b.options.max_condition, positive, "must be positive");
    b.options.tolerance = n.checked<double>("tolerance", b.options.tolerance, positive, "must be positive");
    b.options.max_iterations = n.checked<int>("max_iterations", b.options.max_iterations, positive_int,
                                              "must be positive");
    n.finish();
    return b;
}

Fig2Block parse_fig2(Node n) {
    Fig2Block b;
    b.omega01_ghz = n.checked<double>("omega01_GHz", b.omega01_ghz, positive, "must be positive");
    b.n_sites = n.checked<int>("n_sites", b.n_sites, [](int v) { return v >= 3; }, "must be at least 3");
    b.max_occupancy = n.checked<int>("max_occupancy", b.max_occupancy, [](int m) { return m == 1 || m == 2; },
                                     "must be 1 or 2");
    b.excitations = n.checked<int>("excitations", b.excitations, positive_int, "must be positive");
    b.z_init_count = n.checked<int>("z_init_count", b.z_init_count, positive_int, "must be positive");
    b.shots = n.checked<long long>("shots", b.shots, non_negative, "must be non-negative");
    if (n.has("taus_ns")) b.taus_ns = grid(n, "taus_ns");
    b.bounds_scale = n.checked<double>("bounds_scale", b.bounds_scale, positive, "must be positive");
    if (n.has("greedy")) b.greedy = parse_greedy(n.child("greedy"), b.greedy);
    n.finish();
    return b;
}

Fig4Block parse_fig4(Node n) {
    Fig4Block b;
    b.excitations = n.checked<int>("excitations", b.excitations, positive_int, "must be positive");
    b.z_init_count = n.checked<int>("z_init_count", b.z_init_count, positive_int, "must be positive");
    b.jtau_max = n.checked<double>("Jtau_max", b.jtau_max, positive, "must be positive");
    b.points = n.checked<int>("points", b.points, [](int v) { return v >= 2; }, "must be at least 2");
    if (auto w = n.opt<std::vector<double>>("window_Jtau")) {
        if (w->size() != 2 || (*w)[0] >= (*w)[1]) n.error("window_Jtau", "expected [lower, upper]");
        else b.window_jtau = {(*w)[0], (*w)[1]};
    }
    b.pt_jtau = n.checked<double>("pt_Jtau", b.pt_jtau, positive, "must be positive");
    b.bins = n.checked<int>("bins", b.bins, positive_int, "must be positive");
    n.finish();
    return b;
}

// Cross-block requirements that only show once everything is parsed.
void cross_check(const RunConfig& c, std::vector<Diagnostic>& d) {
    auto err = [&](std::string f, std::string m) { d.push_back({Diagnostic::Severity::error, std::move(f), std::move(m)}); };
    if ((c.circuit_run || c.bound_states || c.fig2) && !c.circuit)
        err("device", "a circuit or preset is required by the circuit, bound_states and fig2 blocks");
    if (c.quench) {
        if (!c.quench->interaction_frequencies_ghz.empty() && !c.circuit)
            err("quench.interaction_frequencies_GHz", "needs a circuit or preset device");
        if (c.quench->interaction_frequencies_ghz.empty() && !c.bose_hubbard)
            err("device", "quench needs device.bose_hubbard or interaction_frequencies_GHz");
        if (c.bose_hubbard && c.quench->interaction_frequencies_ghz.empty()) {
            const auto& z = c.quench->z_init;
            for (const auto& l : z.labels)
                if (static_cast<int>(l.size()) != c.bose_hubbard->n_sites) {
                    err("quench.z_init", "'" + l + "' does not match n_sites");
                    break;
                }
        }
    }
    if ((c.learn || c.fig4) && !c.bose_hubbard) err("device", "learn and fig4 need device.bose_hubbard");
    if (c.learn && c.bose_hubbard && c.learn->start == "explicit" && !c.learn->x0_mhz.empty() &&
        static_cast<int>(c.learn->x0_mhz.size()) != TrialFamily::parameter_count(c.bose_hubbard->n_sites))
        err("learn.x0_MHz", fmt::format("expected {} entries", TrialFamily::parameter_count(c.bose_hubbard->n_sites)));
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
    ParsedConfig out;
    auto& d = out.diagnostics;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        d.push_back({Diagnostic::Severity::error, "", std::string("not valid JSON: ") + e.what()});
        return out;
    }
    Node root(&doc, "", &d);
    if (!root) return out;
    RunConfig& c = out.config;
    c.canonical = doc.dump();
    c.seed = root.checked<std::uint64_t>("seed", 0, [](auto) { return true; }, "");
    c.threads = root.checked<unsigned>("threads", 0, [](auto) { return true; }, "");
    c.output = root.get<std::string>("output", "out");
    root.get<std::string>("comment", "");
    if (root.has("device")) parse_device(root.child("device"), c);
    if (root.has("circuit")) c.circuit_run = parse_circuit_block(root.child("circuit"));
    if (root.has("bound_states")) c.bound_states = parse_bound_states(root.child("bound_states"));
    if (root.has("quench")) c.quench = parse_quench(root.child("quench"));
    if (root.has("learn")) c.learn = parse_learn(root.child("learn"));
    if (root.has("purcell")) c.purcell = parse_purcell(root.child("purcell"));
    if (root.has("mitigate")) c.mitigate = parse_mitigate(root.child("mitigate"));
    if (root.has("fig2")) c.fig2 = parse_fig2(root.child("fig2"));
    if (root.has("fig4")) c.fig4 = parse_fig4(root.child("fig4"));
    root.finish();
    cross_check(c, d);
    return out;
}

ParsedConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("config", "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace {
RunConfig require_valid(ParsedConfig p, const std::string& origin) {
    if (p.ok()) return std::move(p.config);
    std::string msg = origin + " is invalid";
    for (const auto& d : p.diagnostics)
        if (d.severity == Diagnostic::Severity::error) msg += "\n  " + to_string(d);
    throw SchemaError("config", msg);
}
}  // namespace

RunConfig load_config(const std::filesystem::path& path) { return require_valid(parse_config_file(path), path.string()); }

RunConfig load_config_text(const std::string& text) { return require_valid(parse_config_text(text), "config"); }

std::string builtin_config(const std::string& target) {
    if (target == "fig2")
        return R"({
  "device": {"preset": {"name": "fitted_device", "n_cells": 50, "tail_cutoff": 10}},
  "fig2": {
    "omega01_GHz": 4.72, "n_sites": 10, "max_occupancy": 2, "excitations": 5,
    "z_init_count": 40, "shots": 4000, "taus_ns": [76, 148, 260, 420, 600, 780],
    "bounds_scale": 3.0, "greedy": {"rounds": 4}
  },
  "seed": 7,
  "output": "out/fig2"
})";
    if (target == "fig3")
        return R"({
  "device": {"preset": {"name": "fitted_device", "n_cells": 50, "tail_cutoff": 10}},
  "quench": {
    "interaction_frequencies_GHz": [4.50, 4.55, 4.72, 4.80],
    "n_sites": 10, "max_occupancy": 2,
    "z_init": ["0000110000"],
    "times_ns": {"start": 0, "stop": 1000, "count": 101}
  },
  "seed": 7,
  "output": "out/fig3"
})";
    if (target == "fig4")
        return R"({
  "device": {"bose_hubbard": {"n_sites": 10, "max_occupancy": 1, "J_profile": {"nn_MHz": 4.0, "xi": 2.0}}},
  "fig4": {"excitations": 2, "z_init_count": 20, "Jtau_max": 10, "points": 101,
           "window_Jtau": [3, 10], "pt_Jtau": 5, "bins": 30},
  "seed": 7,
  "output": "out/fig4"
})";
    if (target == "purcell")
        return R"({
  "purcell": {"f_min_GHz": 3.0, "f_max_GHz": 8.0, "points": 2001, "g_MHz": 250, "kappa_r_MHz": 9.85,
              "f_r_GHz": 6.01, "Q_filter": 15, "CqSigma_fF": 92.7},
  "seed": 7,
  "output": "out/purcell"
})";
    throw SchemaError("reproduce", "unknown target '" + target + "' (fig2, fig3, fig4, purcell)");
}

}  // namespace bgs
