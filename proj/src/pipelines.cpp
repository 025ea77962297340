#include "bandgapsim/pipelines.hpp"

#include <algorithm>
#include <boost/uuid/detail/sha1.hpp>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <numeric>
#include <spdlog/spdlog.h>

#include "bandgapsim/csv.hpp"
#include "bandgapsim/errors.hpp"
#include "bandgapsim/parallel.hpp"
#include "bandgapsim/rng.hpp"
#include "bandgapsim/units.hpp"
#include "json.hpp"

namespace bgs {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string bitstring(std::uint64_t code, int n_bits) {
    std::string s(static_cast<std::size_t>(n_bits), '0');
    for (int i = 0; i < n_bits; ++i)
        if (code >> (n_bits - 1 - i) & 1U) s[i] = '1';
    return s;
}

std::string sha1_hex(const std::string& data) {
    boost::uuids::detail::sha1 h;
    h.process_bytes(data.data(), data.size());
    boost::uuids::detail::sha1::digest_type d;
    h.get_digest(d);
    std::string out;
    for (auto w : d) out += fmt::format("{:08x}", static_cast<std::uint32_t>(w));
    return out;
}

std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) { return CounterRng(seed, stream).next(); }

namespace {

// Seed streams, one per consumer.
enum Stream : std::uint64_t { kZInit = 1, kShots = 2, kNoise = 3, kGreedy = 4, kReadout = 5 };

// Files go to a staging directory first so a failed run leaves no partial outputs.
class Artifacts {
public:
    explicit Artifacts(fs::path out) : out_(std::move(out)), staging_(out_ / ".staging") {
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec) throw IoError("output", "cannot create " + out_.string() + ": " + ec.message());
        fs::remove_all(staging_, ec);
        fs::create_directories(staging_, ec);
        if (ec) throw IoError("output", "cannot create " + staging_.string() + ": " + ec.message());
    }
    Artifacts(const Artifacts&) = delete;
    Artifacts& operator=(const Artifacts&) = delete;
    ~Artifacts() {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }

    void csv(const std::string& name, const csv::Table& t) {
        claim(name);
        csv::write(staging_ / name, t);
    }

    void json_file(const std::string& name, const json& j) {
        claim(name);
        write_text(staging_ / name, j.dump(2) + "\n");
    }

    const std::vector<std::string>& files() const { return files_; }

    void commit(const json& manifest) {
        std::error_code ec;
        fs::remove(out_ / kManifestName, ec);
        for (const auto& f : files_) {
            fs::rename(staging_ / f, out_ / f, ec);
            if (ec) throw IoError("output", "cannot move " + f + " into " + out_.string() + ": " + ec.message());
        }
        write_text(out_ / kManifestName, manifest.dump(2) + "\n");
    }

    static void write_text(const fs::path& path, const std::string& text) {
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("output", "cannot open " + tmp.string());
            out << text;
            if (!out.flush()) throw IoError("output", "write failed for " + tmp.string());
        }
        std::error_code ec;
        fs::rename(tmp, path, ec);
        if (ec) throw IoError("output", "cannot move " + tmp.string() + " into place: " + ec.message());
    }

private:
    void claim(const std::string& name) {
        if (std::find(files_.begin(), files_.end(), name) != files_.end())
            throw ComputationError("output", "file " + name + " written twice");
        files_.push_back(name);
    }

    fs::path out_, staging_;
    std::vector<std::string> files_;
};

using csv::num;

std::string num(int v) { return csv::num(static_cast<long long>(v)); }

double to_mhz(double w) { return units::radns_to_mhz(w); }

json params_json(const BoseHubbardParams& p) {
    json j;
    j["n_sites"] = p.n_sites;
    j["max_occupancy"] = p.max_occupancy;
    std::vector<double> eps, u;
    for (int i = 0; i < p.n_sites; ++i) {
        eps.push_back(to_mhz(p.eps(i)));
        u.push_back(to_mhz(p.U(i)));
    }
    j["eps_MHz"] = eps;
    j["U_MHz"] = u;
    std::vector<std::vector<double>> jm(p.n_sites, std::vector<double>(p.n_sites));
    for (int a = 0; a < p.n_sites; ++a)
        for (int b = 0; b < p.n_sites; ++b) jm[a][b] = to_mhz(p.J(a, b));
    j["J_MHz"] = jm;
    return j;
}

int ones(const std::string& label) { return static_cast<int>(std::count(label.begin(), label.end(), '1')); }

std::vector<std::string> resolve_initial_states(const InitialStates& z, int n_sites, std::uint64_t seed) {
    if (z.count > 0) return random_initial_states(n_sites, z.excitations, z.count, substream(seed, kZInit));
    for (const auto& l : z.labels)
        if (static_cast<int>(l.size()) != n_sites)
            throw SchemaError("quench", "initial state '" + l + "' does not match " + std::to_string(n_sites) + " sites");
    return z.labels;
}

// pz_<prefix><z>.csv plus the index file that read_dataset understands.
void write_dataset(Artifacts& art, const std::string& suffix, const std::vector<std::string>& z_init,
                   const std::vector<double>& times, const std::vector<std::vector<BitstringDistribution>>& dists,
                   long long shots) {
    json index;
    index["z_init"] = z_init;
    index["times_ns"] = times;
    index["shots"] = shots;
    index["n_sites"] = static_cast<int>(z_init.front().size());
    index["excitations"] = ones(z_init.front());
    json files = json::object();
    for (std::size_t z = 0; z < z_init.size(); ++z) {
        csv::Table t{{"time_ns", "bitstring", "probability"}, {}};
        for (std::size_t k = 0; k < times.size(); ++k) {
            const auto& d = dists[z][k];
            for (int s = 0; s < d.dimension(); ++s) t.rows.push_back({num(times[k]), d.sector->label(s), num(d.p(s))});
        }
        const std::string name = "pz" + suffix + "_" + z_init[z] + ".csv";
        art.csv(name, t);
        files[z_init[z]] = name;
    }
    index["files"] = files;
    art.json_file("dataset" + suffix + ".json", index);
}

// ---------------------------------------------------------------------------

void run_circuit(const RunConfig& c, Artifacts& art) {
    const CircuitSpec& spec = *c.circuit;
    const CircuitBlock& b = *c.circuit_run;
    const Dispersion band = dispersion_from_spec(spec, b.n_periodic);
    const int cell = spec.qubit_cells.empty() ? (spec.n_cells + 1) / 2 : spec.qubit_cells.front();
    double ej = 0.0;
    if (b.omega01_ghz) ej = ej_for_omega01(spec, cell, units::ghz_to_radns(*b.omega01_ghz));
    else if (!spec.EJ.empty()) ej = spec.EJ.front();
    else throw SchemaError("circuit", "needs circuit.omega01_GHz or a qubit with EJ");
    const SecondQuantizedCouplings q = second_quantize(with_qubits(spec, {cell}, ej));
    const double g = q.g_matrix(cell - 1, 0);
    const double delta = q.omega_q(0) - band.omega_c;

    art.csv("band.csv", {{"omega_c_GHz", "t_GHz", "band_lower_GHz", "band_upper_GHz"},
                         {{num(units::radns_to_ghz(band.omega_c)), num(units::radns_to_ghz(band.t)),
                           num(units::radns_to_ghz(band.band_lower)), num(units::radns_to_ghz(band.band_upper))}}});
    csv::Table t{{"distance", "J_GHz", "sign"}, {}};
    for (int d = 1; d <= b.max_distance; ++d) {
        const double J = bandgap_exchange_J(g, g, delta, delta, band.t, d);
        t.rows.push_back({num(d), num(units::radns_to_ghz(J)), num(J < 0 ? -1 : 1)});
    }
    art.csv("exchange.csv", t);
    art.json_file("qubit.json", {{"cell", cell},
                                 {"EJ_GHz", ej},
                                 {"omega01_bare_GHz", units::radns_to_ghz(q.omega_q(0))},
                                 {"g_MHz", to_mhz(g)},
                                 {"delta_GHz", units::radns_to_ghz(delta)},
                                 {"xi", localization_length(delta, band.t)}});
}

void run_bound_states(const RunConfig& c, Artifacts& art) {
    const BoundStatesBlock& b = *c.bound_states;
    std::vector<double> grid;
    for (double f : b.omega01_ghz) grid.push_back(units::ghz_to_radns(f));
    const BoundStateScan s = scan_bound_states(*c.circuit, grid, b.scan);
    if (s.omega01_grid.empty()) throw NoBoundState("scan_bound_states", "no grid point supports a bound state");
    if (s.omega01_grid.size() < grid.size())
        spdlog::warn("bound-states: {} of {} grid points have no bound state", grid.size() - s.omega01_grid.size(),
                     grid.size());
    if (b.scan.compute_U) {
        csv::Table t{{"omega01_GHz", "U_MHz"}, {}};
        for (std::size_t i = 0; i < s.omega01_grid.size(); ++i)
            t.rows.push_back({num(units::radns_to_ghz(s.omega01_grid[i])), num(to_mhz(s.U_values[i]))});
        art.csv("interaction.csv", t);
    }
    if (b.scan.compute_J) {
        csv::Table t{{"omega01_GHz", "distance", "J_MHz", "sign", "xi"}, {}};
        for (std::size_t i = 0; i < s.omega01_grid.size(); ++i)
            for (const auto& [d, J] : s.J_values[i])
                t.rows.push_back({num(units::radns_to_ghz(s.omega01_grid[i])), num(d), num(to_mhz(J)),
                                  num(J < 0 ? -1 : 1), num(s.xi_values[i])});
        art.csv("exchange.csv", t);
    }
}

void run_quench(const RunConfig& c, Artifacts& art) {
    const QuenchBlock& b = *c.quench;
    std::vector<std::pair<std::string, BoseHubbardParams>> runs;
    if (!b.interaction_frequencies_ghz.empty()) {
        for (double f : b.interaction_frequencies_ghz)
            runs.emplace_back(fmt::format("_{:.2f}GHz", f), params_from_circuit(*c.circuit, f, b.n_sites, b.max_occupancy));
    } else {
        runs.emplace_back("", *c.bose_hubbard);
    }
    for (const auto& [suffix, params] : runs) {
        const int n = params.n_sites;
        const auto z_init = resolve_initial_states(b.z_init, n, c.seed);
        const SectorPtr sector = make_sector(n, ones(z_init.front()), params.max_occupancy);
        const SectorPropagator prop(params, sector);
        std::vector<QuenchResult> results(z_init.size());
        auto one = [&](std::size_t z) {
            const Eigen::VectorXcd psi0 = basis_state(*sector, z_init[z]);
            if (b.t2_us) {
                const NoiseModel noise = NoiseModel::uniform_dephasing(n, *b.t2_us * 1e3, substream(c.seed, kNoise) + z);
                results[z] = evolve_trajectories(prop, psi0, b.times_ns, noise, b.n_traj);
            } else {
                results[z] = evolve(prop, psi0, b.times_ns);
            }
        };
        // trajectories parallelize internally
        if (b.t2_us) for (std::size_t z = 0; z < z_init.size(); ++z) one(z);
        else parallel_for(z_init.size(), one);

        csv::Table pop{{"z_init", "time_ns", "site", "value"}, {}};
        csv::Table cor{{"z_init", "time_ns", "site_i", "site_j", "value"}, {}};
        csv::Table mu{{"z_init", "time_ns", "mu2", "fidelity"}, {}};
        std::vector<std::vector<BitstringDistribution>> dists(z_init.size());
        for (std::size_t z = 0; z < z_init.size(); ++z) {
            const QuenchResult& r = results[z];
            for (std::size_t k = 0; k < b.times_ns.size(); ++k) {
                const std::string tz = num(b.times_ns[k]);
                for (int i = 0; i < n; ++i) pop.rows.push_back({z_init[z], tz, num(i + 1), num(r.populations(k, i))});
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j)
                        cor.rows.push_back({z_init[z], tz, num(i + 1), num(j + 1), num(r.correlators[k](i, j))});
                BitstringDistribution d = project_to_bitstrings(r.distribution(k));
                mu.rows.push_back({z_init[z], tz, num(second_moment(d)), num(r.fidelity(k))});
                if (b.shots > 0) {
                    const auto counts =
                        sample_bitstrings(d, b.shots, substream(c.seed, kShots) + z * b.times_ns.size() + k);
                    for (int s = 0; s < d.dimension(); ++s)
                        d.p(s) = static_cast<double>(counts[s]) / static_cast<double>(b.shots);
                    d.shots = b.shots;
                }
                dists[z].push_back(std::move(d));
            }
        }
        art.csv("populations" + suffix + ".csv", pop);
        art.csv("correlators" + suffix + ".csv", cor);
        art.csv("mu2" + suffix + ".csv", mu);
        write_dataset(art, suffix, z_init, b.times_ns, dists, b.shots);
        art.json_file("hamiltonian" + suffix + ".json", params_json(params));
        spdlog::info("quench{}: {} initial states, {} times, D = {}", suffix, z_init.size(), b.times_ns.size(),
                     sector->dimension());
    }
}

json learn_report_json(const TrialFamily& family, const LearnReport& rep, const Eigen::VectorXd& x0,
                       const std::vector<double>& taus, const Eigen::VectorXd* truth) {
    json params = json::array();
    for (int k = 0; k < family.size(); ++k) {
        json p{{"name", family.parameter_name(k)},
               {"x0_MHz", to_mhz(x0(k))},
               {"value_MHz", to_mhz(rep.x(k))},
               {"canonical_MHz", to_mhz(rep.x_canonical(k))},
               {"interval_MHz", std::isfinite(rep.interval(k)) ? json(to_mhz(rep.interval(k))) : json(nullptr)}};
        if (truth) p["truth_MHz"] = to_mhz((*truth)(k));
        params.push_back(p);
    }
    return {{"parameters", params},         {"fd_trace", rep.fd_trace},     {"fd_per_tau", rep.fd_per_tau},
            {"taus_ns", taus},              {"fd_sem", rep.fd_sem},         {"rounds_run", rep.rounds_run},
            {"no_improvement", rep.no_improvement}};
}

void run_learn(const RunConfig& c, Artifacts& art) {
    const LearnBlock& b = *c.learn;
    const FidelityDataset ds = read_dataset(b.dataset);
    const BoseHubbardParams& base = *c.bose_hubbard;
    if (base.n_sites != ds.sector->n_sites())
        throw SchemaError("learn", fmt::format("device has {} sites, dataset {}", base.n_sites, ds.sector->n_sites()));
    const int m = TrialFamily::parameter_count(base.n_sites);
    const TrialFamily probe(base, Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m));
    Eigen::VectorXd x0 = probe.extract(base.J);
    if (b.start == "all_positive") x0 = x0.cwiseAbs();
    if (b.start == "explicit")
        for (int k = 0; k < m; ++k) x0(k) = units::mhz_to_radns(b.x0_mhz[k]);
    if ((x0.array() == 0.0).any()) spdlog::warn("learn: zero starting values pin their coordinates (bounds scale with |x0|)");
    const TrialFamily family = TrialFamily::around(base, x0, b.bounds_scale);
    GreedyOptions opt = b.greedy;
    opt.seed = substream(c.seed, kGreedy);
    const LearnReport rep = greedy_optimize(ds, family, x0, opt);
    art.json_file("learn_report.json", learn_report_json(family, rep, x0, ds.taus, nullptr));

    std::vector<int> which;
    for (const auto& name : b.profile_params) {
        if (name == "all") {
            which.resize(m);
            std::iota(which.begin(), which.end(), 0);
            break;
        }
        int found = -1;
        for (int k = 0; k < m; ++k)
            if (family.parameter_name(k) == name) found = k;
        if (found < 0) throw SchemaError("learn", "unknown profile parameter '" + name + "'");
        which.push_back(found);
    }
    for (int k : which) {
        std::vector<double> grid;
        for (int i = 0; i < b.profile_points; ++i)
            grid.push_back(family.lower()(k) + (family.upper()(k) - family.lower()(k)) * i / (b.profile_points - 1));
        const auto fd = fd_coordinate_profile(ds, family, rep.x, k, grid);
        csv::Table t{{"value_MHz", "fd"}, {}};
        for (std::size_t i = 0; i < grid.size(); ++i) t.rows.push_back({num(to_mhz(grid[i])), num(fd[i])});
        art.csv("fd_profile_" + family.parameter_name(k) + ".csv", t);
    }
}

void run_purcell(const RunConfig& c, Artifacts& art) {
    const PurcellBlock& b = *c.purcell;
    const auto samples = purcell_sweep(b.network, b.sweep);
    csv::Table t{{"freq_GHz", "ReYq_S", "T1_us", "topology"}, {}};
    int flagged = 0;
    for (const auto& s : samples) {
        t.rows.push_back({num(s.freq_ghz), num(s.re_Y), num(s.t1_us), to_string(s.topology)});
        flagged += s.flagged;
    }
    if (flagged) spdlog::warn("purcell: {} samples singular or within 100 MHz of a band edge", flagged);
    art.csv("purcell.csv", t);
}

void run_mitigate(const RunConfig& c, Artifacts& art) {
    const MitigateBlock& b = *c.mitigate;
    const AssignmentMatrix a = !b.assignment_csv.empty()  ? read_assignment_csv(b.assignment_csv)
                               : !b.assignment_json.empty() ? read_assignment_json(b.assignment_json)
                                                            : AssignmentMatrix::uniform_tensor(
                                                                  b.uniform_qubits, (*b.uniform_errors)[0],
                                                                  (*b.uniform_errors)[1], "uniform");
    const int n = a.n_qubits();
    const auto dim = static_cast<Eigen::Index>(a.dimension());
    auto code_of = [&](const std::string& s, const char* where) {
        if (static_cast<int>(s.size()) != n || s.find_first_not_of("01") != std::string::npos)
            throw SchemaError("mitigate", fmt::format("{} '{}' is not a {}-bit string", where, s, n));
        return static_cast<Eigen::Index>(std::stoull(s, nullptr, 2));
    };
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(dim);
    std::optional<Eigen::VectorXd> truth;
    if (!b.counts_csv.empty()) {
        const csv::Table t = csv::read(b.counts_csv);
        const auto cb = t.column("bitstring"), cc = t.column("count");
        for (const auto& r : t.rows) {
            const long long v = csv::parse_int(r[cc]);
            if (v < 0) throw SchemaError("mitigate", "negative count for " + r[cb]);
            counts(code_of(r[cb], "bitstring")) += static_cast<double>(v);
        }
    } else {
        truth = Eigen::VectorXd::Zero(dim);
        for (const auto& [s, p] : b.synthetic_truth) (*truth)(code_of(s, "truth key")) = p;
        counts = sample_counts(a.apply(*truth), b.synthetic_shots, substream(c.seed, kReadout));
    }
    const MitigationResult r = mitigate(counts, a, b.options);
    const double shots = counts.sum();
    csv::Table t{{"bitstring", "measured", "mitigated", "unconstrained"}, {}};
    for (Eigen::Index k = 0; k < dim; ++k)
        t.rows.push_back({bitstring(static_cast<std::uint64_t>(k), n), num(counts(k) / shots), num(r.p(k)),
                          num(r.unconstrained(k))});
    art.csv("mitigated.csv", t);
    json s{{"n_qubits", n},
           {"shots", static_cast<long long>(shots)},
           {"fidelity_nq", fidelity_nq(a)},
           {"condition_number", r.condition_number},
           {"ill_conditioned", r.ill_conditioned},
           {"converged", r.converged},
           {"iterations", r.iterations},
           {"residual", r.residual}};
    if (truth) s["tv_to_truth"] = total_variation(r.p, *truth);
    art.json_file("mitigation.json", s);
}

void run_fig2(const RunConfig& c, Artifacts& art) {
    const Fig2Block& b = *c.fig2;
    const BoseHubbardParams hidden = params_from_circuit(*c.circuit, b.omega01_ghz, b.n_sites, b.max_occupancy);
    art.json_file("hamiltonian.json", params_json(hidden));
    const auto z_init = random_initial_states(b.n_sites, b.excitations, b.z_init_count, substream(c.seed, kZInit));
    const FidelityDataset ds = synthesize_dataset(hidden, z_init, b.taus_ns, b.shots, substream(c.seed, kShots));
    write_dataset(art, "", z_init, b.taus_ns, ds.data, b.shots);

    const int m = TrialFamily::parameter_count(b.n_sites);
    const TrialFamily probe(hidden, Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m));
    const Eigen::VectorXd truth = probe.extract(hidden.J);
    const Eigen::VectorXd positive = truth.cwiseAbs();
    const TrialFamily family = TrialFamily::around(hidden, positive, b.bounds_scale);
    const FdSummary correct = averaged_fd(ds, family.apply(truth));
    const FdSummary flipped = averaged_fd(ds, family.apply(positive));
    spdlog::info("fig2: F_d alternating {:.4f}, all positive {:.4f}", correct.mean, flipped.mean);

    GreedyOptions opt = b.greedy;
    opt.seed = substream(c.seed, kGreedy);
    const LearnReport rep = greedy_optimize(ds, family, positive, opt);
    art.json_file("learn_report.json", learn_report_json(family, rep, positive, b.taus_ns, &truth));

    csv::Table t{{"tau_ns", "fd_alternating", "fd_all_positive", "fd_learned"}, {}};
    for (std::size_t k = 0; k < b.taus_ns.size(); ++k)
        t.rows.push_back({num(b.taus_ns[k]), num(correct.per_tau[k]), num(flipped.per_tau[k]), num(rep.fd_per_tau[k])});
    art.csv("fd_vs_tau.csv", t);
    art.json_file("sign_test.json", {{"fd_alternating", correct.mean},
                                     {"fd_alternating_sem", correct.sem},
                                     {"fd_all_positive", flipped.mean},
                                     {"fd_all_positive_sem", flipped.sem},
                                     {"gap", correct.mean - flipped.mean},
                                     {"fd_learned", rep.fd_trace.back()}});
}

void run_fig4(const RunConfig& c, Artifacts& art) {
    const Fig4Block& b = *c.fig4;
    const BoseHubbardParams& lr = *c.bose_hubbard;
    const int n = lr.n_sites;
    if (n < 2) throw InvalidArgument("fig4", "needs at least two sites");
    BoseHubbardParams nn = lr;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(i - j) > 1) nn.J(i, j) = 0.0;
    const double j1 = std::abs(lr.J(0, 1));
    if (!(j1 > 0.0)) throw InvalidArgument("fig4", "nearest-neighbour J must be nonzero");
    std::vector<double> jtau, times;
    for (int i = 0; i < b.points; ++i) {
        jtau.push_back(b.jtau_max * i / (b.points - 1));
        times.push_back(jtau.back() / j1);
    }
    std::size_t pt_index = 0;
    for (std::size_t i = 0; i < jtau.size(); ++i)
        if (std::abs(jtau[i] - b.pt_jtau) < std::abs(jtau[pt_index] - b.pt_jtau)) pt_index = i;
    const auto z_init = random_initial_states(n, b.excitations, b.z_init_count, substream(c.seed, kZInit));

    csv::Table mu{{"model", "z_init", "Jtau", "time_ns", "mu2"}, {}};
    csv::Table mean{{"model", "Jtau", "mu2_mean"}, {}};
    csv::Table hist{{"model", "p_lo", "p_hi", "density", "pt_density", "finite_d_density"}, {}};
    json summary{{"window_Jtau", b.window_jtau}, {"pt_Jtau", jtau[pt_index]}, {"z_init", z_init}};
    for (const auto& [name, params] : {std::pair{std::string("long_range"), lr}, std::pair{std::string("nn_only"), nn}}) {
        const SectorPropagator prop(params, make_sector(n, b.excitations, params.max_occupancy));
        std::vector<std::vector<Eigen::VectorXd>> p(z_init.size());
        parallel_for(z_init.size(), [&](std::size_t z) {
            const QuenchResult r = evolve(prop, basis_state(*prop.sector(), z_init[z]), times);
            for (std::size_t k = 0; k < times.size(); ++k) p[z].push_back(project_to_bitstrings(r.distribution(k)).p);
        });
        const int D = static_cast<int>(p.front().front().size());
        double window_sum = 0.0;
        int window_count = 0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            double acc = 0.0;
            for (std::size_t z = 0; z < z_init.size(); ++z) {
                const double m2 = second_moment(p[z][k]);
                acc += m2;
                mu.rows.push_back({name, z_init[z], num(jtau[k]), num(times[k]), num(m2)});
            }
            acc /= static_cast<double>(z_init.size());
            mean.rows.push_back({name, num(jtau[k]), num(acc)});
            if (jtau[k] >= b.window_jtau[0] - 1e-12 && jtau[k] <= b.window_jtau[1] + 1e-12) {
                window_sum += acc;
                ++window_count;
            }
        }
        std::vector<double> pooled;
        for (const auto& pz : p) pooled.insert(pooled.end(), pz[pt_index].data(), pz[pt_index].data() + D);
        const PtHistogram h = pt_histogram(pooled, D, b.bins);
        for (int i = 0; i < b.bins; ++i)
            hist.rows.push_back({name, num(h.edges[i]), num(h.edges[i + 1]), num(h.density[i]), num(h.pt_density[i]),
                                 num(h.finite_d_density[i])});
        const double ergodic = 2.0 / (D + 1);
        const double window_mean = window_count ? window_sum / window_count : std::nan("");
        summary["D"] = D;
        summary["mu2_ergodic"] = ergodic;
        summary["mu2_classical"] = 1.0 / D;
        summary[name] = {{"mu2_window_mean", window_mean},
                         {"ratio_to_ergodic", window_mean / ergodic},
                         {"ks_statistic", h.ks_statistic},
                         {"ks_p_value", h.ks_p_value}};
        spdlog::info("fig4 {}: window mu2 / mu2_e = {:.3f}, KS p = {:.3g}", name, window_mean / ergodic, h.ks_p_value);
    }
    art.csv("mu2.csv", mu);
    art.csv("mu2_mean.csv", mean);
    art.csv("pt_histogram.csv", hist);
    art.json_file("summary.json", summary);
}

template <class T>
const T& need(const std::optional<T>& block, const char* key, const std::string& sub) {
    if (!block) throw SchemaError(sub, fmt::format("config has no '{}' block", key));
    return *block;
}

std::map<std::string, std::string> versions() {
    return {{"bandgapsim", kVersion},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
            {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                          NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

}  // namespace

BoseHubbardParams params_from_circuit(const CircuitSpec& spec, double omega01_ghz, int n_sites, int max_occupancy) {
    const char* op = "params_from_circuit";
    const Dispersion band = dispersion_from_spec(spec);
    const int mid = (spec.n_cells + 1) / 2;
    const double ej = ej_for_omega01(spec, mid, units::ghz_to_radns(omega01_ghz));
    if (!in_gap(dressed_qubit_frequency(spec, mid, ej), band))
        throw NoBoundState(op, fmt::format("{} GHz is inside the passband", omega01_ghz));
    const SpectrumResult s = single_qubit_spectrum(spec, mid, ej, band);
    std::vector<double> J(static_cast<std::size_t>(n_sites), 0.0);
    parallel_for(static_cast<std::size_t>(n_sites - 1), [&](std::size_t i) {
        const int d = static_cast<int>(i) + 1;
        const auto [ci, cj] = centred_pair(spec.n_cells, d);
        if (ci < 1 || cj > spec.n_cells) return;
        try {
            const PairCouplingResult r = pair_coupling(spec, ci, cj, ej, band);
            if (!r.degenerate) J[d] = r.J;
        } catch (const NoBoundState&) {
        }
    });
    BoseHubbardParams p;
    p.n_sites = n_sites;
    p.max_occupancy = max_occupancy;
    p.eps = Eigen::VectorXd::Zero(n_sites);
    p.U = Eigen::VectorXd::Constant(n_sites, onsite_interaction(s.omega01, s.omega02));
    p.J = Eigen::MatrixXd::Zero(n_sites, n_sites);
    for (int i = 0; i < n_sites; ++i)
        for (int j = i + 1; j < n_sites; ++j) p.J(i, j) = p.J(j, i) = J[j - i];
    spdlog::info("{}: {} GHz, U = {:.2f} MHz, J1 = {:.3f} MHz", op, omega01_ghz, to_mhz(p.U(0)), to_mhz(J[1]));
    return p;
}

FidelityDataset read_dataset(const fs::path& dir) {
    const char* op = "read_dataset";
    const fs::path index_path = dir / "dataset.json";
    std::ifstream in(index_path);
    if (!in) throw IoError(op, "cannot read " + index_path.string());
    json index;
    try {
        in >> index;
    } catch (const json::exception& e) {
        throw SchemaError(op, index_path.string() + ": " + e.what());
    }
    FidelityDataset ds;
    try {
        ds.z_init = index.at("z_init").get<std::vector<std::string>>();
        ds.taus = index.at("times_ns").get<std::vector<double>>();
        ds.shots = index.at("shots").get<long long>();
        const int n = index.at("n_sites").get<int>();
        const int k = index.at("excitations").get<int>();
        ds.sector = make_sector(n, k, 1);
        for (const auto& z : ds.z_init) {
            const fs::path file = dir / index.at("files").at(z).get<std::string>();
            const csv::Table t = csv::read(file);
            const auto ct = t.column("time_ns"), cb = t.column("bitstring"), cp = t.column("probability");
            std::vector<BitstringDistribution> row;
            for (std::size_t i = 0; i < ds.taus.size(); ++i)
                row.push_back({ds.sector, Eigen::VectorXd::Zero(ds.sector->dimension()),
                               ds.shots > 0 ? std::optional<long long>(ds.shots) : std::nullopt});
            for (const auto& r : t.rows) {
                const double tau = csv::parse_double(r[ct]);
                const auto it = std::find(ds.taus.begin(), ds.taus.end(), tau);
                if (it == ds.taus.end()) throw SchemaError(op, file.string() + ": time " + r[ct] + " not in the index");
                const int s = ds.sector->index_of_label(r[cb]);
                if (s < 0) throw SchemaError(op, file.string() + ": bit-string " + r[cb] + " outside the sector");
                row[it - ds.taus.begin()].p(s) = csv::parse_double(r[cp]);
            }
            ds.data.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw SchemaError(op, index_path.string() + ": " + e.what());
    }
    ds.validate();
    return ds;
}

RunManifest run(const std::string& subcommand, const RunConfig& config, const RunOverrides& overrides,
                const std::string& target) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c = config;
    if (overrides.seed) c.seed = *overrides.seed;
    if (overrides.output) c.output = *overrides.output;
    if (overrides.threads) c.threads = *overrides.threads;
    set_worker_count(c.threads);

    const std::string what = target.empty() ? subcommand : subcommand + " " + target;
    // Block presence is checked before the output directory is touched.
    std::function<void(Artifacts&)> body;
    if (subcommand == "circuit") {
        need(c.circuit_run, "circuit", what);
        body = [&](Artifacts& a) { run_circuit(c, a); };
    } else if (subcommand == "bound-states") {
        need(c.bound_states, "bound_states", what);
        body = [&](Artifacts& a) { run_bound_states(c, a); };
    } else if (subcommand == "quench" || (subcommand == "reproduce" && target == "fig3")) {
        need(c.quench, "quench", what);
        body = [&](Artifacts& a) { run_quench(c, a); };
    } else if (subcommand == "learn") {
        need(c.learn, "learn", what);
        body = [&](Artifacts& a) { run_learn(c, a); };
    } else if (subcommand == "purcell" || (subcommand == "reproduce" && target == "purcell")) {
        need(c.purcell, "purcell", what);
        body = [&](Artifacts& a) { run_purcell(c, a); };
    } else if (subcommand == "mitigate") {
        need(c.mitigate, "mitigate", what);
        body = [&](Artifacts& a) { run_mitigate(c, a); };
    } else if (subcommand == "reproduce" && target == "fig2") {
        need(c.fig2, "fig2", what);
        body = [&](Artifacts& a) { run_fig2(c, a); };
    } else if (subcommand == "reproduce" && target == "fig4") {
        need(c.fig4, "fig4", what);
        body = [&](Artifacts& a) { run_fig4(c, a); };
    } else {
        throw SchemaError("run", "unknown subcommand '" + what + "'");
    }

    Artifacts art(c.output);
    spdlog::info("{}: writing to {}", what, c.output.string());
    body(art);
    art.json_file("config.json", json::parse(c.canonical));

    RunManifest m;
    m.subcommand = subcommand;
    m.target = target;
    m.config_hash = sha1_hex(c.canonical);
    m.seed = c.seed;
    m.versions = versions();
    m.outputs = art.files();
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json j{{"subcommand", m.subcommand}, {"config_hash", m.config_hash}, {"seed", m.seed},
           {"versions", m.versions},     {"wall_time_s", m.wall_time_s}, {"outputs", m.outputs}};
    if (!target.empty()) j["target"] = target;
    art.commit(j);
    spdlog::info("{}: {} files in {:.1f} s", what, m.outputs.size(), m.wall_time_s);
    return m;
}

}  // namespace bgs
