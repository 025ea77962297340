#include "bandgapsim/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <spdlog/spdlog.h>

#include "bandgapsim/csv.hpp"
#include "bandgapsim/errors.hpp"
#include "bandgapsim/rng.hpp"

namespace bgs {

namespace {

constexpr double kStochasticTol = 1e-9;

void check_stochastic(const Eigen::MatrixXd& p, const char* op) {
    if ((p.array() < -kStochasticTol).any()) throw InvalidArgument(op, "negative assignment probability");
    const Eigen::RowVectorXd sums = p.colwise().sum();
    if (((sums.array() - 1.0).abs() > kStochasticTol).any()) throw InvalidArgument(op, "columns must sum to one");
}

int bit_of(std::uint64_t code, int qubit, int n) { return static_cast<int>((code >> (n - 1 - qubit)) & 1U); }

void check_qubit(const AssignmentMatrix& a, int q, int s, const char* op) {
    if (q < 0 || q >= a.n_qubits()) throw InvalidArgument(op, "qubit index out of range");
    if (s != 0 && s != 1) throw InvalidArgument(op, "state must be 0 or 1");
}

// In-place action of one 2x2 factor on the bit of `qubit`.
void apply_factor(Eigen::VectorXd& v, const Eigen::Matrix2d& m, int qubit, int n) {
    const std::uint64_t stride = std::uint64_t{1} << (n - 1 - qubit);
    const std::uint64_t dim = std::uint64_t{1} << n;
    for (std::uint64_t base = 0; base < dim; base += 2 * stride)
        for (std::uint64_t k = base; k < base + stride; ++k) {
            const double v0 = v(static_cast<Eigen::Index>(k)), v1 = v(static_cast<Eigen::Index>(k + stride));
            v(static_cast<Eigen::Index>(k)) = m(0, 0) * v0 + m(0, 1) * v1;
            v(static_cast<Eigen::Index>(k + stride)) = m(1, 0) * v0 + m(1, 1) * v1;
        }
}

double cond2(const Eigen::MatrixXd& m) {
    const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
    return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

double diag_mean(const Eigen::Matrix2d& m) { return 0.5 * (m(0, 0) + m(1, 1)); }

}  // namespace

AssignmentMatrix AssignmentMatrix::full(Eigen::MatrixXd p, std::string provenance) {
    const char* op = "AssignmentMatrix::full";
    const Eigen::Index d = p.rows();
    if (d < 2 || p.cols() != d || (d & (d - 1)) != 0) throw DimensionMismatch(op, "matrix must be square with a power-of-two size");
    int n = 0;
    while ((Eigen::Index{1} << n) < d) ++n;
    if (n > kMaxFullQubits) throw InvalidArgument(op, "full matrices are limited to 12 qubits");
    check_stochastic(p, op);
    AssignmentMatrix a;
    a.n_ = n;
    a.full_ = std::move(p);
    a.provenance_ = std::move(provenance);
    return a;
}

AssignmentMatrix AssignmentMatrix::tensor(std::vector<Eigen::Matrix2d> factors, std::string provenance) {
    const char* op = "AssignmentMatrix::tensor";
    if (factors.empty() || factors.size() > 62) throw InvalidArgument(op, "need between 1 and 62 qubits");
    for (const auto& f : factors) check_stochastic(f, op);
    AssignmentMatrix a;
    a.n_ = static_cast<int>(factors.size());
    a.factors_ = std::move(factors);
    a.provenance_ = std::move(provenance);
    return a;
}

AssignmentMatrix AssignmentMatrix::uniform_tensor(int n_qubits, double e10, double e01, std::string provenance) {
    if (n_qubits < 1) throw InvalidArgument("AssignmentMatrix::uniform_tensor", "need at least one qubit");
    Eigen::Matrix2d m;
    m << 1.0 - e10, e01, e10, 1.0 - e01;
    return tensor(std::vector<Eigen::Matrix2d>(static_cast<std::size_t>(n_qubits), m), std::move(provenance));
}

const Eigen::MatrixXd& AssignmentMatrix::matrix() const {
    if (is_tensor()) throw TensorOnly("AssignmentMatrix", "only per-qubit factors are stored");
    return full_;
}

const std::vector<Eigen::Matrix2d>& AssignmentMatrix::factors() const {
    if (!is_tensor()) throw InvalidArgument("AssignmentMatrix", "matrix is not in tensor form");
    return factors_;
}

AssignmentMatrix AssignmentMatrix::to_full() const {
    if (!is_tensor()) return *this;
    if (n_ > kMaxFullQubits) throw InvalidArgument("AssignmentMatrix::to_full", "too many qubits for a full matrix");
    const auto d = static_cast<Eigen::Index>(dimension());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        Eigen::VectorXd col = m.col(c);
        for (int q = 0; q < n_; ++q) apply_factor(col, factors_[static_cast<std::size_t>(q)], q, n_);
        m.col(c) = col;
    }
    AssignmentMatrix a;
    a.n_ = n_;
    a.full_ = std::move(m);
    a.provenance_ = provenance_;
    return a;
}

double AssignmentMatrix::element(std::uint64_t z, std::uint64_t zeta) const {
    if (z >= dimension() || zeta >= dimension()) throw InvalidArgument("AssignmentMatrix::element", "code out of range");
    if (!is_tensor()) return full_(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(zeta));
    double p = 1.0;
    for (int q = 0; q < n_; ++q) p *= factors_[static_cast<std::size_t>(q)](bit_of(z, q, n_), bit_of(zeta, q, n_));
    return p;
}

Eigen::VectorXd AssignmentMatrix::apply(const Eigen::VectorXd& p) const {
    if (static_cast<std::uint64_t>(p.size()) != dimension())
        throw DimensionMismatch("AssignmentMatrix::apply", "vector length differs from 2^n");
    if (!is_tensor()) return full_ * p;
    Eigen::VectorXd v = p;
    for (int q = 0; q < n_; ++q) apply_factor(v, factors_[static_cast<std::size_t>(q)], q, n_);
    return v;
}

Eigen::VectorXd AssignmentMatrix::apply_transpose(const Eigen::VectorXd& r) const {
    if (static_cast<std::uint64_t>(r.size()) != dimension())
        throw DimensionMismatch("AssignmentMatrix::apply_transpose", "vector length differs from 2^n");
    if (!is_tensor()) return full_.transpose() * r;
    Eigen::VectorXd v = r;
    for (int q = 0; q < n_; ++q) apply_factor(v, factors_[static_cast<std::size_t>(q)].transpose(), q, n_);
    return v;
}

Eigen::VectorXd AssignmentMatrix::solve(const Eigen::VectorXd& b) const {
    if (static_cast<std::uint64_t>(b.size()) != dimension())
        throw DimensionMismatch("AssignmentMatrix::solve", "vector length differs from 2^n");
    if (!is_tensor()) return full_.partialPivLu().solve(b);
    Eigen::VectorXd v = b;
    for (int q = 0; q < n_; ++q) apply_factor(v, factors_[static_cast<std::size_t>(q)].inverse(), q, n_);
    return v;
}

double AssignmentMatrix::condition_number() const {
    if (!is_tensor()) return cond2(full_);
    double c = 1.0;
    for (const auto& f : factors_) c *= cond2(f);
    return c;
}

// ---------------------------------------------------------------------------

double fidelity_nq(const AssignmentMatrix& a) {
    if (!a.is_tensor()) return a.matrix().diagonal().mean();
    double f = 1.0;
    for (const auto& m : a.factors()) f *= diag_mean(m);
    return f;
}

double error_rate_e1_enumerated(const AssignmentMatrix& a, int qubit, int state) {
    check_qubit(a, qubit, state, "error_rate_e1");
    const Eigen::MatrixXd& m = a.matrix();
    const int n = a.n_qubits();
    const std::uint64_t flip = std::uint64_t{1} << (n - 1 - qubit);
    double sum = 0.0;
    std::uint64_t count = 0;
    for (std::uint64_t zeta = 0; zeta < a.dimension(); ++zeta) {
        if (bit_of(zeta, qubit, n) != state) continue;
        sum += m(static_cast<Eigen::Index>(zeta ^ flip), static_cast<Eigen::Index>(zeta));
        ++count;
    }
    return sum / static_cast<double>(count);
}

double error_rate_e2_enumerated(const AssignmentMatrix& a, int qi, int qj, int si, int sj) {
    check_qubit(a, qi, si, "error_rate_e2");
    check_qubit(a, qj, sj, "error_rate_e2");
    if (qi == qj) throw InvalidArgument("error_rate_e2", "qubits must differ");
    const Eigen::MatrixXd& m = a.matrix();
    const int n = a.n_qubits();
    const std::uint64_t flip = (std::uint64_t{1} << (n - 1 - qi)) | (std::uint64_t{1} << (n - 1 - qj));
    double sum = 0.0;
    std::uint64_t count = 0;
    for (std::uint64_t zeta = 0; zeta < a.dimension(); ++zeta) {
        if (bit_of(zeta, qi, n) != si || bit_of(zeta, qj, n) != sj) continue;
        sum += m(static_cast<Eigen::Index>(zeta ^ flip), static_cast<Eigen::Index>(zeta));
        ++count;
    }
    return sum / static_cast<double>(count);
}

double error_rate_e1(const AssignmentMatrix& a, int qubit, int state) {
    if (!a.is_tensor()) return error_rate_e1_enumerated(a, qubit, state);
    check_qubit(a, qubit, state, "error_rate_e1");
    const auto& f = a.factors();
    double r = f[static_cast<std::size_t>(qubit)](1 - state, state);
    for (int q = 0; q < a.n_qubits(); ++q)
        if (q != qubit) r *= diag_mean(f[static_cast<std::size_t>(q)]);
    return r;
}

double error_rate_e2(const AssignmentMatrix& a, int qi, int qj, int si, int sj) {
    if (!a.is_tensor()) return error_rate_e2_enumerated(a, qi, qj, si, sj);
    check_qubit(a, qi, si, "error_rate_e2");
    check_qubit(a, qj, sj, "error_rate_e2");
    if (qi == qj) throw InvalidArgument("error_rate_e2", "qubits must differ");
    const auto& f = a.factors();
    double r = f[static_cast<std::size_t>(qi)](1 - si, si) * f[static_cast<std::size_t>(qj)](1 - sj, sj);
    for (int q = 0; q < a.n_qubits(); ++q)
        if (q != qi && q != qj) r *= diag_mean(f[static_cast<std::size_t>(q)]);
    return r;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw InvalidArgument("project_to_simplex", "empty vector");
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0);
}

MitigationResult mitigate(const Eigen::VectorXd& counts, const AssignmentMatrix& a, const MitigationOptions& opt) {
    const char* op = "mitigate";
    if (static_cast<std::uint64_t>(counts.size()) != a.dimension()) throw DimensionMismatch(op, "counts length differs from 2^n");
    if ((counts.array() < 0.0).any()) throw InvalidArgument(op, "negative counts");
    const double total = counts.sum();
    if (!(total > 0.0)) throw InvalidArgument(op, "no counts");
    const Eigen::VectorXd b = counts / total;

    MitigationResult res;
    res.condition_number = a.condition_number();
    res.ill_conditioned = !(res.condition_number <= opt.max_condition);
    if (res.ill_conditioned)
        spdlog::warn("{}: assignment matrix condition number {:.3g} exceeds {:.3g}", op, res.condition_number, opt.max_condition);
    res.unconstrained = a.solve(b);

    // Lipschitz constant of the gradient A^T(Ap - b): largest eigenvalue of A^T A.
    Eigen::VectorXd x = Eigen::VectorXd::Constant(b.size(), 1.0 / std::sqrt(static_cast<double>(b.size())));
    double lip = 1.0;
    for (int it = 0; it < 50; ++it) {
        const Eigen::VectorXd y = a.apply_transpose(a.apply(x));
        lip = y.norm();
        if (!(lip > 0.0)) throw InvalidArgument(op, "assignment matrix is zero");
        x = y / lip;
    }
    const double step = 1.0 / (1.05 * lip);

    Eigen::VectorXd p = project_to_simplex(res.unconstrained);
    Eigen::VectorXd y = p;
    double t = 1.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const Eigen::VectorXd grad = a.apply_transpose(a.apply(y) - b);
        const Eigen::VectorXd next = project_to_simplex(y - step * grad);
        const double moved = (next - p).lpNorm<1>();
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - p);
        p = next;
        t = t_next;
        res.iterations = it;
        if (moved < opt.tolerance) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) spdlog::warn("{}: projected gradient stopped after {} iterations", op, res.iterations);
    res.p = p;
    res.residual = (a.apply(p) - b).norm();
    return res;
}

MitigationResult mitigate(const std::map<std::uint64_t, long long>& counts, const AssignmentMatrix& a,
                          const MitigationOptions& opt) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.dimension()));
    for (const auto& [code, c] : counts) {
        if (code >= a.dimension()) throw InvalidArgument("mitigate", "bit-string code wider than the register");
        v(static_cast<Eigen::Index>(code)) += static_cast<double>(c);
    }
    return mitigate(v, a, opt);
}

Eigen::VectorXd sample_counts(const Eigen::VectorXd& p, long long shots, std::uint64_t seed) {
    const char* op = "sample_counts";
    if (shots < 0) throw InvalidArgument(op, "negative shot count");
    if (p.size() == 0 || (p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9)
        throw InvalidArgument(op, "p must be a probability vector");
    std::vector<double> cdf(static_cast<std::size_t>(p.size()));
    std::partial_sum(p.data(), p.data() + p.size(), cdf.begin());
    Eigen::Index last = p.size() - 1;
    while (last > 0 && p(last) == 0.0) --last;
    CounterRng rng(seed, 0x5eed);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
    for (long long s = 0; s < shots; ++s) {
        const double u = rng.uniform() * cdf.back();
        auto k = static_cast<Eigen::Index>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        counts(std::min(k, last)) += 1.0;
    }
    return counts;
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw DimensionMismatch("total_variation", "distributions differ in length");
    return 0.5 * (p - q).lpNorm<1>();
}

// ---------------------------------------------------------------------------

void write_assignment_csv(const std::filesystem::path& path, const AssignmentMatrix& a) {
    const AssignmentMatrix f = a.to_full();
    const auto d = static_cast<Eigen::Index>(f.dimension());
    csv::Table t;
    t.header.push_back("assigned");
    for (Eigen::Index c = 0; c < d; ++c) t.header.push_back(std::to_string(c));
    for (Eigen::Index r = 0; r < d; ++r) {
        std::vector<std::string> row{std::to_string(r)};
        for (Eigen::Index c = 0; c < d; ++c) row.push_back(csv::num(f.matrix()(r, c)));
        t.rows.push_back(std::move(row));
    }
    csv::write(path, t);
}

AssignmentMatrix read_assignment_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    const auto d = static_cast<Eigen::Index>(t.rows.size());
    if (static_cast<Eigen::Index>(t.header.size()) != d + 1) throw SchemaError("read_assignment_csv", "matrix is not square");
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index c = 0; c < d; ++c)
        if (csv::parse_int(t.header[static_cast<std::size_t>(c + 1)]) != c)
            throw SchemaError("read_assignment_csv", "prepared codes must run 0..2^n-1 in order");
    for (Eigen::Index r = 0; r < d; ++r) {
        const auto& row = t.rows[static_cast<std::size_t>(r)];
        if (csv::parse_int(row[0]) != r) throw SchemaError("read_assignment_csv", "assigned codes must run 0..2^n-1 in order");
        for (Eigen::Index c = 0; c < d; ++c) m(r, c) = csv::parse_double(row[static_cast<std::size_t>(c + 1)]);
    }
    try {
        return AssignmentMatrix::full(std::move(m), path.filename().string());
    } catch (const ComputationError& e) {
        throw SchemaError("read_assignment_csv", e.what());
    }
}

void write_assignment_json(const std::filesystem::path& path, const AssignmentMatrix& a) {
    nlohmann::json j;
    j["n_qubits"] = a.n_qubits();
    j["provenance"] = a.provenance();
    j["factors"] = nlohmann::json::array();
    for (const auto& f : a.factors()) j["factors"].push_back({{f(0, 0), f(0, 1)}, {f(1, 0), f(1, 1)}});
    std::ofstream out(path);
    if (!out) throw IoError("write_assignment_json", "cannot open " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write_assignment_json", "write failed for " + path.string());
}

AssignmentMatrix read_assignment_json(const std::filesystem::path& path) {
    const char* op = "read_assignment_json";
    std::ifstream in(path);
    if (!in) throw IoError(op, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        for (const auto& [k, v] : j.items())
            if (k != "n_qubits" && k != "provenance" && k != "factors") throw SchemaError(op, "unknown key '" + k + "'");
        const int n = j.at("n_qubits").get<int>();
        std::vector<Eigen::Matrix2d> factors;
        for (const auto& f : j.at("factors")) {
            Eigen::Matrix2d m;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) m(r, c) = f.at(r).at(c).get<double>();
            factors.push_back(m);
        }
        if (static_cast<int>(factors.size()) != n) throw SchemaError(op, "factor count differs from n_qubits");
        return AssignmentMatrix::tensor(std::move(factors), j.value("provenance", std::string{}));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(op, e.what());
    } catch (const ComputationError& e) {
        throw SchemaError(op, e.what());
    }
}

}  // namespace bgs
