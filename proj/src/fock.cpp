#include "bandgapsim/fock.hpp"

#include <algorithm>
#include <cmath>

#include "bandgapsim/errors.hpp"

namespace bgs {

void BoseHubbardParams::validate() const {
    const char* op = "BoseHubbardParams";
    if (n_sites < 1) throw InvalidArgument(op, "n_sites must be positive");
    if (max_occupancy != 1 && max_occupancy != 2) throw InvalidArgument(op, "max_occupancy must be 1 or 2");
    if (eps.size() != n_sites) throw InvalidArgument(op, "eps needs one entry per site");
    if (U.size() != n_sites) throw InvalidArgument(op, "U needs one entry per site");
    if (J.rows() != n_sites || J.cols() != n_sites) throw InvalidArgument(op, "J must be n_sites x n_sites");
    for (int i = 0; i < n_sites; ++i) {
        if (J(i, i) != 0.0) throw InvalidArgument(op, "J must have a zero diagonal");
        for (int j = 0; j < i; ++j)
            if (J(i, j) != J(j, i)) throw InvalidArgument(op, "J must be symmetric");
    }
}

FockSector::FockSector(int n_sites, int n_excitations, int max_occupancy)
    : n_sites_(n_sites), n_excitations_(n_excitations), max_occupancy_(max_occupancy) {
    if (n_sites < 1 || n_excitations < 0 || max_occupancy < 1)
        throw InvalidArgument("FockSector", "invalid sector shape");
    enumerate(std::vector<int>(static_cast<std::size_t>(n_sites), max_occupancy));
}

FockSector::FockSector(int n_sites, int n_excitations, std::vector<int> site_caps)
    : n_sites_(n_sites), n_excitations_(n_excitations) {
    if (n_sites < 1 || n_excitations < 0 || static_cast<int>(site_caps.size()) != n_sites)
        throw InvalidArgument("FockSector", "invalid sector shape");
    max_occupancy_ = *std::max_element(site_caps.begin(), site_caps.end());
    enumerate(site_caps);
}

void FockSector::enumerate(const std::vector<int>& caps) {
    // suffix capacity lets the recursion skip dead branches
    std::vector<int> room(static_cast<std::size_t>(n_sites_) + 1, 0);
    for (int i = n_sites_ - 1; i >= 0; --i) room[i] = room[i + 1] + caps[i];
    if (room[0] < n_excitations_) throw InvalidArgument("FockSector", "sector is empty");

    std::vector<std::uint8_t> cur(static_cast<std::size_t>(n_sites_), 0);
    auto rec = [&](auto&& self, int site, int left) -> void {
        if (site == n_sites_) {
            if (left == 0) occ_.insert(occ_.end(), cur.begin(), cur.end());
            return;
        }
        const int lo = std::max(0, left - room[site + 1]);
        const int hi = std::min(caps[site], left);
        for (int n = lo; n <= hi; ++n) {
            cur[site] = static_cast<std::uint8_t>(n);
            self(self, site + 1, left - n);
        }
        cur[site] = 0;
    };
    rec(rec, 0, n_excitations_);
    dim_ = static_cast<int>(occ_.size() / static_cast<std::size_t>(n_sites_));
    index_.reserve(static_cast<std::size_t>(dim_));
    for (int k = 0; k < dim_; ++k) index_.emplace(key(k), k);
}

std::string FockSector::key(int k) const {
    const auto* p = occ_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(n_sites_);
    return std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(n_sites_));
}

std::vector<int> FockSector::state(int k) const {
    std::vector<int> out(static_cast<std::size_t>(n_sites_));
    for (int i = 0; i < n_sites_; ++i) out[i] = occupation(k, i);
    return out;
}

int FockSector::index_of(const std::vector<int>& occupation) const {
    if (static_cast<int>(occupation.size()) != n_sites_) return -1;
    std::string k(static_cast<std::size_t>(n_sites_), '\0');
    for (int i = 0; i < n_sites_; ++i) {
        if (occupation[i] < 0 || occupation[i] > 255) return -1;
        k[i] = static_cast<char>(occupation[i]);
    }
    auto it = index_.find(k);
    return it == index_.end() ? -1 : it->second;
}

int FockSector::index_of_label(std::string_view label) const {
    if (static_cast<int>(label.size()) != n_sites_) return -1;
    std::vector<int> occ(label.size());
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (label[i] < '0' || label[i] > '9') return -1;
        occ[i] = label[i] - '0';
    }
    return index_of(occ);
}

std::string FockSector::label(int k) const {
    std::string s(static_cast<std::size_t>(n_sites_), '0');
    for (int i = 0; i < n_sites_; ++i) s[i] = static_cast<char>('0' + occupation(k, i));
    return s;
}

bool FockSector::is_bitstring(int k) const {
    for (int i = 0; i < n_sites_; ++i)
        if (occupation(k, i) > 1) return false;
    return true;
}

std::uint64_t FockSector::bitstring_code(int k) const {
    std::uint64_t code = 0;
    for (int i = 0; i < n_sites_; ++i) code = (code << 1) | (occupation(k, i) ? 1u : 0u);
    return code;
}

Eigen::MatrixXd build_sector_hamiltonian(const BoseHubbardParams& params, const FockSector& sector) {
    params.validate();
    if (sector.n_sites() != params.n_sites)
        throw DimensionMismatch("build_sector_hamiltonian", "sector and params disagree on n_sites");
    const int n = params.n_sites;
    const int dim = sector.dimension();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);

    std::vector<std::pair<int, int>> bonds;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && params.J(i, j) != 0.0) bonds.emplace_back(i, j);

    std::vector<int> occ(static_cast<std::size_t>(n));
    for (int a = 0; a < dim; ++a) {
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            occ[i] = sector.occupation(a, i);
            diag += params.eps(i) * occ[i];
            if (!params.hardcore()) diag += 0.5 * params.U(i) * occ[i] * (occ[i] - 1);
        }
        h(a, a) = diag;
        // b_i^dag b_j
        for (const auto& [i, j] : bonds) {
            if (occ[j] == 0) continue;
            const double amp = params.J(i, j) * std::sqrt(static_cast<double>(occ[i] + 1) * occ[j]);
            occ[i] += 1;
            occ[j] -= 1;
            const int b = sector.index_of(occ);
            occ[i] -= 1;
            occ[j] += 1;
            if (b >= 0) h(b, a) += amp;
        }
    }
    return h;
}

}  // namespace bgs
