#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bgs {

// Extended Bose-Hubbard parameters (rad/ns). max_occupancy 1 is the hardcore limit.
struct BoseHubbardParams {
    int n_sites = 0;
    Eigen::VectorXd eps;
    Eigen::VectorXd U;
    Eigen::MatrixXd J;
    int max_occupancy = 1;

    // Throws InvalidArgument on malformed fields.
    void validate() const;
    bool hardcore() const { return max_occupancy == 1; }
};

// Number-conserving basis, ordered lexicographically on occupation vectors with
// site 1 most significant.
class FockSector {
public:
    FockSector() = default;
    FockSector(int n_sites, int n_excitations, int max_occupancy);
    // Per-site occupation caps (each <= max_occupancy).
    FockSector(int n_sites, int n_excitations, std::vector<int> site_caps);

    int n_sites() const { return n_sites_; }
    int n_excitations() const { return n_excitations_; }
    int max_occupancy() const { return max_occupancy_; }
    int dimension() const { return dim_; }

    std::uint8_t occupation(int state, int site) const {
        return occ_[static_cast<std::size_t>(state) * static_cast<std::size_t>(n_sites_) +
                    static_cast<std::size_t>(site)];
    }
    std::vector<int> state(int k) const;
    // -1 when the occupation vector is not in this sector.
    int index_of(const std::vector<int>& occupation) const;
    int index_of_label(std::string_view label) const;
    // Text form n1 n2 ... with site 1 leftmost.
    std::string label(int k) const;
    bool is_bitstring(int k) const;
    // Integer code of a bit-string state, site 1 most significant bit.
    std::uint64_t bitstring_code(int k) const;

private:
    void enumerate(const std::vector<int>& caps);
    std::string key(int k) const;

    int n_sites_ = 0;
    int n_excitations_ = 0;
    int max_occupancy_ = 1;
    int dim_ = 0;
    std::vector<std::uint8_t> occ_;
    std::unordered_map<std::string, int> index_;
};

// H[a,b] = sum J_ij sqrt(n_i+1) sqrt(n_j) for single hops; diagonal
// sum eps_i n_i + sum U_i/2 n_i(n_i-1) (U dropped in the hardcore limit).
Eigen::MatrixXd build_sector_hamiltonian(const BoseHubbardParams& params, const FockSector& sector);

}  // namespace bgs
