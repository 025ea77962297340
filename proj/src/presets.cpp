#include "bandgapsim/presets.hpp"

namespace bgs::presets {

CircuitSpec fitted_device(int n_cells, int cutoff) {
    CircuitSpec s;
    s.n_cells = n_cells;
    s.L0 = 2.04;
    s.C0 = 242.19;
    s.Ct = {60.17, 0.542};
    s.M = {-18.1, 13.5, -1.09, 0.438};
    s.Cg = {9.19, 0.368};
    s.Cqq = {0.0101};
    // interior qubit: C_qSigma = Cq + C_g,0 + 2 C_g,1 + 2 C_qq,1
    s.Cq = kFittedCqSigma - s.Cg[0] - 2.0 * s.Cg[1] - 2.0 * s.Cqq[0];
    s.qubit_cells = {n_cells / 2};
    s.EJ = {15.0};
    return longrange_tail_fill(s, cutoff);
}

}  // namespace bgs::presets
