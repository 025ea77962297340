#pragma once

#include "bandgapsim/lattice_circuit.hpp"

namespace bgs::presets {

// Fitted lattice parameters of the 10-qubit device, tail-filled to `cutoff`,
// as an open chain of `n_cells` with one qubit in the middle cell.
CircuitSpec fitted_device(int n_cells = 50, int cutoff = 10);

// Total qubit capacitance the fitted device was anchored to (fF).
inline constexpr double kFittedCqSigma = 92.7;

}  // namespace bgs::presets
