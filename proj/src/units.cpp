#include "bandgapsim/units.hpp"

namespace bgs::units {

double charging_energy_ghz(double inv_capacitance_per_fF) {
    const double e2_over_2h = kElectronCharge * kElectronCharge / (2.0 * kPlanck);  // F*Hz
    return e2_over_2h * 1e15 * 1e-9 * inv_capacitance_per_fF;
}

double inverse_josephson_inductance(double ej_ghz) {
    const double k = 2.0 * kElectronCharge / kHbar;
    return k * k * kPlanck * ej_ghz * 1e9 * 1e-9;
}

}  // namespace bgs::units
