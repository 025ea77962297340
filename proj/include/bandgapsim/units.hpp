#pragma once

// Unit conventions: angular frequencies in rad/ns, capacitances in fF,
// inductances in nH (mutual inductances arrive in pH and are converted on use).

#include <numbers>

namespace bgs::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA exact values (SI)
inline constexpr double kElectronCharge = 1.602176634e-19;
inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kHbar = kPlanck / kTwoPi;

inline constexpr double ghz_to_radns(double f_ghz) { return kTwoPi * f_ghz; }
inline constexpr double radns_to_ghz(double w) { return w / kTwoPi; }
inline constexpr double mhz_to_radns(double f_mhz) { return kTwoPi * f_mhz * 1e-3; }
inline constexpr double radns_to_mhz(double w) { return w / kTwoPi * 1e3; }

// 1/sqrt(nH * fF) expressed in rad/ns
inline constexpr double kInvSqrtNhFf = 1e3;

inline constexpr double pH_to_nH(double m) { return m * 1e-3; }

// E_C/h in GHz for a capacitance inverse given in 1/fF: e^2 / (2 h C)
double charging_energy_ghz(double inv_capacitance_per_fF);

// Josephson inductance inverse (1/nH) for E_J/h in GHz: (2e/hbar)^2 h E_J
double inverse_josephson_inductance(double ej_ghz);

}  // namespace bgs::units
