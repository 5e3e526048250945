#pragma once

#include <numbers>
#include <string>

namespace evatrap {

namespace constants {
inline constexpr double pi = std::numbers::pi;
inline constexpr double c = 299792458.0;              // m/s
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double epsilon0 = 8.8541878128e-12;  // F/m
inline constexpr double k_boltzmann = 1.380649e-23;   // J/K
inline constexpr double g = 9.80665;                  // m/s^2
inline constexpr double amu = 1.66053906660e-27;      // kg
}  // namespace constants

/// Two-line alkali model: ground state coupled to the D1 (P1/2) and D2 (P3/2)
/// excited states. Linewidths are decay rates in s^-1.
struct AtomSpecies {
  std::string name;
  double mass = 0.0;
  double d1_wavelength = 0.0;
  double d2_wavelength = 0.0;
  double gamma_d1 = 0.0;
  double gamma_d2 = 0.0;
  /// Dimensionless prefactor of the van der Waals coefficient, C3 = k * hbar * Gamma * (lambda/2pi)^3.
  double c3_prefactor = 0.113;

  void validate() const;
};

AtomSpecies rubidium87();

double angular_frequency(double wavelength);

inline double to_microkelvin(double joules) { return joules / constants::k_boltzmann * 1e6; }
inline double from_microkelvin(double uk) { return uk * 1e-6 * constants::k_boltzmann; }

/// (hbar k)^2 / 2m for a photon of the given vacuum wavelength.
double recoil_energy(const AtomSpecies& atom, double wavelength);

/// Fine-structure weighted Gamma/Delta with Delta = omega_light - omega_line.
/// Negative for light red of both lines, positive for light blue of both.
double fine_structure_detuning_factor(const AtomSpecies& atom, double wavelength);

/// Weighted sum of squared ratios used for photon scattering rates.
double fine_structure_scattering_factor(const AtomSpecies& atom, double wavelength);

/// Smallest |Delta| (rad/s) to either line.
double min_detuning(const AtomSpecies& atom, double wavelength);

/// 3 pi c^2 / (2 omega0^3) with omega0 the D2 line frequency.
double dipole_prefactor(const AtomSpecies& atom);

}  // namespace evatrap
