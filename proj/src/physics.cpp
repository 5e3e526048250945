#include "evatrap/physics.hpp"

#include <algorithm>
#include <cmath>

#include "evatrap/errors.hpp"

namespace evatrap {

using namespace constants;

void AtomSpecies::validate() const {
  if (!(mass > 0.0)) throw ConfigError("atom mass must be positive");
  if (!(gamma_d1 > 0.0) || !(gamma_d2 > 0.0)) throw ConfigError("atom linewidths must be positive");
  if (!(d2_wavelength > 0.0) || !(d2_wavelength < d1_wavelength))
    throw ConfigError("atom D2 wavelength must be positive and shorter than D1");
}

AtomSpecies rubidium87() {
  AtomSpecies rb;
  rb.name = "Rb87";
  rb.mass = 86.909180527 * amu;
  rb.d1_wavelength = 794.978851156e-9;
  rb.d2_wavelength = 780.241209686e-9;
  // Decay rates in s^-1 (2 pi x 5.75 MHz and 2 pi x 6.07 MHz).
  rb.gamma_d1 = 36.1e6;
  rb.gamma_d2 = 38.1e6;
  return rb;
}

double angular_frequency(double wavelength) {
  if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
  return 2.0 * pi * c / wavelength;
}

double recoil_energy(const AtomSpecies& atom, double wavelength) {
  if (!(wavelength > 0.0)) throw DomainError("recoil energy needs a positive wavelength");
  const double p = hbar * 2.0 * pi / wavelength;
  return p * p / (2.0 * atom.mass);
}

namespace {

struct Detunings {
  double d1;
  double d2;
};

Detunings detunings(const AtomSpecies& atom, double wavelength) {
  const double w = angular_frequency(wavelength);
  Detunings d{w - angular_frequency(atom.d1_wavelength), w - angular_frequency(atom.d2_wavelength)};
  if (d.d1 == 0.0 || d.d2 == 0.0) throw ResonanceError("wavelength sits exactly on an atomic line");
  return d;
}

}  // namespace

double fine_structure_detuning_factor(const AtomSpecies& atom, double wavelength) {
  const auto d = detunings(atom, wavelength);
  return atom.gamma_d1 / (3.0 * d.d1) + 2.0 * atom.gamma_d2 / (3.0 * d.d2);
}

double fine_structure_scattering_factor(const AtomSpecies& atom, double wavelength) {
  const auto d = detunings(atom, wavelength);
  return atom.gamma_d1 * atom.gamma_d1 / (3.0 * d.d1 * d.d1) +
         2.0 * atom.gamma_d2 * atom.gamma_d2 / (3.0 * d.d2 * d.d2);
}

double min_detuning(const AtomSpecies& atom, double wavelength) {
  const double w = angular_frequency(wavelength);
  return std::min(std::abs(w - angular_frequency(atom.d1_wavelength)),
                  std::abs(w - angular_frequency(atom.d2_wavelength)));
}

double dipole_prefactor(const AtomSpecies& atom) {
  const double w0 = angular_frequency(atom.d2_wavelength);
  return 3.0 * pi * c * c / (2.0 * w0 * w0 * w0);
}

}  // namespace evatrap
