#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "uavsim/error.hpp"

namespace uavsim {

// Square-lattice metasurface stack. Layers are parallel and share one lattice.
struct SimGeometry {
  int layers = 0;            // L
  int atoms = 0;             // N, a perfect square
  int atoms_per_row = 0;     // n_max = sqrt(N)
  double thickness = 0.0;    // T_SIM, m
  double layer_spacing = 0.0;  // delta = T_SIM / L, m
  double atom_pitch = 0.0;   // d_e, m
  double atom_area = 0.0;    // d_x * d_y, m^2

  // Half-wavelength lattice: pitch lambda/2 and atom area (lambda/2)^2.
  static SimGeometry make(int layers, int atoms, double thickness, double wavelength) {
    if (layers < 1) throw DegenerateGeometry("SIM needs at least one layer");
    const int n_max = static_cast<int>(std::lround(std::sqrt(static_cast<double>(atoms))));
    if (atoms < 1 || n_max * n_max != atoms) throw DegenerateGeometry("atoms per layer must be a perfect square");
    if (!(thickness > 0.0) || !(wavelength > 0.0)) throw DegenerateGeometry("SIM thickness and wavelength must be positive");
    SimGeometry g;
    g.layers = layers;
    g.atoms = atoms;
    g.atoms_per_row = n_max;
    g.thickness = thickness;
    g.layer_spacing = thickness / layers;
    g.atom_pitch = wavelength / 2.0;
    g.atom_area = g.atom_pitch * g.atom_pitch;
    return g;
  }
};

struct AtomIndex {
  int x;
  int y;
  bool operator==(const AtomIndex&) const = default;
};

// Lattice coordinates of 1-based atom n (row-major, 1-based).
constexpr AtomIndex atom_index(int n, int n_max) {
  return {(n - 1) % n_max + 1, (n + n_max - 1) / n_max};
}

// In-plane distance between atoms n and n2 of the same layer.
inline double intra_layer_spacing(int n, int n2, const SimGeometry& g) {
  const auto a = atom_index(n, g.atoms_per_row);
  const auto b = atom_index(n2, g.atoms_per_row);
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return g.atom_pitch * std::sqrt(dx * dx + dy * dy);
}

// Distance between atom n2 on one layer and atom n on the next.
inline double inter_layer_distance(int n, int n2, const SimGeometry& g) {
  const double d = intra_layer_spacing(n, n2, g);
  return std::sqrt(d * d + g.layer_spacing * g.layer_spacing);
}

// Rayleigh-Sommerfeld coupling between two meta-atoms at distance d, where
// cos_psi is the cosine of the angle between propagation direction and the
// layer normal.
inline std::complex<double> diffraction_coefficient(double d, double cos_psi, double atom_area, double wavelength) {
  if (!(d > 0.0)) throw DegenerateGeometry("zero propagation distance between meta-atoms");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const std::complex<double> near_far(1.0 / (two_pi * d), -1.0 / wavelength);
  return (atom_area * cos_psi / d) * near_far * std::polar(1.0, two_pi * d / wavelength);
}

inline std::complex<double> diffraction_coefficient(double d, double cos_psi, const SimGeometry& g, double wavelength) {
  return diffraction_coefficient(d, cos_psi, g.atom_area, wavelength);
}

}  // namespace uavsim
