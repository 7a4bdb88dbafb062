#pragma once

#include <array>
#include <cstddef>

namespace roadozone {

/// Chemical species tracked by the box and dispersion models, in state-vector order.
enum class Species : std::size_t { O = 0, O2 = 1, O3 = 2, NO = 3, NO2 = 4 };

inline constexpr std::size_t kNumSpecies = 5;
inline constexpr std::array<const char*, kNumSpecies> kSpeciesNames = {"O", "O2", "O3", "NO", "NO2"};

constexpr std::size_t index(Species s) { return static_cast<std::size_t>(s); }

namespace units {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kMetersPerKm = 1000.0;
inline constexpr double kCm3PerKm3 = 1.0e15;
inline constexpr double kM3PerKm3 = 1.0e9;
inline constexpr double kMetersPerFoot = 0.3048;

constexpr double kmh_to_ms(double v) { return v / 3.6; }
constexpr double ms_to_kmh(double v) { return v * 3.6; }
constexpr double hours(double seconds) { return seconds / kSecondsPerHour; }
/// km/h^2 -> m/s^2
constexpr double kmh2_to_ms2(double a) { return a * kMetersPerKm / (kSecondsPerHour * kSecondsPerHour); }
/// km^2/h -> m^2/s
constexpr double km2h_to_m2s(double mu) { return mu * 1.0e6 / kSecondsPerHour; }

}  // namespace units

/// Molar masses and Avogadro's constant used for every mass <-> molecule-count conversion.
struct UnitContext {
  std::array<double, kNumSpecies> molar_mass_g_per_mol{16.0, 32.0, 48.0, 30.0, 46.0};
  double avogadro = 6.02214076e23;

  double molar_mass(Species s) const { return molar_mass_g_per_mol[index(s)]; }

  /// g/km^3 -> molecule/cm^3
  double to_molecules_per_cm3(double g_per_km3, Species s) const {
    return g_per_km3 / units::kCm3PerKm3 / molar_mass(s) * avogadro;
  }

  /// molecule/cm^3 -> g/km^3
  double to_g_per_km3(double molecules_per_cm3, Species s) const {
    return molecules_per_cm3 / avogadro * molar_mass(s) * units::kCm3PerKm3;
  }

  void validate() const;
};

}  // namespace roadozone
