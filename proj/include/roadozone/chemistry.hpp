#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "roadozone/rosenbrock.hpp"
#include "roadozone/units.hpp"

namespace roadozone {

/// Photolysis / recombination / titration constants.
/// k1: 1/s, k2: cm^6 molecule^-2 s^-1, k3: cm^3 molecule^-1 s^-1; p is the NO2 mass fraction of emitted NOx.
struct RateConstants {
  double k1 = 0.02;
  double k2 = 6.09e-34;
  double k3 = 1.81e-14;
  double p = 0.15;

  void validate() const;
};

using ChemVector = Vec<kNumSpecies>;
using ChemMatrix = Mat<kNumSpecies>;

/// Species concentrations [O, O2, O3, NO, NO2] in molecule/cm^3.
struct ChemState {
  ChemVector psi{};
  double time_s = 0.0;
};

/// NOx source already split between NO and NO2, in molecule/(cm^3 s).
struct NoxSource {
  double no = 0.0;
  double no2 = 0.0;
};

/// Splits a NOx mass source (g/(km^3 s)) by mass, (1-p) to NO and p to NO2, then converts each part
/// with its own molar mass.
NoxSource split_nox_source(double g_per_km3_s, double p, const UnitContext& units);

/// Right-hand side of the five-species system. Throws DomainError on negative concentrations.
ChemVector chemistry_rhs(const ChemVector& psi, const NoxSource& s, const RateConstants& k);

/// Analytic Jacobian of chemistry_rhs with respect to psi.
ChemMatrix chemistry_jacobian(const ChemVector& psi, const RateConstants& k);

struct ChemIntegratorOptions {
  double rtol = 1e-6;
  double atol = 1.0;  ///< molecule/cm^3
  double h_min = 1e-12;
  /// Hold O2 fixed (its rate and Jacobian row are zeroed).
  bool freeze_o2 = false;
};

/// Piecewise-constant source: values[i] applies on [times[i], times[i+1]); the last value extends to +inf.
struct PiecewiseSource {
  std::vector<double> times;
  std::vector<NoxSource> values;

  NoxSource at(double t) const;
};

struct ChemTrajectory {
  std::vector<double> t;
  std::vector<ChemVector> psi;
  std::size_t rejected = 0;
};

/// Adaptive Rosenbrock 2(3) integration over t_span, restarting at every source breakpoint.
/// Every accepted step is recorded. Throws NumericalError when the step size underflows.
ChemTrajectory integrate_adaptive(const ChemVector& psi0, const PiecewiseSource& source, double t0, double t1,
                                  const ChemIntegratorOptions& options, const RateConstants& k);

/// Advances psi over [0, dt] with a constant source. `h_hint` warm-starts the step size and is updated.
void react(ChemVector& psi, const NoxSource& source, double dt, const ChemIntegratorOptions& options,
           const RateConstants& k, double& h_hint);

/// Photostationary imbalance k1 psi5 - k3 psi3 psi4 (molecule/(cm^3 s)).
double photostationary_residual(const ChemVector& psi, const RateConstants& k);

// ---- roadside box model -------------------------------------------------------------

struct RoadsideChemistryInput {
  std::vector<double> times_s;                    ///< traffic time grid t^0..t^N
  std::vector<std::vector<double>> source_g_km3_h;  ///< [time][cell] NOx concentration rate
  std::vector<ChemVector> psi0;                   ///< per cell, molecule/cm^3
  bool store_cells = true;                        ///< keep every per-cell state in the result
};

struct RoadsideChemistry {
  std::vector<double> times_s;
  /// [time][cell] concentrations in g/km^3; empty unless store_cells is set.
  std::vector<std::vector<ChemVector>> cells_g_km3;
  /// [time] road totals per species in g/km^3.
  std::vector<ChemVector> totals_g_km3;
};

/// Initial box state: O = O3 = 0, O2 given, NO/NO2 from the initial emission accumulated over `window_s`
/// inside the cell volume.
ChemVector initial_roadside_state(double emission_g_per_h, double cell_volume_km3, double o2_molecules_cm3,
                                  double window_s, double p, const UnitContext& units);

using RoadsideObserver = std::function<void(std::size_t n, std::span<const ChemVector> cells_g_km3)>;

/// Integrates each cell independently with the source held piecewise constant between samples.
/// `observe` sees the per-cell state (g/km^3) at every time level.
RoadsideChemistry run_roadside_chemistry(const RoadsideChemistryInput& input, const RateConstants& k,
                                         const ChemIntegratorOptions& options, const UnitContext& units,
                                         const RoadsideObserver& observe = {});

ChemVector to_g_per_km3(const ChemVector& molecules, const UnitContext& units);
ChemVector to_molecules(const ChemVector& g_per_km3, const UnitContext& units);

}  // namespace roadozone
