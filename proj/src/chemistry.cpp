#include "roadozone/chemistry.hpp"

#include <algorithm>
#include <sstream>

#include "roadozone/error.hpp"

namespace roadozone {
namespace {

constexpr std::size_t O = index(Species::O);
constexpr std::size_t O2 = index(Species::O2);
constexpr std::size_t O3 = index(Species::O3);
constexpr std::size_t NO = index(Species::NO);
constexpr std::size_t NO2 = index(Species::NO2);

ChemVector rhs_unchecked(const ChemVector& psi, const NoxSource& s, const RateConstants& k, bool freeze_o2) {
  const double r1 = k.k1 * psi[NO2];
  const double r2 = k.k2 * psi[O] * psi[O2] * psi[O2];
  const double r3 = k.k3 * psi[O3] * psi[NO];
  ChemVector d;
  d[O] = r1 - r2;
  d[O2] = freeze_o2 ? 0.0 : r3 - r2;
  d[O3] = r2 - r3;
  d[NO] = r1 - r3 + s.no;
  d[NO2] = r3 - r1 + s.no2;
  return d;
}

ChemMatrix jacobian_impl(const ChemVector& psi, const RateConstants& k, bool freeze_o2) {
  ChemMatrix j{};
  const double dr2_dO = k.k2 * psi[O2] * psi[O2];
  const double dr2_dO2 = 2.0 * k.k2 * psi[O] * psi[O2];
  const double dr3_dO3 = k.k3 * psi[NO];
  const double dr3_dNO = k.k3 * psi[O3];
  const double dr1_dNO2 = k.k1;

  j[O][O] = -dr2_dO;
  j[O][O2] = -dr2_dO2;
  j[O][NO2] = dr1_dNO2;

  if (!freeze_o2) {
    j[O2][O] = -dr2_dO;
    j[O2][O2] = -dr2_dO2;
    j[O2][O3] = dr3_dO3;
    j[O2][NO] = dr3_dNO;
  }

  j[O3][O] = dr2_dO;
  j[O3][O2] = dr2_dO2;
  j[O3][O3] = -dr3_dO3;
  j[O3][NO] = -dr3_dNO;

  j[NO][O3] = -dr3_dO3;
  j[NO][NO] = -dr3_dNO;
  j[NO][NO2] = dr1_dNO2;

  j[NO2][O3] = dr3_dO3;
  j[NO2][NO] = dr3_dNO;
  j[NO2][NO2] = -dr1_dNO2;
  return j;
}

RosenbrockOptions to_rosenbrock(const ChemIntegratorOptions& o) {
  RosenbrockOptions r;
  r.rtol = o.rtol;
  r.atol = o.atol;
  r.h_min = o.h_min;
  r.nonnegative = true;
  return r;
}

}  // namespace

void RateConstants::validate() const {
  if (!(k1 > 0.0 && k2 > 0.0 && k3 > 0.0)) throw ConfigError("chemistry.rate_constants", "k1, k2, k3 must be positive");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("chemistry.p_no2", "NO2 fraction must lie in (0, 1)");
}

void UnitContext::validate() const {
  for (double m : molar_mass_g_per_mol) {
    if (!(m > 0.0)) throw ConfigError("units.molar_mass", "molar masses must be positive");
  }
  if (!(avogadro > 0.0)) throw ConfigError("units.avogadro", "must be positive");
}

NoxSource split_nox_source(double g_per_km3_s, double p, const UnitContext& units) {
  return {units.to_molecules_per_cm3((1.0 - p) * g_per_km3_s, Species::NO),
          units.to_molecules_per_cm3(p * g_per_km3_s, Species::NO2)};
}

ChemVector chemistry_rhs(const ChemVector& psi, const NoxSource& s, const RateConstants& k) {
  for (std::size_t i = 0; i < kNumSpecies; ++i) {
    if (psi[i] < 0.0) {
      std::ostringstream os;
      os << "chemistry_rhs: negative concentration for " << kSpeciesNames[i] << " (" << psi[i] << ")";
      throw DomainError(os.str());
    }
  }
  return rhs_unchecked(psi, s, k, false);
}

ChemMatrix chemistry_jacobian(const ChemVector& psi, const RateConstants& k) { return jacobian_impl(psi, k, false); }

double photostationary_residual(const ChemVector& psi, const RateConstants& k) {
  return k.k1 * psi[NO2] - k.k3 * psi[O3] * psi[NO];
}

NoxSource PiecewiseSource::at(double t) const {
  if (values.empty()) return {};
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return values.front();
  const auto idx = static_cast<std::size_t>(std::distance(times.begin(), it) - 1);
  return values[std::min(idx, values.size() - 1)];
}

void react(ChemVector& psi, const NoxSource& source, double dt, const ChemIntegratorOptions& options,
           const RateConstants& k, double& h_hint) {
  RosenbrockOptions ro = to_rosenbrock(options);
  ro.h_init = h_hint;
  const bool freeze = options.freeze_o2;
  const auto stats = rosenbrock23<kNumSpecies>([&](const ChemVector& y) { return rhs_unchecked(y, source, k, freeze); },
                                               [&](const ChemVector& y) { return jacobian_impl(y, k, freeze); }, psi,
                                               0.0, dt, ro);
  h_hint = stats.next_h;
}

ChemTrajectory integrate_adaptive(const ChemVector& psi0, const PiecewiseSource& source, double t0, double t1,
                                  const ChemIntegratorOptions& options, const RateConstants& k) {
  if (!(options.rtol > 0.0 && options.atol > 0.0)) throw DomainError("integrate_adaptive: tolerances must be positive");
  ChemTrajectory traj;
  traj.t.push_back(t0);
  traj.psi.push_back(psi0);

  // Segment boundaries: t0, every breakpoint inside (t0, t1), t1.
  std::vector<double> cuts{t0};
  for (double b : source.times) {
    if (b > t0 && b < t1) cuts.push_back(b);
  }
  cuts.push_back(t1);

  ChemVector y = psi0;
  RosenbrockOptions ro = to_rosenbrock(options);
  const bool freeze = options.freeze_o2;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const NoxSource src = source.at(cuts[s]);
    const auto stats = rosenbrock23<kNumSpecies>(
        [&](const ChemVector& v) { return rhs_unchecked(v, src, k, freeze); },
        [&](const ChemVector& v) { return jacobian_impl(v, k, freeze); }, y, cuts[s], cuts[s + 1], ro,
        [&](double t, const ChemVector& v) {
          traj.t.push_back(t);
          traj.psi.push_back(v);
        });
    traj.rejected += stats.rejected;
    ro.h_init = stats.next_h;
  }
  return traj;
}

ChemVector to_g_per_km3(const ChemVector& molecules, const UnitContext& units) {
  ChemVector out;
  for (std::size_t i = 0; i < kNumSpecies; ++i) out[i] = units.to_g_per_km3(molecules[i], static_cast<Species>(i));
  return out;
}

ChemVector to_molecules(const ChemVector& g_per_km3, const UnitContext& units) {
  ChemVector out;
  for (std::size_t i = 0; i < kNumSpecies; ++i) {
    out[i] = units.to_molecules_per_cm3(g_per_km3[i], static_cast<Species>(i));
  }
  return out;
}

ChemVector initial_roadside_state(double emission_g_per_h, double cell_volume_km3, double o2_molecules_cm3,
                                  double window_s, double p, const UnitContext& units) {
  const double nox_g_per_km3 = emission_g_per_h / units::kSecondsPerHour * window_s / cell_volume_km3;
  ChemVector psi{};
  psi[O2] = o2_molecules_cm3;
  psi[NO] = units.to_molecules_per_cm3((1.0 - p) * nox_g_per_km3, Species::NO);
  psi[NO2] = units.to_molecules_per_cm3(p * nox_g_per_km3, Species::NO2);
  return psi;
}

RoadsideChemistry run_roadside_chemistry(const RoadsideChemistryInput& input, const RateConstants& k,
                                         const ChemIntegratorOptions& options, const UnitContext& units,
                                         const RoadsideObserver& observe) {
  const std::size_t nt = input.times_s.size();
  const std::size_t ncell = input.psi0.size();
  if (input.source_g_km3_h.size() != nt) throw DomainError("run_roadside_chemistry: source/time length mismatch");

  RoadsideChemistry out;
  out.times_s = input.times_s;
  out.totals_g_km3.assign(nt, ChemVector{});
  if (input.store_cells) out.cells_g_km3.reserve(nt);

  std::vector<ChemVector> y = input.psi0;
  std::vector<double> h(ncell, 0.0);
  std::vector<ChemVector> mass(ncell);
  auto record = [&](std::size_t n) {
    for (std::size_t c = 0; c < ncell; ++c) {
      mass[c] = to_g_per_km3(y[c], units);
      for (std::size_t s = 0; s < kNumSpecies; ++s) out.totals_g_km3[n][s] += mass[c][s];
    }
    if (input.store_cells) out.cells_g_km3.push_back(mass);
    if (observe) observe(n, mass);
  };
  if (nt == 0) return out;
  record(0);

  RosenbrockOptions ro = to_rosenbrock(options);
  const bool freeze = options.freeze_o2;
  for (std::size_t n = 0; n + 1 < nt; ++n) {
    if (input.source_g_km3_h[n].size() != ncell) throw DomainError("run_roadside_chemistry: source width mismatch");
    for (std::size_t c = 0; c < ncell; ++c) {
      const NoxSource src = split_nox_source(input.source_g_km3_h[n][c] / units::kSecondsPerHour, k.p, units);
      ro.h_init = h[c];
      try {
        const auto stats = rosenbrock23<kNumSpecies>(
            [&](const ChemVector& v) { return rhs_unchecked(v, src, k, freeze); },
            [&](const ChemVector& v) { return jacobian_impl(v, k, freeze); }, y[c], input.times_s[n],
            input.times_s[n + 1], ro);
        h[c] = stats.next_h;
      } catch (const NumericalError& e) {
        std::ostringstream os;
        os << "cell " << c << ", interval " << n << ": " << e.what();
        throw NumericalError(os.str());
      }
    }
    record(n + 1);
  }
  return out;
}

}  // namespace roadozone
