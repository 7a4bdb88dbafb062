#pragma once

#include <istream>
#include <span>
#include <string>
#include <vector>

#include "roadozone/emission.hpp"
#include "roadozone/flux_model.hpp"

namespace roadozone {

struct TrajectoryRecord {
  long vehicle_id = 0;
  long frame = 0;
  double t_s = 0.0;
  double x_m = 0.0;
  double v_ms = 0.0;
  double a_ms2 = 0.0;
};

/// Vehicle samples sorted by (frame, vehicle_id).
struct TrajectorySet {
  std::vector<TrajectoryRecord> records;
  double a_m = 0.0;  ///< upstream end of the road
  double b_m = 0.0;  ///< downstream end of the road
  int lane_count = 1;
  double frame_dt_s = 0.1;

  /// Throws DomainError if a vehicle repeats a frame or positions leave [a_m, b_m].
  void validate() const;
  /// Distinct frame numbers in increasing order.
  std::vector<long> frames() const;
};

/// Reads delimited text with header `vehicle_id,frame,x_m,v_ms,a_ms2`, or raw NGSIM columns
/// (Vehicle_ID, Frame_ID, Local_Y, v_Vel, v_Acc; feet based). Time is frame * frame_dt_s.
/// Road extent defaults to the observed position range. Throws ConfigError on missing columns.
TrajectorySet read_trajectory_csv(std::istream& in, double frame_dt_s = 0.1);
TrajectorySet read_trajectory_file(const std::string& path, double frame_dt_s = 0.1);
void write_trajectory_csv(std::ostream& out, const TrajectorySet& traj);

/// Keeps samples inside [a_m, b_m] and drops the first and last `trim_s` seconds of the recording.
TrajectorySet filter_trajectories(const TrajectorySet& traj, double a_m, double b_m, double trim_s);

struct CellAggregate {
  double density_vehkm = 0.0;
  double mean_speed_kmh = 0.0;
  double flow_vehh = 0.0;
  std::size_t vehicles = 0;  ///< distinct vehicles seen in the cell
  std::size_t samples = 0;   ///< vehicle-frames in the cell
};

struct AggregateGrid {
  std::size_t nx = 0;
  std::size_t nt = 0;
  double x0_m = 0.0;
  double t0_s = 0.0;
  double cell_dx_m = 0.0;
  double cell_dt_s = 0.0;
  std::vector<CellAggregate> cells;  ///< index n * nx + i

  const CellAggregate& at(std::size_t i, std::size_t n) const { return cells[n * nx + i]; }
};

/// Space-time aggregation: density = distinct vehicles in the cell per cell length,
/// speed = mean of in-cell samples, flow = density * speed.
AggregateGrid aggregate_cells(const TrajectorySet& traj, double cell_dx_m, double cell_dt_s);

struct KdeFields {
  std::vector<double> rho_vehkm;
  std::vector<double> v_kmh;
};

/// Reflected Gaussian kernel estimate on the evaluation points `x_eval_m`.
/// Where the kernel sum vanishes the speed defaults to `v_free_kmh`.
KdeFields kde_fields(std::span<const double> x_m, std::span<const double> v_ms, double h_m, double a_m, double b_m,
                     std::span<const double> x_eval_m, double v_free_kmh);

/// Per-cell w with V(rho0, w) = v0, clamped to [w_L, w_R]; free-flow cells get w_R.
/// `clamped_count` (optional) receives the number of clamped cells.
std::vector<double> initial_w_from_fields(std::span<const double> rho0, std::span<const double> v0_kmh,
                                          const FluxModel& fm, std::size_t* clamped_count = nullptr);

struct CalibrationOptions {
  double v_max_min = 40.0, v_max_max = 120.0, v_max_step = 1.0;  ///< km/h
  double rho_f_step = 2.0;                                      ///< veh/km, searched over (0, rho_max/2)
  double coverage_target = 0.97;
  double free_band = 0.10;  ///< relative band around the free-flow branch
};

struct CalibrationResult {
  FluxModel model;
  double coverage = 0.0;
  double envelope_area = 0.0;
  std::size_t points = 0;
  bool feasible = false;
};

/// Fraction of (rho, Q) points inside the model's envelope: between f and g above rho_f, within the
/// relative band around the free branch below it.
double envelope_coverage(const AggregateGrid& cells, const FluxModel& fm, double free_band);

/// Grid search over (Vmax, rho_f) with rho_max = lanes / vehicle length. Among candidates reaching the
/// coverage target the tightest envelope wins; otherwise the best-coverage model is returned.
CalibrationResult calibrate_flux_model(const AggregateGrid& cells, int lanes, double veh_len_km,
                                       const CalibrationOptions& options = {});

/// Per-frame sum of single-vehicle rates, g/h.
std::vector<double> ground_truth_emissions(const TrajectorySet& traj, const EmissionCoefficients& coeffs);

struct EmissionValidationOptions {
  FluxModel flux = make_flux_model(65.0, 110.0, 800.0);
  double kde_h_m = 25.0;
  double dx_m = 5.0;
  bool discrete_acceleration = false;
};

struct EmissionValidation {
  std::vector<double> t_s;
  std::vector<double> e_true_g_h;
  std::vector<double> e_mod_g_h;
  double r = 0.0;
  double error = 0.0;
};

/// Initialises the traffic model from a kernel estimate of the first frame, advances it with one step per
/// frame and compares the modelled road emission with the ground truth.
EmissionValidation validate_emissions(const TrajectorySet& traj, const EmissionCoefficients& coeffs,
                                      const EmissionValidationOptions& options = {});

}  // namespace roadozone
