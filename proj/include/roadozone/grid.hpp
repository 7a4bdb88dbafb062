#pragma once

#include <cstddef>

namespace roadozone {

/// Uniform 1-D road discretisation. Cell i covers [i dx, (i+1) dx].
struct RoadGrid {
  double length_km = 3.0;
  std::size_t num_cells = 100;
  double dx_km = 0.03;
  double dt_s = 1.5;
  double horizon_s = 1800.0;

  static RoadGrid uniform(double length_km, std::size_t num_cells, double dt_s, double horizon_s) {
    return {length_km, num_cells, length_km / static_cast<double>(num_cells), dt_s, horizon_s};
  }

  double x_center_km(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx_km; }

  /// Number of steps needed to reach the horizon; the last one may be shorter than dt.
  std::size_t num_steps() const;

  void validate() const;
};

}  // namespace roadozone
