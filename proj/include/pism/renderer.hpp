#pragma once

#include <ostream>
#include <tuple>
#include <vector>

#include "pism/skew_normal.hpp"
#include "pism/tensor.hpp"

namespace pism {

// One pixel's latent: k skew-normal components. mu/sigma are in band-index
// units, alpha is dimensionless, scale is signed reflectance.
struct ComponentParams {
  std::vector<double> mu, sigma, alpha, scale;

  int count() const { return static_cast<int>(mu.size()); }
  void validate() const;  // sigma > 0, all finite, equal lengths

  // flat 4k row, layout [mu | sigma | alpha | scale]
  static ComponentParams from_flat(const double* row, int k);
  void to_flat(double* row) const;
};

// spectrum[c] = sum_i scale_i * f(coords[c] | mu_i, sigma_i, alpha_i)
std::vector<double> render(const ComponentParams& params,
                           const std::vector<double>& band_coords);

// Spectrum plus analytic partials of every sample w.r.t. every parameter.
// grad is bands x 4k with the flat-row column layout.
std::vector<double> render_with_gradient(const ComponentParams& params,
                                         const std::vector<double>& band_coords,
                                         Matrix* grad);

// Per-component curves: curve i = scale_i * f(. | mu_i, sigma_i, alpha_i).
// Summing the k curves reproduces render().
std::vector<std::vector<double>> render_components(
    const ComponentParams& params, const std::vector<double>& band_coords);

// CSV dump, columns: pixel_row,pixel_col,component_index,band_coord,value
void write_components_csv(
    std::ostream& os,
    const std::vector<std::tuple<int, int, ComponentParams>>& pixels,
    const std::vector<double>& band_coords);

}  // namespace pism
