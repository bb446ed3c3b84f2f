#include "pism/renderer.hpp"

#include <cmath>
#include <stdexcept>

#include "pism/csv.hpp"
#include "pism/kernels.hpp"

namespace pism {

void ComponentParams::validate() const {
  const std::size_t k = mu.size();
  if (sigma.size() != k || alpha.size() != k || scale.size() != k) {
    throw std::invalid_argument("ComponentParams: ragged parameter vectors");
  }
  if (k == 0) throw std::invalid_argument("ComponentParams: k must be >= 1");
  for (std::size_t i = 0; i < k; ++i) {
    if (!(sigma[i] > 0.0)) {
      throw std::invalid_argument("ComponentParams: sigma must be > 0");
    }
    if (!std::isfinite(mu[i]) || !std::isfinite(sigma[i]) ||
        !std::isfinite(alpha[i]) || !std::isfinite(scale[i])) {
      throw std::invalid_argument("ComponentParams: non-finite parameter");
    }
  }
}

ComponentParams ComponentParams::from_flat(const double* row, int k) {
  ComponentParams p;
  p.mu.assign(row, row + k);
  p.sigma.assign(row + k, row + 2 * k);
  p.alpha.assign(row + 2 * k, row + 3 * k);
  p.scale.assign(row + 3 * k, row + 4 * k);
  return p;
}

void ComponentParams::to_flat(double* row) const {
  const int k = count();
  for (int i = 0; i < k; ++i) {
    row[i] = mu[i];
    row[k + i] = sigma[i];
    row[2 * k + i] = alpha[i];
    row[3 * k + i] = scale[i];
  }
}

std::vector<double> render(const ComponentParams& params,
                           const std::vector<double>& band_coords) {
  params.validate();
  if (band_coords.empty()) throw std::invalid_argument("render: no bands");
  const int k = params.count();
  std::vector<double> flat(4 * static_cast<std::size_t>(k));
  params.to_flat(flat.data());
  std::vector<double> out(band_coords.size());
  kernels::serial::render_batch(flat.data(), 1, k, band_coords.data(),
                                static_cast<int>(band_coords.size()),
                                out.data());
  return out;
}

std::vector<double> render_with_gradient(const ComponentParams& params,
                                         const std::vector<double>& band_coords,
                                         Matrix* grad) {
  params.validate();
  if (band_coords.empty()) throw std::invalid_argument("render: no bands");
  const int k = params.count();
  const int bands = static_cast<int>(band_coords.size());
  std::vector<double> out(bands);
  *grad = Matrix(bands, 4 * k);
  for (int c = 0; c < bands; ++c) {
    double acc = 0.0;
    double* grow = grad->row(c);
    for (int i = 0; i < k; ++i) {
      detail::SkewPdfGrads g;
      const double f = detail::skew_pdf_grad(
          band_coords[c], params.mu[i], params.sigma[i], params.alpha[i], &g);
      acc += params.scale[i] * f;
      grow[i] = params.scale[i] * g.d_mu;
      grow[k + i] = params.scale[i] * g.d_sigma;
      grow[2 * k + i] = params.scale[i] * g.d_alpha;
      grow[3 * k + i] = f;  // S is linear in the scales
    }
    out[c] = acc;
  }
  return out;
}

std::vector<std::vector<double>> render_components(
    const ComponentParams& params, const std::vector<double>& band_coords) {
  params.validate();
  if (band_coords.empty()) throw std::invalid_argument("render: no bands");
  const int k = params.count();
  std::vector<std::vector<double>> curves(k);
  for (int i = 0; i < k; ++i) {
    curves[i].resize(band_coords.size());
    for (std::size_t c = 0; c < band_coords.size(); ++c) {
      curves[i][c] = params.scale[i] * skew_normal_pdf(band_coords[c],
                                                       params.mu[i],
                                                       params.sigma[i],
                                                       params.alpha[i]);
    }
  }
  return curves;
}

void write_components_csv(
    std::ostream& os,
    const std::vector<std::tuple<int, int, ComponentParams>>& pixels,
    const std::vector<double>& band_coords) {
  os << "pixel_row,pixel_col,component_index,band_coord,value\n";
  for (const auto& [row, col, params] : pixels) {
    const auto curves = render_components(params, band_coords);
    for (int i = 0; i < static_cast<int>(curves.size()); ++i) {
      for (std::size_t c = 0; c < band_coords.size(); ++c) {
        os << row << ',' << col << ',' << i << ','
           << csv::format_double(band_coords[c]) << ','
           << csv::format_double(curves[i][c]) << '\n';
      }
    }
  }
}

}  // namespace pism
