#ifndef CURVESCOPE_GAMFIT_HPP
#define CURVESCOPE_GAMFIT_HPP

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace curvescope::gamfit {

// Smoothing configuration: degree-1 B-spline (hat) basis with n_splines
// uniformly spaced centers over [min x, max x], second-difference penalty on
// the coefficients, lambda picked from the grid by GCV.
struct GamConfig {
  int n_splines = 25;
  std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
};

// Piecewise-linear fitted curve. Knots are implicit: n uniform hat centers
// spanning [x_min, x_max].
struct FittedCurve {
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<double> coefficients;  // hat weights = values at the centers
  double lambda = 0.0;
  double gcv = 0.0;  // GCV score at the selected lambda

  // Evaluation clamps x outside the domain to the boundary value.
  double evaluate(double x) const;
  std::vector<double> evaluate(std::span<const double> xs) const;
  double min_on(std::span<const double> xs) const;
};

struct Extremum {
  std::size_t index = 0;
  double position = 0.0;
  double value = 0.0;
  bool is_max = false;
};

// Penalized least-squares fit of y over x (typically log10 steps).
// Requires at least n_splines + 2 distinct x values, all finite.
FittedCurve fit_gam(std::span<const double> x, std::span<const double> y,
                    const GamConfig& config = {});

// Shares the basis, normal-matrix factorizations, and hat-trace across all
// curves on a common x grid; fit() is bit-identical to fit_gam on the same
// inputs.
class BatchGamFitter {
public:
  BatchGamFitter(std::span<const double> x, const GamConfig& config = {});
  ~BatchGamFitter();
  BatchGamFitter(BatchGamFitter&&) noexcept;

  FittedCurve fit(std::span<const double> y) const;

  // One fit per row of Y (row-major n_curves x |x|). The parallel kernel
  // writes independent slots; fit_all_serial is the reference path.
  std::vector<FittedCurve> fit_all_serial(std::span<const double> Y,
                                          std::size_t n_curves) const;
  std::vector<FittedCurve> fit_all(std::span<const double> Y,
                                   std::size_t n_curves) const;

  std::size_t n_points() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Relative extrema of the evaluated sequence, alternating max/min. Plateaus
// collapse to their first index; both endpoints are extrema.
std::vector<Extremum> extrema_of_values(std::span<const double> values,
                                        std::span<const double> positions);
std::vector<Extremum> extrema_on_grid(const FittedCurve& curve,
                                      std::span<const double> grid);

// GAMF1 container: fitted curves aligned to a curve file's example order.
struct FittedCurveSet {
  int n_splines = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> example_ids;
  std::vector<FittedCurve> curves;
};

void write_gams(const std::string& path, const FittedCurveSet& set);
FittedCurveSet read_gams(const std::string& path);

constexpr const char* kGamMagic = "GAMF1";

}  // namespace curvescope::gamfit

#endif
