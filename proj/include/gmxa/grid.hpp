#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "gmxa/common.hpp"

namespace gmxa {

/// A sampled scalar field on a uniform box grid. Row-major storage (last
/// axis fastest); evaluation outside the sampled box returns 0.
struct GridFunction {
  int n = 0;
  std::vector<int> shape;
  Eigen::VectorXd origin;
  double h = 1.0;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(std::vector<int> shape_, Eigen::VectorXd origin_, double h_);

  static GridFunction from_function(std::vector<int> shape, Eigen::VectorXd origin, double h,
                                    const std::function<double(const Eigen::VectorXd&)>& fn);

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }

  std::int64_t flat_index(const std::vector<int>& idx) const;
  std::vector<int> multi_index(std::int64_t flat) const;
  Eigen::VectorXd point_of(std::int64_t flat) const;

  double& at(const std::vector<int>& idx) { return values[flat_index(idx)]; }
  double at(const std::vector<int>& idx) const { return values[flat_index(idx)]; }

  /// Multilinear interpolation; missing corners (outside the box) count as 0.
  double value_at(const Eigen::VectorXd& x) const;

  double cell_volume() const { return std::pow(h, n); }
  double lp_norm(double p) const;
  double max_abs() const;
  double integral() const;

  /// Binary format GMXA1: magic, u8 n, u32 shape[n], f64 origin[n], f64 h,
  /// f64 values, little-endian row-major.
  void save_gmxa(const std::string& path) const;
  static GridFunction load_gmxa(const std::string& path);

  /// CSV rows "i0,i1,...,value"; load fills missing entries with 0.
  void save_csv(const std::string& path) const;
  static GridFunction load_csv(const std::string& path, std::vector<int> shape,
                               Eigen::VectorXd origin, double h);
};

}  // namespace gmxa
