#include "gmxa/grid.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace gmxa {

GridFunction::GridFunction(std::vector<int> shape_, Eigen::VectorXd origin_, double h_)
    : n(static_cast<int>(shape_.size())), shape(std::move(shape_)), origin(std::move(origin_)), h(h_) {
  require(n >= 1, "GridFunction: empty shape");
  require(origin.size() == n, "GridFunction: origin dimension mismatch");
  require(h > 0, "GridFunction: spacing must be positive");
  std::int64_t total = 1;
  for (int s : shape) {
    require(s >= 1, "GridFunction: axis with no samples");
    total *= s;
  }
  values.assign(total, 0.0);
}

GridFunction GridFunction::from_function(std::vector<int> shape, Eigen::VectorXd origin, double h,
                                         const std::function<double(const Eigen::VectorXd&)>& fn) {
  GridFunction g(std::move(shape), std::move(origin), h);
  parallel_for(g.size(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) g.values[i] = fn(g.point_of(i));
  });
  return g;
}

std::int64_t GridFunction::flat_index(const std::vector<int>& idx) const {
  require(static_cast<int>(idx.size()) == n, "flat_index: rank mismatch");
  std::int64_t flat = 0;
  for (int a = 0; a < n; ++a) {
    require(idx[a] >= 0 && idx[a] < shape[a], "flat_index: out of range");
    flat = flat * shape[a] + idx[a];
  }
  return flat;
}

std::vector<int> GridFunction::multi_index(std::int64_t flat) const {
  std::vector<int> idx(n);
  for (int a = n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % shape[a]);
    flat /= shape[a];
  }
  return idx;
}

Eigen::VectorXd GridFunction::point_of(std::int64_t flat) const {
  Eigen::VectorXd x(n);
  for (int a = n - 1; a >= 0; --a) {
    x(a) = origin(a) + h * static_cast<double>(flat % shape[a]);
    flat /= shape[a];
  }
  return x;
}

double GridFunction::value_at(const Eigen::VectorXd& x) const {
  require(x.size() == n, "value_at: dimension mismatch");
  // cell coordinates
  double frac[8];
  std::int64_t base[8];
  require(n <= 8, "value_at: rank > 8 unsupported");
  for (int a = 0; a < n; ++a) {
    double u = (x(a) - origin(a)) / h;
    double fl = std::floor(u);
    base[a] = static_cast<std::int64_t>(fl);
    frac[a] = u - fl;
  }
  double acc = 0.0;
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::int64_t flat = 0;
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      int bit = (c >> a) & 1;
      std::int64_t ia = base[a] + bit;
      w *= bit ? frac[a] : 1.0 - frac[a];
      if (ia < 0 || ia >= shape[a]) {
        inside = false;
        break;
      }
      flat = flat * shape[a] + ia;
    }
    if (inside && w != 0.0) acc += w * values[flat];
  }
  return acc;
}

double GridFunction::lp_norm(double p) const {
  require(p >= 1, "lp_norm: need p >= 1");
  double sum = parallel_sum(size(), [&](std::int64_t i) {
    return std::pow(std::abs(values[i]), p);
  });
  return std::pow(sum * cell_volume(), 1.0 / p);
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double GridFunction::integral() const {
  double sum = parallel_sum(size(), [&](std::int64_t i) { return values[i]; });
  return sum * cell_volume();
}

void GridFunction::save_gmxa(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "save_gmxa: cannot open " + path);
  os.write("GMXA1", 5);
  std::uint8_t rank = static_cast<std::uint8_t>(n);
  os.write(reinterpret_cast<const char*>(&rank), 1);
  for (int s : shape) {
    std::uint32_t u = static_cast<std::uint32_t>(s);
    os.write(reinterpret_cast<const char*>(&u), 4);
  }
  for (int a = 0; a < n; ++a) {
    double o = origin(a);
    os.write(reinterpret_cast<const char*>(&o), 8);
  }
  os.write(reinterpret_cast<const char*>(&h), 8);
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * 8));
  require(static_cast<bool>(os), "save_gmxa: write failed for " + path);
}

GridFunction GridFunction::load_gmxa(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "load_gmxa: cannot open " + path);
  char magic[5];
  is.read(magic, 5);
  require(is && std::memcmp(magic, "GMXA1", 5) == 0, "load_gmxa: bad magic");
  std::uint8_t rank = 0;
  is.read(reinterpret_cast<char*>(&rank), 1);
  std::vector<int> shape(rank);
  for (int a = 0; a < rank; ++a) {
    std::uint32_t u = 0;
    is.read(reinterpret_cast<char*>(&u), 4);
    shape[a] = static_cast<int>(u);
  }
  Eigen::VectorXd origin(rank);
  for (int a = 0; a < rank; ++a) {
    double o = 0;
    is.read(reinterpret_cast<char*>(&o), 8);
    origin(a) = o;
  }
  double h = 0;
  is.read(reinterpret_cast<char*>(&h), 8);
  GridFunction g(shape, origin, h);
  is.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.size() * 8));
  require(static_cast<bool>(is), "load_gmxa: truncated file");
  return g;
}

void GridFunction::save_csv(const std::string& path) const {
  std::ofstream os(path);
  require(static_cast<bool>(os), "save_csv: cannot open " + path);
  os.precision(17);
  for (std::int64_t i = 0; i < size(); ++i) {
    auto idx = multi_index(i);
    for (int a = 0; a < n; ++a) os << idx[a] << ',';
    os << values[i] << '\n';
  }
}

GridFunction GridFunction::load_csv(const std::string& path, std::vector<int> shape,
                                    Eigen::VectorXd origin, double h) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "load_csv: cannot open " + path);
  GridFunction g(std::move(shape), std::move(origin), h);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<int> idx(g.n);
    std::string tok;
    for (int a = 0; a < g.n; ++a) {
      require(static_cast<bool>(std::getline(ss, tok, ',')), "load_csv: short row");
      idx[a] = std::stoi(tok);
    }
    require(static_cast<bool>(std::getline(ss, tok)), "load_csv: missing value");
    g.at(idx) = std::stod(tok);
  }
  return g;
}

}  // namespace gmxa
