#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace oracle {

Sobol SaltelliJansen(const Function& f, const std::vector<std::pair<double, double>>& bounds,
                     size_t n, uint64_t seed) {
  const size_t d = bounds.size();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> a(n, Point(d)), b(n, Point(d));
  for (size_t r = 0; r < n; ++r) {
    for (size_t j = 0; j < d; ++j) {
      a[r][j] = bounds[j].first + (bounds[j].second - bounds[j].first) * unit(gen);
      b[r][j] = bounds[j].first + (bounds[j].second - bounds[j].first) * unit(gen);
    }
  }
  std::vector<double> fa(n), fb(n);
  for (size_t r = 0; r < n; ++r) {
    fa[r] = f(a[r]);
    fb[r] = f(b[r]);
  }
  std::vector<double> all(fa);
  all.insert(all.end(), fb.begin(), fb.end());
  const double mean = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
  double var = 0.0;
  for (double v : all) var += (v - mean) * (v - mean);
  var /= static_cast<double>(all.size());

  Sobol out;
  for (size_t i = 0; i < d; ++i) {
    double first = 0.0;
    double total = 0.0;
    for (size_t r = 0; r < n; ++r) {
      Point ab = a[r];
      ab[i] = b[r][i];
      const double fab = f(ab);
      first += fb[r] * (fab - fa[r]);
      total += (fa[r] - fab) * (fa[r] - fab);
    }
    out.s1.push_back(first / static_cast<double>(n) / var);
    out.st.push_back(total / (2.0 * static_cast<double>(n)) / var);
  }
  return out;
}

double Ishigami(const Point& x, double a, double b) {
  return std::sin(x[0]) + a * std::sin(x[1]) * std::sin(x[1]) +
         b * std::pow(x[2], 4) * std::sin(x[0]);
}

Sobol IshigamiAnalytic(double a, double b) {
  const double pi = std::numbers::pi;
  const double pi4 = std::pow(pi, 4);
  const double pi8 = pi4 * pi4;
  const double v1 = 0.5 * std::pow(1.0 + b * pi4 / 5.0, 2);
  const double v2 = a * a / 8.0;
  const double v13 = b * b * pi8 * (1.0 / 18.0 - 1.0 / 50.0);
  const double v = v1 + v2 + v13;
  return {{v1 / v, v2 / v, 0.0}, {(v1 + v13) / v, v2 / v, v13 / v}};
}

std::vector<double> PermutationShapley(const std::function<double(uint32_t)>& value, int d) {
  std::vector<double> cache(size_t{1} << d, std::nan(""));
  auto v = [&](uint32_t mask) {
    if (std::isnan(cache[mask])) cache[mask] = value(mask);
    return cache[mask];
  };
  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(static_cast<size_t>(d), 0.0);
  double count = 0.0;
  do {
    uint32_t mask = 0;
    for (int player : order) {
      const double before = v(mask);
      mask |= 1u << player;
      phi[static_cast<size_t>(player)] += v(mask) - before;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& x : phi) x /= count;
  return phi;
}

namespace {

double Clamp(double p) { return std::min(std::max(p, 1e-12), 1.0 - 1e-12); }

}  // namespace

double NaiveRegression(const char* kind, const std::vector<double>& p, const std::vector<double>& t) {
  const std::string k = kind;
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double z = p[i] - t[i];
    if (k == "mae") sum += std::fabs(z);
    else if (k == "mse" || k == "rmse") sum += z * z;
    else if (k == "msle" || k == "rmsle") sum += std::pow(std::log(1.0 + p[i]) - std::log(1.0 + t[i]), 2);
    else if (k == "log_cosh") sum += std::log(std::cosh(z));
    else throw std::invalid_argument(k);
  }
  const double mean = sum / static_cast<double>(p.size());
  return k == "rmse" || k == "rmsle" ? std::sqrt(mean) : mean;
}

double NaiveClassification(const char* kind, const std::vector<double>& p,
                           const std::vector<double>& t, size_t k) {
  const std::string name = kind;
  const size_t n = p.size() / k;
  double sum = 0.0;
  double count = 0.0;
  for (size_t r = 0; r < n; ++r) {
    const double* pr = &p[r * k];
    const double* tr = &t[r * k];
    size_t cls = 0;
    for (size_t c = 0; c < k; ++c) {
      if (tr[c] == 1.0) cls = c;
    }
    const double f = 2.0 * pr[k - 1] - 1.0;
    const double y = tr[k - 1] == 1.0 ? 1.0 : -1.0;
    const double m = y * f;
    if (name == "hinge") {
      sum += m < 1.0 ? 1.0 - m : 0.0;
    } else if (name == "squared_hinge") {
      sum += m < 1.0 ? (1.0 - m) * (1.0 - m) : 0.0;
    } else if (name == "smoothed_hinge") {
      if (m < 0.0) sum += 0.5 - m;
      else if (m < 1.0) sum += (1.0 - m) * (1.0 - m) / 2.0;
    } else if (name == "modified_huber") {
      if (m < -1.0) sum += -4.0 * m;
      else if (m < 1.0) sum += (1.0 - m) * (1.0 - m);
    } else if (name == "ramp") {
      sum += m >= 1.0 ? 0.0 : (m <= -1.0 ? 2.0 : 1.0 - m);
    } else if (name == "cross_entropy") {
      sum += -std::log(Clamp(pr[cls]));
    } else if (name == "binary_cross_entropy") {
      if (k <= 2) {
        sum += -(tr[k - 1] * std::log(Clamp(pr[k - 1])) + (1.0 - tr[k - 1]) * std::log(1.0 - Clamp(pr[k - 1])));
      } else {
        for (size_t c = 0; c < k; ++c) {
          sum += -(tr[c] * std::log(Clamp(pr[c])) + (1.0 - tr[c]) * std::log(1.0 - Clamp(pr[c])));
        }
        count += static_cast<double>(k) - 1.0;
      }
    } else if (name == "nll") {
      sum += -pr[cls];
    } else {
      throw std::invalid_argument(name);
    }
    count += 1.0;
  }
  return sum / count;
}

void JacobiEigen(std::vector<double> a, size_t n, std::vector<double>* values,
                 std::vector<double>* vectors) {
  std::vector<double> v(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    }
    if (off < 1e-30) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return a[x * n + x] > a[y * n + y]; });
  values->assign(n, 0.0);
  vectors->assign(n * n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    (*values)[j] = a[order[j] * n + order[j]];
    for (size_t i = 0; i < n; ++i) (*vectors)[i * n + j] = v[i * n + order[j]];
  }
}

}  // namespace oracle
