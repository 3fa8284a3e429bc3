#include "amrins/quadrature.hpp"

namespace amrins {

namespace {
constexpr double kW[5] = {7.0 / 90.0, 32.0 / 90.0, 12.0 / 90.0, 32.0 / 90.0,
                          7.0 / 90.0};
constexpr double kX[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
}  // namespace

double cellAverage(const std::function<double(double, double)>& f, double x0,
                   double y0, double h) {
  double s = 0.0;
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i)
      s += kW[i] * kW[j] * f(x0 + kX[i] * h, y0 + kX[j] * h);
  return s;
}

double faceAverage(const std::function<double(double, double)>& f, int axis,
                   double xlo, double ylo, double h) {
  double s = 0.0;
  for (int i = 0; i < 5; ++i)
    s += kW[i] * (axis == 0 ? f(xlo, ylo + kX[i] * h) : f(xlo + kX[i] * h, ylo));
  return s;
}

double lineAverage(const std::function<double(double)>& g, double s0, double h) {
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += kW[i] * g(s0 + kX[i] * h);
  return s;
}

}  // namespace amrins
