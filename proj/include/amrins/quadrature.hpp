#pragma once

#include <functional>

namespace amrins {

/// Cell average of f over [x0,x0+h]x[y0,y0+h] by tensor-product Boole
/// quadrature (5 points per axis, exact through degree 5, O(h^6) error).
double cellAverage(const std::function<double(double, double)>& f, double x0,
                   double y0, double h);

/// Face average along a segment of length h: axis 0 means the segment runs
/// in y at fixed x (an x-face), axis 1 the reverse.
double faceAverage(const std::function<double(double, double)>& f, int axis,
                   double xlo, double ylo, double h);

/// 1-D Boole average of g over [s0, s0+h].
double lineAverage(const std::function<double(double)>& g, double s0, double h);

}  // namespace amrins
