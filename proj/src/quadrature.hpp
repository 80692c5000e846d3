#pragma once

#include <functional>
#include <vector>

namespace crbeam {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1].
const QuadRule& gauss_legendre(int order);

/// Gauss-Laguerre rule for integrals of f(x) e^{-x} over [0, inf).
const QuadRule& gauss_laguerre(int order);

/// Composite Gauss-Legendre integration of f over [a, b] with `panels` equal panels.
double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        int panels, int order = 8);

} // namespace crbeam
