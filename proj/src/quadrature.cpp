#include "quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace crbeam {
namespace {

// Newton iteration on the Legendre polynomial recurrence; nodes are the roots
// of P_n, weights 2 / ((1-x^2) P_n'(x)^2). Standard construction, symmetric.
QuadRule build_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        long double x = std::cos(M_PI * (i + 0.75L) / (n + 0.5L));
        long double pp = 0.0L;
        for (int iter = 0; iter < 100; ++iter) {
            long double p0 = 1.0L, p1 = 0.0L;
            for (int j = 0; j < n; ++j) {
                long double p2 = p1;
                p1 = p0;
                p0 = ((2.0L * j + 1.0L) * x * p1 - j * p2) / (j + 1.0L);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0L);
            long double dx = p0 / pp;
            x -= dx;
            if (std::fabs((double)dx) < 1e-17) break;
        }
        rule.nodes[i] = (double)(-x);
        rule.nodes[n - 1 - i] = (double)x;
        double w = (double)(2.0L / ((1.0L - x * x) * pp * pp));
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

// Gauss-Laguerre via Newton on the Laguerre recurrence (weight e^{-x}).
QuadRule build_gauss_laguerre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_laguerre: order must be >= 1");
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    long double x = 0.0L;
    for (int i = 0; i < n; ++i) {
        if (i == 0) {
            x = 3.0L / (1.0L + 2.4L * n);
        } else if (i == 1) {
            x += 15.0L / (1.0L + 2.5L * n);
        } else {
            long double ai = i - 1;
            x += ((1.0L + 2.55L * ai) / (1.9L * ai)) * (x - rule.nodes[i - 2]);
        }
        long double pp = 0.0L;
        for (int iter = 0; iter < 200; ++iter) {
            long double p0 = 1.0L, p1 = 0.0L;
            for (int j = 0; j < n; ++j) {
                long double p2 = p1;
                p1 = p0;
                p0 = ((2.0L * j + 1.0L - x) * p1 - j * p2) / (j + 1.0L);
            }
            pp = n * (p0 - p1) / x;
            long double dx = p0 / pp;
            x -= dx;
            if (std::fabs((double)dx) < 1e-16 * std::fabs((double)x)) break;
        }
        rule.nodes[i] = (double)x;
        // w_i = x / ((n+1)^2 L_{n+1}(x)^2); use w = 1/(x pp^2) * ... standard form below
        long double p0 = 1.0L, p1 = 0.0L;
        for (int j = 0; j < n; ++j) {
            long double p2 = p1;
            p1 = p0;
            p0 = ((2.0L * j + 1.0L - x) * p1 - j * p2) / (j + 1.0L);
        }
        (void)p0;
        rule.weights[i] = (double)(-1.0L / (n * pp * p1));
    }
    return rule;
}

std::map<int, QuadRule>& rule_cache(bool laguerre) {
    static std::map<int, QuadRule> gl_cache;
    static std::map<int, QuadRule> lag_cache;
    return laguerre ? lag_cache : gl_cache;
}

std::mutex& cache_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

const QuadRule& gauss_legendre(int order) {
    std::lock_guard<std::mutex> lock(cache_mutex());
    auto& cache = rule_cache(false);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build_gauss_legendre(order)).first;
    return it->second;
}

const QuadRule& gauss_laguerre(int order) {
    std::lock_guard<std::mutex> lock(cache_mutex());
    auto& cache = rule_cache(true);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, build_gauss_laguerre(order)).first;
    return it->second;
}

double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        int panels, int order) {
    const QuadRule& rule = gauss_legendre(order);
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        double acc = 0.0;
        for (size_t k = 0; k < rule.nodes.size(); ++k)
            acc += rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]);
        total += acc * 0.5 * h;
    }
    return total;
}

} // namespace crbeam
