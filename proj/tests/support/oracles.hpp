#pragma once

// Reference implementations used only by the tests. Each one is written
// from the defining formula, one pixel or one term at a time.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "contrail/annotations.hpp"
#include "contrail/grid.hpp"
#include "contrail/losses.hpp"

namespace oracle {

// Classic crossing-number test for one point (x = col, y = row).
inline bool point_in_polygon(const contrail::Polygon& poly, double y, double x) {
    const auto& v = poly.vertices;
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        const double yi = v[i].row, xi = v[i].col;
        const double yj = v[j].row, xj = v[j].col;
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) {
            inside = !inside;
        }
    }
    return inside;
}

inline contrail::Mask rasterize(const contrail::Polygon& poly, int h, int w) {
    contrail::Mask m(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            m.at(r, c) = point_in_polygon(poly, r + 0.5, c + 0.5) ? 1 : 0;
        }
    }
    return m;
}

// Sums straight from the definitions, no shared helpers.
struct Sums {
    double tp = 0, fn = 0, fp = 0, p = 0, g = 0;
};

inline Sums sums(const contrail::ProbMap& p, const contrail::Mask& g) {
    Sums s;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double pi = p.data[i];
        const double gi = g.data[i];
        s.tp += pi * gi;
        s.fn += (1 - pi) * gi;
        s.fp += pi * (1 - gi);
        s.p += pi;
        s.g += gi;
    }
    return s;
}

inline double dice(const contrail::ProbMap& p, const contrail::Mask& g, double eps, bool factor_two = true) {
    const Sums s = sums(p, g);
    return 1 - ((factor_two ? 2 : 1) * s.tp + eps) / (s.p + s.g + eps);
}

inline double tversky_index(const contrail::ProbMap& p, const contrail::Mask& g, double a, double b, double eps) {
    const Sums s = sums(p, g);
    return (s.tp + eps) / (s.tp + a * s.fn + b * s.fp + eps);
}

inline double bce_mean(const contrail::ProbMap& p, const contrail::Mask& g) {
    double total = 0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        total += g.data[i] ? -std::log(p.data[i]) : -std::log(1 - p.data[i]);
    }
    return total / static_cast<double>(p.data.size());
}

// FNV-1a, for dataset fingerprints.
inline std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---- random fixtures -----------------------------------------------------

inline contrail::ProbMap random_probs(std::mt19937_64& rng, int h, int w, double lo = 0.01, double hi = 0.99) {
    std::uniform_real_distribution<double> u(lo, hi);
    contrail::ProbMap p(h, w);
    for (auto& v : p.data) {
        v = u(rng);
    }
    return p;
}

inline contrail::Mask random_mask(std::mt19937_64& rng, int h, int w, double density = 0.4) {
    std::bernoulli_distribution b(density);
    contrail::Mask m(h, w);
    for (auto& v : m.data) {
        v = b(rng) ? 1 : 0;
    }
    return m;
}

inline contrail::Polygon random_polygon(std::mt19937_64& rng, int h, int w, bool lattice = false) {
    std::uniform_int_distribution<int> nv(3, 12);
    std::uniform_real_distribution<double> ur(-0.2 * h, 1.2 * h);
    std::uniform_real_distribution<double> uc(-0.2 * w, 1.2 * w);
    contrail::Polygon poly;
    const int n = nv(rng);
    for (int i = 0; i < n; ++i) {
        double r = ur(rng);
        double c = uc(rng);
        if (lattice) {
            // Half-integer grid puts vertices and edges on pixel centers.
            r = std::round(r * 2) / 2;
            c = std::round(c * 2) / 2;
        }
        poly.vertices.push_back({r, c});
    }
    return poly;
}

}  // namespace oracle
