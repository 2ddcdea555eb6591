#pragma once

#include "csc/panel.hpp"

#include <random>
#include <vector>

namespace csc::testing {

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) m(i, j) = z(rng);
    }
    return m;
}

inline Vector random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = z(rng);
    return v;
}

inline PanelData random_panel(int periods, int t0, int units, std::mt19937_64& rng, int n_treated = 1) {
    return PanelData(random_matrix(periods, units, rng), t0, n_treated);
}

inline std::vector<int> random_order(int n, std::mt19937_64& rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

}  // namespace csc::testing
