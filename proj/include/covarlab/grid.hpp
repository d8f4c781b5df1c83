#pragma once

#include <cmath>
#include <cstdint>

#include "covarlab/errors.hpp"

namespace covarlab {

// Uniform fine grid over [-M, T] with cell width delta_n / kappa. The
// interval [-M, 0) discretises the truncated infinite past of the moving
// average integrals.
struct FineGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    std::int64_t n_cells = 0;
    double cell_width = 0.0;

    static FineGrid make(int n, double T, int kappa, double M) {
        if (n < 2) throw ConfigError("grid: n must be >= 2");
        if (kappa < 1) throw ConfigError("grid: kappa must be >= 1");
        if (!(M > 0.0)) throw ConfigError("grid: M must be positive");
        if (!(T > 0.0)) throw ConfigError("grid: T must be positive");
        FineGrid grid;
        grid.t_start = -M;
        grid.t_end = T;
        grid.cell_width = 1.0 / (static_cast<double>(n) * kappa);
        const double cells = (M + T) * n * kappa;
        grid.n_cells = std::llround(cells);
        if (std::abs(grid.n_cells * grid.cell_width - (T + M)) >
            16.0 * 1e-16 * (T + M) * grid.n_cells) {
            throw ConfigError("grid: M and T must be commensurate with the cell width");
        }
        return grid;
    }

    double left_endpoint(std::int64_t k) const { return t_start + k * cell_width; }

    // Index of the first cell at or after time zero.
    std::int64_t time_zero_cell() const { return std::llround(-t_start / cell_width); }
};

}  // namespace covarlab
