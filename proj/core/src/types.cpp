#include "ctperf/types.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace ctperf {

void validate_grid(const TimeGrid& grid) {
    if (!(grid.dt > 0.0))
        throw std::invalid_argument("time grid: dt must be > 0, got " + std::to_string(grid.dt));
    if (grid.n_samples < 2)
        throw std::invalid_argument("time grid: n_samples must be >= 2, got " +
                                    std::to_string(grid.n_samples));
}

void validate_curve(const Curve& curve) {
    validate_grid(curve.grid);
    if (curve.samples.size() != static_cast<std::size_t>(curve.grid.n_samples))
        throw std::invalid_argument("curve: sample count " + std::to_string(curve.samples.size()) +
                                    " does not match grid n_samples " +
                                    std::to_string(curve.grid.n_samples));
}

Curve make_curve(std::vector<double> samples, const TimeGrid& grid) {
    Curve c{std::move(samples), grid};
    validate_curve(c);
    return c;
}

}  // namespace ctperf
