#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ctperf {

// Uniform acquisition time axis: sample k sits at t_start + k*dt.
struct TimeGrid {
    double t_start = 0.0;  // seconds
    double dt = 2.0;       // seconds
    int n_samples = 30;

    double time(int k) const { return t_start + k * dt; }
    double duration() const { return (n_samples - 1) * dt; }
    bool operator==(const TimeGrid&) const = default;
};

// throws std::invalid_argument on dt <= 0 or n_samples < 2
void validate_grid(const TimeGrid& grid);

// One sampled time-concentration curve (AIF, VOF, tissue TCC, or irf).
// samples.size() must equal grid.n_samples.
struct Curve {
    std::vector<double> samples;
    TimeGrid grid;
};

Curve make_curve(std::vector<double> samples, const TimeGrid& grid);
void validate_curve(const Curve& curve);

using Vec3 = std::array<double, 3>;  // mm per axis
using Shape3 = std::array<int, 3>;   // x, y, z counts

// Dense 3-D volume, x-fastest storage.
template <typename T>
struct Volume3 {
    Shape3 shape{0, 0, 0};
    std::vector<T> data;

    Volume3() = default;
    explicit Volume3(Shape3 s, T fill = T{})
        : shape(s),
          data(static_cast<std::size_t>(s[0]) * s[1] * s[2], fill) {}

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * shape[1] + y) * shape[0] + x;
    }
    T& at(int x, int y, int z) { return data[index(x, y, z)]; }
    const T& at(int x, int y, int z) const { return data[index(x, y, z)]; }
};

// Dense 4-D volume over (x, y, z, t), x-fastest and t-slowest. With that
// layout sample t of linear voxel v lives at data[t * voxels() + v].
template <typename T>
struct Volume4 {
    Shape3 shape{0, 0, 0};  // spatial extent
    int n_t = 0;
    std::vector<T> data;

    Volume4() = default;
    Volume4(Shape3 s, int nt, T fill = T{})
        : shape(s), n_t(nt),
          data(static_cast<std::size_t>(s[0]) * s[1] * s[2] * nt, fill) {}

    std::size_t voxels() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    std::size_t index(int x, int y, int z, int t) const {
        return ((static_cast<std::size_t>(t) * shape[2] + z) * shape[1] + y) * shape[0] + x;
    }
    T& at(int x, int y, int z, int t) { return data[index(x, y, z, t)]; }
    const T& at(int x, int y, int z, int t) const { return data[index(x, y, z, t)]; }
};

using Mask3 = Volume3<std::uint8_t>;

inline double trapezoid_integral(const std::vector<double>& samples, double dt) {
    double acc = 0.0;
    for (std::size_t k = 1; k < samples.size(); ++k)
        acc += 0.5 * (samples[k - 1] + samples[k]) * dt;
    return acc;
}

inline double rectangle_integral(const std::vector<double>& samples, double dt) {
    double acc = 0.0;
    for (double s : samples) acc += s;
    return acc * dt;
}

}  // namespace ctperf
