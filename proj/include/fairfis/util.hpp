#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fairfis {

// Non-owning view over a row-major n x p matrix.
struct MatrixView {
    const double* data = nullptr;
    std::int64_t n = 0;
    int p = 0;

    double operator()(std::int64_t i, int j) const { return data[i * p + j]; }
    std::span<const double> row(std::int64_t i) const { return {data + i * p, static_cast<std::size_t>(p)}; }
};

inline MatrixView view_of(const std::vector<double>& flat, std::int64_t n, int p) {
    if (static_cast<std::int64_t>(flat.size()) != n * p)
        throw std::invalid_argument("matrix view size mismatch");
    return MatrixView{flat.data(), n, p};
}

// Shortest textual form of a double that parses back to the same bits.
std::string format_double(double v);

// Runs fn(i) for i in [0, count). Each index writes only its own output slot,
// so results do not depend on the thread schedule.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn);

// Kahan-compensated accumulator, used wherever sums must not depend on
// accumulation order or length.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace fairfis
