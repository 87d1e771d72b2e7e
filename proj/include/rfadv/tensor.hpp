#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rfadv/errors.hpp"

namespace rfadv {

// Dense row-major tensor of doubles. All model math runs in 64-bit so
// gradient checks and attack budgets are limited by the algorithms, not
// the arithmetic.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape), 0.0) {}
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != count(shape))
            throw InputError("tensor: data length does not match shape");
    }

    static std::int64_t count(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) {
            if (d <= 0)
                throw InputError("tensor: non-positive dimension");
            n *= d;
        }
        return n;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

    double& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v))
                return false;
        return true;
    }
};

inline double mean_square(const Tensor& t) {
    if (t.size() == 0)
        return 0.0;
    double acc = 0.0;
    for (double v : t.data)
        acc += v * v;
    return acc / static_cast<double>(t.size());
}

} // namespace rfadv
