#include "rfadv/fft.hpp"

#include <cmath>

namespace rfadv {

bool is_pow2(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

namespace {

void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * M_PI / static_cast<double>(len);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<std::complex<double>> dft_direct(std::span<const std::complex<double>> x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(m) /
                         static_cast<double>(n);
            acc += x[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace

std::vector<std::complex<double>> fft_forward(std::span<const std::complex<double>> x) {
    if (!is_pow2(x.size()))
        return dft_direct(x);
    std::vector<std::complex<double>> a(x.begin(), x.end());
    fft_radix2(a);
    return a;
}

} // namespace rfadv
