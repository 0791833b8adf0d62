#pragma once

#include <complex>
#include <vector>

namespace pumpkit::fft {

// In-place radix-2 Cooley-Tukey transform; size must be a power of two.
void transform(std::vector<std::complex<double>>& data, bool inverse = false);

// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace pumpkit::fft
