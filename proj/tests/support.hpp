#ifndef RADSPEC_TESTS_SUPPORT_HPP
#define RADSPEC_TESTS_SUPPORT_HPP

#include <radspec/schatten.hpp>

#include <random>

namespace support {

// Random spectrum: up to 40 runs, values drawn from a few shapes, random
// multiplicities including large ones.
inline radspec::SingularSpectrum random_spectrum(std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  auto u = [&] { return radspec::detail::unit_uniform(eng); };
  radspec::SingularSpectrum s;
  const int runs = 1 + static_cast<int>(40 * u());
  const int shape = static_cast<int>(3 * u());
  for (int j = 0; j < runs; ++j) {
    double v;
    if (shape == 0)
      v = u();
    else if (shape == 1)
      v = std::pow(j + 1.0, -0.2 - u());
    else
      v = std::exp(-5.0 * u());
    const auto mult = static_cast<std::uint64_t>(u() < 0.2 ? 1 + 500 * u() : 1 + 4 * u());
    s.add(v, mult);
  }
  return s;
}

inline radspec::Matrix random_matrix(int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  radspec::Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = {g(eng), g(eng)};
  return m;
}

} // namespace support

#endif
