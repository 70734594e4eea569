#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <cstddef>

namespace viscomem {

/// Gauss-Legendre rule on [-1, 1], expanded from boost's half-rule storage.
template <std::size_t N>
struct GaussRule {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};

  GaussRule() {
    using Boost = boost::math::quadrature::gauss<double, N>;
    const auto& x = Boost::abscissa();
    const auto& w = Boost::weights();
    std::size_t k = 0;
    // boost stores nonnegative abscissae; odd N starts with the zero node
    std::size_t start = 0;
    if constexpr (N % 2 == 1) {
      nodes[k] = x[0];
      weights[k] = w[0];
      ++k;
      start = 1;
    }
    for (std::size_t i = start; i < x.size(); ++i) {
      nodes[k] = -x[i];
      weights[k] = w[i];
      ++k;
      nodes[k] = x[i];
      weights[k] = w[i];
      ++k;
    }
  }
};

template <std::size_t N>
inline const GaussRule<N>& gauss_rule() {
  static const GaussRule<N> rule;
  return rule;
}

/// Composite Gauss rule of `panels` equal panels on [a, b]; calls f(t, weight).
template <std::size_t N, class F>
void composite_gauss(double a, double b, std::size_t panels, F&& f) {
  const auto& rule = gauss_rule<N>();
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double left = a + width * static_cast<double>(p);
    const double mid = left + 0.5 * width;
    for (std::size_t q = 0; q < N; ++q) {
      f(mid + 0.5 * width * rule.nodes[q], 0.5 * width * rule.weights[q]);
    }
  }
}

}  // namespace viscomem
