#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "occrelax/core.hpp"
#include "occrelax/measure.hpp"

namespace occrelax::fixture {

using Curve = std::function<double(double)>;

/// Unconstrained problem on (0, 1) with m = 1 and the given boxes.
inline core::VariationalProblem unitProblem(Interval y, Interval z) {
  core::VariationalProblem p;
  p.name = "unit";
  p.domain = core::Domain::interval(0.0, 1.0);
  p.m = 1;
  p.yBox = {y};
  p.zBox = {z};
  const auto ia = p.interiorArity();
  const auto ba = p.boundaryArity();
  p.L = p.F = p.G = core::ScalarField::constant(0.0, ia);
  p.Lb = p.Fb = p.Gb = core::ScalarField::constant(0.0, ba);
  return p;
}

inline std::shared_ptr<const measure::Grid> intervalGrid(const core::VariationalProblem& p,
                                                         int nx, int ny, int nz) {
  measure::GridSpec s;
  s.nx = {nx};
  s.ny = {ny};
  s.nz = {nz};
  return std::make_shared<measure::Grid>(measure::makeGrid(p, s));
}

/// Sum_c weight_c times the occupation lift of curve c (derivatives by grid
/// finite differences).
inline measure::GriddedMeasure curveMixture(std::shared_ptr<const measure::Grid> g,
                                            const std::vector<Curve>& curves,
                                            const std::vector<double>& weights) {
  measure::GriddedMeasure mu(g);
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& f = curves[c];
    const auto gf = measure::sampleFunction(
        *g, [&](std::span<const double> x) { return std::vector<double>{f(x[0])}; });
    const auto lift = measure::occupationLift(g, gf);
    for (std::size_t q = 0; q < mu.weights.size(); ++q)
      mu.weights[q] += weights[c] * lift.weights[q];
    for (std::size_t q = 0; q < mu.boundaryWeights.size(); ++q)
      mu.boundaryWeights[q] += weights[c] * lift.boundaryWeights[q];
  }
  return mu;
}

/// Random mixture of 1 to 4 lifts of random Lipschitz curves (sums of a
/// constant, a slope and a sine) that stay inside the y box. Integer mixture
/// weights keep the density plateaus rational with small denominators.
inline measure::GriddedMeasure randomAtomicMeasure(std::shared_ptr<const measure::Grid> g,
                                                   std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int k = count(rng);
  std::vector<Curve> curves;
  std::vector<double> w;
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    const double a = 0.2 + 0.6 * u(rng), b = 0.4 * (u(rng) - 0.5),
                 amp = 0.1 * u(rng), freq = 1.0 + 4.0 * u(rng);
    curves.push_back([=](double x) { return a + b * (x - 0.5) + amp * std::sin(freq * x); });
    w.push_back(static_cast<double>(count(rng)));
    total += w.back();
  }
  for (double& v : w) v /= total;
  return curveMixture(g, curves, w);
}

}  // namespace occrelax::fixture
