#pragma once

// Shared test fixtures built on the library: small bundles and the
// bundle-level finite-difference gradient check.

#include <random>

#include "oracles.hpp"
#include "smeta/meta.hpp"
#include "smeta/model.hpp"

namespace fixture {

inline smeta::Architecture small_arch(std::size_t input_dim = 6) {
  smeta::Architecture a;
  a.input_dim = input_dim;
  a.hidden_dim = 5;
  a.latent_dim = 3;
  a.subject_hidden_dim = 4;
  return a;
}

/// Random small architecture for gradient checks.
inline smeta::Architecture random_arch(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(2, 7);
  smeta::Architecture a;
  a.input_dim = d(rng) + 2;
  a.hidden_dim = d(rng);
  a.latent_dim = d(rng);
  a.subject_hidden_dim = d(rng);
  return a;
}

inline smeta::ModelBundle bundle(const smeta::Architecture& arch, smeta::ModelVariant v,
                                 std::uint64_t seed) {
  smeta::Rng rng(seed);
  return smeta::make_bundle(arch, v, rng);
}

/// fd_check of an arbitrary bundle loss over every parameter of the bundle.
template <typename LossFn>
double bundle_fd_error(const smeta::ModelBundle& b, LossFn&& loss, double step,
                       double floor) {
  const smeta::ParameterSet flat = smeta::flatten(b);
  return smeta::fd_check(
      flat,
      [&](const smeta::ParameterSet& p) {
        const smeta::LossResult r = loss(smeta::unflatten(p, b));
        return smeta::LossAndGradient{r.total, smeta::flatten(r.gradients)};
      },
      step, floor);
}

/// Gradient-check denominator floor used by every gate.
inline constexpr double kFdFloor = 1e-6;

}  // namespace fixture
