#pragma once

#include "rta/params.hpp"
#include "rta/tape.hpp"

#include <functional>

namespace rta {

// Builds the scalar loss for the current parameter values; called repeatedly
// with perturbed parameters during the finite-difference sweep.
using LossBuilder = std::function<ad::Var(ad::Tape&)>;

// Central finite differences against the tape gradients. Returns the max
// over parameters of ||analytic - numeric||_2 / max(1e-8, ||a||_2 + ||n||_2).
// The comparison is per parameter tensor: individual float32 loss probes
// cannot resolve entries whose true derivative is near zero (the loss delta
// drops under one ulp), but the norm comparison still exposes any wrong
// backward rule. Parameters whose both gradient norms fall below
// atol * sqrt(numel) are below probe resolution and skipped. Frozen
// parameters are skipped.
double grad_check(ParamSet& params, const LossBuilder& build, float epsilon = 1e-3f,
                  double atol = 1e-3);

}  // namespace rta
