// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace distdrift {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// sigma(x) <= 0 at a sampled point; the model requires strict ellipticity.
struct NonPositiveSigma : Error {
    using Error::Error;
};

// Quadrature error estimate on the evaluation grid exceeds tolerance.
struct GridTooCoarse : Error {
    using Error::Error;
};

// Bandwidth-halving gap above threshold; the drift potential may not
// exist as a limit for these coefficients.
struct NotConverged : Error {
    using Error::Error;
};

// Numerical harmonic map lost strict monotonicity (corrupt input table).
struct NonMonotone : Error {
    using Error::Error;
};

// Argument outside the tabulated grid or its image.
struct OutOfRange : Error {
    using Error::Error;
};

// Too many simulated paths clamped at the grid edge.
struct GridExitLimit : Error {
    using Error::Error;
};

// Effective sample size of the importance weights fell below the floor.
struct WeightDegenerate : Error {
    using Error::Error;
};

// Transformed diffusion coefficient exceeds the configured cap.
struct UnboundedSigma0 : Error {
    using Error::Error;
};

// Ensemble too small to resolve the statistic.
struct InsufficientPaths : Error {
    using Error::Error;
};

// Two algebraically equivalent evaluation routes disagreed beyond tolerance.
struct NumericalInconsistency : Error {
    using Error::Error;
};

}  // namespace distdrift
