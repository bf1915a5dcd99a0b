#pragma once

// Umbrella header: Bayesian optimization over a Gaussian process whose
// Cholesky factor grows one row per new sample (O(n^2) instead of O(n^3)),
// with lag-scheduled kernel refits and batch-parallel EI suggestions.

#include "lazygp/acquisition.hpp"
#include "lazygp/benchmarks.hpp"
#include "lazygp/errors.hpp"
#include "lazygp/gp.hpp"
#include "lazygp/kernel.hpp"
#include "lazygp/linalg.hpp"
#include "lazygp/optimizer.hpp"
#include "lazygp/trace_io.hpp"
