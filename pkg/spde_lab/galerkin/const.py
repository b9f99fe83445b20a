"""Numerical constants for the Galerkin library."""

# Grid rounding
GRID_EXPONENT_RESIDUAL = 1e-9

# calE series
CALE_RELATIVE_CUTOFF = 1e-16
CALE_MAX_TERMS = 10_000

# Small |lambda| h branches
PHI_SERIES_THRESHOLD = 1e-8  # (e^{lambda h} - 1) / lambda
GEOMETRIC_SERIES_THRESHOLD = 1e-10  # oracle geometric sums
CONDITIONAL_SERIES_THRESHOLD = 1e-4  # Var(I) - Cov^2 / h

# Noise
BUNDLE_MAGIC = b"SPNB"
BUNDLE_HEADER_FORMAT = "<4sQQdQQQ"  # magic, M, N, T, seed, first sample, sample count
STREAM_INCREMENTS = 0
STREAM_CONVOLUTION = 1

# Eigenvalue sequence used as a "lambda -> 0" stand-in in tests and limits
NEAR_ZERO_EIGENVALUE = -1e-15
