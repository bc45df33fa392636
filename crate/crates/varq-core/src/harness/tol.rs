//! Pinned tolerances for the acceptance-grade checks. Each constant names
//! its origin so no threshold floats free in test code.

/// Exact-arithmetic agreement (oracle equivalence, homogeneity, moment
/// identities): a few ulps of headroom over f64 rounding in short sums.
pub const EXACT_REL: f64 = 1e-12;

/// Closed forms against the adaptive-quadrature oracle; the quadrature is
/// driven two orders tighter than this.
pub const CLOSED_FORM_VS_QUAD: f64 = 1e-8;

/// Conjugate-Poisson smoothing identity via the quadrature route; limited
/// by the improper-integral tail settling, not the closed forms.
pub const SMOOTHING_IDENTITY: f64 = 1e-6;

/// Algebraic kernel decomposition residual: closed forms on both sides,
/// so only rounding in the log/arctan primitives remains.
pub const DECOMPOSITION_RESIDUAL: f64 = 1e-10;

/// Conjugate Poisson reconstructed from dilated truncations (quadrature in
/// the dilation variable with cutoff doubling).
pub const SCALE_MIX_IDENTITY: f64 = 1e-6;

/// Mass of the dilation-mixing weight 2y/(1+y²)²; the antiderivative is
/// −(1+y²)^{-1}, so the truncation error is 1/(1+T²) at cutoff T.
pub const WEIGHT_MASS: f64 = 1e-10;

/// Slack for the pointwise variation comparison between the conjugate
/// Poisson path and the mixed truncated-transform paths (quadrature in the
/// dilation variable at 1e−6, amplified by the path count).
pub const VARIATION_COMPARISON_SLACK: f64 = 1e-4;

/// Telescoping entries may exceed 3ε only by grid rounding.
pub const TELESCOPING_SLACK: f64 = 1e-9;

/// Estimate invariance under value scaling and joint dilation.
pub const ESTIMATE_INVARIANCE: f64 = 1e-10;
