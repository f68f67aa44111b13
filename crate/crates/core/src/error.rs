//! Error types shared across the engine.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ScalarError {
    #[error("omega-unsupported: no closed form for Omega_{0}")]
    OmegaUnsupported(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("scalar is not an invertible monomial: {0}")]
    NotAMonomial(String),
    #[error("cannot evaluate symbolic Om3 factor numerically: {0}")]
    SymbolicOmega(String),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PolyError {
    #[error("dim-mismatch: operands configured for dimensions {0} and {1}")]
    DimMismatch(u8, u8),
    #[error("second-derivative-unsupported: x-derivative of a first-derivative symbol")]
    SecondDerivative,
    #[error("generator index out of range for dimension {dim}: {gen}")]
    IndexOutOfRange { dim: u8, gen: String },
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum XiError {
    #[error("pi-plus-domain: integrand does not decay at infinity")]
    PiPlusDomain,
    #[error("pi-prime-domain: integrand does not decay at infinity")]
    PiPrimeDomain,
    #[error("not-integrable: numerator degree {deg} too large for pole orders ({a},{b})")]
    NotIntegrable { deg: i64, a: u32, b: u32 },
    #[error("sphere moment only defined for ambient dimension 2 or 3, got {0}")]
    SphereDim(u8),
    #[error("paper moment convention only covers tangential degree 0 and 2, got {0}")]
    MomentDegree(u32),
    #[error("numerator contains a normal-variable generator after restriction")]
    ResidualNormalVariable,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SymbolError {
    #[error("truncation-too-shallow: composition needs symbol of order {0}")]
    TruncationTooShallow(i32),
    #[error("no-boundary-rule: {0}")]
    NoBoundaryRule(String),
    #[error("parametrix leading-symbol identity failed: p1*p1 != |xi|^2 after J-relations")]
    LeadingIdentity,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Xi(#[from] XiError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PipelineError {
    #[error("unsupported dimension {0}; the boundary pipeline covers n = 3 and n = 4")]
    UnsupportedDim(u8),
    #[error("case out of configured parametrix range: r={r}, l={l}")]
    CaseOutOfRange { r: i32, l: i32 },
    #[error("result is not a scalar multiple of the expected term structure")]
    NotProportional,
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Xi(#[from] XiError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum OracleError {
    #[error("unsupported dimension {0} for gamma representation")]
    GammaDim(u8),
    #[error("quad-no-converge: error estimate {est:.3e} above tolerance {tol:.3e}")]
    QuadNoConverge { est: f64, tol: f64 },
    #[error("cannot-instantiate: no numeric value for generator {0}")]
    CannotInstantiate(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ReportError {
    #[error("expected-values parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown check selector: {0}")]
    UnknownCase(String),
    #[error("class decomposition failed for {0}: classes not linearly independent on computed support")]
    Decomposition(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
