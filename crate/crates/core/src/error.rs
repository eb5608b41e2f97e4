use thiserror::Error;

/// Failure modes surfaced by the numerical operations.
///
/// Warning-grade conditions (classifier quantities inside the indeterminate
/// band, exponent mismatches) are carried inside result structs instead, so
/// callers can distinguish "unusable" from "usable but flagged".
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("potential is not integrable: tail estimate {tail:e} exceeds bound {bound:e}")]
    NonIntegrable { tail: f64, bound: f64 },

    #[error("invalid potential parameter {name}: {message}")]
    InvalidPotential { name: &'static str, message: String },

    #[error("tabulated potential needs at least two grid points sorted strictly increasing")]
    BadTable,

    #[error("moment of order {order} is not finite")]
    MomentCondition { order: u32 },

    #[error("Jost tail not converged at x_max={x_max}: enlarging the box moved w by {delta:e} (tol {tol:e})")]
    TailNotConverged { x_max: f64, delta: f64, tol: f64 },

    #[error("wavenumber must lie in the closed upper half-plane, got imaginary part {im}")]
    LowerHalfPlane { im: f64 },

    #[error("ODE step size underflow at x={x}")]
    StepUnderflow { x: f64 },

    #[error("interaction matrix must satisfy a*d - b*c = -1, got {value} (|deviation| {dev:e})")]
    NotConnecting { value: f64, dev: f64 },

    #[error("phase parameter must lie in [-pi/2, pi/2], got {phi}")]
    PhaseRange { phi: f64 },

    #[error("preset {preset} is singular at the supplied parameters")]
    SingularPreset { preset: &'static str },

    #[error("unknown interaction preset `{0}`")]
    UnknownPreset(String),

    #[error("pole classifier ambiguous: |c|={c:e}, |a-d|={ad:e}, |b|={b:e} all below threshold")]
    UnclassifiablePole { c: f64, ad: f64, b: f64 },

    #[error("Jost function vanishes on edge {edge}: |w|={w:e}, quotient form of L undefined")]
    ResonantDivision { edge: u8, w: f64 },

    #[error("determinant denominator vanishes at zeta ({re}, {im}): unperturbed pole")]
    AtUnperturbedPole { re: f64, im: f64 },

    #[error("logarithmic derivative singular: |{what}|={value:e} below {tol:e}")]
    NearSingularLog { what: &'static str, value: f64, tol: f64 },

    #[error("scan grid too coarse: {message}")]
    GridTooCoarse { message: String },

    #[error("phase unwrap ambiguous: adjacent samples jump by {jump} rad at k={k} after refinement")]
    UnwrapAmbiguous { k: f64, jump: f64 },

    #[error("contour passes too close to a zero or pole: winding residue {residue:e}")]
    ContourTooClose { residue: f64 },

    #[error("junction stencil elimination singular at h={h}: |det|={det:e}")]
    StencilInconsistent { h: f64, det: f64 },

    #[error("discretization parameters invalid: {message}")]
    BadDiscretization { message: String },

    #[error("shift t={t} is not strictly below the spectrum floor {floor}")]
    ShiftAboveFloor { t: f64, floor: f64 },

    #[error("scenario error in `{field}`: {message}")]
    Scenario { field: String, message: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
