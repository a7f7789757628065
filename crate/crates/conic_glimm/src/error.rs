use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cavitation: speed {q} reaches the limit speed {q_star}")]
    Cavitation { q: f64, q_star: f64 },
    #[error("state not supersonic in x: u = {u}, c = {c}")]
    Sonic { u: f64, c: f64 },
    #[error("conical-sonic point at sigma = {sigma}")]
    ConicalSonic { sigma: f64 },
    #[error("self-similar system singular on the axis (sigma = {sigma})")]
    Axis { sigma: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shock slope {s} has no supersonic intersection with the polar")]
    NoIntersection { s: f64 },
    #[error("{what} failed to converge after {iters} iterations (residual {residual:e})")]
    Convergence { what: &'static str, iters: usize, residual: f64 },
    #[error("profile from s = {s} never becomes tangent to a ray")]
    NoTangency { s: f64 },
    #[error("shooting residual does not change sign on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("wave strength {alpha} outside curve radius {radius}")]
    CurveRange { alpha: f64, radius: f64 },
    #[error("ray spacing {dsigma} violates the CFL bound {bound}")]
    Cfl { dsigma: f64, bound: f64 },
    #[error("pressure assumption violated: {0}")]
    Assumption(String),
    #[error("step {h}: {detail}")]
    NeighborhoodExit { h: usize, detail: String },
    #[error("weight interval empty: {0}")]
    Infeasible(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid value for `{key}`: {msg}")]
    Validation { key: String, msg: String },
    #[error("test function support leaves the computed domain: {0}")]
    Support(String),
    #[error("unknown interaction case `{0}`")]
    UnknownCase(String),
    #[error("step {h}: {source}")]
    Step { h: usize, source: Box<Error> },
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn at_step(self, h: usize) -> Error {
        match self {
            e @ Error::Step { .. } | e @ Error::NeighborhoodExit { .. } => e,
            e => Error::Step { h, source: Box::new(e) },
        }
    }

    /// Innermost error, skipping step wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
