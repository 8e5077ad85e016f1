use serde_json::json;

/// Broad failure category, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags, unreadable input, malformed CSV.
    Validation,
    /// The data are numerically degenerate for the requested analysis.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: Kind,
    /// Short machine-readable cause, e.g. `bandwidth_below_dimension`.
    pub code: &'static str,
    pub message: String,
}

/// Code for a closed downstream pipe (`longmem ... | head`), which is not worth reporting.
pub const BROKEN_PIPE: &str = "broken_pipe";

impl CliError {
    pub fn validation(code: &'static str, message: impl Into<String>) -> Self {
        Self { kind: Kind::Validation, code, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Validation => 2,
            Kind::Numeric => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let kind = match self.kind {
            Kind::Validation => "validation",
            Kind::Numeric => "numeric",
        };
        json!({ "schema": 1, "kind": kind, "code": self.code, "message": self.message }).to_string()
    }
}

impl From<longmem::Error> for CliError {
    fn from(e: longmem::Error) -> Self {
        use longmem::Error as E;
        let code = match &e {
            E::InvalidInput(_) => "invalid_input",
            E::TooShort { .. } => "too_short",
            E::DegenerateCovariance { .. } => "degenerate_covariance",
            E::BandwidthBelowDimension { .. } => "bandwidth_below_dimension",
            E::NonFinite(_) => "non_finite",
            E::ZeroOrdinate { .. } => "zero_ordinate",
            E::NonStationary { .. } => "non_stationary",
            E::NotStochastic(_) => "not_stochastic",
            E::Reducible => "reducible",
        };
        let kind = if e.is_numeric() { Kind::Numeric } else { Kind::Validation };
        Self { kind, code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        let code = if e.kind() == std::io::ErrorKind::BrokenPipe { BROKEN_PIPE } else { "io" };
        Self::validation(code, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        let code = match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe => BROKEN_PIPE,
            _ => "csv",
        };
        Self::validation(code, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
