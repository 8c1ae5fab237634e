use std::fmt;

/// Classification shared by every error that can cross the bridge.
///
/// Module-level error types map onto one of these so callers can match on
/// the kind without caring which layer raised it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    SyntaxError,
    InstantiationError,
    TypeError,
    DomainError,
    ExistenceError,
    PermissionError,
    EvaluationError,
    BudgetExceeded,
    Floundering,
    LimitError,
    DepthLimit,
    Unhashable,
    DanglingHandle,
    ModuleNotFound,
    ModuleNotAllowed,
    NotCallable,
    ArityError,
    UnknownKeyword,
    NoSuchMethod,
    NoSuchAttribute,
    ValueError,
    NestingLimit,
    FlagError,
    SizeMismatch,
    Timeout,
    Io,
    /// A host-defined kind the bridge does not model explicitly.
    Other(String),
}

impl ErrorKind {
    pub fn name(&self) -> &str {
        match self {
            ErrorKind::SyntaxError => "SyntaxError",
            ErrorKind::InstantiationError => "InstantiationError",
            ErrorKind::TypeError => "TypeError",
            ErrorKind::DomainError => "DomainError",
            ErrorKind::ExistenceError => "ExistenceError",
            ErrorKind::PermissionError => "PermissionError",
            ErrorKind::EvaluationError => "EvaluationError",
            ErrorKind::BudgetExceeded => "BudgetExceeded",
            ErrorKind::Floundering => "Floundering",
            ErrorKind::LimitError => "LimitError",
            ErrorKind::DepthLimit => "DepthLimit",
            ErrorKind::Unhashable => "Unhashable",
            ErrorKind::DanglingHandle => "DanglingHandle",
            ErrorKind::ModuleNotFound => "ModuleNotFound",
            ErrorKind::ModuleNotAllowed => "ModuleNotAllowed",
            ErrorKind::NotCallable => "NotCallable",
            ErrorKind::ArityError => "ArityError",
            ErrorKind::UnknownKeyword => "UnknownKeyword",
            ErrorKind::NoSuchMethod => "NoSuchMethod",
            ErrorKind::NoSuchAttribute => "NoSuchAttribute",
            ErrorKind::ValueError => "ValueError",
            ErrorKind::NestingLimit => "NestingLimit",
            ErrorKind::FlagError => "FlagError",
            ErrorKind::SizeMismatch => "SizeMismatch",
            ErrorKind::Timeout => "Timeout",
            ErrorKind::Io => "Io",
            ErrorKind::Other(name) => name,
        }
    }

    /// Inverse of [`ErrorKind::name`]; unknown names become `Other`.
    pub fn from_name(name: &str) -> ErrorKind {
        const KNOWN: &[ErrorKind] = &[
            ErrorKind::SyntaxError,
            ErrorKind::InstantiationError,
            ErrorKind::TypeError,
            ErrorKind::DomainError,
            ErrorKind::ExistenceError,
            ErrorKind::PermissionError,
            ErrorKind::EvaluationError,
            ErrorKind::BudgetExceeded,
            ErrorKind::Floundering,
            ErrorKind::LimitError,
            ErrorKind::DepthLimit,
            ErrorKind::Unhashable,
            ErrorKind::DanglingHandle,
            ErrorKind::ModuleNotFound,
            ErrorKind::ModuleNotAllowed,
            ErrorKind::NotCallable,
            ErrorKind::ArityError,
            ErrorKind::UnknownKeyword,
            ErrorKind::NoSuchMethod,
            ErrorKind::NoSuchAttribute,
            ErrorKind::ValueError,
            ErrorKind::NestingLimit,
            ErrorKind::FlagError,
            ErrorKind::SizeMismatch,
            ErrorKind::Timeout,
            ErrorKind::Io,
        ];
        KNOWN
            .iter()
            .find(|k| k.name() == name)
            .cloned()
            .unwrap_or_else(|| ErrorKind::Other(name.to_string()))
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of the bridge raised an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Logic,
    Host,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Logic => "logic",
            Origin::Host => "host",
        })
    }
}

/// The one error type seen by callers of the engine and the bridge.
///
/// Host failures keep their own backtrace; the logic backtrace lists the
/// predicate frames active when the error surfaced, innermost first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgeError {
    pub origin: Origin,
    pub kind: ErrorKind,
    pub message: String,
    pub logic_backtrace: Vec<String>,
    pub host_backtrace: Vec<String>,
}

impl BridgeError {
    pub fn logic(kind: ErrorKind, message: impl Into<String>) -> BridgeError {
        BridgeError {
            origin: Origin::Logic,
            kind,
            message: message.into(),
            logic_backtrace: Vec::new(),
            host_backtrace: Vec::new(),
        }
    }

    pub fn host(kind: ErrorKind, message: impl Into<String>) -> BridgeError {
        BridgeError {
            origin: Origin::Host,
            ..BridgeError::logic(kind, message)
        }
    }

    pub fn with_host_backtrace(mut self, frames: Vec<String>) -> BridgeError {
        self.host_backtrace = frames;
        self
    }
}

impl fmt::Display for BridgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error ({}): {}", self.origin, self.kind, self.message)
    }
}

impl std::error::Error for BridgeError {}

pub type Result<T, E = BridgeError> = std::result::Result<T, E>;
