use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unsupported rule shape: {0}")]
    UnsupportedRule(String),

    #[error("universe too large: {size} facts exceeds cap {cap}")]
    UniverseTooLarge { size: usize, cap: usize },

    #[error("contradiction during propagation on {0}")]
    Contradiction(String),

    #[error("inconsistent prefix: the rules and prefix state have no model")]
    InconsistentPrefix,

    #[error("synthesis exhausted after {attempts} attempts")]
    SynthesisExhausted { attempts: usize },

    #[error("dependency cycle among steps {0:?}")]
    Cycle(alloc::vec::Vec<usize>),

    #[error("injection infeasible: {0}")]
    InjectionInfeasible(String),

    #[error("downstream recomputation stuck at original step {0}")]
    DownstreamStuck(usize),

    #[error("empty candidate pool")]
    EmptyPool,

    #[error("no error type has positive weight among the applicable set")]
    EmptyApplicable,

    #[error("length mismatch: {left} predictions vs {right} gold entries")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}
