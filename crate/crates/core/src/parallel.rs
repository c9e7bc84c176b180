//! Worker-count control for the rayon-backed kernels.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Number of worker threads a computation may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    /// Whatever pool the caller is already running in (the global pool sizes
    /// itself to the hardware).
    #[default]
    Auto,
    Fixed(usize),
}

impl Threads {
    pub fn max() -> Self {
        Threads::Fixed(hardware_threads())
    }
}

pub fn hardware_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl FromStr for Threads {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Threads::Fixed(n)),
            _ => Err(Error::InvalidParameter(format!(
                "threads must be \"auto\" or a positive integer, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Runs `op` on a pool with the requested number of workers.
pub fn with_threads<R, F>(threads: Threads, op: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        Threads::Auto => Ok(op()),
        Threads::Fixed(0) => Err(Error::InvalidParameter("threads must be >= 1".into())),
        Threads::Fixed(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(op))
        }
    }
}
