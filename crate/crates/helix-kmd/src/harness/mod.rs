//! Command-line orchestration: configuration, subcommand runners, artifacts
//! and the acceptance checks.

pub mod config;
pub mod criteria;
pub mod manifest;
mod run;

pub use config::{parse_epsilon_list, ExperimentConfig, Subcommand};
pub use manifest::{ArtifactWriter, RunManifest};
pub use run::{load_config, run, RunOptions, RunSummary, DEFAULT_OUT};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const THREADS_ENV: &str = "HELIX_KMD_THREADS";

/// Process exit code for an error: bad input is 2, everything the numerics
/// ran into is 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParameters(_)
        | Error::DegenerateConfig(_)
        | Error::InvalidState(_)
        | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Worker count from `--threads`, else the environment variable; `None`
/// leaves rayon's default.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>> {
    let n = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(v)) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
        (None, None) => return Ok(None),
    };
    if n == 0 {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    Ok(Some(n))
}

/// Sets up the global rayon pool. A pool that already exists is kept.
pub fn init_threads(n: Option<usize>) {
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_resolution() {
        assert_eq!(resolve_threads(Some(3), Some("7")).unwrap(), Some(3));
        assert_eq!(resolve_threads(None, Some(" 7 ")).unwrap(), Some(7));
        assert_eq!(resolve_threads(None, None).unwrap(), None);
        assert!(resolve_threads(None, Some("many")).is_err());
        assert!(resolve_threads(Some(0), None).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::NonFinite("x")), EXIT_NUMERICAL);
        assert_eq!(
            exit_code(&Error::FixedPointDivergence {
                iterations: 1,
                last_step: 1.0
            }),
            EXIT_NUMERICAL
        );
    }
}
