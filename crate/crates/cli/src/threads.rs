use anyhow::{anyhow, Context, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "NSMPB_THREADS";

/// Size the global rayon pool. Serial runs use one thread; otherwise
/// `NSMPB_THREADS` applies when set and rayon's default when not.
pub fn init_pool(parallel: bool) -> Result<()> {
    let threads = match std::env::var(THREADS_ENV) {
        _ if !parallel => Some(1),
        Ok(v) => Some(parse_threads(&v)?),
        Err(std::env::VarError::NotPresent) => None,
        Err(e) => return Err(anyhow!("{THREADS_ENV}: {e}")),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder.build_global().context("configuring the thread pool")
}

fn parse_threads(v: &str) -> Result<usize> {
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(anyhow!("{THREADS_ENV} must be a positive integer, got {v:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_counts_must_be_positive_integers() {
        assert_eq!(parse_threads(" 4 ").unwrap(), 4);
        for bad in ["0", "-1", "four", ""] {
            assert!(parse_threads(bad).is_err(), "{bad:?}");
        }
    }
}
