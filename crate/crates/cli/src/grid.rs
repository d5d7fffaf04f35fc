use rayon::prelude::*;

pub const MAX_GRID: usize = 10_000;

/// Parses `a:b:n` into `n` evenly spaced points from `a` to `b`.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("range `{text}` must look like start:end:count"));
    };
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad range start `{a}`"))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad range end `{b}`"))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| format!("bad range count `{n}`"))?;
    if !a.is_finite() || !b.is_finite() {
        return Err(format!("range `{text}` has non-finite bounds"));
    }
    match n {
        0 => Err("range count must be at least 1".into()),
        1 if a == b => Ok(vec![a]),
        1 => Err(format!("range `{text}` has one point but distinct bounds")),
        n if n > MAX_GRID => Err(format!("range has {n} points, the limit is {MAX_GRID}")),
        _ if b <= a => Err(format!("range `{text}` must be increasing")),
        n => {
            let step = (b - a) / (n - 1) as f64;
            Ok((0..n)
                .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
                .collect())
        }
    }
}

/// Worker count from `NONEXT_THREADS`; 0 means sequential.
pub fn threads() -> Result<usize, String> {
    match std::env::var("NONEXT_THREADS") {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("NONEXT_THREADS must be a non-negative integer, got `{v}`")),
    }
}

/// Maps `f` over `items`, on a pool of `threads` workers when nonzero. The
/// output order always matches the input order.
pub fn map_ordered<T, R, F>(items: &[T], threads: usize, f: F) -> Result<Vec<R>, String>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if threads == 0 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| format!("cannot start worker pool: {e}"))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}
