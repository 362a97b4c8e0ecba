//! Chunked map-reduce over index ranges.
//!
//! With the `parallel` feature the chunks are spread over a rayon pool;
//! without it every [`Parallelism`] setting runs sequentially. The merge
//! operation must be associative, and callers make it order-independent so
//! results do not depend on the worker count.

use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Rayon's global pool (one worker per logical core).
    #[default]
    Auto,
    Workers(usize),
}

impl Parallelism {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            None | Some(0) => Parallelism::Auto,
            Some(1) => Parallelism::Sequential,
            Some(n) => Parallelism::Workers(n),
        }
    }
}

/// Splits `0..total` into chunks of at most `chunk` indices, maps each chunk
/// `[start, end)` and folds the results with `merge`, starting from `empty`.
pub(crate) fn map_reduce<T, M, R, E>(
    total: u128,
    chunk: u128,
    parallelism: Parallelism,
    map: M,
    merge: R,
    empty: E,
) -> Result<T>
where
    T: Send,
    M: Fn(u128, u128) -> Result<T> + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
    E: Fn() -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let chunks = total.div_ceil(chunk);
    let bounds = move |c: u128| (c * chunk, ((c + 1) * chunk).min(total));

    match parallelism {
        Parallelism::Sequential => sequential(chunks, bounds, &map, &merge, &empty),
        #[cfg(feature = "parallel")]
        Parallelism::Auto => parallel(chunks, bounds, &map, &merge, &empty),
        #[cfg(feature = "parallel")]
        Parallelism::Workers(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::error::Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| parallel(chunks, bounds, &map, &merge, &empty))
        }
        #[cfg(not(feature = "parallel"))]
        _ => sequential(chunks, bounds, &map, &merge, &empty),
    }
}

fn sequential<T, M, R, E>(
    chunks: u128,
    bounds: impl Fn(u128) -> (u128, u128),
    map: &M,
    merge: &R,
    empty: &E,
) -> Result<T>
where
    M: Fn(u128, u128) -> Result<T>,
    R: Fn(T, T) -> T,
    E: Fn() -> T,
{
    let mut acc = empty();
    for c in 0..chunks {
        let (start, end) = bounds(c);
        acc = merge(acc, map(start, end)?);
    }
    Ok(acc)
}

#[cfg(feature = "parallel")]
fn parallel<T, M, R, E>(
    chunks: u128,
    bounds: impl Fn(u128) -> (u128, u128) + Sync + Send,
    map: &M,
    merge: &R,
    empty: &E,
) -> Result<T>
where
    T: Send,
    M: Fn(u128, u128) -> Result<T> + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
    E: Fn() -> T + Sync + Send,
{
    use rayon::prelude::*;
    // rayon ranges need a native index type; chunk counts stay far below u64.
    let chunks = u64::try_from(chunks).expect("chunk count fits in u64");
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (start, end) = bounds(c as u128);
            map(start, end)
        })
        .try_reduce(empty, |a, b| Ok(merge(a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_agree_across_settings() {
        let run = |par| {
            map_reduce(10_007, 97, par, |s, e| Ok((s..e).sum::<u128>()), |a, b| a + b, || 0).unwrap()
        };
        let expected: u128 = (0..10_007u128).sum();
        assert_eq!(run(Parallelism::Sequential), expected);
        assert_eq!(run(Parallelism::Auto), expected);
        assert_eq!(run(Parallelism::Workers(3)), expected);
        assert_eq!(
            map_reduce(0, 5, Parallelism::Auto, |_, _| Ok(1u32), |a, b| a + b, || 0).unwrap(),
            0
        );
    }

    #[test]
    fn errors_propagate() {
        let r = map_reduce(
            100,
            10,
            Parallelism::Auto,
            |s, _| {
                if s == 50 {
                    Err(crate::error::Error::Internal("boom".into()))
                } else {
                    Ok(())
                }
            },
            |_, _| (),
            || (),
        );
        assert!(r.is_err());
    }
}
