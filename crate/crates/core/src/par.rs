//! Order-preserving data-parallel map with a sequential fallback.
//!
//! Without the `parallel` feature, [`Exec::Parallel`] runs sequentially.
//! Results are collected in input order either way, so outputs do not depend
//! on the execution mode.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let sq = |x: &u64| x.wrapping_mul(*x) ^ 0x5555;
        assert_eq!(map(Exec::Sequential, &xs, sq), map(Exec::Parallel, &xs, sq));
        assert_eq!(
            map_range(Exec::Sequential, 77, |i| i * 3),
            map_range(Exec::Parallel, 77, |i| i * 3)
        );
    }
}
