//! Execution strategy for the data-parallel loops (sweep cells, convergence
//! sub-runs, grid updates).
//!
//! Every helper returns results in input order, so a parallel run and a
//! sequential run of the same job produce bitwise-identical output. Without
//! the `parallel` feature, [`Execution::Parallel`] silently degrades to the
//! sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Map `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Fill `out[i] = f(i)`.
    pub fn fill<R, F>(self, out: &mut [R], f: F)
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => out
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, slot)| *slot = f(i)),
            _ => out
                .iter_mut()
                .enumerate()
                .for_each(|(i, slot)| *slot = f(i)),
        }
    }

    /// Apply `f` to each chunk of `data` (rows of a grid, say).
    pub fn for_each_chunk<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => data
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
            _ => data
                .chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.37).collect();
        let a = Execution::Sequential.map(&xs, |x| x.sin() * x.cos());
        let b = Execution::Parallel.map(&xs, |x| x.sin() * x.cos());
        assert_eq!(a, b);

        let mut c = vec![0.0; 64];
        let mut d = vec![0.0; 64];
        Execution::Sequential.fill(&mut c, |i| (i as f64).sqrt());
        Execution::Parallel.fill(&mut d, |i| (i as f64).sqrt());
        assert_eq!(c, d);
    }

    #[test]
    fn chunks_see_their_index() {
        let mut v = vec![0usize; 12];
        Execution::Parallel.for_each_chunk(&mut v, 4, |row, c| c.iter_mut().for_each(|x| *x = row));
        assert_eq!(v, [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }
}
