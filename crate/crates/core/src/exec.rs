/// Execution policy for the data-parallel loops of the pipeline.
///
/// `Parallel` runs on the current rayon pool (install a sized pool to bound
/// the worker count). Without the `parallel` feature it degrades to
/// `Sequential`. Both policies produce identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Evaluates `f(0..n)` and collects the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Applies `f(chunk_index, chunk)` over disjoint chunks of `data`.
    pub fn chunks_mut<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk_len = chunk_len.max(1);
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                data.par_chunks_mut(chunk_len).enumerate().for_each(|(k, c)| f(k, c));
            }
            _ => data.chunks_mut(chunk_len).enumerate().for_each(|(k, c)| f(k, c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let a = Exec::Sequential.map(1000, |i| i * i);
        let b = Exec::Parallel.map(1000, |i| i * i);
        assert_eq!(a, b);

        let mut x = vec![0usize; 103];
        let mut y = x.clone();
        Exec::Sequential.chunks_mut(&mut x, 10, |k, c| c.iter_mut().for_each(|v| *v = k));
        Exec::Parallel.chunks_mut(&mut y, 10, |k, c| c.iter_mut().for_each(|v| *v = k));
        assert_eq!(x, y);
        assert_eq!(x[102], 10);
    }
}
