use alloc::vec::Vec;

/// Symmetric off-diagonal coupling matrix in CSR layout.
///
/// Applying it computes `(K f)_i = sum_j k_ij (f_j - f_i)`, so constants are
/// annihilated exactly regardless of rounding in the weights.
#[derive(Debug, Clone)]
pub(crate) struct Couplings {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    /// `sum_j k_ij` per row.
    row_sums: Vec<f64>,
}

impl Couplings {
    /// Assembles from unordered `(i, j, k_ij)` triplets; duplicates are summed and
    /// each triplet is mirrored into `(j, i)`.
    pub(crate) fn from_symmetric_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|_| Vec::new()).collect();
        for &(i, j, k) in triplets {
            debug_assert_ne!(i, j);
            rows[i].push((j, k));
            rows[j].push((i, k));
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut row_sums = Vec::with_capacity(n);
        row_start.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(j, _)| j);
            let mut sum = 0.0;
            let mut last: Option<usize> = None;
            for &(j, k) in row.iter() {
                if last == Some(j) {
                    *weights.last_mut().unwrap() += k;
                } else {
                    cols.push(j);
                    weights.push(k);
                    last = Some(j);
                }
            }
            for &w in &weights[*row_start.last().unwrap()..] {
                sum += w;
            }
            row_sums.push(sum);
            row_start.push(cols.len());
        }
        Couplings { row_start, cols, weights, row_sums }
    }

    pub(crate) fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// `out_i = sum_j k_ij (x_j - x_i)`.
    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let xi = x[i];
            let mut acc = 0.0;
            for idx in self.row_start[i]..self.row_start[i + 1] {
                acc += self.weights[idx] * (x[self.cols[idx]] - xi);
            }
            *o = acc;
        }
    }
}
