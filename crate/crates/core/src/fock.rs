//! Fixed-particle-number Fock bases over K bosonic modes and sparse
//! realization of normal-ordered, number-conserving operators.
//!
//! Basis states are occupation tuples `(n_1, ..., n_K)` with `Σ n_k = N`,
//! enumerated in lexicographically descending order. The order is frozen:
//! golden files and serialized states rely on it.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("mode index {0} out of range for K={1}")]
    ModeOutOfRange(usize, usize),
    #[error("term does not conserve particle number ({creators} creators vs {annihilators} annihilators)")]
    NonConserving { creators: usize, annihilators: usize },
    #[error("vector dimension {got} does not match basis dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("vector not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),
    #[error("term maps a basis state outside the fixed-N sector")]
    OutOfSector,
}

/// Occupation-number state: particles per mode, `Σ n_k = N` of its basis.
pub type OccupationState = Vec<u32>;

/// All occupation tuples over `K` modes summing to `N`, with bidirectional
/// indexing.
#[derive(Debug, Clone)]
pub struct FockBasis {
    k: usize,
    n: u32,
    states: Vec<OccupationState>,
    index: HashMap<OccupationState, usize>,
}

/// Enumerate tuples of length `k` summing to `n`, lexicographically
/// descending.
fn enumerate_tuples(k: usize, n: u32) -> Vec<OccupationState> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    fn rec(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<OccupationState>) {
        if pos == cur.len() - 1 {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(cur, pos + 1, left - v, out);
        }
    }
    if k == 0 {
        return out;
    }
    rec(&mut cur, 0, n, &mut out);
    out
}

impl FockBasis {
    /// Full fixed-N basis: `binomial(N+K-1, K-1)` states.
    pub fn new(k: usize, n: u32) -> Self {
        assert!(k >= 1, "mode count must be at least 1");
        Self::from_states(k, n, enumerate_tuples(k, n))
    }

    /// Basis restricted to states satisfying `keep` (e.g. a momentum
    /// superselection sector). The operator built on it must map the sector
    /// to itself.
    pub fn filtered(k: usize, n: u32, keep: impl Fn(&[u32]) -> bool) -> Self {
        let states = enumerate_tuples(k, n)
            .into_iter()
            .filter(|s| keep(s))
            .collect();
        Self::from_states(k, n, states)
    }

    fn from_states(k: usize, n: u32, states: Vec<OccupationState>) -> Self {
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self { k, n, states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn modes(&self) -> usize {
        self.k
    }

    pub fn total_n(&self) -> u32 {
        self.n
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn states(&self) -> &[OccupationState] {
        &self.states
    }

    pub fn index_of(&self, state: &[u32]) -> Option<usize> {
        self.index.get(state).copied()
    }
}

/// One normal-ordered monomial `coeff · Π a†_c Π a_a`.
///
/// Mode indices are positions in the basis tuple (0-based); models decide
/// what physical momentum each position carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub creators: Vec<usize>,
    pub annihilators: Vec<usize>,
}

impl Term {
    pub fn new(coefficient: f64, creators: Vec<usize>, annihilators: Vec<usize>) -> Self {
        Self { coefficient, creators, annihilators }
    }

    /// `coeff · n̂_m`
    pub fn number(coefficient: f64, mode: usize) -> Self {
        Self::new(coefficient, vec![mode], vec![mode])
    }

    pub fn conserves_number(&self) -> bool {
        self.creators.len() == self.annihilators.len()
    }

    /// The Hermitian conjugate (creators and annihilators swapped).
    pub fn adjoint(&self) -> Self {
        Self::new(self.coefficient, self.annihilators.clone(), self.creators.clone())
    }

    /// Act on an occupation state. Returns the amplitude (ladder factors
    /// times the coefficient) and the resulting state, or `None` when an
    /// annihilator hits an empty mode.
    pub fn apply(&self, state: &[u32]) -> Result<Option<(f64, OccupationState)>, FockError> {
        let k = state.len();
        for &m in self.creators.iter().chain(self.annihilators.iter()) {
            if m >= k {
                return Err(FockError::ModeOutOfRange(m, k));
            }
        }
        let mut occ: OccupationState = state.to_vec();
        // accumulate the ladder factors as one integer before the square
        // root, so diagonal amplitudes (perfect squares) come out exact
        let mut product: u64 = 1;
        for &m in &self.annihilators {
            if occ[m] == 0 {
                return Ok(None);
            }
            product *= occ[m] as u64;
            occ[m] -= 1;
        }
        for &m in &self.creators {
            occ[m] += 1;
            product *= occ[m] as u64;
        }
        Ok(Some((self.coefficient * (product as f64).sqrt(), occ)))
    }
}

/// Sparse Hermitian (real-symmetric) matrix realization of a term list on a
/// fixed-N basis, stored as compressed rows.
#[derive(Debug, Clone)]
pub struct ManyBodyOperator {
    basis: Arc<FockBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl ManyBodyOperator {
    /// Assemble the matrix of `terms` on `basis`. Duplicate entries are
    /// summed; the result is symmetrized exactly (entries averaged with
    /// their transpose) so that `H == Hᵀ` holds bitwise.
    pub fn build(terms: &[Term], basis: Arc<FockBasis>) -> Result<Self, FockError> {
        for t in terms {
            if !t.conserves_number() {
                return Err(FockError::NonConserving {
                    creators: t.creators.len(),
                    annihilators: t.annihilators.len(),
                });
            }
        }
        let dim = basis.dim();
        // per-row maps during assembly, compressed afterwards
        let mut rows: Vec<HashMap<usize, f64>> = vec![HashMap::new(); dim];
        for (j, s) in basis.states().iter().enumerate() {
            for t in terms {
                if let Some((amp, out)) = t.apply(s)? {
                    let i = basis.index_of(&out).ok_or(FockError::OutOfSector)?;
                    *rows[i].entry(j).or_insert(0.0) += amp;
                }
            }
        }
        // symmetrize: H <- (H + Hᵀ)/2, exact for Hermitian term lists
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            let mut entries: Vec<(usize, f64)> = rows[i]
                .iter()
                .map(|(&j, &v)| {
                    let vt = rows[j].get(&i).copied().unwrap_or(0.0);
                    (j, 0.5 * (v + vt))
                })
                .collect();
            // transpose partner may exist where this row has no entry
            entries.sort_unstable_by_key(|e| e.0);
            for (j, v) in entries {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let op = Self { basis, row_ptr, cols, vals };
        Ok(op.complete_symmetry())
    }

    /// Insert mirror entries for positions where only one of (i,j)/(j,i) was
    /// touched during assembly.
    fn complete_symmetry(self) -> Self {
        let dim = self.basis.dim();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for i in 0..dim {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                rows[i].push((self.cols[idx], self.vals[idx]));
            }
        }
        let snapshot = rows.clone();
        for i in 0..dim {
            for &(j, v) in &snapshot[i] {
                if j != i && !snapshot[j].iter().any(|&(c, _)| c == i) {
                    rows[j].push((i, v));
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable_by_key(|e| e.0);
            for (j, v) in r {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { basis: self.basis, row_ptr, cols, vals }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(pos) => self.vals[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for i in 0..self.dim() {
            let mut acc = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            y[i] = acc;
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let dim = self.dim();
        let mut m = Array2::zeros((dim, dim));
        for i in 0..dim {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[[i, self.cols[idx]]] = self.vals[idx];
            }
        }
        m
    }

    /// `⟨v|H|v⟩` for a normalized real vector.
    pub fn expectation(&self, v: &[f64]) -> Result<f64, FockError> {
        if v.len() != self.dim() {
            return Err(FockError::DimensionMismatch { got: v.len(), want: self.dim() });
        }
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if (norm2.sqrt() - 1.0).abs() > 1e-12 {
            return Err(FockError::NotNormalized((norm2.sqrt() - 1.0).abs()));
        }
        let mut hv = vec![0.0; v.len()];
        self.matvec(v, &mut hv);
        Ok(v.iter().zip(&hv).map(|(a, b)| a * b).sum())
    }

    /// Maximum absolute asymmetry `max |H_ij - H_ji|`. Zero by construction.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[idx];
                worst = worst.max((self.vals[idx] - self.entry(j, i)).abs());
            }
        }
        worst
    }
}

/// Diagonal of the number operator `n̂_mode` on a basis.
pub fn number_diagonal(basis: &FockBasis, mode: usize) -> Array1<f64> {
    Array1::from_iter(basis.states().iter().map(|s| s[mode] as f64))
}

/// `⟨v| a†_k a_l |v⟩` one-body density matrix element for a real vector.
pub fn one_body_element(basis: &FockBasis, v: &[f64], k: usize, l: usize) -> f64 {
    let term = Term::new(1.0, vec![k], vec![l]);
    let mut acc = 0.0;
    for (j, s) in basis.states().iter().enumerate() {
        if v[j] == 0.0 {
            continue;
        }
        if let Ok(Some((amp, out))) = term.apply(s) {
            if let Some(i) = basis.index_of(&out) {
                acc += v[i] * amp * v[j];
            }
        }
    }
    acc
}
