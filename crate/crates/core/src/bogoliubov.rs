//! Quadratic (Bogoliubov) expansion around a condensate point and numerical
//! symplectic diagonalization.
//!
//! A quadratic boson Hamiltonian is stored as
//! `H = H₀ + Σ_k (l_k â†_k + h.c.) + Σ_kl A_kl â†_k â_l
//!    + ½ Σ_kl (B_kl â†_k â†_l + h.c.)`
//! over the K fluctuation modes. Diagonalization runs the Cholesky (Colpa)
//! route when the fluctuation matrix is positive definite and falls back to
//! a general eigen-decomposition of 𝒥·M with symplectic Gram-Schmidt
//! normalization otherwise, which is required near a gapless point where the
//! Cholesky factorization breaks down.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Cholesky, Determinant, Eig, Eigh, Inverse, UPLO};
use num_complex::Complex64;
use thiserror::Error;

use crate::cnumber::{h_bog_generic, CNumberPoint};
use crate::fock::Term;

#[derive(Debug, Error)]
pub enum BogoliubovError {
    #[error("condensate mode empty: (1-x)cos²θ = {0:.3e}, substitution singular")]
    EmptyCondensate(f64),
    #[error("expansion point is not stationary: |linear| = {0:.3e}")]
    NonStationary(f64),
    #[error("unstable expansion point: max |Im ε| = {max_imag:.3e}")]
    UnstableExpansionPoint { max_imag: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Quadratic form of a boson Hamiltonian over K fluctuation modes.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    /// Zeroth order H₀.
    pub constant: f64,
    /// Coefficients of â†_k (their conjugates multiply â_k).
    pub linear: Array1<Complex64>,
    /// Hermitian normal block.
    pub a: Array2<Complex64>,
    /// Symmetric anomalous block.
    pub b: Array2<Complex64>,
}

impl QuadraticForm {
    pub fn modes(&self) -> usize {
        self.a.nrows()
    }

    /// Fluctuation matrix `[[B*, A], [Aᵀ, B]]` whose determinant vanishes
    /// exactly when a gapless direction exists.
    pub fn hessian_m(&self) -> Array2<Complex64> {
        let k = self.modes();
        let mut m = Array2::zeros((2 * k, 2 * k));
        for i in 0..k {
            for j in 0..k {
                m[[i, j]] = self.b[[i, j]].conj();
                m[[i, k + j]] = self.a[[i, j]];
                m[[k + i, j]] = self.a[[j, i]];
                m[[k + i, k + j]] = self.b[[i, j]];
            }
        }
        m
    }

    pub fn det_m(&self) -> f64 {
        self.hessian_m().det().expect("finite matrix").re
    }

    /// Dynamical-matrix form `[[A, B], [B*, A*]]` in the `(α̂, α̂†)` basis.
    fn big_m(&self) -> Array2<Complex64> {
        let k = self.modes();
        let mut m = Array2::zeros((2 * k, 2 * k));
        for i in 0..k {
            for j in 0..k {
                m[[i, j]] = self.a[[i, j]];
                m[[i, k + j]] = self.b[[i, j]];
                m[[k + i, j]] = self.b[[i, j]].conj();
                m[[k + i, k + j]] = self.a[[i, j]].conj();
            }
        }
        // exact Hermitization guards round-off from the expansion
        let mh = m.t().mapv(|z| z.conj());
        (&m + &mh).mapv(|z| 0.5 * z)
    }
}

/// Result of a symplectic diagonalization: `â_k = Σ_m V_km b̂_m + Ū_km b̂†_m`
/// with `VV† − U*Uᵀ = 𝟙` and `VU† − U*Vᵀ = 0`.
#[derive(Debug, Clone)]
pub struct BogoliubovResult {
    pub u: Array2<Complex64>,
    pub v: Array2<Complex64>,
    /// Non-negative branch, ascending.
    pub energies: Vec<f64>,
    /// Marks energies below `zero_tol` (gapless directions).
    pub zero_modes: Vec<bool>,
    /// Max deviation of `𝒯†𝒥𝒯` from `𝒥` over the non-zero-mode block.
    pub symplectic_residual: f64,
}

pub const ZERO_TOL: f64 = 1e-8;
const LINEAR_TOL: f64 = 1e-6;

/// Quadratic expansion of a 3-mode term list around a condensate point. The
/// condensate is mode 1 (index 0), eliminated by number conservation; the
/// K=2 fluctuation space holds modes 2 and 3. Coefficients are obtained from
/// Wirtinger derivatives of the c-number energy, evaluated by
/// Richardson-extrapolated central differences.
pub fn expand_quadratic(
    terms: &[Term],
    point: &CNumberPoint,
    n: f64,
) -> Result<QuadraticForm, BogoliubovError> {
    let condensate_frac = (1.0 - point.x) * point.theta.cos().powi(2);
    if condensate_frac < 1e-9 {
        return Err(BogoliubovError::EmptyCondensate(condensate_frac));
    }
    let base = point.amplitudes(n);
    // real coordinates (u2, v2, u3, v3) of the two fluctuation modes
    let f = |z: &[f64; 4]| -> f64 {
        let amps = [
            base[0],
            Complex64::new(z[0], z[1]),
            Complex64::new(z[2], z[3]),
        ];
        h_bog_generic(terms, 0, &amps, n).expect("step stays inside the depletion bound")
    };
    let z0 = [base[1].re, base[1].im, base[2].re, base[2].im];
    // higher derivatives grow near the condensate-depletion edge; shrink the
    // step with the condensate fraction to keep the truncation error small
    let h = 1e-3 * n.sqrt().max(1e-6) * condensate_frac.sqrt().max(0.03);

    let eval = |dz: &[f64; 4]| {
        let mut z = z0;
        for i in 0..4 {
            z[i] += dz[i];
        }
        f(&z)
    };
    let f0 = f(&z0);

    // Richardson-extrapolated central differences: d(h/2) refined by
    // (4 d(h/2) - d(h)) / 3
    let grad1 = |i: usize, step: f64| {
        let mut p = [0.0; 4];
        p[i] = step;
        let mut m = [0.0; 4];
        m[i] = -step;
        (eval(&p) - eval(&m)) / (2.0 * step)
    };
    let diag2 = |i: usize, step: f64| {
        let mut p = [0.0; 4];
        p[i] = step;
        let mut m = [0.0; 4];
        m[i] = -step;
        (eval(&p) - 2.0 * f0 + eval(&m)) / (step * step)
    };
    let cross2 = |i: usize, j: usize, step: f64| {
        let mut pp = [0.0; 4];
        pp[i] = step;
        pp[j] += step;
        let mut pm = [0.0; 4];
        pm[i] = step;
        pm[j] -= step;
        let mut mp = [0.0; 4];
        mp[i] = -step;
        mp[j] += step;
        let mut mm = [0.0; 4];
        mm[i] = -step;
        mm[j] -= step;
        (eval(&pp) - eval(&pm) - eval(&mp) + eval(&mm)) / (4.0 * step * step)
    };
    let richardson = |g: &dyn Fn(f64) -> f64| (4.0 * g(0.5 * h) - g(h)) / 3.0;

    let mut grad = [0.0; 4];
    let mut hess = [[0.0; 4]; 4];
    for i in 0..4 {
        grad[i] = richardson(&|s| grad1(i, s));
        hess[i][i] = richardson(&|s| diag2(i, s));
        for j in (i + 1)..4 {
            let v = richardson(&|s| cross2(i, j, s));
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }

    // Wirtinger conversion: ∂/∂a* = ½(∂u + i∂v),
    // A_kl = ¼[H_uu + H_vv + i(H_vu − H_uv)], B_kl = ¼[H_uu − H_vv + i(H_vu + H_uv)]
    let u = [0, 2];
    let v = [1, 3];
    let mut linear = Array1::zeros(2);
    let mut a = Array2::zeros((2, 2));
    let mut b = Array2::zeros((2, 2));
    for k in 0..2 {
        linear[k] = Complex64::new(grad[u[k]], grad[v[k]]) * 0.5;
        for l in 0..2 {
            let huu = hess[u[k]][u[l]];
            let hvv = hess[v[k]][v[l]];
            let hvu = hess[v[k]][u[l]];
            let huv = hess[u[k]][v[l]];
            a[[k, l]] = Complex64::new(huu + hvv, hvu - huv) * 0.25;
            b[[k, l]] = Complex64::new(huu - hvv, hvu + huv) * 0.25;
        }
    }
    // enforce the exact symmetries
    let ah = a.t().mapv(|z: Complex64| z.conj());
    let a = (&a + &ah).mapv(|z| 0.5 * z);
    let bt = b.t().to_owned();
    let b = (&b + &bt).mapv(|z| 0.5 * z);

    Ok(QuadraticForm { constant: f0, linear, a, b })
}

/// Quadratic form of the periodic gas at zero total momentum: the condensate
/// mode 0 is eliminated, the fluctuation space holds `k = ±1..±k_max`.
/// `A` is diagonal with `k² − λ/2`, `B` pairs `k` with `−k` at `−λ/2`.
pub fn periodic_quadratic(lambda: f64, k_max: usize) -> QuadraticForm {
    assert!(lambda >= 0.0 && k_max > 0);
    let modes: Vec<i64> = (-(k_max as i64)..=k_max as i64).filter(|&k| k != 0).collect();
    let kk = modes.len();
    let mut a = Array2::zeros((kk, kk));
    let mut b = Array2::zeros((kk, kk));
    for (i, &k) in modes.iter().enumerate() {
        a[[i, i]] = Complex64::new((k * k) as f64 - lambda / 2.0, 0.0);
        let j = modes.iter().position(|&m| m == -k).unwrap();
        b[[i, j]] = Complex64::new(-lambda / 2.0, 0.0);
    }
    QuadraticForm { constant: 0.0, linear: Array1::zeros(kk), a, b }
}

fn apply_j(w: &Array1<Complex64>, k: usize) -> Array1<Complex64> {
    let mut out = w.clone();
    for i in k..2 * k {
        out[i] = -out[i];
    }
    out
}

fn j_product(x: &Array1<Complex64>, y: &Array1<Complex64>, k: usize) -> Complex64 {
    let jy = apply_j(y, k);
    x.iter().zip(jy.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn conj_swap(w: &Array1<Complex64>, k: usize) -> Array1<Complex64> {
    let mut out = Array1::zeros(2 * k);
    for i in 0..k {
        out[i] = w[k + i].conj();
        out[k + i] = w[i].conj();
    }
    out
}

/// Symplectic (Bogoliubov) diagonalization of a quadratic form whose linear
/// part vanishes. Returns the non-negative energy branch with zero modes
/// flagged; complex excitation energies beyond tolerance signal an unstable
/// expansion point and produce an error.
pub fn symplectic_diagonalize(q: &QuadraticForm) -> Result<BogoliubovResult, BogoliubovError> {
    let lnorm = q.linear.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if lnorm > LINEAR_TOL {
        return Err(BogoliubovError::NonStationary(lnorm));
    }
    let k = q.modes();
    let m = q.big_m();

    if let Some(res) = colpa_path(&m, k) {
        return Ok(res);
    }
    general_path(&m, k)
}

/// Cholesky route, valid for positive definite M: with M = L L† and
/// W = L† 𝒥 L Hermitian, the eigenvalues of W are the paired ±ε and
/// 𝒯 = (L†)⁻¹ U_W Λ^{1/2} is symplectic.
fn colpa_path(m: &Array2<Complex64>, k: usize) -> Option<BogoliubovResult> {
    let l = m.cholesky(UPLO::Lower).ok()?;
    let mut jl = l.clone();
    for i in k..2 * k {
        for j in 0..2 * k {
            jl[[i, j]] = -jl[[i, j]];
        }
    }
    let w = l.t().mapv(|z| z.conj()).dot(&jl);
    let wh = w.t().mapv(|z: Complex64| z.conj());
    let w = (&w + &wh).mapv(|z| 0.5 * z);
    let (evals, evecs) = w.eigh(UPLO::Lower).ok()?;
    // ascending: first k negative, last k positive; pair by magnitude
    if evals[k - 1] >= 0.0 || evals[k] <= 0.0 {
        return None;
    }
    let mut us = Array2::<Complex64>::zeros((2 * k, 2 * k));
    let mut lam = Array1::<f64>::zeros(2 * k);
    for m_i in 0..k {
        let pos = k + m_i;
        let neg = k - 1 - m_i;
        us.column_mut(m_i).assign(&evecs.column(pos));
        us.column_mut(k + m_i).assign(&evecs.column(neg));
        lam[m_i] = evals[pos];
        lam[k + m_i] = evals[pos];
        if (evals[pos] + evals[neg]).abs() > 1e-8 * evals[pos].abs().max(1.0) {
            return None;
        }
    }
    let linv = l.t().mapv(|z: Complex64| z.conj()).inv().ok()?;
    let mut t = linv.dot(&us);
    for j in 0..2 * k {
        let s = lam[j].sqrt();
        t.column_mut(j).mapv_inplace(|z| z * s);
    }
    // rebuild the negative-branch columns as exact conjugate partners of the
    // positive branch so that T carries the [[V, Ū],[U, V̄]] structure
    for m_i in 0..k {
        let w = t.column(m_i).to_owned();
        t.column_mut(k + m_i).assign(&conj_swap(&w, k));
    }
    let energies: Vec<f64> = (0..k).map(|i| lam[i]).collect();
    let zero_modes = vec![false; k];
    let residual = symplectic_residual(&t, k, &zero_modes);
    if residual > 1e-9 {
        // near criticality the factorization degrades; let the general
        // path handle it
        return None;
    }
    Some(BogoliubovResult {
        u: t.slice(s![k..2 * k, 0..k]).to_owned(),
        v: t.slice(s![0..k, 0..k]).to_owned(),
        energies,
        zero_modes,
        symplectic_residual: residual,
    })
}

fn general_path(m: &Array2<Complex64>, k: usize) -> Result<BogoliubovResult, BogoliubovError> {
    let mut jm = m.clone();
    for i in k..2 * k {
        for j in 0..2 * k {
            jm[[i, j]] = -jm[[i, j]];
        }
    }
    let (evals, evecs) = jm
        .eig()
        .map_err(|e| BogoliubovError::Numerical(format!("eigendecomposition failed: {e}")))?;

    let mut max_imag = 0.0f64;
    for ev in evals.iter() {
        let tol = 1e-8 * ev.re.abs().max(1.0);
        if ev.im.abs() > tol {
            max_imag = max_imag.max(ev.im.abs());
        }
    }
    if max_imag > 0.0 {
        return Err(BogoliubovError::UnstableExpansionPoint { max_imag });
    }

    // positive branch plus half of the zero modes
    let mut idx: Vec<usize> = (0..2 * k).collect();
    idx.sort_by(|&a, &b| evals[a].re.total_cmp(&evals[b].re));
    let pos: Vec<usize> = idx.iter().copied().filter(|&i| evals[i].re > ZERO_TOL).collect();
    let zero: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&i| evals[i].re.abs() <= ZERO_TOL)
        .collect();
    if pos.len() + zero.len() / 2 != k || zero.len() % 2 != 0 {
        return Err(BogoliubovError::Numerical(format!(
            "spectrum pairing failed: {} positive, {} zero eigenvalues for K = {k}",
            pos.len(),
            zero.len()
        )));
    }

    let mut columns: Vec<(f64, Array1<Complex64>, bool)> = Vec::with_capacity(k);
    for &i in zero.iter().take(zero.len() / 2) {
        let w = evecs.column(i).to_owned();
        let n2 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        columns.push((0.0, w.mapv(|z| z / n2), true));
    }
    // symplectic Gram-Schmidt within degenerate groups of the positive branch
    let mut kept: Vec<Array1<Complex64>> = Vec::new();
    for &i in &pos {
        let eps = evals[i].re;
        let mut w = evecs.column(i).to_owned();
        for (j, &p) in pos.iter().enumerate() {
            if p == i {
                break;
            }
            if (evals[p].re - eps).abs() <= 1e-8 * eps.max(1.0) {
                let overlap = j_product(&kept[j], &w, k);
                w = &w - &kept[j].mapv(|z| z * overlap);
            }
        }
        let s = j_product(&w, &w, k).re;
        if s <= 1e-12 {
            return Err(BogoliubovError::Numerical(format!(
                "eigenvector of ε = {eps:.3e} has non-positive symplectic norm {s:.3e}"
            )));
        }
        let w = w.mapv(|z| z / s.sqrt());
        kept.push(w.clone());
        columns.push((eps, w, false));
    }
    columns.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut t = Array2::<Complex64>::zeros((2 * k, 2 * k));
    let mut energies = Vec::with_capacity(k);
    let mut zero_modes = Vec::with_capacity(k);
    for (mcol, (eps, w, is_zero)) in columns.into_iter().enumerate() {
        t.column_mut(k + mcol).assign(&conj_swap(&w, k));
        t.column_mut(mcol).assign(&w);
        energies.push(eps);
        zero_modes.push(is_zero);
    }
    let residual = symplectic_residual(&t, k, &zero_modes);
    Ok(BogoliubovResult {
        u: t.slice(s![k..2 * k, 0..k]).to_owned(),
        v: t.slice(s![0..k, 0..k]).to_owned(),
        energies,
        zero_modes,
        symplectic_residual: residual,
    })
}

/// Max deviation of `𝒯†𝒥𝒯` from `𝒥`, skipping zero-mode columns (which
/// carry no canonical symplectic normalization).
fn symplectic_residual(t: &Array2<Complex64>, k: usize, zero_modes: &[bool]) -> f64 {
    let live: Vec<usize> = (0..2 * k)
        .filter(|&j| !zero_modes.get(j % k).copied().unwrap_or(false))
        .collect();
    let mut worst = 0.0f64;
    for &i in &live {
        let ci = t.column(i).to_owned();
        for &j in &live {
            let cj = t.column(j).to_owned();
            let val = j_product(&ci, &cj, k);
            let expected = if i == j {
                if i < k {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            };
            worst = worst.max((val - Complex64::new(expected, 0.0)).norm());
        }
    }
    worst
}

/// One sample of the Dirichlet gap curve.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GapPoint {
    pub lambda: f64,
    /// Smallest excitation energy; absent when no expansion point exists.
    pub gap: Option<f64>,
    pub det_m: Option<f64>,
    pub stable: bool,
}

/// Excitation energies alone: the moduli of the `𝒥M` eigenvalues, one per
/// ±pair, ascending. Unlike the full diagonalization this stays well defined
/// at marginal points where `M` is singular and the canonical transformation
/// cannot be normalized.
pub fn excitation_energies(q: &QuadraticForm) -> Result<Vec<f64>, BogoliubovError> {
    let k = q.modes();
    let m = q.big_m();
    let mut jm = m.clone();
    for i in k..2 * k {
        for j in 0..2 * k {
            jm[[i, j]] = -jm[[i, j]];
        }
    }
    let (eigs, _) = jm
        .eig()
        .map_err(|e| BogoliubovError::Numerical(format!("eigendecomposition failed: {e}")))?;
    let mut mags: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    mags.sort_by(f64::total_cmp);
    Ok(mags.into_iter().step_by(2).collect())
}

/// Closed-form quadratic expansion of the 3-mode box Hamiltonian around a
/// real condensate point, per particle. Analytic, so reliable arbitrarily
/// close to the fold where finite differences lose the sign of the gap.
pub fn dirichlet_quadratic(point: &CNumberPoint, lambda: f64) -> QuadraticForm {
    let (a, b) = dirichlet_quadratic_closed_form(point, lambda);
    let lin = dirichlet_linear_closed_form(point, lambda);
    QuadraticForm {
        constant: crate::cnumber::h_bog(point, lambda),
        linear: ndarray::arr1(&[Complex64::new(lin[0], 0.0), Complex64::new(lin[1], 0.0)]),
        a,
        b,
    }
}

/// Smallest Bogoliubov excitation of the 3-mode system along a λ grid,
/// expanded around the interior stationary point at each λ. Points without
/// such a point, and unstable expansions, are marked rather than failing
/// the scan.
pub fn dirichlet_gap_curve(lambda_grid: &[f64]) -> Vec<GapPoint> {
    crate::map_items(lambda_grid, |&lambda| {
        let Some(point) = crate::cnumber::stationary_point(lambda) else {
            return GapPoint { lambda, gap: None, det_m: None, stable: false };
        };
        let q = dirichlet_quadratic(&point, lambda);
        let det = q.det_m();
        let stable = symplectic_diagonalize(&q).is_ok();
        let gap = excitation_energies(&q).ok().and_then(|e| e.first().copied());
        GapPoint { lambda, gap, det_m: Some(det), stable }
    })
}

/// Closed-form linear coefficients `(l₂, l₃)` of the quadratic expansion at
/// `Δ₂ = Δ₃ = 0` per √N (they multiply `√N â_k + h.c.`).
pub fn dirichlet_linear_closed_form(point: &CNumberPoint, lambda: f64) -> [f64; 2] {
    let (x, th, l) = (point.x, point.theta, lambda);
    let s = th.sin();
    let c = th.cos();
    let r = (1.0 - x).sqrt();
    let q = r * c;
    let pref = 1.0 / (8.0 * q);
    let l2 = 6.0
        * x.sqrt()
        * (3.0 * l * r.powi(3) * s.powi(3)
            + l * r * (4.0 * x - 3.0) * s
            + (l * (2.0 * x - 1.0) + 1.0) * q
            + l * (s * s) / (c * c) * q.powi(3));
    let l3 = l * (x - 1.0) * (x - 1.0) * (4.0 * th).cos()
        + l * (7.0 * x - 1.0) * (x - 1.0) * (2.0 * th).cos()
        + 2.0 * r * s * q * (3.0 * l * (x - 1.0) * (2.0 * th).cos() + 8.0);
    [pref * l2, pref * l3]
}

/// Closed-form `(A, B)` blocks of the quadratic expansion at `Δ₂ = Δ₃ = 0`.
pub fn dirichlet_quadratic_closed_form(
    point: &CNumberPoint,
    lambda: f64,
) -> (Array2<Complex64>, Array2<Complex64>) {
    let (x, th, l) = (point.x, point.theta, lambda);
    let s = th.sin();
    let c = th.cos();
    let sec = 1.0 / c;
    let r = (1.0 - x).sqrt();
    let q = r * c;
    let c2 = (2.0 * th).cos();
    let c4 = (4.0 * th).cos();
    let p = 1.0 / (128.0 * q.powi(3));

    // coefficient of â₂â₂ inside the bracket
    let c22 = 16.0
        * l
        * (r * ((23.0 - 16.0 * x) * x - 4.0) * s + 4.0 * (4.0 * x - 1.0) * q.powi(3)
            - r.powi(3) * s.powi(3) * (2.0 * (x - 1.0) * c2 + 21.0 * x - 6.0));
    // coefficient of â₂†â₂
    let c2d2 = 16.0
        * (2.0 * sec * sec * (l * (10.0 * x - 1.0) + 3.0) * q.powi(3)
            + s * (-14.0 * l * r.powi(5) * s.powi(4)
                - 7.0 * l * r.powi(3) * (7.0 * x - 4.0) * s * s
                - 6.0 * l * (s / c).powi(3) * sec * q.powi(5)
                + l * r * ((49.0 - 32.0 * x) * x - 14.0)
                - 2.0 * (s / c) * sec * (l * (13.0 * x - 4.0) + 3.0) * q.powi(3)));
    // coefficient of â₂â₃
    let c23 = 16.0
        * l
        * x.sqrt()
        * (q * q)
        * (8.0 * (x - 1.0) * c2 + 3.0 * x * sec * sec + 10.0 * r * s * q - x + 1.0);
    // coefficient of â₂â₃†
    let c23d = 16.0
        * l
        * x.sqrt()
        * (q * q)
        * (10.0 * (x - 1.0) * c2 + 3.0 * x * sec * sec + 2.0 * r * s * q + x - 1.0);
    // coefficient of â₃â₃
    let c33 = l
        * (x - 1.0)
        * (32.0 * c2 * q + 32.0 * x * q + 32.0 * c4 * sec * sec * q.powi(3)
            - 6.0 * r * s * (4.0 * (3.0 * x - 2.0) * c2 + 3.0 * (x - 1.0) * c4 + 17.0 * x - 5.0));
    // coefficient of â₃â₃†
    let c3d3 = 16.0
        * (q * q)
        * sec
        * sec
        * (2.0 * (l * (3.0 * x - 1.0) + 8.0) * q
            + s * (s * (l
                * s
                * (5.0 * (x - 1.0) * s * (3.0 * r * s + 4.0 * q) + 9.0 * r * (3.0 - 4.0 * x))
                - 2.0 * (l * (13.0 * x - 11.0) + 8.0) * q)
                + 12.0 * l * r * (2.0 * x - 1.0)));

    // each printed coefficient maps to its normal-ordered A/B entry with
    // weight P once the overall ½ and the h.c. copy cancel
    let mut a = Array2::zeros((2, 2));
    let mut b = Array2::zeros((2, 2));
    a[[0, 0]] = Complex64::new(p * c2d2, 0.0);
    a[[1, 1]] = Complex64::new(p * c3d3, 0.0);
    a[[0, 1]] = Complex64::new(p * c23d, 0.0);
    a[[1, 0]] = a[[0, 1]];
    b[[0, 0]] = Complex64::new(p * c22, 0.0);
    b[[1, 1]] = Complex64::new(p * c33, 0.0);
    b[[0, 1]] = Complex64::new(p * c23, 0.0);
    b[[1, 0]] = b[[0, 1]];
    (a, b)
}
