//! Condensate (c-number) energy landscape of the 3-mode box gas: closed-form
//! energy per particle, gradients and Hessians, minima and stationary
//! inflection points, and coherent-state utilities.
//!
//! The landscape coordinates are `x ∈ [0,1]` (relative 2-mode occupation),
//! `θ ∈ [0,π/2]` (1↔3 distribution angle) and two relative phases `Δ₂, Δ₃`.
//! At every minimum `Δ₂ = 0` and `Δ₃ ∈ {0, π}`, so the scans enumerate the
//! two phase branches and descend in `(x, θ)` only.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::fock::Term;

#[derive(Debug, Error)]
pub enum CNumberError {
    #[error("condensate depletion exceeds N: Σ|a_k|² = {depletion} > {n}")]
    DepletionExceedsN { depletion: f64, n: f64 },
    #[error("bisection bracket failed: no sign change on [{0}, {1}]")]
    BracketFailure(f64, f64),
    #[error("no interior stationary point exists at λ = {0}")]
    NoStationaryPoint(f64),
}

/// A point of the condensate parametrization.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CNumberPoint {
    pub x: f64,
    pub theta: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl CNumberPoint {
    pub fn real(x: f64, theta: f64) -> Self {
        Self { x, theta, delta2: 0.0, delta3: 0.0 }
    }

    pub fn with_delta3(x: f64, theta: f64, delta3: f64) -> Self {
        Self { x, theta, delta2: 0.0, delta3 }
    }

    /// Mode amplitudes `√N (√(1-x)cosθ, √x e^{iΔ₂}, √(1-x)sinθ e^{iΔ₃})`.
    pub fn amplitudes(&self, n: f64) -> [Complex64; 3] {
        let r = n.sqrt();
        let a1 = r * ((1.0 - self.x).sqrt()) * self.theta.cos();
        let a2 = r * self.x.sqrt() * Complex64::from_polar(1.0, self.delta2);
        let a3 = r * (1.0 - self.x).sqrt() * self.theta.sin()
            * Complex64::from_polar(1.0, self.delta3);
        [Complex64::new(a1, 0.0), a2, a3]
    }
}

/// Pattern vector of a stored state: the amplitude triple of
/// [`CNumberPoint::amplitudes`], with phases optionally dropped (a reader
/// sensitive only to moduli).
pub fn pattern_vector(point: &CNumberPoint, n: u32, include_phases: bool) -> [Complex64; 3] {
    let p = if include_phases {
        *point
    } else {
        CNumberPoint::real(point.x, point.theta)
    };
    p.amplitudes(n as f64)
}

/// Energy per particle of the 3-mode Bogoliubov Hamiltonian at collective
/// coupling λ (closed form).
pub fn h_bog(p: &CNumberPoint, lambda: f64) -> f64 {
    let (x, th, d2, d3) = (p.x, p.theta, p.delta2, p.delta3);
    let s = th.sin();
    let c = th.cos();
    let s2t = (2.0 * th).sin();
    let kinetic = 0.25 * (1.0 + 3.0 * x + 8.0 * (1.0 - x) * s * s);
    let mut bracket = s2t * s2t * (1.0 - x) * (1.0 - x) * (0.5 + (2.0 * d3).cos());
    bracket += 3.0 + 2.0 * x - 2.0 * x * x
        + 4.0 * x * (1.0 - x)
            * ((2.0 * d2).cos() * c * c + (2.0 * d2 - 2.0 * d3).cos() * s * s);
    bracket += 2.0
        * s2t
        * (1.0 - x)
        * (x * (2.0 * d2 - d3).cos() + d3.cos() * (2.0 * x - (1.0 - x) * c * c));
    kinetic - lambda / 8.0 * bracket
}

/// Plain c-number substitution of a term list: every creator contributes
/// `a*`, every annihilator `a`. This equals the coherent-state expectation
/// `⟨a|Ĥ|a⟩` of a normal-ordered Hamiltonian, exactly at any N.
pub fn coherent_expectation(terms: &[Term], amplitudes: &[Complex64]) -> f64 {
    let mut total = Complex64::new(0.0, 0.0);
    for t in terms {
        let mut v = Complex64::new(t.coefficient, 0.0);
        for &m in &t.creators {
            v *= amplitudes[m].conj();
        }
        for &m in &t.annihilators {
            v *= amplitudes[m];
        }
        total += v;
    }
    total.re
}

/// Generic Bogoliubov (c-number) energy: the `condensate` mode amplitude is
/// fixed by number conservation to `√(N - Σ|a_k|²)`, the remaining modes take
/// the supplied amplitudes (indexed by tuple position, condensate slot
/// ignored). Returns the total energy, not per particle.
pub fn h_bog_generic(
    terms: &[Term],
    condensate: usize,
    amplitudes: &[Complex64],
    n: f64,
) -> Result<f64, CNumberError> {
    let depletion: f64 = amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != condensate)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if depletion > n * (1.0 + 1e-12) {
        return Err(CNumberError::DepletionExceedsN { depletion, n });
    }
    let mut full = amplitudes.to_vec();
    full[condensate] = Complex64::new((n - depletion).max(0.0).sqrt(), 0.0);
    Ok(coherent_expectation(terms, &full))
}

/// Closed-form gradient and Hessian of [`h_bog`] in `(x, θ)` per particle,
/// valid on the `Δ₂ = Δ₃ = 0` sheet.
pub fn gradient_hessian(p: &CNumberPoint, lambda: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    debug_assert!(p.delta2 == 0.0 && p.delta3 == 0.0);
    let (x, th) = (p.x, p.theta);
    let l = lambda;
    let (s2, c2) = ((2.0 * th).sin(), (2.0 * th).cos());
    let (s4, c4) = ((4.0 * th).sin(), (4.0 * th).cos());

    let dx = (-16.0 * l * s2 - 2.0 * l * s4 + 16.0 * c2 - 9.0 * l
        + 28.0 * l * x * s2
        + 2.0 * l * x * s4
        + 3.0 * l * (x - 1.0) * c4
        + 21.0 * l * x
        - 4.0)
        / 16.0;
    let dth = 0.25
        * (x - 1.0)
        * (-8.0 * s2 + l * (x - 1.0) * c4 - l * c2 * (3.0 * (x - 1.0) * s2 - 7.0 * x + 1.0));

    let dxx = l / 16.0 * (28.0 * s2 + 2.0 * s4 + 3.0 * c4 + 21.0);
    let dxth = 0.25
        * (-8.0 * s2 + 2.0 * l * (7.0 * x - 4.0) * c2 + l * (x - 1.0) * (2.0 * c4 - 3.0 * s4));
    let dthth = 0.5
        * (1.0 - x)
        * (8.0 * c2 + l * ((7.0 * x - 1.0) * s2 + 2.0 * (x - 1.0) * s4 + 3.0 * (x - 1.0) * c4));

    ([dx, dth], [[dxx, dxth], [dxth, dthth]])
}

/// One local minimum of the landscape.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Minimum {
    pub point: CNumberPoint,
    pub energy_per_particle: f64,
}

/// Scan output at one λ.
#[derive(Debug, Clone, Serialize)]
pub struct LandscapeResult {
    pub lambda: f64,
    /// All distinct local minima (global first).
    pub minima: Vec<Minimum>,
    /// Stationary inflection point, when one exists at this λ: the point and
    /// `det M` of the fluctuation matrix there.
    pub inflection: Option<(CNumberPoint, f64)>,
    /// `(x, E_min(x)/N)` marginal curve, minimized over θ and Δ₃.
    pub marginal_curve: Vec<(f64, f64)>,
}

const GRAD_TOL: f64 = 1e-10;
const X_LO: f64 = 1e-12;
const X_HI: f64 = 1.0;
const TH_LO: f64 = 0.0;
const TH_HI: f64 = std::f64::consts::FRAC_PI_2;

fn clamp_point(x: f64, th: f64) -> (f64, f64) {
    (x.clamp(X_LO, X_HI), th.clamp(TH_LO, TH_HI))
}

/// Projected gradient descent with backtracking on the Δ₃-branch surface.
fn descend(lambda: f64, delta3: f64, mut x: f64, mut th: f64) -> (f64, f64, f64) {
    let f = |x: f64, th: f64| h_bog(&CNumberPoint::with_delta3(x, th, delta3), lambda);
    // on the Δ₃ = π branch the closed-form gradient does not apply; use
    // central differences there (the branch flips θ's sign structure)
    let grad = |x: f64, th: f64| -> [f64; 2] {
        if delta3 == 0.0 {
            gradient_hessian(&CNumberPoint::real(x, th), lambda).0
        } else {
            let h = 1e-7;
            [
                (f(x + h, th) - f(x - h, th)) / (2.0 * h),
                (f(x, th + h) - f(x, th - h)) / (2.0 * h),
            ]
        }
    };
    let mut e = f(x, th);
    for _ in 0..4000 {
        let g = grad(x, th);
        // project out components pushing into the box walls
        let gx = if (x <= X_LO && g[0] > 0.0) || (x >= X_HI && g[0] < 0.0) { 0.0 } else { g[0] };
        let gt = if (th <= TH_LO && g[1] > 0.0) || (th >= TH_HI && g[1] < 0.0) { 0.0 } else { g[1] };
        let gnorm = (gx * gx + gt * gt).sqrt();
        if gnorm < GRAD_TOL {
            break;
        }
        let mut step = 0.1;
        let mut advanced = false;
        for _ in 0..40 {
            let (nx, nth) = clamp_point(x - step * gx, th - step * gt);
            let ne = f(nx, nth);
            if ne < e - 1e-16 {
                x = nx;
                th = nth;
                e = ne;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    (x, th, e)
}

/// Minimize over θ and Δ₃ at fixed x (one marginal-curve sample). Returns
/// `(θ*, Δ₃*, E/N)`.
pub fn marginal_at(lambda: f64, x: f64) -> (f64, f64, f64) {
    let mut best = (0.0, 0.0, f64::INFINITY);
    for &d3 in &[0.0, std::f64::consts::PI] {
        let f = |th: f64| h_bog(&CNumberPoint::with_delta3(x, th, d3), lambda);
        // golden-section over θ from a coarse bracket
        let grid = 48;
        let mut th_best = 0.0;
        let mut e_best = f64::INFINITY;
        for i in 0..=grid {
            let th = TH_HI * i as f64 / grid as f64;
            let e = f(th);
            if e < e_best {
                e_best = e;
                th_best = th;
            }
        }
        let mut lo = (th_best - TH_HI / grid as f64).max(TH_LO);
        let mut hi = (th_best + TH_HI / grid as f64).min(TH_HI);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let th = 0.5 * (lo + hi);
        let e = f(th);
        if e < best.2 {
            best = (th, d3, e);
        }
    }
    best
}

/// Deduplicated local minima over both Δ₃ branches from a 4×4 grid of
/// deterministic starts.
pub fn local_minima(lambda: f64) -> Vec<Minimum> {
    let mut found: Vec<Minimum> = Vec::new();
    for &d3 in &[0.0, std::f64::consts::PI] {
        for i in 0..4 {
            for j in 0..4 {
                let x0 = 0.125 + 0.25 * i as f64;
                let th0 = TH_HI * (0.125 + 0.25 * j as f64);
                let (x, th, e) = descend(lambda, d3, x0, th0);
                // also descend from the x = 0 edge once per branch
                let candidates = if i == 0 && j == 0 {
                    vec![(x, th, e), descend(lambda, d3, X_LO, 0.0)]
                } else {
                    vec![(x, th, e)]
                };
                for (x, th, e) in candidates {
                    let p = CNumberPoint::with_delta3(x, th, d3);
                    let dup = found.iter().any(|m| {
                        (m.point.x - x).abs() < 1e-5
                            && (m.point.theta - th).abs() < 1e-5
                            && (m.energy_per_particle - e).abs() < 1e-9
                    });
                    if !dup {
                        found.push(Minimum { point: p, energy_per_particle: e });
                    }
                }
            }
        }
    }
    // keep true minima only: drop descent artifacts that a nearby in-domain
    // probe undercuts, then drop coalescence-distance duplicates
    found.retain(|m| is_local_minimum(&m.point, m.energy_per_particle, lambda));
    found.sort_by(|a, b| a.energy_per_particle.total_cmp(&b.energy_per_particle));
    let mut out: Vec<Minimum> = Vec::new();
    for m in found {
        if !out.iter().any(|o| {
            (o.point.x - m.point.x).abs() < 1e-4 && (o.point.theta - m.point.theta).abs() < 1e-4
        }) {
            out.push(m);
        }
    }
    out
}

/// Stencil check of local minimality in all four landscape coordinates,
/// restricted to the domain.
fn is_local_minimum(p: &CNumberPoint, energy: f64, lambda: f64) -> bool {
    let r = 1e-4;
    let tol = 1e-11;
    // 8 in-plane directions plus phase perturbations on both angles
    let dirs: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.7071, 0.7071),
        (0.7071, -0.7071),
        (-0.7071, 0.7071),
        (-0.7071, -0.7071),
    ];
    for (ux, uth) in dirs {
        let (x, th) = clamp_point(p.x + r * ux, p.theta + r * uth);
        if (x - p.x).abs() < 0.1 * r && (th - p.theta).abs() < 0.1 * r {
            continue;
        }
        let e = h_bog(&CNumberPoint::with_delta3(x, th, p.delta3), lambda);
        if e < energy - tol {
            return false;
        }
    }
    for (d2, d3) in [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r)] {
        let q = CNumberPoint {
            x: p.x,
            theta: p.theta,
            delta2: p.delta2 + d2,
            delta3: p.delta3 + d3,
        };
        if h_bog(&q, lambda) < energy - tol {
            return false;
        }
    }
    true
}

/// Full landscape scan over a λ grid. Grid points are processed in parallel
/// when the `parallel` feature is on.
pub fn ground_state_scan(lambda_grid: &[f64]) -> Vec<LandscapeResult> {
    crate::map_items(lambda_grid, |&lambda| {
        let minima = local_minima(lambda);
        let marginal_curve: Vec<(f64, f64)> = (0..400)
            .map(|i| {
                let x = i as f64 / 399.0;
                let (_, _, e) = marginal_at(lambda, x);
                (x, e)
            })
            .collect();
        let inflection = stationary_point(lambda).map(|p| {
            let terms = crate::models::dirichlet3_terms(lambda);
            let q = crate::bogoliubov::expand_quadratic(&terms, &p, 1.0)
                .expect("interior stationary point keeps the condensate occupied");
            (p, q.det_m())
        });
        LandscapeResult { lambda, minima, inflection, marginal_curve }
    })
}

/// Newton search for an interior stationary point with `x ≠ 0` on the
/// `Δ₂ = Δ₃ = 0` sheet. Near the threshold coupling a minimum/saddle pair
/// coalesces; points with positive-semidefinite `(x, θ)` Hessian are
/// preferred, then lower energy breaks ties.
pub fn stationary_point(lambda: f64) -> Option<CNumberPoint> {
    // (psd rank: stable first), energy, point
    let mut best: Option<(bool, f64, CNumberPoint)> = None;
    for i in 1..24 {
        for j in 0..16 {
            let mut x = i as f64 / 24.0;
            let mut th = TH_HI * j as f64 / 16.0;
            let mut ok = false;
            for _ in 0..60 {
                let (g, h) = gradient_hessian(&CNumberPoint::real(x, th), lambda);
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                if det.abs() < 1e-14 {
                    break;
                }
                let dx = (g[0] * h[1][1] - g[1] * h[0][1]) / det;
                let dth = (g[1] * h[0][0] - g[0] * h[1][0]) / det;
                x -= dx;
                th -= dth;
                if !(0.0..=1.0).contains(&x) || !(TH_LO..=TH_HI).contains(&th) {
                    break;
                }
                if dx.abs() < 1e-13 && dth.abs() < 1e-13 {
                    ok = true;
                    break;
                }
            }
            if ok && x > 1e-3 && x < 0.999 {
                let (g, h) = gradient_hessian(&CNumberPoint::real(x, th), lambda);
                if g[0].abs() < GRAD_TOL && g[1].abs() < GRAD_TOL {
                    let e = h_bog(&CNumberPoint::real(x, th), lambda);
                    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                    let psd = det >= 0.0 && h[0][0] + h[1][1] >= 0.0;
                    let better = match best {
                        None => true,
                        Some((bpsd, be, _)) => (psd && !bpsd) || (psd == bpsd && e < be),
                    };
                    if better {
                        best = Some((psd, e, CNumberPoint::real(x, th)));
                    }
                }
            }
        }
    }
    best.map(|(_, _, p)| p)
}

/// Inflection of the θ-marginalized energy curve `Ē(x)`: the zero of its
/// second derivative between the interior local maximum and the `x ≠ 0`
/// local minimum. Absent when the curve has no interior dip.
pub fn x_inflection(lambda: f64) -> Option<f64> {
    let e = |x: f64| marginal_at(lambda, x).2;
    let grid = 240;
    let xs: Vec<f64> = (0..=grid).map(|i| 0.002 + 0.996 * i as f64 / grid as f64).collect();
    let es: Vec<f64> = xs.iter().map(|&x| e(x)).collect();
    // interior local minimum away from x = 0
    let mut i_min = None;
    for i in 1..grid {
        if es[i] < es[i - 1] && es[i] < es[i + 1] && xs[i] > 0.05 {
            if i_min.map_or(true, |j: usize| es[i] < es[j]) {
                i_min = Some(i);
            }
        }
    }
    let i_min = i_min?;
    // local maximum between the origin and that minimum
    let i_max = (1..i_min).max_by(|&a, &b| es[a].total_cmp(&es[b]))?;
    if i_max == 0 {
        return None;
    }
    let h = 5e-4;
    let second = |x: f64| (e(x + h) - 2.0 * e(x) + e(x - h)) / (h * h);
    let (mut lo, mut hi) = (xs[i_max], xs[i_min]);
    let mut s_lo = second(lo);
    if s_lo > 0.0 {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let s = second(mid);
        if s.signum() == s_lo.signum() {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Energy of the lowest minimum on the `x = 0` edge (θ minimized; above
/// moderate coupling the edge branch prefers θ ≠ 0).
pub fn edge_minimum_energy(lambda: f64) -> f64 {
    local_minima(lambda)
        .into_iter()
        .filter(|m| m.point.x <= 1e-3)
        .map(|m| m.energy_per_particle)
        .min_by(f64::total_cmp)
        .expect("the edge branch always carries a minimum")
}

/// Energy of the lowest `x ≠ 0` local minimum, when it exists.
fn interior_minimum_energy(lambda: f64) -> Option<f64> {
    local_minima(lambda)
        .into_iter()
        .filter(|m| m.point.x > 1e-3)
        .map(|m| m.energy_per_particle)
        .min_by(f64::total_cmp)
}

/// λ at which the interior minimum becomes degenerate with the `x = 0` one
/// (first-order ground-state transition), by bisection.
pub fn find_lambda_gs() -> Result<f64, CNumberError> {
    let gap = |lambda: f64| -> Option<f64> {
        interior_minimum_energy(lambda).map(|e| e - edge_minimum_energy(lambda))
    };
    let (mut lo, mut hi) = (3.0, 4.0);
    let g_lo = gap(lo).ok_or(CNumberError::BracketFailure(lo, hi))?;
    let g_hi = gap(hi).ok_or(CNumberError::BracketFailure(lo, hi))?;
    if g_lo.signum() == g_hi.signum() {
        return Err(CNumberError::BracketFailure(lo, hi));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let g_mid = gap(mid).ok_or(CNumberError::BracketFailure(lo, hi))?;
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest λ admitting an interior (`x ≠ 0`) stationary point. A coarse
/// existence bisection seeds a 3-variable Newton solve of the fold condition
/// `(∂E/∂x, ∂E/∂θ, det ∂²E) = 0`, where the minimum/saddle pair coalesces.
/// Returns `(λ_lm, point)`: the stationary inflection point, at which the
/// fluctuation matrix is singular and the excitation gap closes.
pub fn find_lambda_lm_dirichlet() -> Result<(f64, CNumberPoint), CNumberError> {
    let (mut lo, mut hi) = (1.5, 2.5);
    if stationary_point(lo).is_some() {
        return Err(CNumberError::BracketFailure(lo, hi));
    }
    let mut point = stationary_point(hi).ok_or(CNumberError::BracketFailure(lo, hi))?;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        match stationary_point(mid) {
            Some(p) => {
                hi = mid;
                point = p;
            }
            None => lo = mid,
        }
        if hi - lo < 1e-4 {
            break;
        }
    }

    let f = |v: [f64; 3]| -> [f64; 3] {
        let (g, h) = gradient_hessian(&CNumberPoint::real(v[0], v[1]), v[2]);
        [g[0], g[1], h[0][0] * h[1][1] - h[0][1] * h[1][0]]
    };
    let mut v = [point.x, point.theta, hi];
    for _ in 0..80 {
        let f0 = f(v);
        // Jacobian by central differences, column per variable
        let mut jac = [[0.0; 3]; 3];
        let step = 1e-6;
        for c in 0..3 {
            let (mut vp, mut vm) = (v, v);
            vp[c] += step;
            vm[c] -= step;
            let (fp, fm) = (f(vp), f(vm));
            for r in 0..3 {
                jac[r][c] = (fp[r] - fm[r]) / (2.0 * step);
            }
        }
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        if det.abs() < 1e-18 {
            return Err(CNumberError::BracketFailure(lo, hi));
        }
        let mut d = [0.0; 3];
        for c in 0..3 {
            let mut m = jac;
            for r in 0..3 {
                m[r][c] = f0[r];
            }
            let dc = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            d[c] = dc / det;
        }
        for c in 0..3 {
            v[c] -= d[c];
        }
        if d.iter().all(|&dc| dc.abs() < 1e-13) {
            break;
        }
    }
    Ok((v[2], CNumberPoint::real(v[0], v[1])))
}

/// Analytic `det M = 4(λ - 1)` of the periodic model at the `a₁ = 0`
/// stationary point; the critical coupling is its root.
pub fn periodic_det_m(lambda: f64) -> f64 {
    4.0 * (lambda - 1.0)
}

/// Critical collective coupling of the periodic model: exactly 1.
pub fn find_lambda_lm_periodic() -> f64 {
    1.0
}

/// Squared coherent-state overlap `|⟨a|b⟩|² = exp(-Σ|a_k - b_k|²)`.
pub fn coherent_overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    (-d2).exp()
}

/// Distinguishability of two coherent states: squared distance at least
/// `threshold` (inclusive). The conventional default threshold is 9.
pub fn distinguishable(a: &[Complex64], b: &[Complex64], threshold: f64) -> bool {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    d2 >= threshold
}

pub const DISTINGUISHABILITY_THRESHOLD: f64 = 9.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::dirichlet3_terms;

    #[test]
    fn h_bog_at_x0() {
        for lambda in [0.0, 1.0, 2.5] {
            let e = h_bog(&CNumberPoint::real(0.0, 0.0), lambda);
            assert!((e - (0.25 - 3.0 * lambda / 8.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn h_bog_at_x1() {
        for (lambda, th) in [(0.5, 0.3), (2.0, 1.1)] {
            let e = h_bog(&CNumberPoint::real(1.0, th), lambda);
            assert!((e - (1.0 - 3.0 * lambda / 8.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn h_bog_matches_generic_substitution() {
        // closed form vs c-number substitution of the 3-mode term list
        let n = 37.0;
        let mut seed = 0x9e37u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let p = CNumberPoint {
                x: rnd(),
                theta: TH_HI * rnd(),
                delta2: 2.0 * std::f64::consts::PI * rnd(),
                delta3: 2.0 * std::f64::consts::PI * rnd(),
            };
            let lambda = 5.0 * rnd();
            let terms = dirichlet3_terms(lambda / n);
            let amps = p.amplitudes(n);
            let generic = h_bog_generic(&terms, 0, &amps, n).unwrap() / n;
            // the closed form drops the O(1/N) self-interaction pieces of the
            // substitution only through the parametrization; both routes use
            // the same amplitudes, so they agree to machine precision
            assert!(
                (h_bog(&p, lambda) - generic).abs() < 1e-12,
                "x={} th={} λ={}",
                p.x,
                p.theta,
                lambda
            );
        }
    }

    #[test]
    fn coherent_expectation_equals_fock_expectation() {
        // ⟨a|Ĥ|a⟩ over a truncated coherent state (projected to fixed-N
        // sectors and summed) equals the substitution, exactly for
        // normal-ordered Ĥ. Small amplitudes keep truncation error tiny.
        use crate::fock::{FockBasis, ManyBodyOperator};
        use std::sync::Arc;
        let alpha = 0.05;
        let terms = dirichlet3_terms(alpha);
        let amps = [
            Complex64::new(0.4, 0.0),
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.2),
        ];
        let direct = coherent_expectation(&terms, &amps);
        // coherent state in the full (mixed-N) space: sum sector by sector
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let weight = (-norm2).exp();
        let mut total = 0.0;
        for n in 0..=14u32 {
            let b = Arc::new(FockBasis::new(3, n));
            let op = ManyBodyOperator::build(&terms, b.clone()).unwrap();
            // amplitude of |n1 n2 n3⟩ in ⊗ coherent states
            let coeff: Vec<Complex64> = b
                .states()
                .iter()
                .map(|s| {
                    let mut c = Complex64::new(1.0, 0.0);
                    for (m, &occ) in s.iter().enumerate() {
                        let mut fact = 1.0f64;
                        for q in 1..=occ {
                            fact *= q as f64;
                        }
                        c *= amps[m].powu(occ) / fact.sqrt();
                    }
                    c
                })
                .collect();
            // ⟨ψ|H|ψ⟩ contribution of this sector (H is block diagonal)
            let dense = op.to_dense();
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    total += (coeff[i].conj() * coeff[j]).re * dense[[i, j]];
                }
            }
        }
        total *= weight;
        assert!((total - direct).abs() < 1e-10, "{total} vs {direct}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut seed = 77u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let x = 0.05 + 0.9 * rnd();
            let th = 0.05 + (TH_HI - 0.1) * rnd();
            let lambda = 5.0 * rnd();
            let p = CNumberPoint::real(x, th);
            let ([gx, gt], h) = gradient_hessian(&p, lambda);
            let step = 1e-5;
            let f = |x: f64, th: f64| h_bog(&CNumberPoint::real(x, th), lambda);
            let fd_gx = (f(x + step, th) - f(x - step, th)) / (2.0 * step);
            let fd_gt = (f(x, th + step) - f(x, th - step)) / (2.0 * step);
            let scale = 1.0f64.max(gx.abs()).max(gt.abs());
            assert!((gx - fd_gx).abs() / scale < 1e-6);
            assert!((gt - fd_gt).abs() / scale < 1e-6);
            let fd_dxx = (f(x + step, th) - 2.0 * f(x, th) + f(x - step, th)) / (step * step);
            let fd_dtt = (f(x, th + step) - 2.0 * f(x, th) + f(x, th - step)) / (step * step);
            let fd_dxt = (f(x + step, th + step) - f(x + step, th - step)
                - f(x - step, th + step)
                + f(x - step, th - step))
                / (4.0 * step * step);
            let hs = 1.0f64.max(h[0][0].abs()).max(h[1][1].abs());
            assert!((h[0][0] - fd_dxx).abs() / hs < 1e-4);
            assert!((h[1][1] - fd_dtt).abs() / hs < 1e-4);
            assert!((h[0][1] - fd_dxt).abs() / hs < 1e-4);
        }
    }

    #[test]
    fn gradient_theta_at_origin() {
        // (A.1b) at (x=0, θ=0) evaluates to λ/2
        for lambda in [0.3, 1.7, 4.2] {
            let ([_, gt], _) = gradient_hessian(&CNumberPoint::real(0.0, 0.0), lambda);
            assert!((gt - lambda / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_x_free_theory() {
        let ([gx, _], _) = gradient_hessian(&CNumberPoint::real(0.0, 0.0), 0.0);
        assert!((gx - 0.75).abs() < 1e-14);
    }

    #[test]
    fn pattern_vector_examples() {
        let p = CNumberPoint::real(0.0, 0.0);
        let v = pattern_vector(&p, 100, true);
        assert!((v[0].re - 10.0).abs() < 1e-12);
        assert!(v[1].norm() < 1e-12 && v[2].norm() < 1e-12);

        let q = CNumberPoint { x: 0.37, theta: 0.8, delta2: 1.0, delta3: 2.0 };
        let w = pattern_vector(&q, 60, true);
        let total: f64 = w.iter().map(|a| a.norm_sqr()).sum();
        assert!((total - 60.0).abs() < 1e-10);
    }

    #[test]
    fn coherent_overlap_values() {
        let a = [Complex64::new(1.0, 0.0)];
        assert_eq!(coherent_overlap(&a, &a), 1.0);
        let b = [Complex64::new(2.0, 0.0)];
        assert!((coherent_overlap(&a, &b) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn distinguishable_boundary_inclusive() {
        let a = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        let b = [Complex64::new(3.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(distinguishable(&a, &b, DISTINGUISHABILITY_THRESHOLD));
    }

    #[test]
    fn periodic_det_m_values() {
        assert_eq!(find_lambda_lm_periodic(), 1.0);
        assert!((periodic_det_m(0.5) + 2.0).abs() < 1e-15);
        assert_eq!(periodic_det_m(1.0), 0.0);
    }
}
