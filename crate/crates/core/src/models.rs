//! Term-list definitions for every model Hamiltonian, in box units
//! (`L = 2π`, `ħ = 2m = 1`, energy unit `4π²ħ²/(2mL²)`).
//!
//! Mode layout conventions:
//! * Dirichlet models: tuple position `i` holds box mode `k = i + 1`.
//! * Periodic models: tuple position `i` holds momentum `k = i - k_max`.
//! * Master-mode toy: position 0 is the master mode.

use crate::fock::Term;

/// Collective-coupling parametrization of the attractive gas.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// Two-body coupling α ≥ 0.
    pub alpha: f64,
    /// Total particle number.
    pub n: u32,
}

impl ModelParams {
    pub fn new(alpha: f64, n: u32) -> Self {
        assert!(alpha >= 0.0);
        Self { alpha, n }
    }

    /// From collective coupling λ = αN at fixed N.
    pub fn from_lambda(lambda: f64, n: u32) -> Self {
        Self::new(lambda / n as f64, n)
    }

    /// Collective coupling λ = αN.
    pub fn lambda(&self) -> f64 {
        self.alpha * self.n as f64
    }
}

/// Box-mode index (1-based) to tuple position.
fn dm(k: i64) -> usize {
    (k - 1) as usize
}

/// Full Dirichlet Hamiltonian truncated to box modes `1..=k_max`.
///
/// Kinetic part `k²/4 · n̂_k` plus the three quartic families with
/// coefficients `-α/8 · {1, 2, -2}`; index combinations falling outside the
/// truncation window are dropped.
pub fn dirichlet_full_terms(k_max: u32, alpha: f64) -> Vec<Term> {
    assert!(k_max >= 1);
    let km = k_max as i64;
    let mut terms = Vec::new();
    for k in 1..=km {
        terms.push(Term::number((k * k) as f64 / 4.0, dm(k)));
    }
    let inside = |k: i64| k >= 1 && k <= km;
    let c = -alpha / 8.0;
    for k in 1..=km {
        for l in 1..=km {
            for m in 1..=km {
                // a†_k a†_l a_m a_{k+l-m}
                let p = k + l - m;
                if inside(p) {
                    terms.push(Term::new(c, vec![dm(k), dm(l)], vec![dm(m), dm(p)]));
                }
                // 2 a†_k a†_l a_m a_{k-l+m}
                let p = k - l + m;
                if inside(p) {
                    terms.push(Term::new(2.0 * c, vec![dm(k), dm(l)], vec![dm(m), dm(p)]));
                }
                // -2 a†_{k+l+m} a†_l a_m a_k
                let p = k + l + m;
                if inside(p) {
                    terms.push(Term::new(-2.0 * c, vec![dm(p), dm(l)], vec![dm(m), dm(k)]));
                }
                // -2 a†_k a†_l a_m a_{k+l+m}
                if inside(p) {
                    terms.push(Term::new(-2.0 * c, vec![dm(k), dm(l)], vec![dm(m), dm(p)]));
                }
            }
        }
    }
    terms
}

/// The 3-mode truncation written out explicitly: 3 kinetic terms plus the 18
/// quartic monomials with bracket coefficients
/// `{3,8,2,2,8,2,2,-2,-2,4,4,2,2,3,8,2,2,3}` times `-α/8`.
pub fn dirichlet3_terms(alpha: f64) -> Vec<Term> {
    let c = -alpha / 8.0;
    let mut terms = vec![
        Term::number(0.25, 0),
        Term::number(1.0, 1),
        Term::number(2.25, 2),
    ];
    // (bracket coefficient, creators, annihilators), mode positions 0..=2
    let quartic: [(f64, [usize; 2], [usize; 2]); 18] = [
        (3.0, [0, 0], [0, 0]),
        (8.0, [0, 1], [0, 1]),
        (2.0, [0, 0], [1, 1]),
        (2.0, [1, 1], [0, 0]),
        (8.0, [0, 2], [0, 2]),
        (2.0, [0, 0], [2, 2]),
        (2.0, [2, 2], [0, 0]),
        (-2.0, [0, 0], [0, 2]),
        (-2.0, [0, 2], [0, 0]),
        (4.0, [0, 1], [1, 2]),
        (4.0, [1, 2], [0, 1]),
        (2.0, [0, 2], [1, 1]),
        (2.0, [1, 1], [0, 2]),
        (3.0, [1, 1], [1, 1]),
        (8.0, [1, 2], [1, 2]),
        (2.0, [1, 1], [2, 2]),
        (2.0, [2, 2], [1, 1]),
        (3.0, [2, 2], [2, 2]),
    ];
    for (w, cr, an) in quartic {
        terms.push(Term::new(w * c, cr.to_vec(), an.to_vec()));
    }
    terms
}

/// Periodic-box Hamiltonian truncated to momenta `-k_max..=k_max`.
///
/// Kinetic `k² n̂_k` plus `-α/4 Σ a†_k a†_l a_{m+k} a_{l-m}` restricted to the
/// window; every surviving term conserves momentum.
pub fn periodic_terms(k_max: u32, alpha: f64) -> Vec<Term> {
    let km = k_max as i64;
    let pm = |k: i64| (k + km) as usize;
    let mut terms = Vec::new();
    for k in -km..=km {
        if k != 0 {
            terms.push(Term::number((k * k) as f64, pm(k)));
        }
    }
    let inside = |k: i64| (-km..=km).contains(&k);
    let c = -alpha / 4.0;
    for k in -km..=km {
        for l in -km..=km {
            for m in -km..=km {
                let (p, q) = (m + k, l - m);
                if inside(p) && inside(q) {
                    terms.push(Term::new(c, vec![pm(k), pm(l)], vec![pm(p), pm(q)]));
                }
            }
        }
    }
    terms
}

/// Master-mode toy Hamiltonian `Σ_k E_k (1 - α n̂_0) n̂_k + E_0 n̂_0`, expanded
/// into number-conserving monomials. `energies[0]` is the master-mode gap.
pub fn master_mode_toy_terms(energies: &[f64], alpha: f64) -> Vec<Term> {
    let mut terms = vec![Term::number(energies[0], 0)];
    for (k, &e) in energies.iter().enumerate().skip(1) {
        terms.push(Term::number(e, k));
        // -α E_k n̂_0 n̂_k  (k ≠ 0, so the product is already normal-ordered)
        terms.push(Term::new(-alpha * e, vec![0, k], vec![0, k]));
    }
    terms
}

/// Synaptic rewriting of the 3-mode Hamiltonian:
/// `Σ E_k n̂_k - Σ_{k,j} a†_k Ŵ_kj a_j` with the Hermitian matrix operator
/// of connection weights. Builds the same matrix as [`dirichlet3_terms`].
pub fn neural_synapse_terms(alpha: f64) -> Vec<Term> {
    let mut terms = Vec::new();
    for k in 0..3usize {
        let e = ((k + 1) * (k + 1)) as f64 / 4.0;
        terms.push(Term::number(e, k));
    }
    let w8 = alpha / 8.0;
    // Ŵ_kj as lists of (weight·8/α, creator, annihilator); positions 0..=2
    let w11 = [(3.0, 0usize, 0usize)];
    let w22 = [(3.0, 1, 1)];
    let w33 = [(3.0, 2, 2)];
    let w12 = [(4.0, 1, 0), (2.0, 0, 1), (4.0 / 3.0, 1, 2), (1.0, 2, 1)];
    let w13 = [(4.0, 2, 0), (2.0, 0, 2), (4.0 / 3.0, 1, 1), (-2.0, 0, 0)];
    let w23 = [(4.0, 2, 1), (2.0, 1, 2), (4.0 / 3.0, 0, 1), (1.0, 1, 0)];

    // -a†_k Ŵ_kj a_j; W is a Hermitian matrix operator, so the lower
    // triangle is the adjoint of the upper one.
    let mut push = |k: usize, j: usize, w: &[(f64, usize, usize)], conj: bool| {
        for &(wt, p, q) in w {
            let (p, q) = if conj { (q, p) } else { (p, q) };
            terms.push(Term::new(-wt * w8, vec![k, p], vec![q, j]));
        }
    };
    push(0, 0, &w11, false);
    push(1, 1, &w22, false);
    push(2, 2, &w33, false);
    push(0, 1, &w12, false);
    push(1, 0, &w12, true);
    push(0, 2, &w13, false);
    push(2, 0, &w13, true);
    push(1, 2, &w23, false);
    push(2, 1, &w23, true);
    terms
}

/// Microstate entropy of the degenerate family at critical master-mode
/// occupation: K assisted modes, each a qudit with d levels.
pub fn microstate_entropy(assisted_modes: u32, levels: u32) -> f64 {
    assisted_modes as f64 * (levels as f64).ln()
}

/// Parameters of the two-mode external-probe model: a Bogoliubov mode of gap
/// `delta_e` linearly coupled to an external mode.
#[derive(Debug, Clone, Copy)]
pub struct ExternalProbeParams {
    /// Gap ΔE of the Bogoliubov mode.
    pub delta_e: f64,
    /// Energy E_γ of the external mode.
    pub e_gamma: f64,
    /// Coupling g of the `(b c† + b† c)/2`-type exchange.
    pub g: f64,
    /// Coherent amplitude γ of the initial external-mode state.
    pub gamma: f64,
}

impl ExternalProbeParams {
    /// Effective Rabi splitting `δ_g = √((E_γ - ΔE)² + g²)`.
    pub fn delta_g(&self) -> f64 {
        ((self.e_gamma - self.delta_e).powi(2) + self.g * self.g).sqrt()
    }

    /// Term list of `ΔE b†b + E_γ c†c + g/2 (b c† + b† c)`;
    /// position 0 is the Bogoliubov mode, position 1 the external one.
    pub fn terms(&self) -> Vec<Term> {
        vec![
            Term::number(self.delta_e, 0),
            Term::number(self.e_gamma, 1),
            Term::new(self.g / 2.0, vec![1], vec![0]),
            Term::new(self.g / 2.0, vec![0], vec![1]),
        ]
    }
}

/// Closed-form occupations `(n_c, n_b)` of the external and Bogoliubov modes
/// at time `t`, starting from `|0⟩_b ⊗ |γ⟩_c`. Satisfies `n_c + n_b = γ²`
/// identically; the resonant decoupled limit `δ_g = 0` returns `(γ², 0)`.
pub fn external_probe_closed_form(p: &ExternalProbeParams, t: f64) -> (f64, f64) {
    let g2 = p.gamma * p.gamma;
    let dg = p.delta_g();
    if dg == 0.0 {
        return (g2, 0.0);
    }
    let s = (dg * t / 2.0).sin();
    let transfer = g2 * (p.g * p.g) / (dg * dg) * s * s;
    (g2 - transfer, transfer)
}
