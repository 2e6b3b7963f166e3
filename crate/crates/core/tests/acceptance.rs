//! End-to-end acceptance suite. Each test covers one headline result of the
//! pipeline and prints a single pass/fail line; the slow spectroscopy scans
//! run here rather than in the unit suites.

use std::sync::Arc;

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bosecrit::bogoliubov::{
    dirichlet_quadratic, dirichlet_quadratic_closed_form, excitation_energies, expand_quadratic,
    periodic_quadratic, symplectic_diagonalize,
};
use bosecrit::cnumber::{
    find_lambda_gs, find_lambda_lm_dirichlet, gradient_hessian, h_bog_generic, local_minima,
    CNumberPoint,
};
use bosecrit::dynamics::{
    build_inflection_state, coherence_scan, diagonalize, evolve_state, fit_lambda_scaling,
    ground_state_occupations, lambda_peak, measure_lambda_critical, periodic_finite_n_checks,
    InflectionStateSpec,
};
use bosecrit::fock::{FockBasis, ManyBodyOperator, Term};
use bosecrit::models::{
    dirichlet3_terms, dirichlet_full_terms, external_probe_closed_form, neural_synapse_terms,
    periodic_terms, ExternalProbeParams,
};

fn report(criterion: u32, ok: bool, detail: &str) {
    // write straight to the process stderr so the line shows up even under
    // the harness's output capture
    use std::io::Write;
    let line = format!("criterion {criterion}: {} - {detail}\n", if ok { "pass" } else { "fail" });
    std::io::stderr().write_all(line.as_bytes()).expect("stderr is writable");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_periodic_spectrum_oracle() {
    let mut worst = 0.0f64;
    for i in 0..=10 {
        let lambda = if i == 10 { 0.99 } else { 0.1 * i as f64 };
        let q = periodic_quadratic(lambda, 3);
        let r = symplectic_diagonalize(&q).expect("stable below the transition");
        let mut expected: Vec<f64> = [1.0f64, 1.0, 2.0, 2.0, 3.0, 3.0]
            .iter()
            .map(|&k| (k * k * (k * k - lambda)).sqrt())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (e, x) in r.energies.iter().zip(expected.iter()) {
            worst = worst.max((e - x).abs());
        }
    }
    report(1, worst <= 1e-9, &format!("max spectrum deviation {worst:.2e}"));
}

#[test]
fn criterion_2_dirichlet_inflection_point() {
    let (lambda_lm, point) = find_lambda_lm_dirichlet().expect("fold exists");
    let q = dirichlet_quadratic(&point, lambda_lm);
    let det = q.det_m();
    let gap = excitation_energies(&q).expect("eigensolver")[0];
    let ok = (lambda_lm - 1.792).abs() <= 0.002 && det.abs() <= 1e-6 && gap <= 1e-4;
    report(
        2,
        ok,
        &format!("lambda_lm = {lambda_lm:.6}, |det M| = {:.2e}, gap = {gap:.2e}", det.abs()),
    );
}

#[test]
fn criterion_3_first_order_transition() {
    let lambda_gs = find_lambda_gs().expect("transition exists");
    let grid: Vec<f64> = (0..=10).map(|i| 3.0 + 0.1 * i as f64).collect();
    let curves = ground_state_occupations(&grid, 100).expect("ED at N = 100");

    // discontinuity: steepest 2-mode occupation change between grid points
    let mut jump_at = grid[0];
    let mut steepest = 0.0;
    for w in curves.windows(2) {
        let slope = (w[1].1[1] - w[0].1[1]).abs() / (w[1].0 - w[0].0);
        if slope > steepest {
            steepest = slope;
            jump_at = 0.5 * (w[0].0 + w[1].0);
        }
    }

    // away from the transition the exact occupations track the c-number
    // global minimum
    let mut worst = 0.0f64;
    for (lambda, occ) in &curves {
        if (lambda - lambda_gs).abs() <= 0.3 {
            continue;
        }
        let m = &local_minima(*lambda)[0];
        let (x, th) = (m.point.x, m.point.theta);
        let cn = [(1.0 - x) * th.cos().powi(2), x, (1.0 - x) * th.sin().powi(2)];
        for k in 0..3 {
            worst = worst.max((occ[k] - cn[k]).abs());
        }
    }

    let ok = (lambda_gs - 3.5).abs() <= 0.05
        && (jump_at - 3.5).abs() <= 0.15
        && worst <= 0.02;
    report(
        3,
        ok,
        &format!(
            "lambda_gs = {lambda_gs:.4}, ED jump at {jump_at:.2}, occupation deviation {worst:.3}"
        ),
    );
}

#[test]
fn criterion_4_closed_form_conformance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let x: f64 = rng.gen_range(0.05..0.8);
        let th: f64 = rng.gen_range(0.02..1.2);
        let lambda: f64 = rng.gen_range(0.3..4.0);
        let p = CNumberPoint::real(x, th);
        let terms = dirichlet3_terms(lambda);

        // gradient and Hessian against central differences of the generic
        // term-list substitution
        let e = |x: f64, th: f64| -> f64 {
            let amps = CNumberPoint::real(x, th).amplitudes(1.0);
            h_bog_generic(&terms, 0, &amps, 1.0).expect("inside depletion bound")
        };
        // wider step for second differences: their rounding error scales as
        // ε/h², so h = 1e-5 would leave ~1e-5 noise on O(10) energies
        let h = 1e-5;
        let h2 = 1e-4;
        let ([gx, gt], hess) = gradient_hessian(&p, lambda);
        let fd_gx = (e(x + h, th) - e(x - h, th)) / (2.0 * h);
        let fd_gt = (e(x, th + h) - e(x, th - h)) / (2.0 * h);
        let fd_xx = (e(x + h2, th) - 2.0 * e(x, th) + e(x - h2, th)) / (h2 * h2);
        let fd_tt = (e(x, th + h2) - 2.0 * e(x, th) + e(x, th - h2)) / (h2 * h2);
        let fd_xt = (e(x + h2, th + h2) - e(x + h2, th - h2) - e(x - h2, th + h2)
            + e(x - h2, th - h2))
            / (4.0 * h2 * h2);
        for (a, b) in [
            (gx, fd_gx),
            (gt, fd_gt),
            (hess[0][0], fd_xx),
            (hess[1][1], fd_tt),
            (hess[0][1], fd_xt),
        ] {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }

        // quadratic expansion closed forms against the finite-difference
        // expansion of the generic substitution
        let q = expand_quadratic(&terms, &p, 1.0).expect("expansion point valid");
        let (a, b) = dirichlet_quadratic_closed_form(&p, lambda);
        for i in 0..2 {
            for j in 0..2 {
                worst = worst
                    .max((q.a[[i, j]] - a[[i, j]]).norm() / a[[i, j]].norm().max(1.0));
                worst = worst
                    .max((q.b[[i, j]] - b[[i, j]]).norm() / b[[i, j]].norm().max(1.0));
            }
        }
    }
    report(4, worst <= 1e-5, &format!("200 points, worst relative deviation {worst:.2e}"));
}

#[test]
fn criterion_5_coherence_peak() {
    let grid: Vec<f64> = (0..=40).map(|i| 1.9 + 0.01 * i as f64).collect();
    let scan = coherence_scan(60, &grid).expect("spectroscopy scan");
    let peak = lambda_peak(&scan);
    let mut tcohs: Vec<f64> = scan.iter().map(|p| p.t_coh).collect();
    tcohs.sort_by(f64::total_cmp);
    let max = tcohs[tcohs.len() - 1];
    let median = tcohs[tcohs.len() / 2];
    let ratio = max / median;
    let ok = (peak - 2.08).abs() <= 0.05 && ratio >= 3.0;
    report(5, ok, &format!("peak at {peak:.4}, peak/median = {ratio:.1}"));
}

#[test]
fn criterion_6_scaling_fit() {
    let mut points = Vec::new();
    for n in [40u32, 50, 60, 70, 80, 90] {
        let (lam, _) = measure_lambda_critical(n).expect("resonance found");
        eprintln!("  N = {n}: lambda = {lam:.4}");
        points.push((n as f64, lam));
    }
    // the asymptote is known independently from the landscape fold; fitting
    // it as a third free parameter is degenerate over this narrow N range
    let (lambda_lm, _) = find_lambda_lm_dirichlet().expect("fold exists");
    let fit = fit_lambda_scaling(&points, Some(lambda_lm)).expect("fit converges");
    let ok = (0.5..=0.75).contains(&fit.b) && (fit.a - 3.56).abs() <= 0.25 * 3.56;
    report(
        6,
        ok,
        &format!("a = {:.3}, b = {:.3}, offset = {:.4}", fit.a, fit.b, fit.lambda_lm),
    );
}

#[test]
fn criterion_7_periodic_finite_n() {
    let ends = periodic_finite_n_checks(1000, &[0.8, 1.5]).expect("sector ED");
    let frac_low = ends[0].occupations[1];
    let frac_high = ends[1].occupations[1];

    // minimum gap over a fine grid around the transition, per N
    let grid: Vec<f64> = (0..=60).map(|i| 0.9 + 0.005 * i as f64).collect();
    let mut mins = Vec::new();
    for n in [250u32, 500, 1000] {
        let pts = periodic_finite_n_checks(n, &grid).expect("sector ED");
        let g = pts.iter().map(|p| p.gap).fold(f64::INFINITY, f64::min);
        mins.push((n as f64, g));
    }
    // log-log slope across the three sizes
    let slope = (mins[2].1.ln() - mins[0].1.ln()) / (mins[2].0.ln() - mins[0].0.ln());
    let exponent = -slope;

    let ok = frac_low >= 0.95 && frac_high <= 0.85 && (exponent - 1.0 / 3.0).abs() <= 0.08;
    report(
        7,
        ok,
        &format!(
            "0-mode fraction {frac_low:.3} at 0.8, {frac_high:.3} at 1.5, gap exponent {exponent:.3}"
        ),
    );
}

#[test]
fn criterion_8_external_probe() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for _ in 0..20 {
        let p = ExternalProbeParams {
            delta_e: rng.gen_range(0.1..2.0),
            e_gamma: rng.gen_range(0.1..2.0),
            g: rng.gen_range(0.05..1.0),
            gamma: rng.gen_range(0.3..2.0),
        };
        // exact evolution sector by sector: the coherent state |γ⟩_c splits
        // into Poisson-weighted fixed-number components, and n̂_c has no
        // cross-sector matrix elements
        let g2 = p.gamma * p.gamma;
        let n_max = 60u32;
        let mut weights = Vec::new();
        let mut w = (-g2).exp();
        for n in 0..=n_max {
            if n > 0 {
                w *= g2 / n as f64;
            }
            weights.push(w);
        }
        let terms = p.terms();
        let sectors: Vec<_> = (1..=n_max)
            .filter(|&n| weights[n as usize] >= 1e-18)
            .map(|n| {
                let basis = Arc::new(FockBasis::new(2, n));
                let op = ManyBodyOperator::build(&terms, basis.clone()).unwrap();
                let decomp = diagonalize(&op).unwrap();
                let mut init = Array1::<f64>::zeros(basis.dim());
                init[basis.index_of(&[0, n]).unwrap()] = 1.0;
                (n, basis, decomp, init)
            })
            .collect();
        for step in 0..=100 {
            let t = 0.5 * step as f64;
            let mut nc = 0.0;
            for (n, basis, decomp, init) in &sectors {
                let evolved = evolve_state(init, decomp, t);
                for (i, amp) in evolved.iter().enumerate() {
                    nc += weights[*n as usize] * amp.norm_sqr() * basis.state(i)[1] as f64;
                }
            }
            let (nc_cf, nb_cf) = external_probe_closed_form(&p, t);
            worst = worst.max((nc - nc_cf).abs());
            // the identity is algebraic; numerically it holds to rounding
            worst_sum = worst_sum.max((nc_cf + nb_cf - g2).abs() / g2);
        }
    }
    let ok = worst <= 1e-8 && worst_sum <= 2.0 * f64::EPSILON;
    report(
        8,
        ok,
        &format!("max closed-form deviation {worst:.2e}, number-conservation defect {worst_sum:.1e}"),
    );
}

#[test]
fn criterion_9_structural_invariants() {
    // hermiticity and sector conservation of every model builder
    let mut asym = 0.0f64;
    let mut conserves = true;
    for (terms, k) in [
        (dirichlet3_terms(0.37), 3usize),
        (dirichlet_full_terms(4, 0.21), 4),
        (periodic_terms(1, 0.43), 3),
        (neural_synapse_terms(0.29), 3),
    ] {
        conserves &= terms.iter().all(Term::conserves_number);
        let basis = Arc::new(FockBasis::new(k, 8));
        let op = ManyBodyOperator::build(&terms, basis).unwrap();
        asym = asym.max(op.asymmetry());
    }

    // symplectic residual on a stable expansion
    let r = symplectic_diagonalize(&periodic_quadratic(0.5, 3)).unwrap();
    let residual = r.symplectic_residual;

    // norm and energy conservation along an exact evolution
    let basis = Arc::new(FockBasis::new(3, 12));
    let op = ManyBodyOperator::build(&dirichlet3_terms(2.0 / 12.0), basis).unwrap();
    let decomp = diagonalize(&op).unwrap();
    let x_inf = bosecrit::cnumber::x_inflection(2.0).unwrap_or(0.3);
    let (theta, _, _) = bosecrit::cnumber::marginal_at(2.0, x_inf);
    let spec = InflectionStateSpec {
        x_target: x_inf,
        windows: [1.0, 1.0, 1.0],
        center: [
            (1.0 - x_inf) * theta.cos().powi(2),
            x_inf,
            (1.0 - x_inf) * theta.sin().powi(2),
        ],
    };
    let state = build_inflection_state(&spec, &op).unwrap();
    let e0 = op.expectation(state.as_slice().unwrap()).unwrap();
    let mut drift = 0.0f64;
    for step in 1..=20 {
        let t = 15.0 * step as f64;
        let phi = evolve_state(&state, &decomp, t);
        let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        drift = drift.max((norm - 1.0).abs());
        // ⟨H⟩ of the complex state via the real and imaginary parts
        let re: Array1<f64> = phi.iter().map(|z| z.re).collect();
        let im: Array1<f64> = phi.iter().map(|z| z.im).collect();
        let mut hre = vec![0.0; re.len()];
        let mut him = vec![0.0; im.len()];
        op.matvec(re.as_slice().unwrap(), &mut hre);
        op.matvec(im.as_slice().unwrap(), &mut him);
        let energy: f64 = re
            .iter()
            .zip(hre.iter())
            .chain(im.iter().zip(him.iter()))
            .map(|(a, b)| a * b)
            .sum();
        drift = drift.max((energy - e0).abs() / e0.abs());
    }

    // the associative-memory rewriting is the same operator as the quartic
    // Hamiltonian on every small sector
    let mut rewrite_dev = 0.0f64;
    for n in 1..=6u32 {
        let basis = Arc::new(FockBasis::new(3, n));
        let a = ManyBodyOperator::build(&neural_synapse_terms(0.53), basis.clone())
            .unwrap()
            .to_dense();
        let b = ManyBodyOperator::build(&dirichlet3_terms(0.53), basis).unwrap().to_dense();
        rewrite_dev = rewrite_dev
            .max(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }

    let ok = asym == 0.0
        && conserves
        && residual <= 1e-9
        && drift <= 1e-10
        && rewrite_dev <= 1e-12;
    report(
        9,
        ok,
        &format!(
            "asymmetry {asym:.1e}, symplectic residual {residual:.1e}, drift {drift:.1e}, rewriting deviation {rewrite_dev:.1e}"
        ),
    );
}
