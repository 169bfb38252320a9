use cos2phi::circuit::operators::bias_derivative_spectral;
use cos2phi::circuit::operators::project;
use cos2phi::circuit::{
    operator_matrix, solve, CircuitParams, FluxBias, HamiltonianOptions, OperatorContext,
    OperatorKind,
};
use cos2phi::noise::k0;

fn params() -> CircuitParams {
    CircuitParams::fitted_device()
}

fn levels_at(flux: &FluxBias, n_charge: usize, k: usize) -> Vec<f64> {
    let (e, _) = solve(
        &params(),
        flux,
        &HamiltonianOptions::with_n_charge(n_charge),
        k,
    )
    .unwrap();
    e.energies
}

#[test]
fn eigenvalues_converged_in_charge_cutoff() {
    let p = params();
    for (b, s) in [(0.5, 0.378), (0.35, 0.406), (0.2, 0.0), (0.5, 0.45)] {
        let f = p.flux(b, s);
        let a = levels_at(&f, 40, 5);
        let c = levels_at(&f, 60, 5);
        for i in 1..5 {
            let (ta, tc) = (a[i] - a[0], c[i] - c[0]);
            assert!((ta - tc).abs() < 1e-6, "({b},{s}) level {i}: {ta} vs {tc}");
        }
    }
}

#[test]
fn spectral_bias_derivative_matches_finite_difference() {
    let p = params();
    for (b, s) in [(0.42, 0.378), (0.35, 0.406), (0.5, 0.2)] {
        let flux = p.flux(b, s);
        let opts = HamiltonianOptions::with_n_charge(20);
        let ctx = OperatorContext {
            params: &p,
            flux: &flux,
            options: opts,
        };
        let (eig, _) = solve(&p, &flux, &opts, 4).unwrap();
        let fd = operator_matrix(&eig, OperatorKind::DhDPhiBias, &ctx).unwrap();
        let an = project(&eig, &bias_derivative_spectral(&ctx).unwrap());
        let scale = an.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err = (&fd - &an).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-6 * scale, "({b},{s}): {err:e} of {scale:e}");
    }
}

#[test]
fn diagonal_elements_are_energy_slopes() {
    // Hellmann-Feynman: dE_i/dΦ = ⟨i|∂H/∂Φ|i⟩
    let p = params();
    let opts = HamiltonianOptions::with_n_charge(20);
    let h = 1e-5;
    for (b, s) in [(0.42, 0.378), (0.3, 0.25)] {
        let flux = p.flux(b, s);
        let ctx = OperatorContext {
            params: &p,
            flux: &flux,
            options: opts,
        };
        let (eig, _) = solve(&p, &flux, &opts, 3).unwrap();
        for (kind, shifted) in [
            (
                OperatorKind::DhDPhiBias,
                [p.flux(b + h, s), p.flux(b - h, s)],
            ),
            (
                OperatorKind::DhDPhiCtrl,
                [p.flux(b, s + h), p.flux(b, s - h)],
            ),
        ] {
            let m = operator_matrix(&eig, kind, &ctx).unwrap();
            let up = solve(&p, &shifted[0], &opts, 3).unwrap().0.energies;
            let dn = solve(&p, &shifted[1], &opts, 3).unwrap().0.energies;
            for i in 0..3 {
                let slope = (up[i] - dn[i]) / (2.0 * h);
                let el = m[(i, i)].re;
                assert!(
                    (slope - el).abs() < 1e-6 * el.abs().max(1.0),
                    "{kind:?} ({b},{s}) level {i}: {slope} vs {el}"
                );
            }
        }
    }
}

#[test]
fn charge_element_shrinks_toward_balanced_arms() {
    let p = params();
    let opts = HamiltonianOptions::with_n_charge(30);
    let n01: Vec<f64> = [0.406, 0.395, 0.378, 0.367]
        .iter()
        .map(|&s| {
            let flux = p.flux(0.5, s);
            let ctx = OperatorContext {
                params: &p,
                flux: &flux,
                options: opts,
            };
            let (eig, _) = solve(&p, &flux, &opts, 2).unwrap();
            operator_matrix(&eig, OperatorKind::ChargeN, &ctx).unwrap()[(0, 1)].norm()
        })
        .collect();
    assert!(n01.windows(2).all(|w| w[1] < w[0]), "{n01:?}");
}

#[test]
fn spectrum_symmetric_about_half_flux() {
    let p = params();
    for s in [0.0, 0.378] {
        for x in [0.03, 0.11, 0.27] {
            let a = levels_at(&p.flux(0.5 + x, s), 20, 3);
            let b = levels_at(&p.flux(0.5 - x, s), 20, 3);
            assert!(((a[1] - a[0]) - (b[1] - b[0])).abs() < 1e-9);
        }
    }
}

/// `K0(x) = ∫₀^∞ exp(−x cosh t) dt` by composite Simpson on a truncated range.
fn k0_integral(x: f64) -> f64 {
    let t_max = (2.0 * (40.0 / x + 1.0)).acosh().max(1.0);
    let n = 200_000;
    let h = t_max / n as f64;
    let f = |t: f64| (-x * t.cosh()).exp();
    let mut s = f(0.0) + f(t_max);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn k0_matches_integral_representation() {
    for x in [1e-3, 0.05, 0.5, 1.0, 2.0, 5.0, 20.0] {
        let (got, want) = (k0(x), k0_integral(x));
        assert!(
            ((got - want) / want).abs() < 1e-12,
            "K0({x}) = {got} vs {want}"
        );
    }
}
