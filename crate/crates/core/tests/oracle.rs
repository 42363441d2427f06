use piezo_smc::sysid::{identify, PulseDataset, REFERENCE_PULSES};

/// Two-parameter fit `y = a·v + b` per direction from the normal equations,
/// eliminated by hand.
fn line_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (mut sv, mut svv, mut sy, mut svy) = (0.0, 0.0, 0.0, 0.0);
    for &(v, y) in points {
        sv += v;
        svv += v * v;
        sy += y;
        svy += v * y;
    }
    // [svv sv; sv n] [a; b] = [svy; sy]
    let factor = sv / svv;
    let b = (sy - factor * svy) / (n - factor * sv);
    let a = (svy - sv * b) / svv;
    (a, b)
}

#[test]
fn reference_fit_matches_normal_equations() {
    let alpha3 = 6.0;
    let pos: Vec<(f64, f64)> = REFERENCE_PULSES
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(u, v)| (v, alpha3 * u))
        .collect();
    let neg: Vec<(f64, f64)> = REFERENCE_PULSES
        .iter()
        .filter(|&&(_, v)| v < 0.0)
        .map(|&(u, v)| (v, alpha3 * u))
        .collect();
    let (a1p, a2p) = line_fit(&pos);
    let (a1n, minus_a2n) = line_fit(&neg);

    let fit = identify(&PulseDataset::reference(), alpha3).unwrap();
    let got = fit.coefficients().map(Option::unwrap);
    for (g, want) in got.iter().zip([a1p, a1n, a2p, -minus_a2n]) {
        assert!((g - want).abs() <= 1e-9 * want.abs(), "{g} vs {want}");
    }
}

#[test]
fn reference_fit_frozen_values() {
    let fit = identify(&PulseDataset::reference(), 6.0).unwrap();
    let [a1p, a1n, a2p, a2n] = fit.coefficients().map(Option::unwrap);
    assert!((a1p - 104.015392).abs() < 1e-5);
    assert!((a1n - 117.144102).abs() < 1e-5);
    assert!((a2p - 3.102333).abs() < 1e-5);
    assert!((a2n - 6.821605).abs() < 1e-5);
    assert!((fit.residual_max - 0.462840).abs() < 1e-5);
    assert_eq!(fit.rows, 10);
}
