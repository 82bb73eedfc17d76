use dpflow_core::diagnostics::*;
use dpflow_core::dp_gd::{clipped_gradient, detect_clipping, run_dp_gd, CheckpointPolicy, ClipBound, DpGdConfig};
use dpflow_core::ou_gf::{decompose, SpectralDecomp};
use dpflow_core::rf_model::{init_features, kernel, sample_data, Design};
use dpflow_core::rng;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn setup(n: usize, d: usize, p: usize, seed: u64) -> Design {
    let ds = sample_data(n, d, seed).unwrap();
    let fm = init_features(p, d, seed).unwrap();
    Design::new(&fm, &ds).unwrap()
}

#[test]
fn orthogonal_rows_have_unit_gap() {
    let phi = DMatrix::identity(6, 10) * 3.0;
    let sd = SpectralDecomp::from_matrix(&phi).unwrap();
    let r = spectrum_report(&sd, 2).unwrap();
    assert!((r.gap_ratio - 1.0).abs() < 1e-12);
    assert!((r.lambda_min - 9.0).abs() < 1e-12);
    assert_eq!((r.n, r.d, r.p), (6, 2, 10));
}

#[test]
fn spectrum_matches_symmetric_eigensolver() {
    let ds = sample_data(40, 5, 3).unwrap();
    let fm = init_features(300, 5, 3).unwrap();
    let sd = decompose(&Design::new(&fm, &ds).unwrap()).unwrap();
    let r = spectrum_report(&sd, 5).unwrap();
    let mut ev: Vec<f64> = SymmetricEigen::new(kernel(&fm, &ds).unwrap())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let tol = 1e-10 * ev[0];
    assert!((r.lambda_max - ev[0]).abs() <= tol);
    assert!((r.lambda_d - ev[4]).abs() <= tol);
    assert!((r.lambda_d_plus_1 - ev[5]).abs() <= tol);
    assert!((r.lambda_min - ev[39]).abs() <= tol);
}

#[test]
fn spectral_gap_grows_with_sample_ratio() {
    let d = 10;
    let gaps: Vec<f64> = [5, 10, 20]
        .iter()
        .map(|&k| {
            let sd = decompose(&setup(k * d, d, 4000, 21)).unwrap();
            spectrum_report(&sd, d).unwrap().gap_ratio
        })
        .collect();
    assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2], "{gaps:?}");
    assert!(gaps[0] > 1.0);
}

#[test]
fn huge_clip_constant_is_certified() {
    let dsg = setup(20, 4, 50, 1);
    let traj = run_dp_gd(
        &DpGdConfig::new(0.05, 40, ClipBound::Finite(1e8), 0.0),
        &dsg,
        &mut rng::seeded(1, 2),
    )
    .unwrap();
    let cert = clip_free_certificate(&traj, &dsg, 1e8).unwrap();
    assert!(cert.clip_free);
    assert_eq!(cert.violations, 0);
    assert_eq!(traj.clip_count(), 0);
}

#[test]
fn interpolator_start_stays_clip_free() {
    let dsg = setup(20, 4, 50, 2);
    let sd = decompose(&dsg).unwrap();
    let mut cfg = DpGdConfig::new(0.05, 30, ClipBound::Finite(1e-3), 0.0);
    cfg.theta0 = Some(sd.pseudo_inverse_apply(dsg.labels()).unwrap());
    let traj = run_dp_gd(&cfg, &dsg, &mut rng::seeded(0, 0)).unwrap();
    let cert = clip_free_certificate(&traj, &dsg, 1e-3).unwrap();
    assert!(cert.clip_free, "{cert:?}");
    assert!(cert.worst_margin > 0.0);
}

#[test]
fn tiny_clip_constant_is_flagged() {
    let dsg = setup(20, 4, 50, 3);
    let traj = run_dp_gd(
        &DpGdConfig::new(0.05, 10, ClipBound::Finite(1e-3), 0.0),
        &dsg,
        &mut rng::seeded(0, 0),
    )
    .unwrap();
    let cert = clip_free_certificate(&traj, &dsg, 1e-3).unwrap();
    assert!(!cert.clip_free);
    assert!(cert.worst_margin < 0.0);
    assert!(cert.violations >= 20);
}

#[test]
fn certificate_margin_is_monotone_in_clip_constant() {
    let dsg = setup(20, 4, 50, 4);
    let traj = run_dp_gd(
        &DpGdConfig::new(0.05, 40, ClipBound::Finite(5.0), 0.5),
        &dsg,
        &mut rng::seeded(4, 4),
    )
    .unwrap();
    let margins: Vec<f64> = [0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&c| clip_free_certificate(&traj, &dsg, c).unwrap().worst_margin)
        .collect();
    assert!(margins.windows(2).all(|w| w[0] < w[1]), "{margins:?}");
}

#[test]
fn dense_certificate_agrees_with_per_step_detection() {
    let dsg = setup(15, 4, 40, 5);
    for &c in &[0.5, 3.0, 30.0] {
        let traj = run_dp_gd(
            &DpGdConfig::new(0.1, 25, ClipBound::Finite(c), 0.3),
            &dsg,
            &mut rng::seeded(5, 5),
        )
        .unwrap();
        assert_eq!(traj.policy, CheckpointPolicy::Every);
        let mut any = false;
        let mut worst = f64::INFINITY;
        for (_, theta) in &traj.checkpoints {
            let s = detect_clipping(theta, &dsg, c).unwrap();
            any |= s.any();
            worst = worst.min(s.margin);
        }
        let cert = clip_free_certificate(&traj, &dsg, c).unwrap();
        assert_eq!(cert.clip_free, !any, "c={c}");
        assert!((cert.worst_margin - worst).abs() <= 1e-12 * worst.abs().max(1.0));
    }
}

#[test]
fn sparse_certificate_is_conservative() {
    let (n, p, steps, eta, c) = (4, 20_000, 600, 2e-4, 400.0);
    let dsg = setup(n, 3, p, 6);
    let traj = run_dp_gd(
        &DpGdConfig::new(eta, steps, ClipBound::Finite(c), 0.0),
        &dsg,
        &mut rng::seeded(0, 0),
    )
    .unwrap();
    assert_eq!(traj.policy, CheckpointPolicy::Geometric);
    let mut theta = DVector::zeros(p);
    let mut exact = f64::INFINITY;
    for _ in 0..=steps {
        exact = exact.min(detect_clipping(&theta, &dsg, c).unwrap().margin);
        let (g, _) = clipped_gradient(&dsg, &theta, ClipBound::Finite(c));
        theta -= g * eta;
    }
    let cert = clip_free_certificate(&traj, &dsg, c).unwrap();
    assert!(
        cert.worst_margin <= exact * (1.0 + 1e-9) + 1e-12,
        "{} vs {exact}",
        cert.worst_margin
    );
}

#[test]
fn regime_examples() {
    let r = regime_check(2000, 100, 40_000);
    assert_eq!(r.condition("n_sqrt_p").unwrap().status, RegimeStatus::Violated);
    let lr = r.condition("log_ratio").unwrap();
    assert!((lr.ratio - 2000f64.ln() / 40_000f64.ln()).abs() < 1e-15);
    assert_eq!(lr.status, RegimeStatus::Inside);
    assert!((r.condition("n_lower").unwrap().ratio - 100.0 * 100f64.ln().powi(2) / 2000.0).abs() < 1e-12);

    let edge = regime_check(100, 2000, 10_000);
    assert_eq!(edge.condition("n_sqrt_p").unwrap().status, RegimeStatus::Boundary);
    let far = regime_check(100, 2000, 10_000_000);
    assert_eq!(far.condition("n_sqrt_p").unwrap().status, RegimeStatus::Inside);
    assert_eq!(far.condition("n_upper").unwrap().status, RegimeStatus::Inside);
    assert_eq!(far.condition("n_lower").unwrap().status, RegimeStatus::Violated);

    // ln n / ln p = 1/2 exactly at p = n².
    let edge = regime_check(30, 10, 900);
    assert_eq!(edge.condition("log_ratio").unwrap().status, RegimeStatus::Boundary);
}

#[test]
fn regime_report_serializes() {
    let r = regime_check(500, 50, 1_000_000);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["conditions"].as_array().unwrap().len(), 4);
    assert!(json["conditions"][0]["status"].is_string());
}
