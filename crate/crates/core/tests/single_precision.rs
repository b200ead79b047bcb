use std::f32::consts::PI;

use svmflow::{
    mean, ChParams, FieldF32, GridF32, ModelF32, SchemeConfig, SchemeKind, SvmConfig, SvmStepper, SvmVariant,
    TimeStepper,
};

#[test]
fn svm_steps_in_f32() {
    let grid = GridF32::new(32).unwrap();
    let model = ModelF32::cahn_hilliard(&grid, ChParams::new(0.05, 1e-2).unwrap());
    let phi0 = FieldF32::from_fn(&grid, |x, y| 0.25 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
    let cfg = SvmConfig { newton_tol: 1e-6, ..SvmConfig::new(SvmVariant::SvmII) };
    let mut s = SvmStepper::new(model, phi0.clone(), 1e-2, cfg);
    let mut energy = s.energy();
    for _ in 0..20 {
        s.step().unwrap();
        assert!(s.energy() <= energy + 1e-6);
        energy = s.energy();
    }
    assert!((mean(s.phi()) - mean(&phi0)).abs() < 1e-6);
}

#[test]
fn f32_and_f64_trajectories_agree() {
    for scheme in SchemeKind::ALL {
        let cfg = SchemeConfig {
            scheme,
            n: 32,
            tau: 1e-2,
            t_end: 0.1,
            epsilon: 0.05,
            newton_tol: 1e-6,
            picard_tol: 1e-6,
            ..Default::default()
        };
        let single = svmflow::simulate::<f32>(&cfg).unwrap();
        let double = svmflow::simulate::<f64>(&cfg).unwrap();
        assert!(single.completed() && double.completed(), "{scheme}");
        let diff = single
            .series
            .final_phi
            .values()
            .iter()
            .zip(double.series.final_phi.values())
            .fold(0.0f64, |m, (&a, &b)| m.max((a as f64 - b).abs()));
        assert!(diff < 1e-4, "{scheme}: {diff:e}");
    }
}
