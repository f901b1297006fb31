use hfdyn::linear_response::ResponseKind;
use hfdyn::*;

fn norm(w: &InteractionPotential64, g: &MomentumDistribution64) -> f64 {
    let th = dispersion_relation(w, g).unwrap();
    let m = ResponseModel64::new(w, g, &th).unwrap();
    m.response_operator_norm(ResponseKind::Sum, 0.1, 16, &m.required_separations())
        .unwrap()
        .norm
}

#[test]
fn response_norm_is_linear_in_small_distributions() {
    let grid = Grid64::new(1, 32, 16.0).unwrap();
    let w = InteractionPotential64::symmetric_pair(&grid, [1.0, 0.0, 0.0, 0.0], 0.5).unwrap();
    let g = MomentumDistribution64::fermi_dirac(&grid, 1.0, 1.0, 0.5).unwrap();
    let ratios: Vec<f64> = [1e-3, 2e-3, 4e-3].iter().map(|&s| norm(&w, &g.scaled(s)) / s).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(lo > 0.0 && (hi - lo) / lo < 0.02, "{ratios:?}");
}

#[test]
fn response_norm_vanishes_without_interaction() {
    let grid = Grid64::new(1, 16, 8.0).unwrap();
    let g = MomentumDistribution64::gaussian(&grid, 0.5, 0.8).unwrap();
    assert_eq!(norm(&InteractionPotential64::zero(&grid), &g), 0.0);
}
