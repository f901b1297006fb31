//! Sharp Littlewood-Paley shells on the frequency lattice.
//!
//! Shell `j > j_min` is the annulus `2^j ≤ |ξ| < 2^{j+1}`. The lowest shell
//! `j_min = ⌊log₂ Δξ⌋` is the ball `|ξ| < 2^{j_min+1}` and contains the zero
//! mode. Every lattice site belongs to exactly one shell.

use super::{forward_transform, inverse_transform, Grid, Representation, SpectralField};
use crate::scalar::{czero, lit, Real};

fn pow2<T: Real>(j: i32) -> T {
    lit::<T>(2.0).powi(j)
}

/// `⌊log₂ r⌋` for `r > 0`, exact at powers of two.
fn floor_log2<T: Real>(r: T) -> i32 {
    let mut j = r.log2().floor().to_i32().unwrap_or(0);
    while pow2::<T>(j + 1) <= r {
        j += 1;
    }
    while pow2::<T>(j) > r {
        j -= 1;
    }
    j
}

impl<T: Real> Grid<T> {
    /// Index of the lowest (ball) shell.
    pub fn lowest_shell(&self) -> i32 {
        floor_log2(self.dxi())
    }

    /// Index of the highest occupied shell.
    pub fn highest_shell(&self) -> i32 {
        (0..self.sites()).map(|i| self.shell_of(i)).max().unwrap_or(0)
    }

    /// Shell index of a frequency-lattice site.
    pub fn shell_of(&self, idx: usize) -> i32 {
        let j_min = self.lowest_shell();
        let r = self.xi_sq(idx).sqrt();
        if r < pow2(j_min + 1) {
            j_min
        } else {
            floor_log2(r)
        }
    }
}

fn project_frequency<T: Real>(fh: &SpectralField<T>, j: i32) -> SpectralField<T> {
    let grid = fh.grid();
    let mut out = fh.clone();
    for (idx, v) in out.data_mut().iter_mut().enumerate() {
        if grid.shell_of(idx) != j {
            *v = czero();
        }
    }
    out
}

/// Restriction of a field to dyadic shell `j`.
///
/// Frequency-represented input is masked directly; position-represented input
/// is transformed, masked and transformed back, so the output keeps the input
/// representation.
pub fn dyadic_projector<T: Real>(f: &SpectralField<T>, j: i32) -> SpectralField<T> {
    match f.representation() {
        Representation::Frequency => project_frequency(f, j),
        Representation::Position => {
            let fh = forward_transform(f).expect("position input");
            inverse_transform(&project_frequency(&fh, j)).expect("frequency output")
        }
    }
}

/// All non-empty shells of a field as `(j, P_j f)`, in increasing `j`.
pub fn shell_decomposition<T: Real>(f: &SpectralField<T>) -> Vec<(i32, SpectralField<T>)> {
    let grid = f.grid();
    let (lo, hi) = (grid.lowest_shell(), grid.highest_shell());
    (lo..=hi).map(|j| (j, dyadic_projector(f, j))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn white_noise(grid: &Grid<f64>, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..grid.sites())
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        SpectralField::new(grid, Representation::Frequency, data).unwrap()
    }

    #[test]
    fn shells_partition_exactly() {
        for (dim, n, len) in [(1, 64, 6.0), (2, 16, 40.0), (3, 8, 1.0)] {
            let g = Grid::<f64>::new(dim, n, len).unwrap();
            let f = white_noise(&g, 9);
            let mut sum = SpectralField::zeros(&g, Representation::Frequency);
            for (_, p) in shell_decomposition(&f) {
                sum.axpy(Complex::new(1.0, 0.0), &p).unwrap();
            }
            assert_eq!(sum.data(), f.data());
        }
    }

    #[test]
    fn shells_are_disjoint_and_pythagorean() {
        let g = Grid::<f64>::new(2, 32, 20.0).unwrap();
        let f = white_noise(&g, 4);
        let parts = shell_decomposition(&f);
        for (a, (_, pa)) in parts.iter().enumerate() {
            for (_, pb) in parts.iter().skip(a + 1) {
                for (x, y) in pa.data().iter().zip(pb.data()) {
                    assert!(x.norm() == 0.0 || y.norm() == 0.0);
                }
            }
        }
        let total: f64 = parts.iter().map(|(_, p)| p.norm_sq()).sum();
        assert!((total - f.norm_sq()).abs() / f.norm_sq() < 1e-12);
    }

    #[test]
    fn plane_wave_at_three_lands_in_shell_one() {
        let g = Grid::<f64>::new(1, 32, std::f64::consts::TAU).unwrap();
        let mut f = SpectralField::zeros(&g, Representation::Frequency);
        f.data_mut()[3] = Complex::new(1.0, 0.0);
        assert_eq!(g.shell_of(3), 1);
        let p = dyadic_projector(&f, 1);
        assert_eq!(p.data(), f.data());
        assert_eq!(dyadic_projector(&f, 0).max_abs(), 0.0);
    }

    #[test]
    fn boundaries_are_exact_at_powers_of_two() {
        let g = Grid::<f64>::new(1, 64, std::f64::consts::TAU).unwrap();
        assert_eq!(g.lowest_shell(), 0);
        assert_eq!(g.shell_of(0), 0);
        assert_eq!(g.shell_of(1), 0);
        assert_eq!(g.shell_of(2), 1);
        assert_eq!(g.shell_of(4), 2);
        assert_eq!(g.shell_of(7), 2);
        assert_eq!(g.shell_of(8), 3);
    }

    #[test]
    fn position_input_keeps_representation() {
        let g = Grid::<f64>::new(1, 32, 10.0).unwrap();
        let f = SpectralField::from_position_fn(&g, |x| Complex::new((-x[0] * x[0]).exp(), 0.0));
        let mut sum = SpectralField::zeros(&g, Representation::Position);
        for (_, p) in shell_decomposition(&f) {
            assert_eq!(p.representation(), Representation::Position);
            sum.axpy(Complex::new(1.0, 0.0), &p).unwrap();
        }
        for (a, b) in sum.data().iter().zip(f.data()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
