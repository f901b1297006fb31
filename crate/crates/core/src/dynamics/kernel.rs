use num_complex::Complex;
use rayon::prelude::*;

use super::FieldState;
use crate::equilibrium::{EquilibriumCorrelation, InteractionPotential};
use crate::error::{Error, Result};
use crate::lattice::{Grid, Offset, MAX_DIM};
use crate::scalar::{to_f64, Real};

/// Perturbed two-point function `V(x, z) = E[X(x) X̄(x+z)] - K_eq(z)` on a
/// finite separation set.
#[derive(Clone, Debug)]
pub struct CorrelationKernel<T: Real> {
    grid: Grid<T>,
    time: T,
    separations: Vec<Offset>,
    /// `values[s][x]` for separation `s` and base site `x`.
    values: Vec<Vec<Complex<T>>>,
}

/// The support offsets of `w` together with `z = 0`, sorted.
pub fn default_separations<T: Real>(w: &InteractionPotential<T>) -> Vec<Offset> {
    let mut out: Vec<Offset> = w.lattice().terms().iter().map(|(z, _)| *z).collect();
    out.push([0; MAX_DIM]);
    out.sort();
    out.dedup();
    out
}

fn negated(z: &Offset) -> Offset {
    let mut m = *z;
    m.iter_mut().for_each(|v| *v = -*v);
    m
}

/// Checks that the separation set is closed under `z ↦ -z` (modulo the box).
pub fn check_separations<T: Real>(grid: &Grid<T>, separations: &[Offset]) -> Result<()> {
    let sites: Vec<usize> = separations.iter().map(|z| grid.index_of_offset(z)).collect();
    for z in separations {
        if !sites.contains(&grid.index_of_offset(&negated(z))) {
            return Err(Error::Domain(format!(
                "separation set is not symmetric at {:?}",
                &z[..grid.dim()]
            )));
        }
    }
    Ok(())
}

/// `V(x, z) = Σ_j n_j u_j(x) ū_j(x+z) - K_eq(z)`.
pub fn correlation_kernel<T: Real>(
    state: &FieldState<T>,
    reference: &EquilibriumCorrelation<T>,
    separations: &[Offset],
) -> Result<CorrelationKernel<T>> {
    let grid = state.grid();
    if reference.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let values = separations
        .iter()
        .map(|z| {
            let k = reference.at(z);
            (0..grid.sites())
                .into_par_iter()
                .map(|x| {
                    let y = grid.shift(x, z);
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (u, n) in state.fields().iter().zip(state.weights()) {
                        acc += u.data()[x] * u.data()[y].conj() * *n;
                    }
                    acc - k
                })
                .collect()
        })
        .collect();
    Ok(CorrelationKernel {
        grid: grid.clone(),
        time: state.time(),
        separations: separations.to_vec(),
        values,
    })
}

impl<T: Real> CorrelationKernel<T> {
    pub fn from_values(
        grid: &Grid<T>,
        time: T,
        separations: Vec<Offset>,
        values: Vec<Vec<Complex<T>>>,
    ) -> Result<Self> {
        if values.len() != separations.len() || values.iter().any(|v| v.len() != grid.sites()) {
            return Err(Error::Domain("kernel values do not match separations × sites".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            time,
            separations,
            values,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn separations(&self) -> &[Offset] {
        &self.separations
    }

    pub fn values(&self) -> &[Vec<Complex<T>>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec<Complex<T>>> {
        self.values
    }

    pub fn sup(&self) -> T {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    /// `max |V̄(x, z) - V(x+z, -z)|`.
    pub fn hermitian_defect(&self) -> Result<f64> {
        check_separations(&self.grid, &self.separations)?;
        let g = &self.grid;
        let pos = |z: &Offset| {
            let i = g.index_of_offset(z);
            self.separations.iter().position(|s| g.index_of_offset(s) == i)
        };
        let mut worst = T::zero();
        for (s, z) in self.separations.iter().enumerate() {
            let m = pos(&negated(z)).expect("checked symmetric");
            for x in 0..g.sites() {
                let y = g.shift(x, z);
                worst = worst.max((self.values[s][x].conj() - self.values[m][y]).norm());
            }
        }
        Ok(to_f64(worst))
    }
}
