use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lattice::{Coord, Grid, Offset, Representation, SpectralField, MAX_DIM};
use crate::scalar::{lit, to_f64, two_pi_pow_half_d, Real};

/// An even, finite, signed interaction measure: point masses plus an optional
/// density sampled on the position lattice.
#[derive(Clone, Debug)]
pub struct InteractionPotential<T: Real> {
    grid: Grid<T>,
    point_masses: Vec<(Coord<T>, T)>,
    density: Option<SpectralField<T>>,
    lattice: LatticeInteraction<T>,
}

/// The interaction as a finite sum `Σ c_z δ_z` over lattice offsets.
///
/// Point masses contribute their weight, density samples contribute
/// `w(z)Δx^d`. Offsets are distinct and weights nonzero.
#[derive(Clone, Debug)]
pub struct LatticeInteraction<T: Real> {
    grid: Grid<T>,
    terms: Vec<(Offset, T)>,
}

fn japanese<T: Real>(grid: &Grid<T>, y: &Coord<T>) -> T {
    (T::one() + grid.dot(y, y)).sqrt()
}

impl<T: Real> InteractionPotential<T> {
    /// Builds and validates a potential. Point masses must sit on the position
    /// lattice and the measure must be even.
    pub fn new(grid: &Grid<T>, point_masses: Vec<(Coord<T>, T)>, density: Option<SpectralField<T>>) -> Result<Self> {
        let tol = lit::<T>(1e-12);
        for (i, (y, a)) in point_masses.iter().enumerate() {
            let scale = T::one().max(a.abs());
            let mirrored = point_masses.iter().any(|(z, b)| {
                (0..grid.dim()).all(|k| (z[k] + y[k]).abs() <= tol * T::one().max(y[k].abs()))
                    && (*b - *a).abs() <= tol * scale
            });
            if !mirrored {
                return Err(Error::NotEven(format!(
                    "point mass #{i} at {:?} has no mirror image",
                    &y[..grid.dim()]
                )));
            }
        }
        if let Some(rho) = &density {
            if rho.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if rho.representation() != Representation::Position {
                return Err(Error::RepresentationMismatch {
                    expected: "position",
                    found: "frequency",
                });
            }
            let peak = rho.max_abs();
            for (idx, v) in rho.data().iter().enumerate() {
                if v.im.abs() > tol * T::one().max(peak) {
                    return Err(Error::Domain("interaction density must be real".into()));
                }
                let mirror = rho.data()[grid.negate(idx)];
                if (mirror.re - v.re).abs() > tol * T::one().max(peak) {
                    return Err(Error::NotEven(format!(
                        "density differs from its reflection at site {idx}"
                    )));
                }
            }
        }
        let lattice = LatticeInteraction::build(grid, &point_masses, density.as_ref())?;
        Ok(Self {
            grid: grid.clone(),
            point_masses,
            density,
            lattice,
        })
    }

    pub fn zero(grid: &Grid<T>) -> Self {
        Self::new(grid, Vec::new(), None).expect("empty measure is even")
    }

    /// `a·δ₀`.
    pub fn point(grid: &Grid<T>, a: T) -> Self {
        Self::new(grid, vec![([T::zero(); MAX_DIM], a)], None).expect("origin is on the lattice")
    }

    /// Symmetric pair `a·(δ_y + δ_{-y})`.
    pub fn symmetric_pair(grid: &Grid<T>, y: Coord<T>, a: T) -> Result<Self> {
        let mut m = y;
        m.iter_mut().for_each(|v| *v = -*v);
        Self::new(grid, vec![(y, a), (m, a)], None)
    }

    /// Density `a·exp(-|x|²/(2σ²))` sampled on the lattice.
    pub fn gaussian(grid: &Grid<T>, amplitude: T, width: T) -> Result<Self> {
        if !(width > T::zero()) {
            return Err(Error::Domain(format!("gaussian width must be positive, got {width}")));
        }
        let two = lit::<T>(2.0);
        let rho = SpectralField::from_position_fn(grid, |x| {
            Complex::new(amplitude * (-grid.dot(x, x) / (two * width * width)).exp(), T::zero())
        });
        Self::new(grid, Vec::new(), Some(rho))
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn point_masses(&self) -> &[(Coord<T>, T)] {
        &self.point_masses
    }

    pub fn density(&self) -> Option<&SpectralField<T>> {
        self.density.as_ref()
    }

    pub fn lattice(&self) -> &LatticeInteraction<T> {
        &self.lattice
    }

    pub fn is_zero(&self) -> bool {
        self.lattice.terms.is_empty()
    }

    /// `s·w`.
    pub fn scaled(&self, s: T) -> Self {
        let masses = self.point_masses.iter().map(|(y, a)| (*y, *a * s)).collect();
        let density = self.density.as_ref().map(|d| {
            let mut d = d.clone();
            d.scale(Complex::new(s, T::zero()));
            d
        });
        Self::new(&self.grid, masses, density).expect("scaling preserves evenness")
    }

    /// `ŵ` on the frequency lattice; real because `w` is even.
    pub fn fourier(&self) -> Vec<T> {
        let scale = T::one() / two_pi_pow_half_d::<T>(self.grid.dim());
        self.lattice.symbol().into_iter().map(|s| s * scale).collect()
    }

    /// `Σ |a|⟨y⟩^m + Δx^d Σ |w(x)|⟨x⟩^m`, the total variation of `⟨y⟩^m w`.
    pub fn weighted_tv_norm(&self, m: u32) -> Result<T> {
        if m > 2 {
            return Err(Error::UnsupportedExponent(format!("moment {m} (supported: 0, 1, 2)")));
        }
        let mut total = T::zero();
        for (y, a) in &self.point_masses {
            total += a.abs() * japanese(&self.grid, y).powi(m as i32);
        }
        if let Some(rho) = &self.density {
            let mut dens = T::zero();
            for (idx, v) in rho.data().iter().enumerate() {
                let x = self.grid.centered_position(idx);
                dens += v.re.abs() * japanese(&self.grid, &x).powi(m as i32);
            }
            total += dens * self.grid.cell_volume();
        }
        Ok(total)
    }
}

impl<T: Real> LatticeInteraction<T> {
    fn build(grid: &Grid<T>, masses: &[(Coord<T>, T)], density: Option<&SpectralField<T>>) -> Result<Self> {
        let dx = grid.dx();
        let mut weights = vec![T::zero(); grid.sites()];
        for (y, a) in masses {
            let mut offset = [0isize; MAX_DIM];
            for k in 0..grid.dim() {
                let r = y[k] / dx;
                let n = r.round();
                if (r - n).abs() > lit::<T>(1e-9) * T::one().max(r.abs()) {
                    return Err(Error::OffLattice {
                        location: y[..grid.dim()].iter().map(|v| to_f64(*v)).collect(),
                    });
                }
                offset[k] = n.to_isize().unwrap_or(0);
            }
            weights[grid.index_of_offset(&offset)] += *a;
        }
        if let Some(rho) = density {
            let vol = grid.cell_volume();
            for (w, v) in weights.iter_mut().zip(rho.data()) {
                *w += v.re * vol;
            }
        }
        let terms = weights
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != T::zero())
            .map(|(idx, c)| (grid.signed_index(idx), c))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            terms,
        })
    }

    /// `(z, c_z)` pairs with signed lattice offsets.
    pub fn terms(&self) -> &[(Offset, T)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ_z c_z`.
    pub fn total(&self) -> T {
        self.terms.iter().map(|(_, c)| *c).sum()
    }

    /// `Σ_z c_z e^{-iξ·z}` on the frequency lattice, equal to `(2π)^{d/2} ŵ`.
    pub fn symbol(&self) -> Vec<T> {
        let grid = &self.grid;
        let mut data = vec![Complex::new(T::zero(), T::zero()); grid.sites()];
        for (z, c) in &self.terms {
            data[grid.index_of_offset(z)] += Complex::new(*c, T::zero());
        }
        grid.forward_in_place(&mut data);
        let scale = two_pi_pow_half_d::<T>(grid.dim()) / grid.cell_volume();
        data.into_iter().map(|v| v.re * scale).collect()
    }

    /// Position of an offset in physical units.
    pub fn location(&self, z: &Offset) -> Coord<T> {
        let dx = self.grid.dx();
        let mut out = [T::zero(); MAX_DIM];
        for k in 0..self.grid.dim() {
            out[k] = lit::<T>(z[k] as f64) * dx;
        }
        out
    }
}
