//! Free entropy dimension of a single self-adjoint variable with spectral
//! measure `μ`: `δ(μ) = 1 − Σ_t μ({t})²`.

use num_traits::Num;
use serde::Serialize;

use crate::measure::Measure;
use crate::real::Real;

/// Positions closer than this are the same atom.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Atomic part of a measure, merged and sorted, plus the mass left over.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomProfile<T> {
    pub atoms: Vec<(T, T)>,
    pub continuous_mass: T,
}

impl<T: Clone + Num + PartialOrd> AtomProfile<T> {
    /// Sorts `(position, mass)` pairs and merges positions within `tol` of
    /// the previous merged atom. Zero masses are dropped.
    pub fn from_atoms(mut atoms: Vec<(T, T)>, tol: T) -> Self {
        atoms.retain(|(_, m)| *m > T::zero());
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable positions"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if within(&last.0, &x, &tol) => last.1 = last.1.clone() + m,
                _ => merged.push((x, m)),
            }
        }
        let total = merged.iter().fold(T::zero(), |acc, (_, m)| acc + m.clone());
        let rest = T::one() - total;
        AtomProfile {
            atoms: merged,
            continuous_mass: if rest > T::zero() { rest } else { T::zero() },
        }
    }

    /// `1 − Σ mass²`.
    pub fn free_dimension(&self) -> T {
        let sq = self
            .atoms
            .iter()
            .fold(T::zero(), |acc, (_, m)| acc + m.clone() * m.clone());
        T::one() - sq
    }
}

fn within<T: Clone + Num + PartialOrd>(a: &T, b: &T, tol: &T) -> bool {
    let d = if a > b {
        a.clone() - b.clone()
    } else {
        b.clone() - a.clone()
    };
    d <= *tol
}

/// Exact decomposition from the representation: atoms of atomic parts
/// (through mixtures and push-forwards); densities and Bernoulli
/// convolutions contribute none.
pub fn atom_profile<S: Real>(mu: &Measure<S>) -> AtomProfile<S> {
    AtomProfile::from_atoms(mu.atoms(), S::lit(MERGE_TOLERANCE))
}

pub fn free_dimension_single<S: Real>(mu: &Measure<S>) -> S {
    atom_profile(mu).free_dimension()
}
