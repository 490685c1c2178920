use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use entdim_core::freedim::{atom_profile, free_dimension_single, AtomProfile};
use entdim_core::Measure;

fn rational_atoms() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-20i64..20, 1i64..50), 1..8)
}

fn normalized(raw: &[(i64, i64)]) -> Vec<(BigRational, BigRational)> {
    let total: i64 = raw.iter().map(|p| p.1).sum();
    raw.iter()
        .map(|&(x, k)| (BigRational::from_integer(x.into()), BigRational::new(k.into(), total.into())))
        .collect()
}

/// `1 − Σ_t μ({t})²` with coincident positions summed first.
fn oracle(atoms: &[(BigRational, BigRational)]) -> BigRational {
    let mut by_pos: std::collections::BTreeMap<BigRational, BigRational> = Default::default();
    for (x, w) in atoms {
        *by_pos.entry(x.clone()).or_insert_with(BigRational::zero) += w;
    }
    BigRational::one() - by_pos.values().fold(BigRational::zero(), |a, w| a + w * w)
}

proptest! {
    #[test]
    fn exact_profile_matches_the_formula(raw in rational_atoms()) {
        let atoms = normalized(&raw);
        let p = AtomProfile::from_atoms(atoms.clone(), BigRational::zero());
        prop_assert_eq!(p.free_dimension(), oracle(&atoms));
        prop_assert!(p.continuous_mass.is_zero());
    }

    #[test]
    fn superaffine_on_rational_mixtures(a in rational_atoms(), b in rational_atoms(), k in 1i64..10) {
        let (a, b) = (normalized(&a), normalized(&b));
        let w = BigRational::new(k.into(), 10.into());
        let v = BigRational::one() - w.clone();
        let mut mix: Vec<_> = a.iter().map(|(x, m)| (x.clone(), m * &w)).collect();
        mix.extend(b.iter().map(|(x, m)| (x.clone(), m * &v)));
        let d = |atoms: &[(BigRational, BigRational)]| {
            AtomProfile::from_atoms(atoms.to_vec(), BigRational::zero()).free_dimension()
        };
        let lhs = d(&mix);
        let rhs = &w * d(&a) + &v * d(&b);
        prop_assert!(lhs >= rhs);
    }

    #[test]
    fn float_path_is_within_a_few_ulp(raw in rational_atoms()) {
        let total: i64 = raw.iter().map(|p| p.1).sum();
        let mu = Measure::atomic(
            raw.iter().map(|p| p.0 as f64).collect(),
            raw.iter().map(|p| p.1 as f64 / total as f64).collect(),
        ).unwrap();
        let exact: f64 = num_traits::ToPrimitive::to_f64(&oracle(&normalized(&raw))).unwrap();
        let got = free_dimension_single(&mu);
        prop_assert!((got - exact).abs() <= 8.0 * f64::EPSILON);
        prop_assert!((0.0..=1.0).contains(&got));
    }
}

#[test]
fn continuous_parts_carry_no_atoms() {
    let mix = Measure::mixture(vec![
        (0.25, Measure::dirac(1.0)),
        (0.25, Measure::bernoulli(0.25).unwrap()),
        (0.5, Measure::uniform(0.0, 1.0).unwrap()),
    ])
    .unwrap();
    let p = atom_profile(&mix);
    assert_eq!(p.atoms, vec![(1.0, 0.25)]);
    assert_eq!(p.continuous_mass, 0.75);
    assert_eq!(free_dimension_single(&mix), 1.0 - 0.0625);
}
