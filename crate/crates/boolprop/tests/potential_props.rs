use boolprop::{Mzc, Potential, Scope, VarId};
use proptest::prelude::*;

fn scope_from_mask(mask: u16) -> Scope {
    Scope::new((0..10).filter(|j| mask >> j & 1 == 1).map(|j| j as VarId + 1).collect()).unwrap()
}

fn potential_over(s: Scope) -> impl Strategy<Value = Potential> {
    prop::collection::vec(0.5f64..2.0, s.table_len()).prop_map(move |t| Potential::new(s.clone(), t).unwrap())
}

fn potential(max_mask: u16) -> impl Strategy<Value = Potential> {
    (0..=max_mask).prop_flat_map(|m| potential_over(scope_from_mask(m)))
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()))
}

proptest! {
    #[test]
    fn marginalize_composes(phi in potential(0xff), y_bits in any::<u16>(), z_bits in any::<u16>()) {
        let s = phi.scope();
        let y: Vec<VarId> = s.vars().iter().enumerate().filter(|(j, _)| y_bits >> j & 1 == 1).map(|(_, &v)| v).collect();
        let z: Vec<VarId> = y.iter().enumerate().filter(|(j, _)| z_bits >> j & 1 == 1).map(|(_, &v)| v).collect();
        let (y, z) = (Scope::new(y).unwrap(), Scope::new(z).unwrap());
        let two_step = phi.marginalize(&y).unwrap().marginalize(&z).unwrap();
        let direct = phi.marginalize(&z).unwrap();
        prop_assert!(rel_close(two_step.table(), direct.table(), 1e-12));
    }

    #[test]
    fn multiply_commutes_and_associates(a in potential(0x3f), b in potential(0x3f), c in potential(0x3f)) {
        let ab = a.multiply(&b).unwrap();
        prop_assert!(rel_close(ab.table(), b.multiply(&a).unwrap().table(), 1e-12));
        let left = ab.multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left.scope(), right.scope());
        prop_assert!(rel_close(left.table(), right.table(), 1e-12));
    }

    #[test]
    fn divide_undoes_multiply(pair in (0u16..=0xff).prop_flat_map(|m| (potential_over(scope_from_mask(m)), potential_over(scope_from_mask(m))))) {
        let (phi, psi) = pair;
        let back = phi.multiply(&psi).unwrap().divide(&psi).unwrap();
        prop_assert!(rel_close(back.table(), phi.table(), 1e-12));
    }

    #[test]
    fn mzc_matches_reals(x in prop_oneof![Just(0.0), 0.0f64..1e6], y in prop_oneof![Just(0.0), 0.0f64..1e6]) {
        let (mx, my) = (Mzc::from_real(x).unwrap(), Mzc::from_real(y).unwrap());
        prop_assert_eq!(mx.mul(my).to_real().unwrap(), x * y);
        prop_assert_eq!(mx.add(my).to_real().unwrap(), x + y);
    }

    #[test]
    fn subset_encoding_round_trips(mask in 0u16..0x3ff) {
        let s = scope_from_mask(mask);
        for t in 0..s.table_len() as u64 {
            prop_assert_eq!(s.encode(&s.decode(t)).unwrap(), t);
        }
    }
}
