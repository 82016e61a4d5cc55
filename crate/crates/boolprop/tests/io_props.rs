use boolprop::io::{generate, parse_model, write_model, GenKind, GenParams};
use boolprop::junction::Factorisation;
use boolprop::{Potential, Scope, VarId};
use proptest::prelude::*;

fn factor(n: u32) -> impl Strategy<Value = Potential> {
    prop::collection::btree_set(1..=n, 0..=4usize.min(n as usize)).prop_flat_map(|vars| {
        let s = Scope::new(vars.into_iter().collect::<Vec<VarId>>()).unwrap();
        let len = s.table_len();
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1e6, any::<f64>().prop_map(f64::abs).prop_filter("finite", |x| x.is_finite())], len)
            .prop_map(move |t| Potential::new(s.clone(), t).unwrap())
    })
}

fn factorisation() -> impl Strategy<Value = Factorisation> {
    (1u32..=8).prop_flat_map(|n| {
        prop::collection::vec(factor(n), 0..6).prop_map(move |mut fs| {
            // cover every variable
            for v in 1..=n {
                fs.push(Potential::unit(Scope::singleton(v)));
            }
            Factorisation::new(n, fs).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn model_text_round_trips(f in factorisation()) {
        prop_assert_eq!(parse_model(&write_model(&f)).unwrap(), f);
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), d in 1usize..6) {
        let p = GenParams { kind: GenKind::Star { center: 5, sep: 2, degree: d }, seed, zero_prob: 0.0 };
        prop_assert_eq!(write_model(&generate(&p).unwrap().0), write_model(&generate(&p).unwrap().0));
    }
}
