use boolprop::io::{brute_force_marginals, generate, GenKind, GenParams};
use boolprop::junction::{construct, root_tree, Factorisation, RootStrategy, RootedTree};
use boolprop::propagation::{compute_marginals, propagate, Engine, MarginalStyle};
use boolprop::Potential;
use proptest::prelude::*;

fn model(zero_prob: f64) -> impl Strategy<Value = Factorisation> {
    (1usize..=12, 1usize..=8, 1usize..=5, any::<u64>()).prop_filter_map("infeasible", move |(n, factors, max_scope, seed)| {
        let kind = GenKind::Random { n, factors, max_scope: max_scope.min(n) };
        generate(&GenParams { kind, seed, zero_prob }).ok().map(|g| g.0)
    })
}

fn rooted(f: &Factorisation) -> RootedTree {
    root_tree(&construct(f).unwrap(), RootStrategy::MaxCardinality).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn engines_send_identical_messages(f in model(0.0)) {
        let rt = rooted(&f);
        let reference = propagate(&rt, &f, Engine::ShaferShenoy).unwrap().messages;
        prop_assert_eq!(reference.len(), 2 * rt.jt.edges.len());
        for e in &Engine::ALL[1..] {
            let run = propagate(&rt, &f, *e).unwrap();
            prop_assert_eq!(run.messages.len(), reference.len());
            for ((k, m), (k2, r)) in run.messages.iter().zip(reference.iter()) {
                prop_assert_eq!(k, k2);
                for (x, y) in m.table().iter().zip(r.table()) {
                    prop_assert!(close(*x, *y, 1e-9), "{:?} {:?}: {} vs {}", e, k, x, y);
                }
            }
        }
    }

    #[test]
    fn engines_match_the_oracle(f in model(0.0)) {
        let rt = rooted(&f);
        let oracle = brute_force_marginals(&f).unwrap().probabilities();
        for e in Engine::ALL {
            let run = propagate(&rt, &f, e).unwrap();
            for style in [MarginalStyle::Stream, MarginalStyle::Dual] {
                let got = compute_marginals(&rt, &f, &run.messages, style).unwrap().probabilities();
                for (g, w) in got.iter().zip(&oracle) {
                    prop_assert!(close(g.1, w.1, 1e-9) && close(g.0, w.0, 1e-9), "{:?} {:?}: {:?} vs {:?}", e, style, g, w);
                }
            }
        }
    }

    #[test]
    fn marginal_styles_agree(f in model(0.0)) {
        let rt = rooted(&f);
        let run = propagate(&rt, &f, Engine::Arch2).unwrap();
        let a = compute_marginals(&rt, &f, &run.messages, MarginalStyle::Stream).unwrap().probabilities();
        let b = compute_marginals(&rt, &f, &run.messages, MarginalStyle::Dual).unwrap().probabilities();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(close(x.1, y.1, 1e-12) && close(x.0, y.0, 1e-12));
        }
    }

    #[test]
    fn hugin_resend_is_unit(f in model(0.0)) {
        let rt = rooted(&f);
        let run = propagate(&rt, &f, Engine::Hugin).unwrap();
        for &(a, b) in &rt.jt.edges {
            for (from, to) in [(a, b), (b, a)] {
                let mut state = run.hugin.clone().unwrap();
                let mut counters = run.counters.clone();
                let m = state.send(&rt, from, to, &mut counters).unwrap();
                for x in m.table() {
                    prop_assert!((x - 1.0).abs() <= 1e-12, "{} -> {}: {}", from, to, x);
                }
            }
        }
    }

    #[test]
    fn arch1_outward_identity(f in model(0.2)) {
        let rt = rooted(&f);
        let Ok(run) = propagate(&rt, &f, Engine::Arch1Simple) else { return Ok(()) };
        for &c in &rt.order {
            for &e in &rt.children[c] {
                // M'_E: everything at C, marginalised onto the separator
                let mut prod = Potential::unit(rt.scope(c).clone());
                for (i, &v) in rt.jt.assignment.iter().enumerate() {
                    if v == c {
                        prod = prod.multiply(&f.factors()[i]).unwrap();
                    }
                }
                for n in rt.neighbours(c) {
                    prod = prod.multiply(run.messages.get(n, c).unwrap()).unwrap();
                }
                let m_prime = prod.marginalize(&rt.jt.separator(c, e)).unwrap();
                let down = run.messages.get(c, e).unwrap();
                let up = run.messages.get(e, c).unwrap();
                let back = down.multiply(up).unwrap();
                for ((x, y), u) in back.table().iter().zip(m_prime.table()).zip(up.table()) {
                    if *u > 0.0 {
                        prop_assert!(close(*x, *y, 1e-9), "{} -> {}: {} vs {}", c, e, x, y);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_models_match_the_oracle(f in model(0.2)) {
        let Ok(oracle) = brute_force_marginals(&f) else { return Ok(()) };
        let oracle = oracle.probabilities();
        let rt = rooted(&f);
        for e in Engine::ALL {
            let run = propagate(&rt, &f, e).unwrap();
            let got = compute_marginals(&rt, &f, &run.messages, MarginalStyle::Stream).unwrap().probabilities();
            for (g, w) in got.iter().zip(&oracle) {
                prop_assert!(close(g.1, w.1, 1e-9) || (w.1 == 0.0 && g.1.abs() < 1e-12), "{:?}: {:?} vs {:?}", e, g, w);
            }
        }
    }
}
