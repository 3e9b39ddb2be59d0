use std::cell::RefCell;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regime_core::grecursion::{
    consequence_brute_force, g_recursion, g_recursion_traced, g_transfer, OutcomeFunctional, Trace, Transfer,
    TransferPolicy,
};
use regime_core::random::{random_functional, random_model, random_rational, GenConfig, Profile};
use regime_core::rational::Rational;

fn profile(i: usize) -> Profile {
    [Profile::Unrestricted, Profile::Randomized, Profile::Irrelevant][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn recursion_matches_brute_force(seed in any::<u64>(), p in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, profile(p), &GenConfig::default());
        let k = random_functional(&mut rng, &m);
        for id in m.regime_ids() {
            prop_assert_eq!(g_recursion(&m, &id, &k).unwrap(), consequence_brute_force(&m, &id, &k).unwrap());
        }
    }

    #[test]
    fn consequence_is_linear_in_the_loss(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, Profile::Unrestricted, &GenConfig::default());
        let (k1, k2) = (random_functional(&mut rng, &m), random_functional(&mut rng, &m));
        let (a, b) = (random_rational(&mut rng), random_rational(&mut rng));
        let pairs: Vec<(String, Rational)> = k1
            .pairs()
            .zip(k2.pairs())
            .map(|((label, v1), (_, v2))| (label.to_string(), &a * v1 + &b * v2))
            .collect();
        let mixed = OutcomeFunctional::new(&m, &pairs).unwrap();
        let lhs = g_recursion(&m, "s", &mixed).unwrap();
        let rhs = &a * g_recursion(&m, "s", &k1).unwrap() + &b * g_recursion(&m, "s", &k2).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn constant_loss_gives_the_constant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, Profile::Unrestricted, &GenConfig::default());
        let c = random_rational(&mut rng);
        let k = OutcomeFunctional::from_fn(&m, |_| c.clone());
        prop_assert_eq!(g_recursion(&m, "o", &k).unwrap(), c);
    }

    #[test]
    fn values_on_null_histories_do_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig { zero_rate: 0.4, ..GenConfig::default() };
        let m = random_model(&mut rng, Profile::Unrestricted, &cfg);
        let k = random_functional(&mut rng, &m);
        let plain = g_recursion(&m, "s", &k).unwrap();
        let noise = RefCell::new(ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let version = |_: &[(String, String)]| -> Rational {
            let mut r = noise.borrow_mut();
            let v = random_rational(&mut *r);
            if r.gen_bool(0.5) { v * Rational::from_integer(1000.into()) } else { -v }
        };
        let traced = g_recursion_traced(&m, "s", &k, &Trace { version: Some(&version), record: true }).unwrap();
        prop_assert_eq!(traced.value, plain);
    }

    #[test]
    fn verified_transfer_equals_the_oracle(seed in any::<u64>(), p in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, profile(p), &GenConfig::default());
        let k = random_functional(&mut rng, &m);
        if let Ok(Transfer::Value { value, verified: true, .. }) = g_transfer(&m, "s", &k, TransferPolicy::RequireChecks) {
            prop_assert_eq!(value, g_recursion(&m, "s", &k).unwrap());
        }
    }
}

#[test]
fn traced_table_starts_at_the_empty_history() {
    let m = regime_core::fixtures::fixture("appb")
        .unwrap()
        .parse_model()
        .unwrap()
        .unwrap();
    let k = OutcomeFunctional::identity(&m).unwrap();
    let r = g_recursion_traced(
        &m,
        "s",
        &k,
        &Trace {
            version: None,
            record: true,
        },
    )
    .unwrap();
    let root = r
        .table
        .iter()
        .find(|e| e.history == "(empty history)")
        .expect("root entry");
    assert_eq!(root.value, r.value);
    assert!(r.table.iter().all(|e| !e.null));
}

#[test]
fn generated_models_do_reach_null_histories() {
    let cfg = GenConfig {
        zero_rate: 0.4,
        ..GenConfig::default()
    };
    let version = |_: &[(String, String)]| Rational::from_integer(7.into());
    let mut with_nulls = 0;
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, Profile::Unrestricted, &cfg);
        let k = random_functional(&mut rng, &m);
        let r = g_recursion_traced(
            &m,
            "s",
            &k,
            &Trace {
                version: Some(&version),
                record: true,
            },
        )
        .unwrap();
        if r.table.iter().any(|e| e.null) {
            with_nulls += 1;
        }
    }
    assert!(with_nulls >= 10, "only {with_nulls} of 40 models had null histories");
}
