use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regime_core::conditions::{condition_report, Checker, Evidence};
use regime_core::joint::materialize_joint;
use regime_core::random::{random_model, GenConfig, Profile};
use regime_core::rational::zero;

fn profile(i: usize) -> Profile {
    [Profile::Unrestricted, Profile::Randomized, Profile::Irrelevant][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reports_are_deterministic(seed in any::<u64>(), p in 0usize..3) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), profile(p), &GenConfig::default());
        let a = condition_report(&m, "s").unwrap();
        let b = condition_report(&m.clone(), "s").unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn no_implication_is_ever_violated(seed in any::<u64>(), p in 0usize..3) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), profile(p), &GenConfig::default());
        let r = condition_report(&m, "s").unwrap();
        prop_assert!(!r.internal_error, "{:?}", r.implications);
    }

    #[test]
    fn generator_profiles_meet_their_premises(seed in any::<u64>(), p in 1usize..3) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), profile(p), &GenConfig::default());
        let r = condition_report(&m, "s").unwrap();
        let holds = |label: &str| r.get(label).unwrap_or_else(|| panic!("{label} missing")).holds;
        prop_assert!(holds("extended-stability"));
        prop_assert!(holds("control(s)"));
        if profile(p) == Profile::Randomized {
            prop_assert!(holds("sequential-randomization(o)"));
        } else {
            prop_assert!(holds("sequential-irrelevance(s)"));
        }
        prop_assert!(holds("simple-stability"));
    }

    #[test]
    fn positivity_witnesses_are_real(seed in any::<u64>()) {
        let cfg = GenConfig { zero_rate: 0.4, ..GenConfig::default() };
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), Profile::Unrestricted, &cfg);
        let (o, s) = (materialize_joint(&m, "o").unwrap(), materialize_joint(&m, "s").unwrap());
        let r = Checker::new(&m).unwrap().positivity("s").unwrap();
        prop_assert_eq!(r.holds, r.witnesses.is_empty());
        for w in &r.witnesses {
            let Evidence::Event { event, s_mass, o_mass } = w else { panic!("unexpected evidence {w}") };
            prop_assert_eq!(&s.prob(&event.0).unwrap(), s_mass);
            prop_assert_eq!(&o.prob(&event.0).unwrap(), o_mass);
            prop_assert!(*s_mass > zero() && *o_mass == zero());
        }
        // the check is absolute continuity of s with respect to o
        let ac = o.probs().iter().zip(s.probs()).all(|(po, ps)| *po != zero() || *ps == zero());
        prop_assert_eq!(r.holds, ac);
    }
}
