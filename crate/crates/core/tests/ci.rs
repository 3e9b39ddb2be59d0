use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regime_core::ci::numeric::{check_extended_ci, check_stochastic_ci, mixture_joint};
use regime_core::ci::semigraphoid::semigraphoid_close;
use regime_core::ci::statement::CiStatement;
use regime_core::joint::{materialize_joint, Joint};
use regime_core::model::RegimeModel;
use regime_core::random::{random_model, random_prior, GenConfig, Profile};

fn small() -> GenConfig {
    GenConfig {
        max_stages: 2,
        max_domain: 3,
        ..GenConfig::default()
    }
}

fn names(model: &RegimeModel) -> Vec<String> {
    model.variables.iter().map(|v| v.name.clone()).collect()
}

/// Random disjoint (X, Y, Z) over the model's variables, X and Y non-empty.
fn random_sets<R: Rng>(rng: &mut R, pool: &[String]) -> (Vec<String>, Vec<String>, Vec<String>) {
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(rng);
    let nx = rng.gen_range(1..=2.min(shuffled.len() - 1));
    let ny = rng.gen_range(1..=2.min(shuffled.len() - nx));
    let nz = rng.gen_range(0..=(shuffled.len() - nx - ny).min(3));
    let x = shuffled[..nx].to_vec();
    let y = shuffled[nx..nx + ny].to_vec();
    let z = shuffled[nx + ny..nx + ny + nz].to_vec();
    (x, y, z)
}

/// Every statement over `pool` with non-empty X and Y.
fn all_statements(pool: &[String]) -> Vec<CiStatement> {
    let n = pool.len();
    let mut out = Vec::new();
    let mut code = vec![0usize; n];
    loop {
        let side = |k: usize| -> Vec<String> { (0..n).filter(|&i| code[i] == k).map(|i| pool[i].clone()).collect() };
        let (x, y, z) = (side(1), side(2), side(3));
        if !x.is_empty() && !y.is_empty() {
            out.push(CiStatement::new(x, y, z, false, false).unwrap());
        }
        let mut i = 0;
        while i < n && code[i] == 3 {
            code[i] = 0;
            i += 1;
        }
        if i == n {
            return out;
        }
        code[i] += 1;
    }
}

fn holds(joint: &Joint, stmt: &CiStatement) -> bool {
    check_stochastic_ci(joint, stmt).unwrap().holds
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn stochastic_ci_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, Profile::Unrestricted, &small());
        let pool = names(&m);
        prop_assume!(pool.len() >= 2);
        let joint = materialize_joint(&m, "o").unwrap();
        for _ in 0..8 {
            let (x, y, z) = random_sets(&mut rng, &pool);
            let a = CiStatement::new(x.clone(), y.clone(), z.clone(), false, false).unwrap();
            let b = CiStatement::new(y, x, z, false, false).unwrap();
            prop_assert_eq!(holds(&joint, &a), holds(&joint, &b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn semigraphoid_closure_is_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig { zero_rate: 0.4, ..small() };
        let m = random_model(&mut rng, Profile::Unrestricted, &cfg);
        let mut pool = names(&m);
        pool.shuffle(&mut rng);
        pool.truncate(4);
        prop_assume!(pool.len() >= 3);
        let joint = materialize_joint(&m, "s").unwrap();
        let statements = all_statements(&pool);
        let (true_set, false_set): (Vec<_>, Vec<_>) = statements.into_iter().partition(|s| holds(&joint, s));
        let closure = semigraphoid_close(&true_set, Some(&pool)).unwrap();
        for s in &false_set {
            prop_assert!(!closure.contains(s).unwrap(), "derived `{}`, which fails numerically", s);
        }
    }

    #[test]
    fn extended_ci_matches_mixture(seed in any::<u64>(), p in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = [Profile::Unrestricted, Profile::Randomized, Profile::Irrelevant][p];
        let m = random_model(&mut rng, profile, &small());
        let pool = names(&m);
        let ids = m.regime_ids();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let priors: Vec<_> = (0..3).map(|_| random_prior(&mut rng, &m)).collect();
        let mixtures: Vec<Joint> = priors.iter().map(|pr| mixture_joint(&m, pr).unwrap().joint).collect();
        for _ in 0..6 {
            let mut shuffled = pool.clone();
            shuffled.shuffle(&mut rng);
            let nx = rng.gen_range(1..=2.min(shuffled.len()));
            let nz = rng.gen_range(0..=(shuffled.len() - nx).min(3));
            let x = shuffled[..nx].to_vec();
            let z = shuffled[nx..nx + nz].to_vec();
            // sigma on the right, then sigma in the condition against another variable
            let mut cases = vec![CiStatement::new(x.clone(), Vec::<String>::new(), z.clone(), true, false).unwrap()];
            if nx + nz < shuffled.len() {
                let y = vec![shuffled[nx + nz].clone()];
                cases.push(CiStatement::new(x.clone(), y, z.clone(), false, true).unwrap());
            }
            for stmt in cases {
                let extended = check_extended_ci(&m, &refs, &stmt).unwrap().holds;
                for (mix, prior) in mixtures.iter().zip(&priors) {
                    prop_assert_eq!(holds(mix, &stmt), extended, "{} under prior {:?}", stmt, prior);
                }
            }
        }
    }
}

#[test]
fn statement_enumeration_counts() {
    // each of n symbols goes to X, Y, Z or nowhere; X and Y non-empty
    let pool: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    let expected = 4usize.pow(3) - 2 * 3usize.pow(3) + 2usize.pow(3);
    assert_eq!(all_statements(&pool).len(), expected);
}
