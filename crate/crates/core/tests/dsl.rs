use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regime_core::ci::statement::CiStatement;
use regime_core::diagram::InfluenceDiagram;
use regime_core::dsl::{
    diagram_to_source, model_to_source, parse_ci, parse_diagram, parse_model, parse_strategy, strategy_to_source,
};
use regime_core::fixtures::{fixture, FIXTURE_NAMES};
use regime_core::random::{random_model, GenConfig, Profile};
use regime_core::strategy::enumerate_strategies;
use regime_core::Span;

fn profile(i: u8) -> Profile {
    [Profile::Unrestricted, Profile::Randomized, Profile::Irrelevant][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn model_source_round_trips(seed in any::<u64>(), p in 0u8..3) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), profile(p), &GenConfig::default());
        let text = model_to_source(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(model_to_source(&back), text);
    }

    #[test]
    fn diagram_source_round_trips(n in 1usize..7, bits in any::<u32>(), with_sigma in any::<bool>()) {
        let mut names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
        if with_sigma {
            names[0] = "sigma".to_string();
        }
        let mut edges = Vec::new();
        let mut b = 0;
        for j in 0..n {
            for i in 0..j {
                if bits >> (b % 32) & 1 == 1 && names[j] != "sigma" {
                    edges.push((names[i].clone(), names[j].clone()));
                }
                b += 1;
            }
        }
        let d = InfluenceDiagram::new(&names, &edges).unwrap();
        let back = parse_diagram(&diagram_to_source(&d)).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn statement_display_round_trips(x in 1u8..8, y in 0u8..8, z in 0u8..8, sy in any::<bool>(), sz in any::<bool>()) {
        let pick = |m: u8| -> Vec<String> { (0..3).filter(|i| m >> i & 1 == 1).map(|i| ["P", "Q", "R"][i].to_string()).collect() };
        let (xs, ys, zs) = (pick(x), pick(y & !x), pick(z & !x & !y));
        let sigma_y = sy || (ys.is_empty() && !sz);
        let Ok(stmt) = CiStatement::new(xs, ys, zs, sigma_y, sz && !sigma_y) else { return Ok(()) };
        prop_assert_eq!(parse_ci(&stmt.to_string()).unwrap(), stmt);
    }
}

#[test]
fn every_strategy_round_trips() {
    for name in ["appb", "xor", "hiv-toy"] {
        let m = fixture(name).unwrap().parse_model().unwrap().unwrap();
        for e in enumerate_strategies(&m).unwrap() {
            let text = strategy_to_source(&m, &e.strategy);
            assert_eq!(parse_strategy(&m, &text).unwrap(), e.strategy, "{name} {}", e.id);
        }
    }
}

#[test]
fn fixture_sources_parse() {
    for name in FIXTURE_NAMES {
        let name = if *name == "cts(N)" { "cts(4)" } else { name };
        let f = fixture(name).unwrap();
        if let Some(m) = f.parse_model().unwrap() {
            assert_eq!(parse_model(&model_to_source(&m)).unwrap(), m, "{name}");
        }
        if let Some(d) = f.parse_diagram().unwrap() {
            assert_eq!(parse_diagram(&diagram_to_source(&d)).unwrap(), d, "{name}");
        }
    }
}

#[test]
fn errors_carry_spans() {
    let base = fixture("appb").unwrap().model.unwrap();
    // break the first probability row of the observational action kernel
    let broken = base.replacen("1 0", "1 x", 1);
    assert_ne!(broken, base);
    let e = parse_model(&broken).unwrap_err();
    let span = e.span().expect("span");
    let line = broken.lines().nth(span.line - 1).unwrap();
    assert!(line.contains("1 x"), "{e} points at `{line}`");

    let e = parse_diagram("nodes: A B\nA -> C\n").unwrap_err();
    assert_eq!(e.span(), Some(Span::new(2, 6)), "{e}");
    let e = parse_ci("X Y | Z").unwrap_err();
    assert!(e.span().is_some(), "{e}");
}
