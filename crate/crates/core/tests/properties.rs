use proptest::prelude::*;
use superhedge::cones::{build_ku, PolyCone};
use superhedge::market::{random_claim, random_market, CountableModel, MarketModel, RandomMarketOptions, Sequence};
use superhedge::measures::{classify_measure, classify_series, loss_entropy, separating_polytope, MeasureDensity, Verdict};
use superhedge::pricing::{suprep_dual, suprep_primal, ConeChoice, PricingError};
use superhedge::utility::{conjugate, UtilityFunction};
use superhedge::{ExactMarket, Market, Rational};

fn market(seed: u64) -> Market {
    MarketModel::build(&random_market(seed, RandomMarketOptions::default())).unwrap()
}

fn primal(m: &Market, x: Vec<f64>) -> f64 {
    suprep_primal(m, &m.claim(x).unwrap(), &ConeChoice::Cu).unwrap().0
}

fn dual(m: &Market, x: Vec<f64>) -> f64 {
    suprep_dual(m, &m.claim(x).unwrap()).unwrap().0
}

fn weights(raw: &[f64]) -> Vec<f64> {
    let t: f64 = raw.iter().sum();
    raw.iter().map(|x| x / t).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn translation(seed in 0u64..5000, c in -5.0f64..5.0) {
        let m = market(seed);
        let x = random_claim(seed, m.num_states(), 1.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        prop_assert!((primal(&m, shifted.clone()) - primal(&m, x.clone()) - c).abs() <= 1e-9);
        prop_assert!((dual(&m, shifted) - dual(&m, x) - c).abs() <= 1e-9);
    }

    #[test]
    fn positive_homogeneity(seed in 0u64..5000, lambda in 0.1f64..10.0) {
        let m = market(seed);
        let x = random_claim(seed + 1, m.num_states(), 1.0);
        let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let (a, b) = (primal(&m, scaled), lambda * primal(&m, x));
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn monotone_and_subadditive(seed in 0u64..5000) {
        let m = market(seed);
        let n = m.num_states();
        let x = random_claim(seed, n, 1.0);
        let y: Vec<f64> = x.iter().zip(random_claim(seed + 7, n, 1.0)).map(|(a, d)| a + d.abs()).collect();
        prop_assert!(primal(&m, x.clone()) <= primal(&m, y.clone()) + 1e-9);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(primal(&m, sum) <= primal(&m, x) + primal(&m, y) + 1e-9);
    }

    #[test]
    fn weak_duality_over_every_vertex(seed in 0u64..5000) {
        let m = market(seed);
        let x = random_claim(seed + 3, m.num_states(), 2.0);
        let p = primal(&m, x.clone());
        let poly = separating_polytope(&m).unwrap();
        for q in poly.vertices().unwrap() {
            let e: f64 = q.iter().zip(&x).map(|(a, b)| a * b).sum();
            prop_assert!(e <= p + 1e-9);
        }
        prop_assert!(dual(&m, x) <= p + 1e-9);
    }

    #[test]
    fn admissible_cone_agrees_on_bounded_claims(seed in 0u64..5000) {
        let m = market(seed);
        let x: Vec<f64> = random_claim(seed, m.num_states(), 1.0).iter().map(|v| v.max(-0.5)).collect();
        let claim = m.claim(x.clone()).unwrap();
        let (kadm, _) = suprep_primal(&m, &claim, &ConeChoice::KAdm { lower_bound: 1000.0 }).unwrap();
        prop_assert!((kadm - primal(&m, x)).abs() <= 1e-7);
    }

    #[test]
    fn solidity_of_the_utility_cone(seed in 0u64..5000, theta in proptest::collection::vec(-2.0f64..2.0, 12)) {
        let m = market(seed);
        let n = m.num_states();
        let gains = m.gains_space();
        let ku = build_ku(&m);
        let wealth = gains.wealth(&theta[..gains.len().min(12)], n);
        let below: Vec<f64> = wealth.iter().zip(random_claim(seed, n, 1.0)).map(|(w, d)| w - d.abs()).collect();
        prop_assert!(ku.contains(&below).unwrap());
        let negative: Vec<f64> = random_claim(seed + 1, n, 1.0).iter().map(|d| -d.abs()).collect();
        prop_assert!(ku.contains(&negative).unwrap());
    }

    #[test]
    fn polar_is_antitone(seed in 0u64..5000, dim in 2usize..5, extra in 1usize..4) {
        let gens = |s: u64, count: usize| -> Vec<Vec<f64>> {
            (0..count).map(|i| random_claim(s * 31 + i as u64, dim, 2.0)).collect()
        };
        let small = gens(seed, 2);
        let mut large = small.clone();
        large.extend(gens(seed + 99, extra));
        let w = vec![1.0 / dim as f64; dim];
        let a = PolyCone::from_generators(w.clone(), small.clone(), vec![false; small.len()]).unwrap();
        let b = PolyCone::from_generators(w, large.clone(), vec![false; large.len()]).unwrap();
        let (pa, pb) = (a.polar().unwrap(), b.polar().unwrap());
        prop_assert!(pb.inclusion_violation(&pa).unwrap() <= 1e-8);
    }

    #[test]
    fn mixture_loss_bound(raw in proptest::collection::vec(0.1f64..1.0, 6),
                          u1 in proptest::collection::vec(0.0f64..1.0, 6),
                          u2 in proptest::collection::vec(0.0f64..1.0, 6),
                          alpha in 0.0f64..1.0) {
        let p = weights(&raw);
        let norm = |u: &[f64]| {
            let z: Vec<f64> = u.iter().map(|v| v.powi(3) * 30.0 + 1e-3).collect();
            let mean: f64 = z.iter().zip(&p).map(|(a, b)| a * b).sum();
            z.iter().map(|v| v / mean).collect::<Vec<f64>>()
        };
        let (z1, z2) = (norm(&u1), norm(&u2));
        let zm: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let b = 3.0;
        for u in [UtilityFunction::exponential(), UtilityFunction::glued_unbounded(), UtilityFunction::log()] {
            let pair = conjugate(&u).unwrap();
            let l = |z: &[f64]| loss_entropy(&MeasureDensity::finite(p.clone(), z.to_vec()).unwrap(), &pair, b);
            prop_assert!(l(&zm) <= l(&z1) + l(&z2) + pair.v_plus(b) + 1e-12);
        }
    }

    #[test]
    fn loss_verdict_ignores_b(r_q in 0.55f64..0.95) {
        let p = Sequence::geometric(0.5).unwrap();
        let q = Sequence::geometric(r_q).unwrap();
        let model = CountableModel::new(p, q, 1 << 14).unwrap();
        let density = MeasureDensity::countable(model, 1 << 14);
        let pair = conjugate(&UtilityFunction::exponential()).unwrap();
        let verdicts: Vec<bool> = [0.5, 1.0, 2.0, 10.0]
            .iter()
            .map(|&b| classify_measure::<f64, f64>(&density, &pair, None, b).unwrap().classification.in_hat_mv)
            .collect();
        prop_assert!(verdicts.iter().all(|&v| v == verdicts[0]), "{:?}", verdicts);
    }

    #[test]
    fn fenchel_young(x in -20.0f64..20.0, ly in -6.0f64..6.0) {
        let y = ly.exp();
        for u in [UtilityFunction::exponential(), UtilityFunction::glued_unbounded(), UtilityFunction::slow_loss()] {
            let v = conjugate(&u).unwrap().v(y);
            prop_assert!(u.u(x) <= v + x * y + 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn geometric_series_is_finite(r in 0.05f64..0.9) {
        let rep = classify_series(|k| r.powi(k as i32), 1 << 12);
        prop_assert_eq!(rep.verdict, Verdict::Finite);
        prop_assert!((rep.partial_sum - r / (1.0 - r)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_and_float_prices_agree(seed in 0u64..5000) {
        let opts = RandomMarketOptions { max_periods: 2, max_assets: 2, max_states: 6 };
        let config = random_market(seed, opts);
        let mf: Market = MarketModel::build(&config).unwrap();
        let me: ExactMarket = MarketModel::build(&config).unwrap();
        let x = random_claim(seed, mf.num_states(), 1.0);
        let xe: Vec<Rational> = x.iter().map(|&v| <Rational as superhedge::Scalar>::from_f64_lossy(v)).collect();
        // float-built martingale prices read as exact decimals can carry a
        // rounding-size arbitrage; then both sides must say so
        let primal_exact = suprep_primal(&me, &me.claim(xe.clone()).unwrap(), &ConeChoice::Cu);
        if separating_polytope(&me).is_err() {
            prop_assert!(matches!(primal_exact, Err(PricingError::Unbounded)));
            prop_assert!(matches!(suprep_dual(&me, &me.claim(xe).unwrap()), Err(PricingError::EmptyMeasureSet)));
            return Ok(());
        }
        let (pe, _) = primal_exact.unwrap();
        let (de, _) = suprep_dual(&me, &me.claim(xe).unwrap()).unwrap();
        prop_assert_eq!(&pe, &de);
        let pe = num_traits::ToPrimitive::to_f64(&pe).unwrap();
        prop_assert!((primal(&mf, x) - pe).abs() <= 1e-8, "{}", pe);
    }
}

#[test]
fn exact_and_float_prices_agree_on_fixtures() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for name in ["trinomial.json", "binomial2.json", "complete_binomial.json"] {
        let config = serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap();
        let mf: Market = MarketModel::build(&config).unwrap();
        let me: ExactMarket = MarketModel::build(&config).unwrap();
        for seed in 0..10 {
            let x = random_claim(seed, mf.num_states(), 1.0);
            let xe: Vec<Rational> = x.iter().map(|&v| <Rational as superhedge::Scalar>::from_f64_lossy(v)).collect();
            let (pe, _) = suprep_primal(&me, &me.claim(xe.clone()).unwrap(), &ConeChoice::Cu).unwrap();
            let (de, _) = suprep_dual(&me, &me.claim(xe).unwrap()).unwrap();
            assert_eq!(pe, de, "{name}");
            let pe = num_traits::ToPrimitive::to_f64(&pe).unwrap();
            assert!((primal(&mf, x) - pe).abs() <= 1e-9, "{name}");
        }
    }
}
