//! Production code against the independent oracles in `common`, and the
//! hand-derived reference values frozen from them.

mod common;

use common::{dual_price_oracle, legendre_oracle, ray_oracle, same_set, vertex_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superhedge::cones::{double_description, PolyCone};
use superhedge::market::{random_claim, random_market, MarketConfig, MarketModel, RandomMarketOptions};
use superhedge::measures::{loss_entropy, separating_polytope, MeasureDensity};
use superhedge::pricing::{suprep_dual, suprep_primal, truncation_gap_study, ConeChoice, StudyClaim, TruncationFamily};
use superhedge::utility::{conjugate, UtilityFunction};
use superhedge::Market;

fn small_markets() -> Vec<(u64, Market)> {
    let opts = RandomMarketOptions {
        max_states: 8,
        ..Default::default()
    };
    (1..=60)
        .map(|s| (s, MarketModel::build(&random_market(s, opts)).unwrap()))
        .collect()
}

#[test]
fn vertices_match_brute_force_enumeration() {
    for (seed, m) in small_markets() {
        let poly = separating_polytope(&m).unwrap();
        let got = poly.vertices().unwrap().to_vec();
        let want = vertex_oracle(&m.gains_space().generators, m.num_states());
        assert!(same_set(&got, &want, 1e-8), "seed {seed}: {got:?} vs {want:?}");
    }
}

#[test]
fn prices_match_brute_force_dual() {
    for (seed, m) in small_markets() {
        let gains = m.gains_space().generators;
        for j in 0..5 {
            let x = m.claim(random_claim(seed * 10 + j, m.num_states(), 2.0)).unwrap();
            let oracle = dual_price_oracle(&gains, &x.payoff);
            let (primal, _) = suprep_primal(&m, &x, &ConeChoice::Cu).unwrap();
            let (dual, _) = suprep_dual(&m, &x).unwrap();
            assert!((primal - oracle).abs() < 1e-8, "seed {seed}: primal {primal} oracle {oracle}");
            assert!((dual - oracle).abs() < 1e-8, "seed {seed}: dual {dual} oracle {oracle}");
        }
    }
}

#[test]
fn trinomial_vertices_frozen() {
    let m: Market = MarketModel::build(&MarketConfig::trinomial()).unwrap();
    let want = vec![vec![0.0, 1.0, 0.0], vec![1.0 / 3.0, 0.0, 2.0 / 3.0]];
    assert!(same_set(&vertex_oracle(&m.gains_space().generators, 3), &want, 1e-12));
    // every point of the segment Q(t) = (t/2, 1 − 3t/2, t) prices the gain to zero
    for t in [0.0, 0.2, 0.5, 2.0 / 3.0] {
        let q = [t / 2.0, 1.0 - 1.5 * t, t];
        let g = &m.gains_space().generators[0];
        let e: f64 = q.iter().zip(g).map(|(a, b)| a * b).sum();
        assert!(e.abs() < 1e-12);
    }
}

fn random_rows(rng: &mut ChaCha8Rng) -> (usize, Vec<Vec<f64>>) {
    let d = rng.random_range(2..=5);
    let m = rng.random_range(d..=d + 4);
    let rows = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-4i32..=4) as f64).collect())
        .collect();
    (d, rows)
}

#[test]
fn double_description_matches_ray_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    while compared < 150 {
        let (d, rows) = random_rows(&mut rng);
        let Some(want) = ray_oracle(&rows, d) else {
            continue;
        };
        let (lin, got) = double_description(&rows, d).unwrap();
        assert!(lin.is_empty(), "{rows:?}");
        assert!(same_set(&got, &want, 1e-7), "{rows:?}: {got:?} vs {want:?}");
        compared += 1;
    }
}

#[test]
fn double_description_exact_agrees_with_float() {
    use superhedge::Rational;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..60 {
        let (d, rows) = random_rows(&mut rng);
        let exact: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Rational::from_integer((x as i64).into())).collect())
            .collect();
        let (lf, rf) = double_description(&rows, d).unwrap();
        let (le, re) = double_description(&exact, d).unwrap();
        let to_f = |v: &Vec<Vec<Rational>>| -> Vec<Vec<f64>> {
            v.iter()
                .map(|r| r.iter().map(|x| num_traits::ToPrimitive::to_f64(x).unwrap()).collect())
                .collect()
        };
        assert!(same_set(&rf, &to_f(&re), 1e-9), "{rows:?}");
        assert!(same_set(&lf, &to_f(&le), 1e-9), "{rows:?}");
    }
}

#[test]
fn polar_of_diagonal_ray_frozen() {
    // cone{(1,1)} under uniform weights: polar {x1 + x2 ≤ 0}
    let c = PolyCone::from_generators(vec![0.5, 0.5], vec![vec![1.0, 1.0]], vec![false]).unwrap();
    let p = c.polar().unwrap();
    for x in [[1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0], [-3.0, 2.0]] {
        assert!(p.contains(&x).unwrap(), "{x:?}");
    }
    for x in [[1.0, 0.0], [0.2, 0.1]] {
        assert!(!p.contains(&x).unwrap(), "{x:?}");
    }
}

#[test]
fn legendre_oracle_reproduces_closed_forms() {
    let e = std::f64::consts::E;
    // (utility, y, hand-derived V(y))
    let cases: Vec<(UtilityFunction<f64>, f64, f64)> = vec![
        (UtilityFunction::exponential(), 1.0, 0.0),
        (UtilityFunction::exponential(), e, 1.0),
        (UtilityFunction::log(), 1.0, -1.0),
        (UtilityFunction::power(0.5).unwrap(), 1.0, 1.0),
        (UtilityFunction::glued_unbounded(), 0.5, 2.0),
        (UtilityFunction::glued_unbounded(), e, 3.0 - e),
        (UtilityFunction::slow_loss(), 3.0, e * e),
    ];
    for (u, y, want) in cases {
        let f = |x: f64| u.u(x);
        let oracle = legendre_oracle(&f, u.critical_wealth(), y);
        let catalog = conjugate(&u).unwrap().v(y);
        let scale = want.abs().max(1.0);
        assert!((oracle - want).abs() < 1e-8 * scale, "{}: oracle {oracle} vs {want}", u.label());
        assert!((catalog - want).abs() < 1e-12 * scale, "{}: catalog {catalog} vs {want}", u.label());
    }
}

#[test]
fn numeric_conjugate_matches_oracle() {
    let u = UtilityFunction::custom("cara-2", f64::NEG_INFINITY, |x| -(-2.0 * x).exp() / 2.0, |x| (-2.0 * x).exp());
    let pair = conjugate(&u).unwrap();
    assert!(!pair.is_closed_form());
    for y in [1e-3, 0.1, 1.0, 7.0, 300.0] {
        let f = |x: f64| u.u(x);
        let o = legendre_oracle(&f, f64::NEG_INFINITY, y);
        let v = pair.v(y);
        assert!((v - o).abs() <= 1e-8 * o.abs().max(1.0), "y {y}: {v} vs {o}");
    }
}

#[test]
fn two_state_loss_entropy_frozen() {
    // p = (1/4, 3/4), z = (e, (4 − e)/3): only the first state reaches b = 1,
    // and V(e) = 1 for the exponential utility
    let e = std::f64::consts::E;
    let q = MeasureDensity::finite(vec![0.25, 0.75], vec![e, (4.0 - e) / 3.0]).unwrap();
    let pair = conjugate(&UtilityFunction::exponential()).unwrap();
    assert!((loss_entropy(&q, &pair, 1.0) - 0.25).abs() < 1e-14);
    assert_eq!(loss_entropy(&q, &pair, 3.0), 0.0);
}

#[test]
fn truncation_study_frozen() {
    // with L = 5: primal −1 − 4/(N − 1) for every N, dual −2
    let fam = TruncationFamily::default();
    let levels = [10usize, 100, 1000];
    let rows = truncation_gap_study(&fam, &levels, 5.0, &[StudyClaim::UnboundedBelow]).unwrap();
    let mut last_dual = f64::INFINITY;
    for (row, &n) in rows.iter().zip(&levels) {
        let primal = -1.0 - 4.0 / (n as f64 - 1.0);
        assert!((row.primal - primal).abs() < 1e-9, "{row:?}");
        assert!((row.dual + 2.0).abs() < 1e-9, "{row:?}");
        assert!(row.gap > 0.0);
        assert!(row.dual <= last_dual + 1e-12);
        last_dual = row.dual;
    }
}

#[test]
fn truncation_gap_shrinks_with_the_bound() {
    let fam = TruncationFamily::default();
    let gaps: Vec<f64> = [5.0, 50.0, 1e6]
        .iter()
        .map(|&l| truncation_gap_study(&fam, &[40], l, &[StudyClaim::UnboundedBelow]).unwrap()[0].gap)
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] >= gaps[2], "{gaps:?}");
    assert!(gaps[2].abs() < 1e-7, "{gaps:?}");
    let bounded = truncation_gap_study(&fam, &[10, 100], 1e6, &[StudyClaim::BoundedBelow]).unwrap();
    assert!(bounded.iter().all(|r| r.gap.abs() < 1e-7));
}
