mod common;

use common::*;
use flag_pingpong::flags::*;
use flag_pingpong::freeprod::*;
use flag_pingpong::linalg::*;
use flag_pingpong::pingpong::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flag_type_strategy() -> impl Strategy<Value = FlagType> {
    prop_oneof![
        Just(FlagType::new(2, vec![1]).unwrap()),
        Just(FlagType::new(3, vec![1, 2]).unwrap()),
        Just(FlagType::new(4, vec![2]).unwrap()),
        Just(FlagType::new(4, vec![1, 3]).unwrap()),
        Just(FlagType::full(4).unwrap()),
    ]
}

fn condition(g: &GroupElement) -> f64 {
    let s = singular_values(g.matrix()).unwrap();
    s[0] / s[s.len() - 1]
}

/// r·diag(λ)·r⁻¹ with distinct, well separated eigenvalues.
fn conjugated_diagonal(rng: &mut ChaCha8Rng, d: usize) -> GroupElement {
    let mut logs: Vec<f64> = (0..d).map(|k| (d as f64 - 1.0 - 2.0 * k as f64) * rng.gen_range(0.4..1.0)).collect();
    let mean = logs.iter().sum::<f64>() / d as f64;
    logs.iter_mut().for_each(|x| *x -= mean);
    let diag = GroupElement::diagonal(&logs.iter().map(|x| x.exp()).collect::<Vec<_>>()).unwrap();
    let r = random_element(rng, d);
    diag.conjugate_by(&r).unwrap()
}

fn schottky() -> PingPongSystem {
    example_system("sl2_schottky.json")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_submultiplicative(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&mut rng, d);
        let h = random_element(&mut rng, d);
        let gh = g.compose(&h).unwrap();
        let lhs = spectral_norm(gh.matrix());
        let rhs = spectral_norm(g.matrix()) * spectral_norm(h.matrix());
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn inverse_reverses_singular_values(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&mut rng, d);
        prop_assume!(condition(&g) < 1e6);
        let s = cartan(&g).unwrap().sigma;
        let si = cartan(&g.inverse()).unwrap().sigma;
        for k in 0..d {
            let expected = 1.0 / s[d - 1 - k];
            prop_assert!((si[k] - expected).abs() <= 1e-9 * expected, "{:?} vs {:?}", si, s);
        }
    }

    #[test]
    fn composition_is_associative(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_element(&mut rng, d), random_element(&mut rng, d), random_element(&mut rng, d));
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        let scale = spectral_norm(a.matrix()) * spectral_norm(b.matrix()) * spectral_norm(c.matrix());
        prop_assert!(left.distance(&right) <= 1e-12 * scale);
    }

    #[test]
    fn action_is_a_group_action(seed in any::<u64>(), t in flag_type_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = t.dim();
        let g = random_element(&mut rng, d);
        let h = random_element(&mut rng, d);
        prop_assume!(condition(&g) < 1e3 && condition(&h) < 1e3);
        let f = random_flag(&mut rng, &t);
        let lhs = act(&g.compose(&h).unwrap(), &f).unwrap();
        let rhs = act(&g, &act(&h, &f).unwrap()).unwrap();
        prop_assert!(flag_distance(&lhs, &rhs).unwrap() < 1e-8);
        let back = act(&g.inverse(), &act(&g, &f).unwrap()).unwrap();
        prop_assert!(flag_distance(&back, &f).unwrap() < 1e-8);
    }

    #[test]
    fn action_preserves_antipodality(seed in any::<u64>(), t in flag_type_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f1 = random_flag(&mut rng, &t);
        let f2 = random_flag(&mut rng, &t);
        let g = random_element(&mut rng, t.dim());
        prop_assume!(condition(&g) < 1e3);
        let m = antipodality_margin(&f1, &f2).unwrap();
        prop_assume!(m > 1e-3);
        let gm = antipodality_margin(&act(&g, &f1).unwrap(), &act(&g, &f2).unwrap()).unwrap();
        // σ_min of the block matrix moves by at most the condition number squared
        prop_assert!(gm > 0.0);
        prop_assert!(gm >= m / (condition(&g).powi(2) * 4.0));
    }

    #[test]
    fn distance_is_a_metric(seed in any::<u64>(), t in flag_type_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_flag(&mut rng, &t), random_flag(&mut rng, &t), random_flag(&mut rng, &t));
        let ab = flag_distance(&a, &b).unwrap();
        prop_assert!((ab - flag_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(flag_distance(&a, &a).unwrap() < 1e-7);
        prop_assert!(ab <= flag_distance(&a, &c).unwrap() + flag_distance(&c, &b).unwrap() + 1e-12);
        prop_assert!(ab <= std::f64::consts::FRAC_PI_2 + 1e-12);
    }

    #[test]
    fn attracting_flag_is_fixed_and_attracting(seed in any::<u64>(), t in flag_type_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = conjugated_diagonal(&mut rng, t.dim());
        let a = attracting_flag(&g, &t).unwrap();
        prop_assert!(flag_distance(&act(&g, &a).unwrap(), &a).unwrap() < 1e-9);
        let repeller = attracting_flag(&g.inverse(), &t).unwrap();
        let f = random_flag(&mut rng, &t);
        prop_assume!(antipodality_margin(&f, &repeller).unwrap() > 1e-2);
        let mut far = f;
        for _ in 0..200 {
            far = act(&g, &far).unwrap();
        }
        prop_assert!(flag_distance(&far, &a).unwrap() < 1e-6);
    }

    #[test]
    fn attracting_flag_is_equivariant(seed in any::<u64>(), t in flag_type_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = conjugated_diagonal(&mut rng, t.dim());
        let r = random_element(&mut rng, t.dim());
        prop_assume!(condition(&r) < 1e2);
        let lhs = attracting_flag(&g.conjugate_by(&r).unwrap(), &t).unwrap();
        let rhs = act(&r, &attracting_flag(&g, &t).unwrap()).unwrap();
        prop_assert!(flag_distance(&lhs, &rhs).unwrap() < 1e-8);
    }
}

fn random_word(rng: &mut ChaCha8Rng, alphabets: &[Vec<Letter>], max_len: usize) -> ReducedWord {
    let len = rng.gen_range(0..=max_len);
    let mut letters: Vec<Letter> = Vec::new();
    let mut last: Option<usize> = None;
    for _ in 0..len {
        let choices: Vec<usize> = (0..alphabets.len()).filter(|&i| Some(i) != last).collect();
        let f = choices[rng.gen_range(0..choices.len())];
        letters.push(alphabets[f][rng.gen_range(0..alphabets[f].len())].clone());
        last = Some(f);
    }
    ReducedWord::from_letters(letters).unwrap()
}

fn three_factor_alphabets() -> (Vec<Vec<Letter>>, usize) {
    let sys = example_system("three_factor.json");
    (sys.alphabets(1e-9).unwrap(), sys.flag_type.dim())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn evaluation_is_a_homomorphism(seed in any::<u64>()) {
        let (alphabets, d) = three_factor_alphabets();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_word(&mut rng, &alphabets, 4);
        let v = random_word(&mut rng, &alphabets, 4);
        let uv = u.concat(&v, 1e-9);
        let lhs = uv.evaluate(d).unwrap();
        let rhs = u.evaluate(d).unwrap().compose(&v.evaluate(d).unwrap()).unwrap();
        let scale = spectral_norm(u.evaluate(d).unwrap().matrix()) * spectral_norm(v.evaluate(d).unwrap().matrix());
        prop_assert!(lhs.distance(&rhs) <= 1e-10 * scale);
    }

    #[test]
    fn reduced_forms_are_unique(seed in any::<u64>()) {
        let (alphabets, _) = three_factor_alphabets();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_word(&mut rng, &alphabets, 5);
        let v = random_word(&mut rng, &alphabets, 5);
        prop_assert!(u.concat(&u.inverse(), 1e-9).is_empty());
        prop_assert!(u.inverse().concat(&u, 1e-9).is_empty());
        // (u v) v⁻¹ reduces back to u letter for letter
        let back = u.concat(&v, 1e-9).concat(&v.inverse(), 1e-9);
        prop_assert!(back.same_letters(&u));
    }

    #[test]
    fn relative_length_is_subadditive(seed in any::<u64>()) {
        let (alphabets, _) = three_factor_alphabets();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_word(&mut rng, &alphabets, 5);
        let v = random_word(&mut rng, &alphabets, 5);
        let uv = u.concat(&v, 1e-9);
        prop_assert!(uv.rel_length() <= u.rel_length() + v.rel_length());
        for pair in uv.letters().windows(2) {
            prop_assert!(pair[0].factor() != pair[1].factor());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certified_margins_are_monotone(angle in 0.0..std::f64::consts::PI, r in 0.05..0.6f64, m in 0.001..0.3f64) {
        let sys = schottky();
        let g = &sys.factors[0].generators[0];
        let src = BallSet::single(Flag::line_at_angle(angle), r).unwrap();
        let dst = &sys.sets[0];
        let at_m = certify_inclusion(g, &src, dst, m, 32, 1).unwrap();
        if at_m.is_certified() {
            for smaller in [m / 2.0, m / 10.0] {
                prop_assert!(certify_inclusion(g, &src, dst, smaller, 32, 1).unwrap().is_certified());
            }
        }
    }

    #[test]
    fn witnesses_are_sound(angle in 0.0..std::f64::consts::PI, r in 0.05..0.6f64, seed in any::<u64>()) {
        let sys = schottky();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&mut rng, 2);
        let src = BallSet::single(Flag::line_at_angle(angle), r).unwrap();
        let dst = &sys.sets[1];
        if let Inclusion::Violated { witness, distance } = certify_inclusion(&g, &src, dst, 0.01, 32, 3).unwrap() {
            prop_assert!(src.contains(&witness).unwrap());
            let again = witness_distance(&g, &witness, dst).unwrap();
            prop_assert!(again > 0.0);
            prop_assert!((again - distance).abs() < 1e-12);
        }
    }
}
