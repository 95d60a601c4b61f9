use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smooth_renorm::indexed::{IndexedVector, NormPair};
use smooth_renorm::pair_norm::{membership_u, SmoothNorm};
use smooth_renorm::sampling::random_continuous_function;
use smooth_renorm::smooth_kernel::shared;
use smooth_renorm::unity_partitions::{truncation_r, StepFunction};
use smooth_renorm::ordinal::Ordinal;

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 4 => -1.0f64..1.0]
}

fn pair(max: usize) -> impl Strategy<Value = NormPair<usize>> {
    prop::collection::vec((coord(), coord()), 1..=max).prop_map(|v| {
        let mut f = IndexedVector::new();
        let mut x = IndexedVector::new();
        for (t, (a, b)) in v.into_iter().enumerate() {
            f.set(t, a);
            x.set(t, b);
        }
        NormPair::new(f, x)
    })
}

/// `ω + k`.
fn omega_plus(k: u64) -> Ordinal {
    let mut cnf = vec![(1, 1)];
    if k > 0 {
        cnf.push((0, k));
    }
    Ordinal::from_cnf(cnf).unwrap()
}

fn norm() -> SmoothNorm<'static> {
    SmoothNorm::new(shared())
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn homogeneous(p in pair(4), lambda in -3.0f64..3.0) {
        let n = norm();
        prop_assert!(close(n.smooth_norm(&p.scale(lambda)), lambda.abs() * n.smooth_norm(&p), 1e-9));
    }

    #[test]
    fn subadditive(p in pair(4), q in pair(4)) {
        let n = norm();
        prop_assert!(n.smooth_norm(&p.add(&q)) <= (n.smooth_norm(&p) + n.smooth_norm(&q)) * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn sign_invariant_and_monotone(p in pair(4), shrink in prop::collection::vec(0.0f64..=1.0, 4)) {
        let n = norm();
        let v = n.smooth_norm(&p);
        prop_assert!(close(n.smooth_norm(&p.abs()), v, 1e-12));
        let mut smaller = p.clone();
        for (t, s) in shrink.iter().enumerate() {
            smaller.f.set(t, p.f.get(&t) * s);
            smaller.x.set(t, -p.x.get(&t) * s);
        }
        prop_assert!(n.smooth_norm(&smaller) <= v * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn equivalent_to_max_norm(p in pair(5)) {
        let v = norm().smooth_norm(&p);
        let e = (-1.0f64).exp();
        let (nf, nx) = (p.f.sup_norm(), p.x.sup_norm());
        prop_assert!(e * nf.max(0.5 * nx) <= v + 1e-12);
        prop_assert!(v <= e * (nf + nx) + 1e-12);
    }

    #[test]
    fn zero_padding_is_invisible(p in pair(4), extra in 4usize..20) {
        let n = norm();
        let mut padded = p.clone();
        padded.f.set(extra, 0.0);
        let shifted = NormPair::new(
            p.f.iter().map(|(t, v)| (t + 100, v)).collect(),
            p.x.iter().map(|(t, v)| (t + 100, v)).collect(),
        );
        prop_assert_eq!(n.smooth_norm(&padded), n.smooth_norm(&p));
        prop_assert!(close(n.smooth_norm(&shifted), n.smooth_norm(&p), 1e-14));
    }

    #[test]
    fn fast_path_matches_fallback(p in pair(5)) {
        prop_assume!(membership_u(&p));
        let n = norm();
        let fast = n.fast_path(&p).unwrap();
        let slow = n.support_solution(&p);
        prop_assert!(close(fast.norm_value, slow.norm_value, 1e-10));
    }

    #[test]
    fn weights_beat_any_other_choice(p in pair(4), c in prop::collection::vec(0.0f64..1.5, 4)) {
        let n = norm();
        let weights: BTreeMap<usize, f64> = c.into_iter().enumerate().collect();
        prop_assert!(n.objective(&p, &weights) <= n.smooth_norm(&p) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn unit_box_suffices(p in pair(3)) {
        let n = norm();
        let wide = n.brute_force_norm_in_box(&p, 12, 2.0).unwrap();
        prop_assert!(wide <= n.smooth_norm(&p) * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn truncation_is_idempotent(seed in any::<u64>(), size in 1usize..6, cut in 0u64..12, limit in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = StepFunction::from(&random_continuous_function(&mut rng, size));
        let gamma = if limit {
            omega_plus(cut)
        } else {
            Ordinal::finite(cut)
        };
        let once = truncation_r(&gamma, &x);
        prop_assert_eq!(&truncation_r(&gamma, &once), &once);
        for beta in (0..12).map(Ordinal::finite).chain((0..12).map(omega_plus)) {
            let expected = if beta <= gamma { x.value_at(&beta) } else { x.value_at(&gamma) };
            prop_assert_eq!(once.value_at(&beta), expected);
        }
        prop_assert!(once.is_continuous());
    }
}
