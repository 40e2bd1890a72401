use num_bigint::BigInt;
use proptest::prelude::*;

use khmoves::coeffs::Poly;
use khmoves::complex::{Algebra, Chain, Complex, SignRule};
use khmoves::diagram::{braid_closure, close, closures, local_patterns};
use khmoves::homology::{khovanov_homology, smith_normal_form};

fn poly() -> impl Strategy<Value = Poly> {
    proptest::collection::vec((-4i64..5, 0u32..3, 0u32..3), 0..5).prop_map(|terms| {
        terms
            .into_iter()
            .fold(Poly::zero(), |acc, (c, a, b)| acc + Poly::monomial(c, a, b))
    })
}

fn frobenius_algebra() -> impl Strategy<Value = Algebra> {
    proptest::sample::select(
        Algebra::all()
            .into_iter()
            .filter(|a| a.split_s)
            .collect::<Vec<_>>(),
    )
}

fn braid(max_strands: usize, max_len: usize) -> impl Strategy<Value = (usize, Vec<i32>)> {
    (2..=max_strands).prop_flat_map(move |n| {
        let gen = (1..n as i32).prop_flat_map(|g| prop_oneof![Just(g), Just(-g)]);
        (Just(n), proptest::collection::vec(gen, 0..=max_len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a - &a, Poly::zero());
        prop_assert_eq!(&a * &Poly::one(), a.clone());
    }

    #[test]
    fn display_parse_round_trip(a in poly()) {
        let back: Poly = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn specialization_is_a_ring_map(a in poly(), b in poly(), s in -3i64..4, t in -3i64..4) {
        prop_assert_eq!((&a * &b).specialize(s, t), &a.specialize(s, t) * &b.specialize(s, t));
        prop_assert_eq!((&a + &b).eval_i64(s, t), a.eval_i64(s, t) + b.eval_i64(s, t));
    }

    #[test]
    fn d_squared_vanishes_on_braid_closures((n, w) in braid(3, 4), alg in frobenius_algebra(), rule in proptest::sample::select(SignRule::all().to_vec())) {
        let c = Complex::new(&braid_closure(n, &w).unwrap(), alg, rule).unwrap();
        for g in c.gens() {
            prop_assert!(c.d_chain(&c.d(g)).is_zero(), "{}", c.word(&g));
        }
    }

    #[test]
    fn differential_preserves_q_at_zero((n, w) in braid(3, 4)) {
        let c = Complex::new(&braid_closure(n, &w).unwrap(), Algebra::default(), SignRule::default()).unwrap();
        for g in c.gens() {
            for (h, p) in c.d(g).specialize(0, 0).iter() {
                prop_assert!(!p.is_zero());
                prop_assert_eq!(c.q_raw(h), c.q_raw(&g));
            }
        }
    }

    #[test]
    fn specialization_commutes_with_d(coeffs in proptest::collection::vec(poly(), 1..4), s in -2i64..3, t in -2i64..3) {
        let c = Complex::new(&braid_closure(2, &[1, 1]).unwrap(), Algebra::default(), SignRule::default()).unwrap();
        let gens = c.gens();
        let x: Chain = coeffs.iter().zip(&gens).map(|(p, g)| (*g, p.clone())).collect();
        let y = c.d_chain(&x).specialize(s, t);
        let z = c.d_chain(&x.specialize(s, t)).specialize(s, t);
        prop_assert_eq!(y, z);
    }

    #[test]
    fn words_round_trip((n, w) in braid(3, 3)) {
        let c = Complex::new(&braid_closure(n, &w).unwrap(), Algebra::default(), SignRule::default()).unwrap();
        for g in c.gens() {
            prop_assert_eq!(c.parse_word(&c.word(&g)).unwrap(), g);
        }
    }

    #[test]
    fn smith_rank_matches_elimination(rows in proptest::collection::vec(proptest::collection::vec(-6i64..7, 4), 1..5)) {
        let m: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        let f = smith_normal_form(&m);
        for w in f.factors.windows(2) {
            prop_assert!((&w[1] % &w[0]) == BigInt::from(0));
        }
        prop_assert!(f.factors.iter().all(|x| *x > BigInt::from(0)));
        // rank over Q by fraction-free elimination
        let mut a = m.clone();
        let mut rank = 0;
        let cols = a[0].len();
        for col in 0..cols {
            if let Some(p) = (rank..a.len()).find(|&r| a[r][col] != BigInt::from(0)) {
                a.swap(rank, p);
                for r in rank + 1..a.len() {
                    let (x, y) = (a[rank][col].clone(), a[r][col].clone());
                    for j in 0..cols {
                        a[r][j] = &a[r][j] * &x - &a[rank][j] * &y;
                    }
                }
                rank += 1;
            }
        }
        prop_assert_eq!(f.rank(), rank);
    }

    #[test]
    fn homology_is_invariant_under_inserted_cancelling_pairs((n, w) in braid(3, 3), pos in 0usize..4, g in 1i32..3, sign in prop_oneof![Just(1i32), Just(-1)]) {
        let g = 1 + (g - 1) % (n as i32 - 1);
        let mut w2 = w.clone();
        let at = pos.min(w2.len());
        w2.insert(at, -sign * g);
        w2.insert(at, sign * g);
        let a = khovanov_homology(&braid_closure(n, &w).unwrap()).unwrap();
        let b = khovanov_homology(&braid_closure(n, &w2).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn homology_is_invariant_under_the_braid_relation(prefix in proptest::collection::vec(prop_oneof![Just(1i32), Just(-1), Just(2), Just(-2)], 0..3)) {
        let mut a = prefix.clone();
        a.extend([1, 2, 1]);
        let mut b = prefix;
        b.extend([2, 1, 2]);
        prop_assert_eq!(khovanov_homology(&braid_closure(3, &a).unwrap()).unwrap(), khovanov_homology(&braid_closure(3, &b).unwrap()).unwrap());
    }
}

#[test]
fn d_squared_vanishes_on_every_local_closure_for_every_frobenius_variant() {
    let pats = local_patterns();
    for alg in Algebra::all().into_iter().filter(|a| a.split_s) {
        for (name, d) in &pats {
            for e in 0..2 {
                for m in closures(d.boundary.len(), e).unwrap() {
                    let c = Complex::new(&close(d, &m).unwrap(), alg, SignRule::default()).unwrap();
                    for g in c.gens() {
                        assert!(c.d_chain(&c.d(g)).is_zero(), "{name} {m} {alg:?}");
                    }
                }
            }
        }
    }
}
