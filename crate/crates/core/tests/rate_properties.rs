use epiext::rates::{gamma_from_graph, Coefficient, RateProfile, RateTable};
use num_rational::BigRational;
use proptest::prelude::*;

fn families() -> Vec<RateProfile> {
    let table = RateTable::parse("1 4\n2 3.5\n10 1.25\n100 0.75\ntail=0.5\n", None).unwrap();
    vec![
        "const:2".parse().unwrap(),
        "step:3,0.5,1000".parse().unwrap(),
        "harmonic:5".parse().unwrap(),
        "logn:2".parse().unwrap(),
        RateProfile::Table(table),
        gamma_from_graph(&"harmonic:2".parse().unwrap(), &"logn:1".parse().unwrap(), 3.5).unwrap(),
    ]
}

#[test]
fn values_bounded_by_supremum_up_to_a_million() {
    for p in families() {
        let sup = p.supremum();
        assert!(sup.is_finite());
        for n in 1..=1_000_000u64 {
            let v = p.value(n).unwrap();
            assert!(v >= 0.0 && v <= sup * (1.0 + 1e-15), "{p} at n={n}: {v} vs sup {sup}");
        }
    }
}

#[test]
fn values_settle_to_the_limit() {
    for p in families() {
        let limit = p.limit_at_infinity();
        for eps in [1e-3, 1e-6] {
            let settle = p.settling_index(eps);
            // every n in a long window past the settling index is within eps
            for n in settle..settle + 200_000 {
                let v = p.value(n).unwrap();
                assert!((v - limit).abs() < eps, "{p}: n={n} value {v} limit {limit} eps {eps}");
            }
            if settle > 1 && !matches!(p, RateProfile::Combined { .. }) {
                assert!((p.value(settle - 1).unwrap() - limit).abs() >= eps, "{p}: settling index not minimal");
            }
        }
    }
}

proptest! {
    #[test]
    fn composite_rate_is_exactly_linear(
        num in 0u64..50, den in 1u64..20, n in 1u64..100_000,
        a in 0u64..9, b in 0u64..9, sw in 1u64..50,
    ) {
        let d = num as f64 / den as f64;
        let beta: RateProfile = format!("step:{a},{b},{sw}").parse().unwrap();
        let beta_int: RateProfile = format!("harmonic:{b}").parse().unwrap();
        let g = gamma_from_graph(&beta, &beta_int, d).unwrap();
        let exact_d = Coefficient::from_f64(d).unwrap();
        let expect: BigRational = exact_d.exact() * beta.value_exact(n).unwrap().unwrap()
            + beta_int.value_exact(n).unwrap().unwrap();
        prop_assert_eq!(g.value_exact(n).unwrap().unwrap(), expect);
    }

    #[test]
    fn profile_grammar_roundtrips(c in 0u32..10_000, k in 0u32..1000, sw in 1u64..10_000) {
        for spec in [
            format!("const:{}", c as f64 / 100.0),
            format!("step:{},{},{sw}", c as f64 / 8.0, k),
            format!("harmonic:{k}"),
            format!("logn:{}", k as f64 / 4.0),
        ] {
            let p: RateProfile = spec.parse().unwrap();
            let again: RateProfile = p.to_string().parse().unwrap();
            prop_assert_eq!(p, again);
        }
    }
}
