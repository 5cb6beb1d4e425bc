use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use sumbound::exact::Rounded;
use sumbound::io::{read_sweep_csv, sweep_csv_string};
use sumbound::oracle::{exact_sum, m_closed_forms, neumaier_sum, zhat_envelopes};
use sumbound::validation::m_recurrence;
use sumbound::*;

fn half_bits() -> impl Strategy<Value = f64> {
    any::<u16>()
        .prop_map(|b| half::f16::from_bits(b).to_f64())
        .prop_filter("finite", |v| v.is_finite())
}

fn single_bits() -> impl Strategy<Value = f64> {
    any::<u32>()
        .prop_map(|b| f32::from_bits(b) as f64)
        .prop_filter("finite", |v| v.is_finite())
}

fn format() -> impl Strategy<Value = FloatFormat> {
    prop_oneof![Just(FloatFormat::Half), Just(FloatFormat::Single)]
}

/// Moderate values rounded into `f`, away from overflow.
fn vector(f: FloatFormat, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<TargetValue>> {
    prop::collection::vec(-8.0f64..8.0, len).prop_map(move |xs| {
        xs.into_iter()
            .map(|x| TargetValue::round_from(x, f).unwrap())
            .collect()
    })
}

fn any_vector(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<TargetValue>> {
    format().prop_flat_map(move |f| vector(f, len.clone()))
}

fn dyadic_round_add(a: f64, b: f64, f: FloatFormat) -> Option<f64> {
    let s = &Dyadic::from_f64(a).unwrap() + &Dyadic::from_f64(b).unwrap();
    match s.round_to_format(
        f.precision_bits(),
        f.exponent_min() as i64,
        f.exponent_max() as i64,
    ) {
        Rounded::Finite(d) => Some(d.to_f64()),
        Rounded::Overflow => None,
    }
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn half_addition_matches_exact_rounding_and_half_crate(a in half_bits(), b in half_bits()) {
        let h = FloatFormat::Half;
        let got = round_add(TargetValue::new(a, h).unwrap(), TargetValue::new(b, h).unwrap());
        let reference = half::f16::from_f64(a + b);
        match dyadic_round_add(a, b, h) {
            Some(v) => {
                let got = got.unwrap().value();
                prop_assert!(got == v || (got == 0.0 && v == 0.0));
                prop_assert_eq!(got, reference.to_f64());
            }
            None => {
                prop_assert!(got.is_err());
                prop_assert!(reference.is_infinite());
            }
        }
    }

    #[test]
    fn single_addition_matches_exact_rounding(a in single_bits(), b in single_bits()) {
        let s = FloatFormat::Single;
        let got = round_add(TargetValue::new(a, s).unwrap(), TargetValue::new(b, s).unwrap());
        match dyadic_round_add(a, b, s) {
            Some(v) => prop_assert!(got.unwrap().value() == v),
            None => prop_assert!(got.is_err()),
        }
    }

    #[test]
    fn addition_error_is_within_unit_roundoff(f in format(), a in -1e4f64..1e4, b in -1e4f64..1e4) {
        let a = TargetValue::round_from(a, f).unwrap();
        let b = TargetValue::round_from(b, f).unwrap();
        let s = round_add(a, b).unwrap();
        prop_assert_eq!(s, round_add(b, a).unwrap());
        let exact = rat(a.value()) + rat(b.value());
        if exact.abs() >= rat(f.min_positive_normal()) {
            let err = (rat(s.value()) - &exact).abs();
            prop_assert!(err <= unit_roundoff(f) * exact.abs());
        }
    }

    #[test]
    fn round_is_idempotent_and_monotone(f in format(), x in -6e4f64..6e4, y in -6e4f64..6e4) {
        let rx = f.round(x).unwrap();
        prop_assert_eq!(f.round(rx).unwrap(), rx);
        prop_assert!(f.is_representable(rx));
        if x <= y {
            prop_assert!(rx <= f.round(y).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn trace_invariants(x in any_vector(1..60)) {
        let f = x[0].format();
        let t = run_summation(&x).unwrap();
        let u = unit_roundoff(f);
        prop_assert_eq!(t.z_exact().last().unwrap().to_rational(), exact_sum(&x));
        for (i, d) in extract_deltas(&t).iter().enumerate() {
            if !t.is_subnormal_step(i + 2) {
                prop_assert!(d.abs() <= u);
            }
        }
        let dec = decompose_error(&t);
        prop_assert_eq!(&dec.m_total, &t.final_error());
        // M_k telescopes to the partial errors.
        let mut m = Dyadic::zero();
        for (k, inc) in dec.m_terms.iter().enumerate() {
            m = &m + inc;
            prop_assert_eq!(&m, &t.partial_errors()[k + 1]);
        }
        let mut stream = SummationStream::new(f);
        for v in &x {
            stream.push_value(*v).unwrap();
        }
        prop_assert_eq!(stream.computed(), *t.z_hat().last().unwrap());
        prop_assert_eq!(stream.exact(), t.z_exact().last().unwrap().clone());
    }

    #[test]
    fn envelope_bounds_every_partial_sum(x in vector(FloatFormat::Half, 1..200)) {
        let t = run_summation(&x).unwrap();
        let raw: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let env = zhat_envelopes(&raw, &unit_roundoff(FloatFormat::Half)).unwrap();
        for (zh, e) in t.z_hat().iter().zip(&env) {
            prop_assert!(rat(zh.value()).abs() <= *e);
        }
    }

    #[test]
    fn recurrence_equals_closed_form(x in any_vector(2..80)) {
        let f = x[0].format();
        let raw: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let k_max = raw.len() - 1;
        let closed = m_closed_forms(&raw, k_max, &unit_roundoff(f)).unwrap();
        prop_assert_eq!(m_recurrence(&raw, f, k_max), closed);
    }

    #[test]
    fn deterministic_bound_dominates(x in any_vector(1..120)) {
        let f = x[0].format();
        let t = run_summation(&x).unwrap();
        prop_assume!(t.subnormal_steps().is_empty());
        let mut acc = BoundAccumulators::<Dyadic>::new(f);
        for v in &x {
            acc.push(v.value());
        }
        // Exact comparison: |ẑ_n - z_n| <= Σ c_k.
        prop_assert!(t.final_error().abs() <= acc.c_sum().clone());
    }

    #[test]
    fn probabilistic_bounds_shrink_as_delta_grows(x in any_vector(2..100), d1 in 1e-20f64..0.5, d2 in 0.5f64..0.99) {
        let f = x[0].format();
        let mut acc = BoundAccumulators::<f64>::new(f);
        for v in &x {
            acc.push(v.value());
        }
        let z = exact_sum(&x).to_f64().unwrap();
        prop_assume!(z != 0.0);
        prop_assert!(azuma_bound(&acc, z, d1).unwrap() >= azuma_bound(&acc, z, d2).unwrap());
        prop_assert!(martingale_bound(&acc, z, d1).unwrap() >= martingale_bound(&acc, z, d2).unwrap());
        prop_assert!(concentration_radius(1.0, d1).unwrap() > concentration_radius(1.0, d2).unwrap());
    }

    #[test]
    fn power_of_two_scaling_leaves_relative_quantities_unchanged(x in vector(FloatFormat::Single, 1..100), s in -20i32..20) {
        let f = FloatFormat::Single;
        let opts = AnalysisOptions { working: WorkingPrecision::Exact, ..AnalysisOptions::new(f) };
        let raw: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let scaled: Vec<f64> = raw.iter().map(|v| v * 2f64.powi(s)).collect();
        prop_assume!(raw.iter().all(|v| *v == 0.0 || v.abs() >= 1e-20));
        let a = analyze(&raw, &opts).unwrap().report;
        let b = analyze(&scaled, &opts).unwrap().report;
        prop_assert_eq!(a.zero_sum, b.zero_sum);
        if !a.zero_sum {
            prop_assert_eq!(a.true_rel_err, b.true_rel_err);
            prop_assert_eq!(a.det_bound, b.det_bound);
            prop_assert_eq!(a.azuma_bound, b.azuma_bound);
            prop_assert_eq!(a.martingale_bound, b.martingale_bound);
        }
    }

    #[test]
    fn working_precisions_agree(x in any_vector(1..200)) {
        let f = x[0].format();
        let raw: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let exact = analyze(&raw, &AnalysisOptions { working: WorkingPrecision::Exact, ..AnalysisOptions::new(f) }).unwrap().report;
        let wide = analyze(&raw, &AnalysisOptions { working: WorkingPrecision::Wide256, ..AnalysisOptions::new(f) }).unwrap().report;
        let fast = analyze(&raw, &AnalysisOptions { working: WorkingPrecision::F64, ..AnalysisOptions::new(f) }).unwrap().report;
        prop_assert_eq!(exact.det_bound, wide.det_bound);
        prop_assert_eq!(exact.martingale_bound, wide.martingale_bound);
        for (p, q) in [(exact.det_bound, fast.det_bound), (exact.azuma_bound, fast.azuma_bound), (exact.martingale_bound, fast.martingale_bound)] {
            prop_assert!(p == q || ((p - q) / p).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_csv_round_trips(rows in prop::collection::vec(row(), 0..8)) {
        let text = sweep_csv_string(&rows).unwrap();
        let back = read_sweep_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(format!("{rows:?}"), format!("{back:?}"));
    }
}

fn float() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>(), Just(f64::NAN), Just(0.0), -1e300f64..1e300]
}

fn row() -> impl Strategy<Value = SweepRow> {
    (
        (
            1u64..10_000_000,
            any::<u32>(),
            format(),
            prop::option::of(prop_oneof![
                Just(Distribution::Normal),
                Just(Distribution::Uniform)
            ]),
        ),
        (
            1e-300f64..1.0,
            any::<u64>(),
            prop_oneof![Just(DetVariant::Theorem), Just(DetVariant::Graphs)],
        ),
        (float(), float(), float(), float(), float(), float()),
        (any::<u64>(), any::<u64>(), any::<(bool, bool, bool)>()),
    )
        .prop_map(
            |(
                (n, trial, precision, distribution),
                (delta, seed, det_variant),
                (t, d, a, m, z, s),
                (tc, tm, fl),
            )| SweepRow {
                n,
                trial,
                precision,
                distribution,
                delta,
                seed,
                det_variant,
                true_rel_err: t,
                det_bound: d,
                azuma_bound: a,
                martingale_bound: m,
                z_n: z,
                sum_abs_x: s,
                time_c_path_ns: tc,
                time_m_path_ns: tm,
                flags: RowFlags {
                    zero_sum: fl.0,
                    subnormal: fl.1,
                    overflow: fl.2,
                },
            },
        )
}

#[test]
fn second_order_residual_is_small() {
    // Over 1000 seeded traces of length 100: |(ẑ_n - z_n) - Σ Z_k| <= n² u² Σ|x|.
    for f in [FloatFormat::Half, FloatFormat::Single] {
        let u = unit_roundoff(f);
        for trial in 0..500 {
            let cfg = ExperimentConfig::new(f, Distribution::Normal, NGrid::single(100).unwrap());
            let x = generate(&cfg, 100, trial);
            let t = run_summation(&x).unwrap();
            if !t.subnormal_steps().is_empty() {
                continue;
            }
            let abs_sum = x
                .iter()
                .fold(BigRational::zero(), |a, v| a + rat(v.value().abs()));
            let n2 = BigRational::from_integer(10_000.into());
            let residual = decompose_error(&t).residual;
            assert!(
                residual.abs() <= n2 * &u * &u * abs_sum,
                "{f} trial {trial}"
            );
        }
    }
}

#[test]
fn exact_sum_agrees_with_compensated_and_long_accumulator() {
    let cfg = ExperimentConfig::new(
        FloatFormat::Double,
        Distribution::Normal,
        NGrid::single(10_000).unwrap(),
    );
    for trial in 0..3 {
        let x = generate(&cfg, 10_000, trial);
        let raw: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let exact = exact_sum(&x);
        let mut long = LongAccumulator::new();
        for &v in &raw {
            long.add(v);
        }
        assert_eq!(long.to_dyadic().to_rational(), exact);
        let ex = exact.to_f64().unwrap();
        let nm = neumaier_sum(&raw);
        assert!(
            (nm - ex).abs() <= 4.0 * f64::EPSILON * ex.abs(),
            "{nm} vs {ex}"
        );
    }
}

#[test]
fn sweeps_are_deterministic() {
    let mut cfg = ExperimentConfig::new(
        FloatFormat::Half,
        Distribution::Normal,
        NGrid::new(50, 500, 50).unwrap(),
    );
    cfg.record_timings = false;
    cfg.trials_per_point = 2;
    let a = sweep_csv_string(&run_sweep(&cfg).unwrap()).unwrap();
    let b = sweep_csv_string(&run_sweep(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2 + 20);
}
