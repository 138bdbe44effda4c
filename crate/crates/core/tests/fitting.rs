use crashlens::fitting::{fit, goodness, objective, FitSpec, HarmonicOrder, Interval};
use crashlens::model::{lppl_eval, LpplParams};
use crashlens::scaling::{scaling_from_minima, Aggregation, MinimaSet};
use crashlens::simulation::gen_lppl_series;
use crashlens::PriceSeries;

const DJ_NOISE_VAR: f64 = 3.51e-4;

fn dow_jones() -> LpplParams {
    LpplParams::new(8.8106, -0.0165957, -0.0444881, 0.554188, 672.319, 0.0, 19.5637).unwrap()
}

fn dj_spec(series: &PriceSeries, seed: u64) -> FitSpec {
    let mut spec = FitSpec::for_series(series);
    spec.bounds.t_c = Interval::new(599.0, 700.0);
    spec.multistart = 8;
    spec.seed = seed;
    spec
}

#[test]
fn noisy_fits_reach_the_truth_basin() {
    let truth = dow_jones();
    for trial in 0..20u64 {
        let s = gen_lppl_series(&truth, 0.0, 408.0, DJ_NOISE_VAR.sqrt(), 1000 + trial).unwrap();
        let r = fit(&s, &dj_spec(&s, trial), None).unwrap();
        assert_eq!(r.df, 402);
        assert!(r.sse <= objective(&truth, &s).unwrap(), "trial {trial}");
        assert!((r.mse / DJ_NOISE_VAR - 1.0).abs() <= 0.2, "trial {trial}: mse {}", r.mse);
    }
}

#[test]
fn permutation_invariant_objective() {
    let p = dow_jones();
    let s = gen_lppl_series(&p, 0.0, 200.0, 0.01, 3).unwrap();
    let mut pairs: Vec<(f64, f64)> = s.iter().collect();
    pairs.reverse();
    pairs.swap(3, 150);
    let reference: f64 = pairs.iter().map(|(t, y)| (y - lppl_eval(&p, *t).unwrap()).powi(2)).sum();
    let got = objective(&p, &s).unwrap();
    assert!((got - reference).abs() <= 1e-12 * reference);
}

#[test]
fn second_harmonic_data_prefers_second_order() {
    let truth = dow_jones().with_second_harmonic(-0.02, 1.2);
    let s = gen_lppl_series(&truth, 0.0, 408.0, 0.002, 4).unwrap();
    let mut spec = dj_spec(&s, 4);
    let first = fit(&s, &spec, None).unwrap();
    spec.harmonic = HarmonicOrder::Second;
    let second = fit(&s, &spec, None).unwrap();
    assert!(second.sse < first.sse, "{} vs {}", second.sse, first.sse);
    assert!(second.r_squared > first.r_squared);
}

#[test]
fn minima_initialised_fit() {
    let truth = dow_jones();
    let s = gen_lppl_series(&truth, 0.0, 408.0, 0.0, 0).unwrap();
    let minima = crashlens::scaling::detect_minima(&s, 10, 1).unwrap();
    let times = minima.times.clone();
    assert!(times.len() >= 3, "{times:?}");
    let est = scaling_from_minima(&MinimaSet::from_times(times).unwrap(), Aggregation::LastTriple).unwrap();
    let mut spec = dj_spec(&s, 0);
    spec.multistart = 1;
    let r = fit(&s, &spec, Some(&est)).unwrap();
    assert_eq!(r.starts_tried, 2);
    assert!(r.r_squared > 0.9999);
}

#[test]
fn fit_is_bit_reproducible() {
    let s = gen_lppl_series(&dow_jones(), 0.0, 408.0, DJ_NOISE_VAR.sqrt(), 77).unwrap();
    let spec = dj_spec(&s, 5);
    let a = fit(&s, &spec, None).unwrap();
    let b = fit(&s, &spec, None).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| fit(&s, &spec, None)).unwrap();
    assert_eq!(a, c);
}

#[test]
fn fitted_params_respect_bounds() {
    let s = gen_lppl_series(&dow_jones(), 0.0, 408.0, DJ_NOISE_VAR.sqrt(), 8).unwrap();
    let spec = dj_spec(&s, 8);
    let r = fit(&s, &spec, None).unwrap();
    let b = &spec.bounds;
    assert!(b.t_c.contains(r.params.t_c));
    assert!(b.omega.contains(r.params.omega));
    assert!(b.alpha.contains(r.params.alpha));
    assert!(r.params.b < 0.0);
    assert!((0.0..std::f64::consts::TAU).contains(&r.params.phi));
    let g = goodness(&s, &r.params).unwrap();
    assert!((g.mse - r.sse / r.df as f64).abs() <= 1e-9 * g.mse);
    assert!(r.r_squared >= 0.0 && r.r_squared <= 1.0);
}
