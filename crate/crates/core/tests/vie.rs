use std::f64::consts::PI;

use approx::assert_relative_eq;
use sonine_core::expr::Expr;
use sonine_core::kernels::{gamma, KernelPair, Normalization, Weight};
use sonine_core::quadrature::{graded_distance_quad, Mesh};
use sonine_core::sonine::SonineData;
use sonine_core::vie::*;
use sonine_core::Error;

fn expr(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

fn abel(alpha0: f64, norm: Normalization) -> KernelPair {
    KernelPair::constant(alpha0, 1.0, norm).unwrap()
}

fn one() -> Weight {
    Weight::one(1.0).unwrap()
}

fn problem(pair: KernelPair, weight: Weight, forcing: Forcing, variant: Variant) -> FirstKindProblem {
    FirstKindProblem {
        pair,
        weight,
        forcing,
        variant,
    }
}

#[test]
fn rhs_k_conv_closed_forms() {
    let pair = abel(0.5, Normalization::Plain);
    let mesh = Mesh::graded(1.0, 32, 2.0).unwrap();
    let r = rhs_K_conv(&pair, |_| Ok(0.0), 1.0, &mesh).unwrap();
    for (i, &t) in mesh.points().iter().enumerate().skip(1) {
        assert_relative_eq!(r[i], pair.eval_K(t).unwrap(), max_relative = 1e-14);
    }
    // ∫₀ᵗ (t-s)^{-1/2}/π ds = 2√t/π
    let r = rhs_K_conv(&pair, |_| Ok(1.0), 0.0, &mesh).unwrap();
    assert_eq!(r[0], 0.0);
    for (i, &t) in mesh.points().iter().enumerate().skip(1) {
        assert_relative_eq!(r[i], 2.0 * t.sqrt() / PI, max_relative = 1e-12);
    }
    // ∫₀ᵗ (t-s)^{-1/2} s ds / π = (4/3) t^{3/2} / π, exact for linear f
    let r = rhs_K_conv(&pair, Ok, 0.0, &mesh).unwrap();
    for (i, &t) in mesh.points().iter().enumerate().skip(1) {
        assert_relative_eq!(r[i], 4.0 / 3.0 * t.powf(1.5) / PI, max_relative = 1e-12);
    }
}

#[test]
fn weighted_transform_shape() {
    let pair = abel(0.5, Normalization::Plain);
    let w = Weight::new(expr("1 + s*t"), 1.0).unwrap();
    let data = SonineData::new(pair.clone(), w.clone()).unwrap();
    let mesh = Mesh::graded(1.0, 16, 2.0).unwrap();
    let p = problem(pair.clone(), w, Forcing::from_expr(&expr("t")).unwrap(), Variant::Weighted);
    let second = transform_first_kind_weighted(&p, &data, &mesh).unwrap();
    for t in [0.0, 0.3, 0.9] {
        assert_relative_eq!((second.diagonal)(t).unwrap(), 1.0 + t * t, max_relative = 1e-15);
    }
    let m = second.memory.as_ref().unwrap();
    for (y, lag) in [(0.1, 0.2), (0.4, 0.5)] {
        assert_eq!(m(y, lag).unwrap(), data.eval_g2(y, lag).unwrap());
    }

    // degenerate case: d ≡ 1, m ≡ 0
    let trivial = SonineData::new(pair.clone(), one()).unwrap();
    let p = problem(pair, one(), Forcing::from_expr(&expr("t")).unwrap(), Variant::Weighted);
    let second = transform_first_kind_weighted(&p, &trivial, &mesh).unwrap();
    assert!(second.memory.is_none());
    assert_eq!((second.diagonal)(0.5).unwrap(), 1.0);
}

#[test]
fn kernel_transform_rhs_closed_forms() {
    let pair = abel(0.5, Normalization::Plain);
    let data = SonineData::new(pair.clone(), one()).unwrap();
    let mesh = Mesh::graded(1.0, 32, 2.0).unwrap();
    // f = t: r = ∫₀ᵗ s^{-1/2} ds = 2√t
    let p = problem(pair.clone(), one(), Forcing::from_expr(&expr("t")).unwrap(), Variant::KKernel);
    let second = transform_first_kind_K(&p, &data, &mesh).unwrap();
    let Rhs::Sampled(r) = &second.rhs else { panic!("sampled rhs expected") };
    for (i, &t) in mesh.points().iter().enumerate().skip(1) {
        assert_relative_eq!(r[i], 2.0 * t.sqrt(), max_relative = 1e-12);
    }
    // f ≡ 1: r = w(0,t) k(t)
    let p = problem(pair.clone(), one(), Forcing::constant(1.0), Variant::KKernel);
    let second = transform_first_kind_K(&p, &data, &mesh).unwrap();
    let Rhs::Sampled(r) = &second.rhs else { panic!("sampled rhs expected") };
    for (i, &t) in mesh.points().iter().enumerate().skip(1) {
        assert_relative_eq!(r[i], pair.eval_k(t).unwrap(), max_relative = 1e-14);
    }
}

#[test]
fn kernel_transform_rhs_matches_numerical_derivative() {
    // oracle: differentiate ∫₀ᵗ w(0,s) k(s) f(t-s) ds by central differences
    let pair = KernelPair::from_expr(expr("0.5 + 0.1*t"), 1.0, Normalization::Plain).unwrap();
    let w = Weight::new(expr("1 + s*t + 0.5*t"), 1.0).unwrap();
    let data = SonineData::new(pair.clone(), w.clone()).unwrap();
    let f = expr("1 + t + t^2");
    let raw = |t: f64| {
        graded_distance_quad(
            |s| Ok(w.eval(0.0, s)? * pair.eval_k(s)? * f.eval(&sonine_core::expr::Bindings::t(t - s))?),
            t,
            60,
            16,
        )
        .unwrap()
    };
    let mesh = Mesh::graded(1.0, 256, 2.0).unwrap();
    let p = problem(pair.clone(), w.clone(), Forcing::from_expr(&f).unwrap(), Variant::KKernel);
    let second = transform_first_kind_K(&p, &data, &mesh).unwrap();
    let Rhs::Sampled(r) = &second.rhs else { panic!("sampled rhs expected") };
    for i in [64, 128, 256] {
        let t = mesh.t(i);
        let h: f64 = 1e-5;
        let fd = (raw(t + h.min(1.0 - t)) - raw(t - h)) / (h + h.min(1.0 - t));
        assert_relative_eq!(r[i], fd, max_relative = 1e-4);
    }
}

#[test]
fn first_kind_abel_examples() {
    let pair = abel(0.5, Normalization::Gamma);
    let mesh = Mesh::graded(1.0, 256, 2.0).unwrap();
    // u ≡ 1 for f = t^{1/2}/Γ(1.5)
    let f = Forcing::from_expr(&Expr::parse(&format!("t^0.5/{}", gamma(1.5).unwrap())).unwrap()).unwrap();
    let p = problem(pair.clone(), one(), f, Variant::Weighted);
    let report = solve_first_kind(&p, &mesh, Strategy::SecondKind).unwrap();
    assert!(report.max_error(|_| 1.0) <= 1e-3);
    // u = t for f = t^{3/2}/Γ(2.5)
    let f = Forcing::from_expr(&Expr::parse(&format!("t^1.5/{}", gamma(2.5).unwrap())).unwrap()).unwrap();
    let p = problem(pair, one(), f, Variant::Weighted);
    for strategy in [Strategy::SecondKind, Strategy::FirstKindG] {
        let report = solve_first_kind(&p, &mesh, strategy).unwrap();
        assert!(report.max_error(|t| t) <= 1e-3, "{}", strategy.name());
        assert_eq!(report.strategy, strategy);
    }
}

fn manufactured_weighted() -> FirstKindProblem {
    let pair = KernelPair::from_expr(expr("0.5 + 0.1*t"), 1.0, Normalization::Plain).unwrap();
    let w = Weight::new(expr("1 + s*t"), 1.0).unwrap();
    let f = manufactured_forcing(&pair, &w, Variant::Weighted, &expr("1 + t")).unwrap();
    problem(pair, w, f, Variant::Weighted)
}

#[test]
fn strategies_cross_validate_and_refine() {
    let p = manufactured_weighted();
    let steps = [32, 64, 128, 256];
    let mut second = Vec::new();
    let mut first = Vec::new();
    for n in steps {
        let mesh = Mesh::graded(1.0, n, 4.0).unwrap();
        let a = solve_first_kind(&p, &mesh, Strategy::SecondKind).unwrap();
        let b = solve_first_kind(&p, &mesh, Strategy::FirstKindG).unwrap();
        let (ea, eb) = (a.max_error(|t| 1.0 + t), b.max_error(|t| 1.0 + t));
        // compare the two on the second-kind nodes
        let gap = a
            .times
            .iter()
            .zip(&a.values)
            .skip(1)
            .map(|(&t, &u)| (u - interpolate_midpoints(&b, t)).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= 3.0 * ea.max(eb) + interpolation_slack(&b), "N={n}: gap {gap:e}, errors {ea:e} {eb:e}");
        second.push(ea);
        first.push(eb);
    }
    for errors in [&second, &first] {
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
        assert!(least_squares_order(&steps, errors).unwrap() >= 0.8);
    }
}

// midpoint solutions are compared through their piecewise-linear interpolant
fn interpolate_midpoints(r: &SolveReport, t: f64) -> f64 {
    let k = r.times.partition_point(|m| *m < t);
    if k == 0 {
        return r.values[0];
    }
    if k == r.times.len() {
        let n = r.times.len();
        let (a, b) = (r.times[n - 2], r.times[n - 1]);
        return r.values[n - 1] + (t - b) * (r.values[n - 1] - r.values[n - 2]) / (b - a);
    }
    let (a, b) = (r.times[k - 1], r.times[k]);
    r.values[k - 1] + (t - a) * (r.values[k] - r.values[k - 1]) / (b - a)
}

fn interpolation_slack(r: &SolveReport) -> f64 {
    // u = 1 + t is linear, so interpolation adds rounding only
    1e-12 * r.values.len() as f64
}

#[test]
fn residual_examples() {
    let pair = abel(0.5, Normalization::Gamma);
    let mesh = Mesh::graded(1.0, 128, 2.0).unwrap();
    let f = Forcing::from_expr(&Expr::parse(&format!("t^0.5/{}", gamma(1.5).unwrap())).unwrap()).unwrap();
    let p = problem(pair.clone(), one(), f, Variant::Weighted);
    let report = solve_first_kind(&p, &mesh, Strategy::SecondKind).unwrap();
    let err = report.max_error(|_| 1.0);
    let checkpoints = [0.25, 0.5, 1.0];
    let r = residual_first_kind(&p, &report, &checkpoints).unwrap();
    assert!(r.iter().all(|v| v.abs() <= 5.0 * err.max(1e-14)), "{r:?} vs {err:e}");

    // perturbing u by 0.1 shifts the residual by 0.1 ∫₀ᵗ k = 0.1 t^{1/2}/Γ(1.5)
    let mut shifted = report.clone();
    for v in shifted.values.iter_mut() {
        *v += 0.1;
    }
    let rs = residual_first_kind(&p, &shifted, &checkpoints).unwrap();
    for ((a, b), t) in rs.iter().zip(&r).zip(checkpoints) {
        assert_relative_eq!(a - b, 0.1 * t.sqrt() / gamma(1.5).unwrap(), max_relative = 1e-10);
    }

    // zero forcing, zero solution
    let p0 = problem(pair, one(), Forcing::zero(), Variant::Weighted);
    let zero = solve_first_kind(&p0, &mesh, Strategy::SecondKind).unwrap();
    assert!(zero.values.iter().all(|v| *v == 0.0));
    assert!(residual_first_kind(&p0, &zero, &checkpoints).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn equivalence_residual_decays() {
    let p = manufactured_weighted();
    let residuals: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| {
            let mesh = Mesh::graded(1.0, n, 4.0).unwrap();
            solve_first_kind(&p, &mesh, Strategy::SecondKind).unwrap().max_residual().unwrap()
        })
        .collect();
    assert!(residuals.windows(2).all(|w| w[1] <= 0.7 * w[0]), "{residuals:?}");
}

#[test]
fn nonlocal_ode_examples() {
    let pair = abel(0.5, Normalization::Gamma);
    let mesh = Mesh::graded(1.0, 256, 2.0).unwrap();
    let p = NonlocalOdeProblem {
        pair: pair.clone(),
        weight: one(),
        forcing: Forcing::constant(gamma(1.5).unwrap()),
        c: 0.0,
    };
    assert!(solve_nonlocal_ode(&p, &mesh).unwrap().max_error(|t| t.sqrt()) <= 1e-2);

    let p = NonlocalOdeProblem {
        pair: pair.clone(),
        weight: one(),
        forcing: Forcing::zero(),
        c: 0.0,
    };
    assert!(solve_nonlocal_ode(&p, &mesh).unwrap().values.iter().all(|v| *v == 0.0));

    let plain = NonlocalOdeProblem {
        pair: abel(0.5, Normalization::Plain),
        weight: one(),
        forcing: Forcing::zero(),
        c: 1.0,
    };
    let report = solve_nonlocal_ode(&plain, &Mesh::graded(1.0, 512, 2.0).unwrap()).unwrap();
    assert!(report.singular_origin);
    assert!(report.l1_relative_error(|t| t.powf(-0.5) / PI) <= 1e-2);
    let refused = solve_nonlocal_ode(&plain, &Mesh::uniform(1.0, 64).unwrap());
    assert!(matches!(refused, Err(Error::Validation(_))));
}

#[test]
fn weighted_nonlocal_ode_converges() {
    // u = t with w = 1 + st, α = 0.5: F(t) = ∫₀ᵗ w k u, f = F'
    let pair = abel(0.5, Normalization::Plain);
    let w = Weight::new(expr("1 + s*t"), 1.0).unwrap();
    let first = manufactured_forcing(&pair, &w, Variant::Weighted, &expr("t")).unwrap();
    let f = Forcing::from_fns("F'", move |t| first.eval_prime(t), |_| Ok(f64::NAN));
    let p = NonlocalOdeProblem {
        pair,
        weight: w,
        forcing: f,
        c: 0.0,
    };
    let errors: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| solve_nonlocal_ode(&p, &Mesh::graded(1.0, n, 2.0).unwrap()).unwrap().max_error(|t| t))
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]) && errors[2] <= 1e-3, "{errors:?}");
}

#[test]
fn csc_associates() {
    let checkpoints = [0.25, 0.5, 1.0];
    let data = SonineData::new(abel(0.3, Normalization::Plain), one()).unwrap();
    let report = construct_csc_associate(&data, &Mesh::graded(1.0, 256, 2.0).unwrap(), &checkpoints).unwrap();
    assert!(report.max_residual <= 1e-2);

    let pair = KernelPair::from_expr(expr("0.5 + 0.1*t"), 1.0, Normalization::Plain).unwrap();
    let data = SonineData::new(pair, Weight::new(expr("1 + s*t"), 1.0).unwrap()).unwrap();
    let residuals: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            construct_csc_associate(&data, &Mesh::graded(1.0, n, 2.0).unwrap(), &checkpoints)
                .unwrap()
                .max_residual
        })
        .collect();
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
}

#[test]
fn wsc2_associates() {
    let checkpoints = [0.25, 0.5, 1.0];
    let pair = abel(0.5, Normalization::Plain);
    let report = associate_from_wsc2(&pair, &one(), &Mesh::graded(1.0, 256, 2.0).unwrap(), &checkpoints).unwrap();
    assert!(report.solve.l1_relative_error(|t| t.powf(-0.5) / PI) <= 1e-2);

    let pair = abel(0.3, Normalization::Plain);
    let report = associate_from_wsc2(&pair, &one(), &Mesh::graded(1.0, 256, 2.0).unwrap(), &[1.0]).unwrap();
    assert!(report.max_residual <= 1e-3, "{}", report.max_residual);

    let variable = KernelPair::from_expr(expr("0.5 + 0.1*t"), 1.0, Normalization::Plain).unwrap();
    let mesh = Mesh::graded(1.0, 16, 2.0).unwrap();
    assert!(matches!(
        associate_from_wsc2(&variable, &one(), &mesh, &checkpoints),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn transforms_refuse_failed_wsc1() {
    let pair = abel(0.5, Normalization::Plain);
    let bad = Weight::new(expr("t"), 1.0);
    // the weight constructor may already reject w(t,t) = t; otherwise the transform must
    if let Ok(w) = bad {
        if let Ok(data) = SonineData::new(pair.clone(), w.clone()) {
            let p = problem(pair, w, Forcing::constant(1.0), Variant::Weighted);
            let mesh = Mesh::graded(1.0, 8, 2.0).unwrap();
            assert!(transform_first_kind_weighted(&p, &data, &mesh).is_err());
        }
    }
}

#[test]
fn report_csv() {
    let pair = abel(0.5, Normalization::Gamma);
    let f = Forcing::from_expr(&Expr::parse(&format!("t^0.5/{}", gamma(1.5).unwrap())).unwrap()).unwrap();
    let p = problem(pair, one(), f, Variant::Weighted);
    let report = solve_first_kind(&p, &Mesh::graded(1.0, 8, 2.0).unwrap(), Strategy::SecondKind).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,u,residual"));
    assert_eq!(csv.lines().count(), 10);
    let history = RefinementHistory::from_errors(&[8, 16], &[0.1, 0.05]);
    assert!(history.to_csv().starts_with("N,error,order\n"));
}
