use sonine_web::{g_surface, pair_curves, solve_curve};

#[test]
fn abel_pair_curves() {
    let n = 20;
    let v = pair_curves("0.5", "gamma", n).unwrap();
    assert_eq!(v.len(), 4 * n);
    let (t, rest) = v.split_at(n);
    let (k, rest) = rest.split_at(n);
    let (big_k, csc) = rest.split_at(n);
    let pi = std::f64::consts::PI;
    for i in 0..n {
        assert!((k[i] - 1.0 / (pi * t[i]).sqrt()).abs() < 1e-12 * k[i]);
        assert!((big_k[i] - 1.0 / (pi * t[i]).sqrt()).abs() < 1e-12 * big_k[i]);
        assert!(csc[i].abs() < 1e-12);
    }
}

#[test]
fn surface_is_masked_outside_the_triangle() {
    let n = 9;
    let g = g_surface("0.5 + 0.2*t", "plain", "1 + s*t", n).unwrap();
    assert_eq!(g.len(), n * n);
    let h = 1.0 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            let v = g[i * n + j];
            assert_eq!(v.is_nan(), i + j > n - 1, "({i},{j})");
        }
        // g(s, 0) = w(s, s)
        let s = i as f64 * h;
        assert!((g[i * n] - (1.0 + s * s)).abs() < 1e-10);
    }
}

#[test]
fn ode_curve_matches_square_root() {
    let n = 64;
    let v = solve_curve("ode", "0.5", "gamma", "1", "0.886226925452758", 0.0, n).unwrap();
    let (t, u) = v.split_at(n + 1);
    for (t, u) in t.iter().zip(u).skip(1) {
        assert!((u - t.sqrt()).abs() < 1e-2);
    }
}

#[test]
fn vie_curve_and_errors() {
    let v = solve_curve("vie1", "0.5", "plain", "1", "2*t^0.5", 0.0, 32).unwrap();
    // ∫ (t-s)^{-1/2} ds = 2 t^{1/2}, so u ≡ 1
    assert!(v[34..].iter().all(|u| (u - 1.0).abs() < 1e-2), "{:?}", &v[33..]);
    assert!(solve_curve("pde", "0.5", "plain", "1", "t", 0.0, 32).unwrap_err().contains("pde"));
    assert!(pair_curves("0.5 +", "plain", 8).unwrap_err().starts_with("alpha"));
    assert!(g_surface("0.5", "plain", "1", 1).is_err());
}
