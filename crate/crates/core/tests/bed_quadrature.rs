//! BED of constant-free expressions reduces to the mean absolute output gap
//! over the variable box, which a fine composite Simpson rule pins down.

use std::f64::consts::PI;

use bedkit::metrics::{bed, BedConfig};
use bedkit::sampling::DomainBox;
use bedkit::Expr;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn config(samples: usize, seed: u64) -> BedConfig {
    BedConfig {
        var_box: DomainBox::new(vec![(-PI / 2.0, PI / 2.0)]).unwrap(),
        num_var_samples: samples,
        master_seed: seed,
        ..BedConfig::with_dims(1)
    }
}

fn expr(s: &str) -> Expr {
    s.parse().unwrap()
}

fn mean_gap(u: &Expr, v: &Expr) -> f64 {
    let gap = |x: f64| (u.evaluate(&[x], &[]).unwrap() - v.evaluate(&[x], &[]).unwrap()).abs();
    simpson(gap, -PI / 2.0, PI / 2.0, 20_000) / PI
}

#[test]
fn quadrature_agrees_with_closed_forms() {
    let sin = expr("sin(x)");
    let first = 2.0 * (PI * PI / 8.0 - 1.0) / PI;
    let second = 2.0 * (1.0 - PI * PI / 8.0 + PI.powi(4) / 384.0) / PI;
    assert!((mean_gap(&sin, &expr("x")) - first).abs() < 1e-12);
    assert!((mean_gap(&sin, &expr("x-x^3/6")) - second).abs() < 1e-12);
}

#[test]
fn dense_designs_converge_to_quadrature() {
    let sin = expr("sin(x)");
    for other in ["x", "x-x^3/6", "x-x^3/6+x^5/120"] {
        let v = expr(other);
        let exact = mean_gap(&sin, &v);
        let got = bed(&sin, &v, &config(20_000, 1)).unwrap();
        assert!((got - exact).abs() <= 1e-3 * exact, "{other}: {got} vs {exact}");
    }
}

#[test]
fn seed_average_at_sixty_four_points_is_close() {
    let sin = expr("sin(x)");
    for other in ["x", "x-x^3/6", "x-x^3/6+x^5/120"] {
        let v = expr(other);
        let exact = mean_gap(&sin, &v);
        let mean = (0..20).map(|s| bed(&sin, &v, &config(64, s)).unwrap()).sum::<f64>() / 20.0;
        assert!((mean - exact).abs() <= 0.02 * exact, "{other}: {mean} vs {exact}");
    }
}
