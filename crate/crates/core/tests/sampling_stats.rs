use aloe_ser::geometry::{HalfSpace, Point2};
use aloe_ser::sampling::{
    canonicalize, half_space_prob, sample_truncated, sample_truncated_std, std_normal_cdf,
    NoiseModel, RngStream,
};

fn phi_oracle(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Two-sided KS statistic of `xs` against `cdf`.
fn ks_stat(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Critical value of the KS statistic at level 0.001.
fn ks_critical(n: usize) -> f64 {
    1.94947 / (n as f64).sqrt()
}

#[test]
fn cdf_agrees_with_erfc_oracle() {
    let mut t = -30.0;
    while t <= 8.0 {
        let a = std_normal_cdf(t);
        let b = phi_oracle(t);
        assert!(((a - b) / b).abs() < 1e-12, "t = {t}: {a} vs {b}");
        t += 0.37;
    }
}

#[test]
fn projection_follows_truncated_normal() {
    let n = 50_000;
    for (tau, omega) in [
        (0.0, Point2::new(1.0, 0.0)),
        (2.0, Point2::new(0.6, 0.8)),
        (4.0, Point2::new(-0.28, 0.96)),
    ] {
        let mut rng = RngStream::from_parts(21, &[tau as u64]);
        let ys: Vec<f64> = (0..n)
            .map(|_| sample_truncated_std(omega, tau, &mut rng).dot(omega))
            .collect();
        let tail = phi_oracle(-tau);
        let d = ks_stat(ys, |y| 1.0 - phi_oracle(-y) / tail);
        assert!(d < ks_critical(n), "tau {tau}: D = {d}");
    }
}

#[test]
fn orthogonal_component_is_standard_normal_and_independent() {
    let n = 50_000;
    let omega = Point2::new(0.8, -0.6);
    let perp = omega.perp();
    let mut rng = RngStream::from_parts(8, &[1]);
    let draws: Vec<Point2> = (0..n)
        .map(|_| sample_truncated_std(omega, 1.5, &mut rng))
        .collect();
    let ortho: Vec<f64> = draws.iter().map(|x| x.dot(perp)).collect();
    let proj: Vec<f64> = draws.iter().map(|x| x.dot(omega)).collect();
    let d = ks_stat(ortho.clone(), phi_oracle);
    assert!(d < ks_critical(n), "D = {d}");

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mo, mp) = (mean(&ortho), mean(&proj));
    let cov: f64 = ortho
        .iter()
        .zip(&proj)
        .map(|(a, b)| (a - mo) * (b - mp))
        .sum::<f64>()
        / n as f64;
    let so = (ortho.iter().map(|a| (a - mo).powi(2)).sum::<f64>() / n as f64).sqrt();
    let sp = (proj.iter().map(|b| (b - mp).powi(2)).sum::<f64>() / n as f64).sqrt();
    let corr = cov / (so * sp);
    assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr = {corr}");
}

#[test]
fn scaled_sampler_matches_tail_mass() {
    // Rejection from plain noise draws: the hit rate estimates P(S) and the
    // accepted points follow the same law as the truncated sampler.
    let noise = NoiseModel::new(Point2::new(0.3, -0.2), 0.4).unwrap();
    let h = HalfSpace::new(Point2::new(1.0, 1.0), 0.2).unwrap();
    let p = half_space_prob(&canonicalize(&h, noise.mean, noise.sigma)).prob;
    let mut rng = RngStream::from_parts(3, &[0]);
    let n = 200_000;
    let hits = (0..n)
        .filter(|_| h.contains(noise.sample(&mut rng)))
        .count() as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits / n as f64 - p).abs() < 4.0 * se);

    let direct: Vec<f64> = (0..20_000)
        .map(|_| h.margin(sample_truncated(&h, &noise, &mut rng)))
        .collect();
    assert!(direct.iter().all(|m| *m >= 0.0));
    let mut rejected = Vec::new();
    while rejected.len() < 20_000 {
        let x = noise.sample(&mut rng);
        if h.contains(x) {
            rejected.push(h.margin(x));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = (direct
        .iter()
        .map(|m| (m - mean(&direct)).powi(2))
        .sum::<f64>()
        / direct.len() as f64)
        .sqrt();
    assert!((mean(&direct) - mean(&rejected)).abs() < 5.0 * sd * (2.0 / 20_000f64).sqrt());
}
