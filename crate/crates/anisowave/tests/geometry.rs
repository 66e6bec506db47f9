use anisowave::geometry::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn half() -> AnisotropyIndex {
    AnisotropyIndex::rational(1, 2).unwrap()
}

#[test]
fn theta_examples() {
    let one = AnisotropyIndex::one();
    assert_eq!(theta_weight(&PhasePoint::d1(0.0, 0.0), one), 1.0);
    assert_eq!(theta_weight(&PhasePoint::d1(1.0, 1.0), one), 3.0);
    assert_eq!(theta_weight(&PhasePoint::d1(0.0, 4.0), half()), 17.0);
}

#[test]
fn wkm_examples() {
    let w =
        |x: f64, xi: f64, k, m| wkm_weight(&PhasePoint::d1(x, xi), AnisotropyIndex::rational(k, m).unwrap()).unwrap();
    assert_eq!(w(0.0, 0.0, 1, 1), 1.0);
    assert!((w(3.0, 4.0, 1, 1) - 26f64.sqrt()).abs() < 1e-15);
    assert!((w(1.0, 1.0, 2, 3) - 3f64.sqrt()).abs() < 1e-15);
    let real = AnisotropyIndex::real(0.3).unwrap();
    assert!(wkm_weight(&PhasePoint::d1(1.0, 1.0), real).is_err());
}

#[test]
fn wkm_is_comparable_to_theta_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (k, m) in [(1, 1), (1, 2), (2, 1), (2, 3)] {
        let a = AnisotropyIndex::rational(k, m).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..5000 {
            let r = 10f64.powf(rng.random_range(-2.0..3.0));
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let z = PhasePoint::d1(r * t.cos(), r * t.sin());
            let q = wkm_weight(&z, a).unwrap() / theta_weight(&z, a).powi(k as i32);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        assert!(lo > 0.05 && hi <= 1.0 + 1e-12, "k={k} m={m}: [{lo}, {hi}]");
    }
}

#[test]
fn scale_examples() {
    let z = PhasePoint::d1(0.7, -1.3);
    assert_eq!(aniso_scale(&z, 1.0, half()).unwrap(), z);
    let z = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 2.0]);
    let s = aniso_scale(&z, 4.0, half()).unwrap();
    assert_eq!(s, PhasePoint::new(vec![4.0, 0.0], vec![0.0, 4.0]));
    assert!(aniso_scale(&z, 0.0, half()).is_err());
    assert!(aniso_scale(&z, -2.0, half()).is_err());
}

#[test]
fn scale_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = AnisotropyIndex::rational(2, 3).unwrap();
    for _ in 0..100 {
        let z = PhasePoint::d1(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let (l1, l2) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let two = aniso_scale(&aniso_scale(&z, l1, a).unwrap(), l2, a).unwrap();
        let one = aniso_scale(&z, l1 * l2, a).unwrap();
        assert!(two.distance(&one) <= 1e-12 * one.norm().max(1.0));
    }
}

#[test]
fn sphere_examples() {
    let (l, u) = sphere_decompose(&PhasePoint::d1(3.0, 4.0), AnisotropyIndex::one()).unwrap();
    assert!((l - 5.0).abs() < 1e-12);
    assert!(u.distance(&PhasePoint::d1(0.6, 0.8)) < 1e-12);
    let two = AnisotropyIndex::rational(2, 1).unwrap();
    let (l, u) = sphere_decompose(&PhasePoint::d1(2.0, 0.0), two).unwrap();
    assert!((l - 2.0).abs() < 1e-12 && u.distance(&PhasePoint::d1(1.0, 0.0)) < 1e-12);
    let (l, u) = sphere_decompose(&PhasePoint::d1(0.0, 1.0), two).unwrap();
    assert!((l - 1.0).abs() < 1e-12 && u.distance(&PhasePoint::d1(0.0, 1.0)) < 1e-12);
    assert!(sphere_decompose(&PhasePoint::d1(0.0, 0.0), two).is_err());
}

#[test]
fn sphere_decomposition_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for a in [half(), AnisotropyIndex::rational(3, 1).unwrap(), AnisotropyIndex::real(0.37).unwrap()] {
        for _ in 0..500 {
            let r = 10f64.powf(rng.random_range(-4.0..4.0));
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let z = PhasePoint::d1(r * t.cos(), r * t.sin());
            let (l, u) = sphere_decompose(&z, a).unwrap();
            assert!((u.norm() - 1.0).abs() < 1e-12);
            let back = aniso_scale(&u, l, a).unwrap();
            assert!(back.distance(&z) <= 1e-10 * z.norm(), "{a} {z:?}");
        }
    }
}

#[test]
fn cutoff_examples() {
    let d = 0.4;
    assert_eq!(cutoff_psi(&PhasePoint::d1(d / 4.0, 0.0), d), 0.0);
    assert_eq!(cutoff_psi(&PhasePoint::d1(0.0, d / 2.0), d), 0.0);
    assert_eq!(cutoff_psi(&PhasePoint::d1(2.0 * d, 0.0), d), 1.0);
    assert_eq!(cutoff_psi(&PhasePoint::d1(d, 0.0), d), 1.0);
    let mid = cutoff_psi(&PhasePoint::d1(0.75 * d, 0.0), d);
    assert!(mid > 0.0 && mid < 1.0);
}

#[test]
fn cutoff_is_monotone() {
    let d = 1.0;
    let mut prev = 0.0;
    for i in 0..1000 {
        let r = 1.5 * i as f64 / 999.0;
        let v = cutoff_psi(&PhasePoint::d1(r * 0.6, r * 0.8), d);
        assert!(v >= prev && (0.0..=1.0).contains(&v));
        prev = v;
    }
}

#[test]
fn ramp_derivative_matches_differences() {
    let d = 1.0;
    for i in 1..200 {
        let t = 0.25 + 0.75 * i as f64 / 200.0;
        let h = 1e-6;
        let fd = (ramp(t + h, d) - ramp(t - h, d)) / (2.0 * h);
        assert!((ramp_deriv(t, d) - fd).abs() < 1e-5 * (1.0 + fd.abs()), "t={t}");
    }
}

#[test]
fn j_map_commutes_with_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for a in [half(), AnisotropyIndex::rational(3, 2).unwrap()] {
        let s = a.sigma();
        for _ in 0..200 {
            let z = PhasePoint::d1(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let l: f64 = rng.random_range(0.1..10.0);
            let lhs = j_map(&aniso_scale(&z, l.powf(-s), a.inverse()).unwrap());
            let rhs = aniso_scale(&j_map(&z), 1.0 / l, a).unwrap();
            assert!(lhs.distance(&rhs) < 1e-12 * (1.0 + rhs.norm()));
        }
    }
    assert_eq!(j_map(&PhasePoint::d1(1.0, 2.0)), PhasePoint::d1(2.0, -1.0));
}

#[test]
fn peetre_constants_are_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for a in [half(), AnisotropyIndex::one(), AnisotropyIndex::rational(2, 1).unwrap()] {
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let mut c: f64 = 0.0;
            for _ in 0..10_000 {
                let z = PhasePoint::d1(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
                let w = PhasePoint::d1(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
                let lhs = theta_weight(&z.axpy(1.0, &w), a).powf(s);
                let rhs = theta_weight(&z, a).powf(s.abs()) * theta_weight(&w, a).powf(s);
                c = c.max(lhs / rhs);
            }
            assert!(c.is_finite() && c > 0.0, "σ={a} s={s}: C={c}");
        }
    }
}

#[test]
fn index_parsing() {
    assert_eq!("1/2".parse::<AnisotropyIndex>().unwrap(), half());
    assert_eq!("0.5".parse::<AnisotropyIndex>().unwrap().sigma(), 0.5);
    assert_eq!("2".parse::<AnisotropyIndex>().unwrap().sigma(), 2.0);
    for bad in ["0", "-1", "1/0", "a/b", "", "0/3"] {
        assert!(bad.parse::<AnisotropyIndex>().is_err(), "{bad}");
    }
    assert_eq!(half().inverse(), AnisotropyIndex::rational(2, 1).unwrap());
}
