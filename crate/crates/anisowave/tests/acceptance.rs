//! Acceptance suite: one line per criterion, non-zero exit if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use anisowave::flow::{check_scaling_commutation, FlowOracle, COMMUTATION_LAMBDAS};
use anisowave::propagators::*;
use anisowave::signal::{make_grid, synthesize, CanonicalDatum, Grid, Signal};
use anisowave::symbols::{check_homogeneity, operator_norm, quantize, quantize_fn, SymbolDescriptor};
use anisowave::transforms::{istft, stft, wigner, WindowSpec};
use anisowave::wavefront::{angular_hausdorff, estimate_wavefront, fourier_wavefront_check, RayPlan};
use anisowave::{AnisotropyIndex, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn datum(tag: &str, g: &Grid) -> Signal {
    synthesize(&tag.parse::<CanonicalDatum>().unwrap(), g).unwrap().signal
}

fn one() -> AnisotropyIndex {
    AnisotropyIndex::one()
}

fn half() -> AnisotropyIndex {
    AnisotropyIndex::rational(1, 2).unwrap()
}

fn free_airy() -> AirySpec {
    AirySpec::new(vec![0.0, 0.0, 1.0], 1.0).unwrap()
}

fn schwartz_emptiness() -> Outcome {
    let g = make_grid(1024, 40.0, 0.0).unwrap();
    let mut worst = f64::INFINITY;
    for tag in ["gaussian:1", "hermite:3"] {
        let u = datum(tag, &g);
        for a in ["1/2", "1", "2"] {
            let e = estimate_wavefront(&u, a.parse().unwrap(), &WindowSpec::default(), &RayPlan::default()).unwrap();
            check!(e.singular_angles_deg.is_empty(), "{tag} σ={a}: singular {:?}", e.singular_angles_deg);
            check!(!e.low_confidence, "{tag} σ={a}: low confidence");
            let min = e.min_order().ok_or(format!("{tag} σ={a}: no fitted rays"))?;
            check!(min > 20.0, "{tag} σ={a}: min fitted order {min}");
            worst = worst.min(min);
        }
    }
    Ok(format!("empty sets, min fitted order {worst:.1}"))
}

fn dual_pair() -> Outcome {
    let g = Grid::self_dual(2048).unwrap();
    let mut worst: f64 = 0.0;
    for tag in ["delta:0", "constant"] {
        let r = fourier_wavefront_check(&datum(tag, &g), one(), &WindowSpec::default(), &RayPlan::default()).unwrap();
        check!(!r.fourier_side.is_empty(), "{tag}: empty Fourier-side set");
        check!(r.hausdorff_deg < 3.0, "{tag}: Hausdorff {}°", r.hausdorff_deg);
        worst = worst.max(r.hausdorff_deg);
    }
    Ok(format!("Hausdorff {worst:.2}°"))
}

// |V_φ e^{icx²}(x, ξ)| for the unit Gaussian window of width 1.
fn chirp_stft_modulus(c: f64, x: f64, xi: f64) -> f64 {
    let a = C64::new(0.5, -c);
    let b = C64::new(x, -xi);
    let val = (C64::new(PI, 0.0) / a).sqrt() * (b * b / (a * 4.0) - x * x / 2.0).exp();
    val.norm() / ((2.0 * PI).sqrt() * PI.powf(0.25))
}

fn chirp_front() -> Outcome {
    let g = Grid::self_dual(2048).unwrap();
    let c = 0.5;
    let u = datum("chirp:0.5,2", &g);
    let w = WindowSpec::default();

    let v = stft(&u, &w).unwrap();
    let mut err: f64 = 0.0;
    for j in (0..g.n).filter(|&j| g.x(j).abs() < 10.0).step_by(7) {
        for k in (0..g.n).filter(|&k| g.xi(k).abs() < 10.0).step_by(7) {
            err = err.max((v.get(j, k).norm() - chirp_stft_modulus(c, g.x(j), g.xi(k))).abs());
        }
    }
    check!(err < 1e-8, "closed form disagrees with the numeric STFT by {err:e}");

    // The closed form does not decay along the ridge and decays like a
    // Gaussian off it, so the derived directions are the ridge maxima far out.
    let radius = 1e3;
    let ridge = (0..36000)
        .map(|i| i as f64 / 100.0)
        .max_by(|a, b| {
            let f = |d: f64| chirp_stft_modulus(c, radius * d.to_radians().cos(), radius * d.to_radians().sin());
            f(*a).total_cmp(&f(*b))
        })
        .unwrap();
    let ridge = ridge % 180.0;
    check!((ridge - (2.0 * c).atan().to_degrees()).abs() < 0.02, "oracle ridge at {ridge}°");
    let derived = [ridge, ridge + 180.0];

    let e = estimate_wavefront(&u, one(), &w, &RayPlan::default()).unwrap();
    check!(!e.singular_angles_deg.is_empty(), "empty singular set");
    let d = angular_hausdorff(&e.singular_angles_deg, &derived);
    check!(d <= 5.0, "Hausdorff {d}° to {derived:?}: {:?}", e.singular_angles_deg);
    Ok(format!("Hausdorff {d:.2}° to the line at {ridge:.2}°"))
}

fn airy_exactness() -> Outcome {
    let g = make_grid(1024, 40.0, 0.0).unwrap();
    let spec = free_airy();
    let u = datum("gaussian:1", &g);

    let out = airy_propagate(&u, &spec, 0.7).unwrap().signal;
    let unitarity = (out.l2_norm() - u.l2_norm()).abs() / u.l2_norm();
    check!(unitarity < 1e-12, "unitarity defect {unitarity:e}");

    let two = airy_propagate(&airy_propagate(&u, &spec, 0.3).unwrap().signal, &spec, 0.4).unwrap().signal;
    let group = two.rel_distance(&out).unwrap();
    check!(group < 1e-10, "group-law defect {group:e}");

    let general = AirySpec::new(vec![0.0, 0.5, 1.0, 0.2], -0.7).unwrap();
    let v = Signal::from_fn(g, |x| C64::new((-(x - 1.0) * (x - 1.0)).exp(), 0.3 * x * (-x * x / 2.0).exp()));
    let lhs = airy_propagate(&u, &general, 0.45).unwrap().signal.inner(&v).unwrap();
    let rhs = u.inner(&airy_propagate(&v, &general, -0.45).unwrap().signal).unwrap();
    let adjoint = (lhs - rhs).norm();
    check!(adjoint < 1e-10, "adjoint defect {adjoint:e}");

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cocycle: f64 = 0.0;
    for s in [spec, general] {
        for _ in 0..500 {
            let (t1, t2, xi) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-5.0..5.0));
            let r = airy_phase(&s, t1, xi - t2 * s.v) + airy_phase(&s, t2, xi) - airy_phase(&s, t1 + t2, xi);
            cocycle = cocycle.max(r.abs());
        }
    }
    check!(cocycle < 1e-12, "cocycle residual {cocycle:e}");
    Ok(format!("unitarity {unitarity:.1e}, group {group:.1e}, adjoint {adjoint:.1e}, cocycle {cocycle:.1e}"))
}

fn airy_propagation() -> Outcome {
    let g = Grid::self_dual(2048).unwrap();
    let u = datum("delta:0", &g);
    let s = SymbolDescriptor::airy(vec![0.0, 0.0, 1.0], 1.0);
    let principal = SymbolDescriptor::airy(vec![0.0, 0.0, 1.0], 0.0);
    let opts = VerifyOptions::default();
    let mut worst: f64 = 0.0;
    for t in [0.3, -0.3, 0.5, -0.5] {
        let r = verify_propagation(&u, &s, &principal, one(), t, Engine::Airy, &opts).unwrap().report;
        check!(!r.low_confidence && r.flow_aborts == 0, "t = {t}: {r:?}");
        check!(r.hausdorff_deg < 6.0, "t = {t}: Hausdorff {}°", r.hausdorff_deg);
        worst = worst.max(r.hausdorff_deg);
    }

    // At σ = 1/2 the principal part of ξ² + x vanishes: no motion.
    let g = Grid::self_dual(512).unwrap();
    let u = datum("delta:0", &g);
    let zero = SymbolDescriptor::Quadratic { a: [[0.0, 0.0], [0.0, 0.0]] };
    let r = verify_propagation(&u, &s, &zero, half(), 0.5, Engine::Cn, &opts).unwrap().report;
    check!(!r.initial_deg.is_empty(), "empty initial set at σ = 1/2");
    let motion = angular_hausdorff(&r.detected_deg, &r.initial_deg);
    check!(motion < 6.0, "σ = 1/2 motion {motion}°");
    Ok(format!("Hausdorff {worst:.2}° over t = ±0.3, ±0.5; σ = 1/2 motion {motion:.2}°"))
}

fn flow_commutation() -> Outcome {
    check!(COMMUTATION_LAMBDAS == [0.5, 2.0, 8.0], "λ set {COMMUTATION_LAMBDAS:?}");
    let quad = FlowOracle::new(SymbolDescriptor::Quadratic { a: [[0.5, 0.2], [0.2, 0.8]] }).with_step(1e-3);
    let radial = FlowOracle::new(SymbolDescriptor::radial_power(1.0, 1, 2, 0.01)).with_step(1e-3);
    let control = FlowOracle::new(SymbolDescriptor::airy(vec![0.0, 0.0, 1.0], 1.0)).with_step(1e-3);
    let q = check_scaling_commutation(&quad, one(), 0.2, 50, 1);
    let r = check_scaling_commutation(&radial, half(), 0.2, 50, 1);
    let bad = check_scaling_commutation(&control, one(), 0.2, 50, 1);
    check!(q.passes(1e-6), "quadratic {q:?}");
    check!(r.passes(1e-6), "radial {r:?}");
    let good = q.max_discrepancy.max(r.max_discrepancy).max(1e-300);
    let margin = bad.max_discrepancy / 1e-6;
    check!(margin >= 1e3, "control discrepancy {:e} is only {margin:.1}x the tolerance", bad.max_discrepancy);
    Ok(format!(
        "quadratic {:.1e}, radial {:.1e}, control {:.1e} ({:.0e}x worst pass)",
        q.max_discrepancy,
        r.max_discrepancy,
        bad.max_discrepancy,
        bad.max_discrepancy / good
    ))
}

fn homogeneity() -> Outcome {
    let rep = check_homogeneity(&SymbolDescriptor::radial_power(1.0, 1, 2, 0.1), half(), 1.5, 1000, 7);
    check!(rep.tolerance == 1e-10 && rep.pass, "{rep:?}");
    let ns = SymbolDescriptor::non_smooth_power(1.0, 1.0, 2, 0.1);
    check!(ns.non_smooth_warning(), "non-smooth construction lacks its flag");
    let round: SymbolDescriptor = serde_json::from_str(&serde_json::to_string(&ns).unwrap()).unwrap();
    check!(round.non_smooth_warning(), "flag lost in serialization");
    Ok(format!("radial_power error {:.1e}, non-smooth flag set", rep.max_rel_error))
}

fn energy_diagnostics() -> Outcome {
    let g = make_grid(256, 30.0, 0.0).unwrap();
    let real = SymbolDescriptor::airy(vec![0.0, 0.0, 1.0], 1.0);
    let run = cn_evolve(&real, &datum("gaussian:1", &g), 1.0, &CnOptions::steps(200)).unwrap();
    let drift = run.max_norm_drift();
    check!(drift < 1e-10, "norm drift {drift:e}");

    let g = make_grid(512, 80.0, 0.0).unwrap();
    let u = datum("gaussian:4", &g);
    let mut growth: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let s = SymbolDescriptor::airy(vec![0.0, 0.0, 1.0], 0.0).shifted(sign);
        let run = cn_evolve(&s, &u, 0.5, &CnOptions::steps(1000)).unwrap();
        let want = (sign * 0.5f64).exp();
        let e = (run.final_state().l2_norm() / u.l2_norm() - want).abs() / want;
        check!(e < 1e-6, "Im a = {sign}: growth error {e:e}");
        growth = growth.max(e);
    }

    let g = make_grid(512, 40.0, 0.0).unwrap();
    let u = datum("gaussian:1", &g);
    let run = cn_evolve(&real, &u, 0.5, &CnOptions::steps(400)).unwrap();
    let exact = airy_propagate(&u, &free_airy(), 0.5).unwrap().signal;
    let agree = run.final_state().rel_distance(&exact).unwrap();
    check!(agree < 1e-4, "cn vs airy {agree:e}");
    Ok(format!("drift {drift:.1e}, growth {growth:.1e}, cn vs airy {agree:.1e}"))
}

fn main_theorem() -> Outcome {
    let g = Grid::self_dual(512).unwrap();
    let h = SymbolDescriptor::harmonic(0.5);
    let opts = VerifyOptions::default();
    let t = 0.4;
    let mut worst: f64 = 0.0;
    let mut reverse: f64 = 0.0;
    for tag in ["constant", "delta:0"] {
        let u = datum(tag, &g);
        for engine in [Engine::Harmonic, Engine::Cn] {
            let f = verify_propagation(&u, &h, &h, one(), t, engine, &opts).unwrap();
            let r = &f.report;
            check!(!r.initial_deg.is_empty() && !r.low_confidence && r.flow_aborts == 0, "{tag} {engine}: {r:?}");
            // The flow of (x² + ξ²)/2 rotates directions clockwise by t.
            let rotated: Vec<f64> = r.initial_deg.iter().map(|a| a - t.to_degrees()).collect();
            check!(angular_hausdorff(&r.predicted_deg, &rotated) < 0.1, "{tag} {engine}: prediction is not a rotation");
            check!(r.hausdorff_deg < 6.0, "{tag} {engine}: Hausdorff {}°", r.hausdorff_deg);
            let b = verify_propagation(&f.evolved, &h, &h, one(), -t, engine, &opts).unwrap();
            let back = angular_hausdorff(&b.report.detected_deg, &r.initial_deg);
            check!(back < 6.0, "{tag} {engine}: time reversal off by {back}°");
            worst = worst.max(r.hausdorff_deg);
            reverse = reverse.max(back);
        }
    }

    let g = Grid::balanced(512, 0.5).unwrap();
    let u = datum("delta:0", &g);
    let s = SymbolDescriptor::radial_power(1.0, 1, 2, 0.01);
    let opts = VerifyOptions { window: WindowSpec::new(3.0).unwrap(), cn_steps: 400, ..VerifyOptions::default() };
    let r = verify_propagation(&u, &s, &s, half(), 0.25, Engine::Cn, &opts).unwrap().report;
    check!(!r.initial_deg.is_empty() && !r.low_confidence && r.flow_aborts == 0, "radial: {r:?}");
    check!(r.hausdorff_deg < 10.0, "radial σ = 1/2: Hausdorff {}°", r.hausdorff_deg);
    Ok(format!(
        "harmonic Hausdorff {worst:.2}°, reversal {reverse:.2}°; radial σ = 1/2 Hausdorff {:.2}°",
        r.hausdorff_deg
    ))
}

fn transform_identities() -> Outcome {
    let g = make_grid(1024, 40.0, 0.0).unwrap();
    let w = WindowSpec::default();

    let u = datum("hermite:3", &g);
    let moyal = (stft(&u, &w).unwrap().l2_norm() - u.l2_norm()).abs();
    check!(moyal < 1e-8, "Moyal defect {moyal:e}");

    let mut inversion: f64 = 0.0;
    for (tag, tol) in [("gaussian:1", 1e-10), ("chirp:0.5,2", 1e-8), ("hermite:5", 1e-10)] {
        let u = datum(tag, &g);
        let e = istft(&stft(&u, &w).unwrap(), &w).unwrap().rel_distance(&u).unwrap();
        check!(e < tol, "istft∘stft on {tag}: {e:e}");
        inversion = inversion.max(e);
    }

    let mut imag: f64 = 0.0;
    for tag in ["hermite:2", "chirp:0.5,2"] {
        let f = datum(tag, &g);
        let m = wigner(&f, &f).unwrap().values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        check!(m < 1e-12, "Wigner of {tag} has imaginary part {m:e}");
        imag = imag.max(m);
    }

    let small = make_grid(128, 20.0, 0.0).unwrap();
    let q = quantize_fn(&small, &|_, _| 1.0, None).unwrap().matrix;
    let ident = (q - DMatrix::<C64>::identity(128, 128)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    check!(ident < 1e-10, "quantize(1) off identity by {ident:e}");

    // i[f^w, g^w] = {f, g}^w on the span of the 32 lowest oscillator modes.
    let sg = Grid::self_dual(256).unwrap();
    let (fa, gb) = ([[0.5, 0.2], [0.2, 0.3]], [[0.1, -0.4], [-0.4, 0.6]]);
    let ajb = |i: usize, j: usize| fa[i][0] * gb[1][j] - fa[i][1] * gb[0][j];
    let off = -2.0 * (ajb(0, 1) + ajb(1, 0));
    let bracket = SymbolDescriptor::Quadratic { a: [[-4.0 * ajb(0, 0), off], [off, -4.0 * ajb(1, 1)]] };
    let qf = quantize(&SymbolDescriptor::Quadratic { a: fa }, &sg).unwrap().matrix;
    let qg = quantize(&SymbolDescriptor::Quadratic { a: gb }, &sg).unwrap().matrix;
    let qb = quantize(&bracket, &sg).unwrap().matrix;
    let comm = (&qf * &qg - &qg * &qf) * C64::new(0.0, 1.0);
    let eig = SymmetricEigen::new(harmonic_matrix(&sg, 0.5));
    let mut order: Vec<usize> = (0..sg.n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let p = DMatrix::<C64>::from_fn(sg.n, 32, |i, k| C64::new(eig.eigenvectors[(i, order[k])], 0.0));
    let rhs = p.adjoint() * qb * &p;
    let commutator = operator_norm(&(p.adjoint() * comm * &p - &rhs)) / operator_norm(&rhs);
    check!(commutator < 1e-6, "commutator defect {commutator:e}");

    Ok(format!(
        "Moyal {moyal:.1e}, inversion {inversion:.1e}, Wigner imag {imag:.1e}, identity {ident:.1e}, commutator {commutator:.1e}"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Schwartz emptiness", schwartz_emptiness),
        ("dual pair", dual_pair),
        ("chirp front", chirp_front),
        ("Airy propagator exactness", airy_exactness),
        ("Airy propagation", airy_propagation),
        ("flow/scaling commutation", flow_commutation),
        ("homogeneity certificates", homogeneity),
        ("energy diagnostics", energy_diagnostics),
        ("propagation of singularities", main_theorem),
        ("transform identities", transform_identities),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {}: {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
