use std::fmt::Write as _;
use std::path::Path;

use anisowave::flow::{check_scaling_commutation, integrate_flow, FlowOracle};
use anisowave::propagators::{
    cn_evolve, evolve_with_engine, principal_part, verify_propagation, write_run_archive, CnOptions, Engine,
    RunArchive, VerifyOptions,
};
use anisowave::signal::{synthesize, CanonicalDatum, Signal};
use anisowave::transforms::{stft, write_pgm};
use anisowave::wavefront::{estimate_wavefront, RayPlan};
use anisowave::{PhasePoint, WindowSpec};
use anyhow::{Context, Result};
use serde_json::json;

use crate::config::{Command, ExperimentConfig};
use crate::symbol::parse_symbol;
use crate::{EXIT_LOW_CONFIDENCE, EXIT_OK};

/// Points sampled by `flow --check-commutation`.
const COMMUTATION_SAMPLES: usize = 50;
const COMMUTATION_TOL: f64 = 1e-6;

pub fn execute(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<i32> {
    match cfg.command {
        Command::Wf => wf(cfg, out),
        Command::Flow => flow(cfg, out),
        Command::Propagate => propagate(cfg, out),
        Command::Verify => verify(cfg, out),
    }
}

fn datum(cfg: &ExperimentConfig) -> Result<Signal> {
    let d: CanonicalDatum = cfg.datum.parse()?;
    let s = synthesize(&d, &cfg.grid()?)?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    Ok(s.signal)
}

fn plan(cfg: &ExperimentConfig) -> RayPlan {
    RayPlan { threshold: cfg.threshold, ..RayPlan::default() }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value") + "\n"
}

fn prepare(out: Option<&Path>, cfg: &ExperimentConfig) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("config.json"), pretty(&cfg.to_json()))?;
    }
    Ok(())
}

fn wf(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<i32> {
    let u = datum(cfg)?;
    let w = WindowSpec::new(cfg.window_width)?;
    let est = estimate_wavefront(&u, cfg.sigma, &w, &plan(cfg))?;
    prepare(out, cfg)?;
    if let Some(dir) = out {
        est.write_summary(dir.join("estimate.json"))?;
        est.write_profiles_csv(dir.join("decay.csv"))?;
        write_pgm(&stft(&u, &w)?, dir.join("stft.pgm"))?;
    }
    println!("{}", est.to_summary_json());
    if est.low_confidence {
        eprintln!("low confidence: {:.0}% of rays are inconclusive", 100.0 * est.inconclusive_fraction());
        return Ok(EXIT_LOW_CONFIDENCE);
    }
    Ok(EXIT_OK)
}

fn flow(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<i32> {
    let oracle = FlowOracle::new(parse_symbol(&cfg.symbol)?).with_step(cfg.flow_step);
    let z0 = PhasePoint::d1(cfg.z0[0], cfg.z0[1]);
    let traj = integrate_flow(&oracle, &z0, cfg.t)?;
    prepare(out, cfg)?;
    if let Some(dir) = out {
        traj.write_csv(dir.join("trajectory.csv"))?;
    }
    let end = traj.endpoint();
    println!("t,x,xi,energy");
    println!("{},{},{},{}", traj.times.last().unwrap(), end.x[0], end.xi[0], traj.energy.last().unwrap());
    if cfg.check_commutation {
        let rep = check_scaling_commutation(&oracle, cfg.sigma, cfg.t, COMMUTATION_SAMPLES, cfg.seed);
        let pass = rep.passes(COMMUTATION_TOL);
        let doc = json!({ "tolerance": COMMUTATION_TOL, "pass": pass, "report": rep });
        if let Some(dir) = out {
            std::fs::write(dir.join("commutation.json"), pretty(&doc))?;
        }
        println!(
            "commutation: {} (max discrepancy {:.3e}, {} aborts)",
            if pass { "pass" } else { "fail" },
            rep.max_discrepancy,
            rep.aborts
        );
    }
    Ok(EXIT_OK)
}

fn norms_csv(norms: &[(f64, f64)]) -> String {
    let mut s = String::from("step,t,l2_norm\n");
    for (i, (t, n)) in norms.iter().enumerate() {
        let _ = writeln!(s, "{i},{t:.17e},{n:.17e}");
    }
    s
}

fn propagate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<i32> {
    let u0 = datum(cfg)?;
    let s = parse_symbol(&cfg.symbol)?;
    let (states, diagnostics, norms, warnings) = if cfg.engine == Engine::Cn {
        let opts = CnOptions {
            steps: cfg.steps,
            track: vec![(cfg.sigma, 0.0), (cfg.sigma, 1.0)],
            checkpoint_every: Some((cfg.steps / 10).max(1)),
            window: WindowSpec::new(cfg.window_width)?,
        };
        let run = cn_evolve(&s, &u0, cfg.t, &opts)?;
        let states = run.checkpoints.iter().map(|c| (format!("step{:06}", c.step), c.state.clone())).collect();
        let norms: Vec<(f64, f64)> = run.times.iter().cloned().zip(run.l2_norms.iter().cloned()).collect();
        (states, run.diagnostics_csv(), norms, run.warnings)
    } else {
        let ev = evolve_with_engine(&u0, &s, cfg.t, cfg.engine, cfg.steps)?;
        let states = vec![("initial".to_string(), u0.clone()), ("final".to_string(), ev.state)];
        (states, norms_csv(&ev.norms), ev.norms, ev.warnings)
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let (n0, n1) = (norms[0].1, norms.last().unwrap().1);
    let drift = norms.iter().map(|(_, n)| (n - n0).abs() / n0).fold(0.0, f64::max);
    let report = json!({
        "engine": cfg.engine,
        "t": cfg.t,
        "initial_norm": n0,
        "final_norm": n1,
        "max_norm_drift": drift,
        "warnings": warnings,
    });
    if let Some(dir) = out {
        let archive =
            RunArchive { config: cfg.to_json(), states, diagnostics_csv: diagnostics, report: report.clone() };
        write_run_archive(dir, &archive)?;
    }
    print!("{}", pretty(&report));
    Ok(EXIT_OK)
}

fn verify(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<i32> {
    let u0 = datum(cfg)?;
    let s = parse_symbol(&cfg.symbol)?;
    let principal = principal_part(&s, cfg.sigma)?;
    let opts = VerifyOptions {
        window: WindowSpec::new(cfg.window_width)?,
        plan: plan(cfg),
        cn_steps: cfg.steps,
        flow_step: cfg.flow_step,
    };
    let outcome = verify_propagation(&u0, &s, &principal, cfg.sigma, cfg.t, cfg.engine, &opts)?;
    let r = &outcome.report;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let report = serde_json::to_value(r)?;
    if let Some(dir) = out {
        let archive = RunArchive {
            config: cfg.to_json(),
            states: vec![("initial".to_string(), u0), ("final".to_string(), outcome.evolved.clone())],
            diagnostics_csv: norms_csv(&outcome.norms),
            report: report.clone(),
        };
        write_run_archive(dir, &archive)?;
    }
    print!("{}", pretty(&report));
    if r.flow_aborts > 0 {
        eprintln!("warning: {} flow integrations aborted", r.flow_aborts);
    }
    if r.low_confidence {
        eprintln!("low confidence: a detection had too many inconclusive rays");
        return Ok(EXIT_LOW_CONFIDENCE);
    }
    Ok(EXIT_OK)
}
