use std::fmt::Write as _;

use num_traits::Signed;
use rand::Rng as _;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{CliError, Experiment, Outputs, RunConfig};
use crate::correlation::{correlation, decay_fit, Observable};
use crate::height::{alpha, height_slack, make_height_params};
use crate::homspace::{apply_flow, make_flow, minima_all, FlowSpec, LatticePoint, Trajectory};
use crate::largedev::{empirical_ld, ConstantGaps, GeometricGaps, IncrementProcess, MarkovGaps};
use crate::returns::{box_of, gap_tail, occupancy_profile, return_times, shadowing_check, HeightSublevel};
use crate::rng;
use crate::rootsys::exact::{self, Rational};
use crate::rootsys::{
    build_expanding, build_root_system, check_construction, decompose_dominated, has_strongly_orthogonal_basis,
    inverse_cartan, strongly_orthogonal, verify_decomposition, Family, RootSystem,
};
use crate::stats::percentile;

type Run = Result<Outputs, CliError>;

pub(super) fn run(cfg: &RunConfig) -> Run {
    match cfg.experiment() {
        Experiment::Simulate => simulate(cfg),
        Experiment::HeightProfile => height_profile(cfg),
        Experiment::ReturnTimes => returns(cfg),
        Experiment::Occupancy => occupancy(cfg),
        Experiment::Largedev => largedev(cfg),
        Experiment::Correlations => correlations(cfg),
        Experiment::Shadowing => shadowing(cfg),
        Experiment::RootsysDecompose => decompose(cfg),
        Experiment::RootsysExpanding => expanding(cfg),
        Experiment::RootsysOrthogonal => orthogonal(cfg),
        Experiment::RootsysCartan => cartan(cfg),
    }
}

fn flow(cfg: &RunConfig) -> Result<FlowSpec, CliError> {
    Ok(make_flow(&cfg.list::<f64>("a")?, &cfg.list::<f64>("b")?)?)
}

fn uniform_point(spec: &FlowSpec, seed: u64, index: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, index);
    (0..spec.chart_dim()).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s.into_bytes()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn simulate(cfg: &RunConfig) -> Run {
    let spec = flow(cfg)?;
    let params = make_height_params(&spec, cfg.get("epsilon")?)?;
    let horizon = cfg.positive("T")?;
    let dt = cfg.positive("dt")?;
    let stride = cfg.count("stride")?;
    let level = cfg.positive("M")?;
    let w = match cfg.raw("w") {
        "random" => uniform_point(&spec, cfg.seed()?, 0),
        _ => cfg.list("w")?,
    };
    let x = LatticePoint::standard(spec.d());
    let mut orbit = Trajectory::new(&spec, &x, &w)?;
    let steps = (horizon / dt).round() as usize;
    let mut rows = Vec::new();
    for i in 0..=steps {
        if i > 0 {
            orbit.advance(dt);
        }
        if i % stride == 0 {
            let y = orbit.lattice();
            let minima = minima_all(&y)?;
            let a = params.alpha_from_minima(&minima);
            rows.push(format!("{},{},{},{}", i as f64 * dt, minima[0], a, u8::from(a <= level)));
        }
    }
    Ok(Outputs {
        files: vec![("trajectory.csv".into(), csv("t,lambda1,alpha,inK", rows))],
        report: format!("w = ({})\n", join(&w)),
        falsified: None,
    })
}

fn height_profile(cfg: &RunConfig) -> Run {
    let spec = flow(cfg)?;
    let params = make_height_params(&spec, cfg.get("epsilon")?)?;
    let t: f64 = cfg.get("t")?;
    let grid = cfg.count("grid")?;
    let m = spec.chart_dim();
    if m > 2 {
        return Err(CliError::Usage(format!("height-profile grids at most two chart axes, got {m}")));
    }
    let d = spec.d();
    let x = LatticePoint::standard(d);
    let total = grid.pow(m as u32);
    let rows: Vec<String> = (0..total)
        .into_par_iter()
        .map(|mut idx| -> Result<String, CliError> {
            let w: Vec<f64> = (0..m)
                .map(|_| {
                    let j = idx % grid;
                    idx /= grid;
                    -1.0 + 2.0 * (j as f64 + 0.5) / grid as f64
                })
                .collect();
            let minima = minima_all(&apply_flow(&spec, &x, t, &w)?)?;
            Ok(format!("{},{},{}", join(&w), params.alpha_from_minima(&minima), join(&minima)))
        })
        .collect::<Result<_, _>>()?;
    let mut header: Vec<String> = if m == 1 { vec!["w".into()] } else { (1..=m).map(|i| format!("w{i}")).collect() };
    header.push("alpha".into());
    header.push("lambda1".into());
    header.extend((2..d).map(|i| format!("m{i}")));
    Ok(Outputs {
        files: vec![("height_profile.csv".into(), csv(&header.join(","), rows))],
        report: String::new(),
        falsified: None,
    })
}

fn returns(cfg: &RunConfig) -> Run {
    let spec = flow(cfg)?;
    let params = make_height_params(&spec, cfg.get("epsilon")?)?;
    let t = cfg.positive("t")?;
    let horizon: u64 = cfg.count("N")? as u64;
    let samples = cfg.count("samples")?;
    let seed = cfg.seed()?;
    let x = LatticePoint::standard(spec.d());
    let l0 = cfg.positive("l0_factor")? * alpha(&params, &x)?;
    let slack = match cfg.raw("slack") {
        "auto" => height_slack(&spec, &params, 0.0, 2.0, 9)?,
        _ => cfg.get("slack")?,
    };
    let traces = (0..samples)
        .into_par_iter()
        .map(|i| return_times(&spec, &params, &x, t, l0, slack, horizon, &uniform_point(&spec, seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (id, tr) in traces.iter().enumerate() {
        for (i, pair) in tr.sigma.windows(2).enumerate() {
            rows.push(format!("{id},{},{},{},0", i + 1, pair[1], pair[1] - pair[0]));
        }
        if let Some(g) = tr.censored_gap() {
            rows.push(format!("{id},{},{},{g},1", tr.sigma.len(), tr.horizon));
        }
    }
    let gaps: Vec<u64> = traces.iter().flat_map(|tr| tr.gaps()).collect();
    let tail_rows = if gaps.is_empty() { Vec::new() } else { gap_tail(&gaps)? };
    let tail = tail_rows.iter().map(|r| format!("{},{},{},{}", r.q, r.count, r.total, r.tail));
    let censored = traces.iter().filter(|tr| tr.censored_gap().is_some()).count();
    Ok(Outputs {
        files: vec![
            ("returns.csv".into(), csv("sample_id,i,sigma_i,gap,censored", rows)),
            ("gap_tail.csv".into(), csv("q,count,total,tail", tail)),
        ],
        report: format!(
            "l0 = {l0}, slack = {slack}, {} completed gaps, {censored} censored\n",
            gaps.len()
        ),
        falsified: None,
    })
}

fn occupancy(cfg: &RunConfig) -> Run {
    let spec = flow(cfg)?;
    let params = make_height_params(&spec, cfg.get("epsilon")?)?;
    let horizons: Vec<f64> = cfg.list("T")?;
    if horizons.is_empty() || horizons.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(CliError::Usage(format!("horizons T must be positive, got {:?}", cfg.raw("T"))));
    }
    let dt = cfg.positive("dt")?;
    let samples = cfg.count("samples")?;
    let eps_prop: f64 = cfg.get("eps_prop")?;
    if !(eps_prop > 0.0 && eps_prop < 1.0) {
        return Err(CliError::Usage(format!("eps_prop = {eps_prop} is not in (0, 1)")));
    }
    let seed = cfg.seed()?;
    let x = LatticePoint::standard(spec.d());
    let points: Vec<Vec<f64>> = (0..samples as u64).map(|i| uniform_point(&spec, seed, i)).collect();
    let longest = horizons.iter().copied().fold(0.0, f64::max);
    let level = match cfg.raw("M") {
        "auto" => {
            // first pass: heights at unit times along every orbit
            let quantile: f64 = cfg.get("quantile")?;
            if !(quantile > 0.0 && quantile < 1.0) {
                return Err(CliError::Usage(format!("quantile = {quantile} is not in (0, 1)")));
            }
            let values: Vec<f64> = points
                .par_iter()
                .map(|w| -> Result<Vec<f64>, CliError> {
                    let mut orbit = Trajectory::new(&spec, &x, w)?;
                    let mut out = vec![alpha(&params, &orbit.lattice())?];
                    for _ in 0..longest.ceil() as usize {
                        orbit.advance(1.0);
                        out.push(alpha(&params, &orbit.lattice())?);
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>, _>>()?
                .concat();
            percentile(&values, 100.0 * quantile)?
        }
        _ => cfg.positive("M")?,
    };
    let region = HeightSublevel { params: params.clone(), level };
    let profiles = points
        .par_iter()
        .map(|w| occupancy_profile(&spec, &x, &horizons, &region, w, dt))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = horizons.iter().enumerate().map(|(k, h)| {
        let below = profiles.iter().filter(|p| p[k] <= 1.0 - eps_prop).count();
        format!("{h},{}", below as f64 / samples as f64)
    });
    Ok(Outputs {
        files: vec![("occupancy.csv".into(), csv("T,fraction_below", rows))],
        report: format!("M = {level}\n"),
        falsified: None,
    })
}

fn largedev(cfg: &RunConfig) -> Run {
    let c0: f64 = cfg.get("C0")?;
    let theta0 = cfg.positive("theta0")?;
    let eps: f64 = cfg.get("eps")?;
    let process: Box<dyn IncrementProcess> = match cfg.raw("process") {
        "geometric" => Box::new(GeometricGaps { c0, theta0 }),
        "constant" => Box::new(ConstantGaps { gap: cfg.get("gap")?, theta0 }),
        "markov" => Box::new(MarkovGaps { c0, theta0, switch: cfg.get("switch")? }),
        other => return Err(CliError::Usage(format!("unknown process {other:?}"))),
    };
    let report = empirical_ld(&*process, eps, cfg.count("n_max")?, cfg.count("trials")? as u64, cfg.seed()?)?;
    let rows = report.rows.iter().map(|r| format!("{},{},{},{}", r.n, r.empirical, r.bound, r.stderr));
    let mut text = format!("theta = {}, Q = {}\n", report.constants.theta, report.constants.q);
    for w in &report.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    let violations = report.violations();
    let falsified = (!violations.is_empty()).then(|| {
        let worst = violations[0];
        format!(
            "{} rows exceed bound + 3 stderr, first at n = {}: {} > {}",
            violations.len(),
            worst.n,
            worst.empirical,
            worst.bound
        )
    });
    Ok(Outputs { files: vec![("largedev.csv".into(), csv("n,empirical,bound,stderr", rows))], report: text, falsified })
}

fn correlations(cfg: &RunConfig) -> Run {
    let spec = flow(cfg)?;
    let s: f64 = cfg.get("s")?;
    let axis: usize = cfg.get("axis")?;
    if axis == 0 || axis > spec.chart_dim() {
        return Err(CliError::Usage(format!("axis {axis} is not in 1..={}", spec.chart_dim())));
    }
    let t = cfg.positive("t")?;
    let gaps: Vec<f64> = cfg.list("gaps")?;
    if gaps.iter().any(|g| !(*g >= 0.0)) {
        return Err(CliError::Usage("gaps must be nonnegative".into()));
    }
    let per_unit = cfg.count("per_unit")?;
    let psi = Observable::measured(cfg.get("center")?, cfg.get("width")?, spec.d(), 1000, cfg.seed()?)?;
    let x = LatticePoint::standard(spec.d());
    let eval = |y: &LatticePoint| psi.eval(y);
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for &g in &gaps {
        let l = t + g;
        let c = correlation(&spec, &x, &eval, s, axis - 1, t, l, per_unit)?;
        values.push((g, c.abs()));
        rows.push(format!("{t},{l},{g},{c}"));
    }
    let mut report = format!("psi: Lipschitz {}\n", psi.lipschitz());
    if gaps.len() >= 4 {
        let fit = decay_fit(&values)?;
        let _ = writeln!(
            report,
            "decay fit: slope {}, intercept {}, R^2 {}, dropped {}",
            fit.slope, fit.intercept, fit.r2, fit.dropped
        );
    }
    Ok(Outputs { files: vec![("correlations.csv".into(), csv("t,l,gap,corr", rows))], report, falsified: None })
}

fn shadowing(cfg: &RunConfig) -> Run {
    let spec = flow(cfg)?;
    let t = cfg.positive("t")?;
    let instances = cfg.count("instances")?;
    let n_max: usize = cfg.get("n_max")?;
    let per_unit = cfg.count("per_unit")?;
    let seed = cfg.seed()?;
    let x = LatticePoint::standard(spec.d());
    let results = (0..instances as u64)
        .into_par_iter()
        .map(|i| -> Result<(usize, f64, f64), CliError> {
            let mut r = rng::stream(seed, i);
            let n = r.gen_range(0..=n_max);
            let w: Vec<f64> = (0..spec.chart_dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
            let width = r.gen_range(0.1..0.5);
            let center = width + r.gen_range(0.1..0.8);
            let psi = Observable::new(center, width, 0.0)?;
            let cell = box_of(&spec, t, n, &w)?;
            let (lhs, rhs) =
                shadowing_check(&spec, &x, t, n, &cell.lower(), &cell.upper(), &|y| psi.eval(y), per_unit)?;
            Ok((n, lhs, rhs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut failed = 0;
    let rows: Vec<String> = results
        .iter()
        .enumerate()
        .map(|(i, (n, lhs, rhs))| {
            let ok = *lhs <= rhs + 1e-6;
            failed += usize::from(!ok);
            format!("{i},{n},{lhs},{rhs},{}", u8::from(ok))
        })
        .collect();
    let falsified = (failed > 0).then(|| format!("{failed} of {instances} instances have lhs > rhs + 1e-6"));
    Ok(Outputs {
        files: vec![("shadowing.csv".into(), csv("instance,n,lhs,rhs,ok", rows))],
        report: format!("{} of {instances} instances satisfy lhs <= rhs\n", instances - failed),
        falsified,
    })
}

fn system(cfg: &RunConfig) -> Result<RootSystem, CliError> {
    let family: Family = cfg.raw("family").parse().map_err(|e: crate::Error| CliError::Usage(e.to_string()))?;
    Ok(build_root_system(family, cfg.get("rank")?)?)
}

fn rationals(v: &[Rational]) -> Value {
    Value::from(v.iter().map(exact::format).collect::<Vec<_>>())
}

fn json_file(name: &str, value: &Value) -> (String, Vec<u8>) {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    (name.to_string(), text.into_bytes())
}

fn decompose(cfg: &RunConfig) -> Run {
    let sys = system(cfg)?;
    let fundamental: Vec<Rational> = cfg.list("alpha")?;
    if fundamental.len() != sys.rank() {
        return Err(CliError::Usage(format!("alpha needs {} coordinates", sys.rank())));
    }
    if fundamental.iter().any(|c| c.is_negative()) {
        return Err(CliError::Usage("alpha must have nonnegative fundamental-weight coordinates".into()));
    }
    let alpha = sys.from_fundamental_coordinates(&fundamental)?;
    let dec = decompose_dominated(&sys, &alpha)?;
    let check = verify_decomposition(&sys, &dec);
    let simple: Vec<Value> = dec
        .betas
        .iter()
        .map(|b| rationals(&sys.simple_coordinates(b).expect("roots lie in the span")))
        .collect();
    let value = json!({
        "system": sys.name(),
        "alpha_fundamental": rationals(&fundamental),
        "alpha": rationals(&alpha),
        "betas": dec.betas.iter().map(|b| rationals(b)).collect::<Vec<_>>(),
        "betas_simple": simple,
        "coeffs": rationals(&dec.coeffs),
        "branch": dec.branch.name(),
        "verified": check.passed(),
        "failures": check.failures,
    });
    let falsified = (!check.passed()).then(|| format!("decomposition failed verification: {:?}", check.failures));
    Ok(Outputs {
        files: vec![json_file("decompose.json", &value)],
        report: format!("{}: {} roots via the {} branch\n", sys.name(), dec.betas.len(), dec.branch.name()),
        falsified,
    })
}

fn expanding(cfg: &RunConfig) -> Run {
    let z: Vec<f64> = cfg.list("z")?;
    let sort: bool = cfg.get("sort")?;
    let con = build_expanding(&z, sort)?;
    let report = check_construction(&con)?;
    let v = &report.verdict;
    let pairs: Vec<[usize; 2]> = con.active.iter().map(|&i| [con.pairs[i].0 + 1, con.pairs[i].1 + 1]).collect();
    let value = json!({
        "d": con.d,
        "z": con.z,
        "P": con.active.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "roots": con.pairs.iter().map(|&(j, k)| [j + 1, k + 1]).collect::<Vec<_>>(),
        "coeffs": con.active.iter().map(|&i| con.coeffs[i]).collect::<Vec<_>>(),
        "u_basis": pairs,
        "verdict": {
            "passed": v.passed,
            "max_sine": v.max_sine,
            "invariant_dim": v.invariant_dim,
            "fixed_dim": v.fixed_dim,
            "expanding_dim": v.expanding_dim,
        },
        "closure_dim": report.closure_dim,
        "killing_min_singular": report.killing_min_singular,
        "killing_condition": report.killing_condition,
        "abelian_residual": report.abelian_residual,
        "sl2_residual": report.sl2_residual,
        "reconstruction_error": report.reconstruction_error,
    });
    let falsified = (!v.passed).then(|| format!("expanding check failed, max sine {}", v.max_sine));
    Ok(Outputs {
        files: vec![json_file("expanding.json", &value)],
        report: format!("{} root pairs, expanding check passed: {}\n", pairs.len(), v.passed),
        falsified,
    })
}

fn orthogonal(cfg: &RunConfig) -> Run {
    let sys = system(cfg)?;
    if !has_strongly_orthogonal_basis(sys.family(), sys.rank()) {
        return Err(CliError::Usage(format!("{} has no strongly orthogonal basis", sys.name())));
    }
    let roots = strongly_orthogonal(&sys)?;
    let value = json!({
        "system": sys.name(),
        "roots": roots.iter().map(|r| rationals(r)).collect::<Vec<_>>(),
        "roots_simple": roots
            .iter()
            .map(|r| rationals(&sys.simple_coordinates(r).expect("roots lie in the span")))
            .collect::<Vec<_>>(),
    });
    Ok(Outputs {
        files: vec![json_file("orthogonal.json", &value)],
        report: format!("{}: {} strongly orthogonal roots\n", sys.name(), roots.len()),
        falsified: None,
    })
}

fn cartan(cfg: &RunConfig) -> Run {
    let sys = system(cfg)?;
    let inv = inverse_cartan(&sys);
    let positive = inv.iter().flatten().all(|q| q.is_positive());
    let value = json!({
        "system": sys.name(),
        "cartan": sys.cartan(),
        "inverse": inv.iter().map(|r| rationals(r)).collect::<Vec<_>>(),
        "inverse_positive": positive,
    });
    Ok(Outputs {
        files: vec![json_file("cartan.json", &value)],
        report: format!("{}: inverse Cartan entries positive: {positive}\n", sys.name()),
        falsified: (!positive).then(|| format!("{} has a nonpositive inverse Cartan entry", sys.name())),
    })
}
