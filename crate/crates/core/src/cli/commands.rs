use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{thread_budget, RunContext};
use crate::error::{Error, Result};
use crate::io::{decode_csv, encode_csv, encode_pgm, encode_wgrd, read_wgrd};
use crate::mra::{cutoff_level, demo_signal, multi_norm, reconstruct_level, slots, DemoSignal, LevelSlot};
use crate::operator::{build_nonstandard_form, connection_coeffs, threshold_sparsity, OperatorSpec};
use crate::patterns::{
    classify, compute_metrics, compute_metrics_in_basis, generate_matrix, synthesize, ClassifyThresholds,
    CoefficientMatrix, MatrixGenerator,
};
use crate::tensor2d::{Grid2D, GridSpec};
use crate::wavelet::{dwt_periodic, make_filter, packet_best_basis, Family, WaveletFilter};
use crate::wigner::{
    coherent_state, estimate_stable_dt, evolve as evolve_grid, gaussian_wigner, matched_momentum_grid, mixture_evolve,
    normalize_wavefunction, oscillator_superposition, quantumness_metrics, wigner_transform_with_mass,
    DerivativeBackend, EvolveOptions, Integrator, LindbladParams, MixtureComponent, MixtureSpec, PolynomialPotential,
    StepDiagnostics, WignerState,
};

fn filter_named(name: Option<&str>, default: &str) -> Result<WaveletFilter> {
    WaveletFilter::from_name(name.unwrap_or(default))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltersArgs {
    /// haar, daubechies or symmlet.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Number of vanishing moments.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

pub(super) fn filters(a: &FiltersArgs, ctx: &mut RunContext) -> Result<()> {
    let family: Family = a.family.as_deref().unwrap_or("daubechies").parse()?;
    let order = a.order.unwrap_or(if family == Family::Haar { 1 } else { 2 });
    let f = make_filter(family, order)?;
    let text = f.to_json();
    print!("{text}");
    ctx.write(&format!("filter_{}.json", f.name()), text.as_bytes())?;
    ctx.phase("filters");
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwtArgs {
    /// Signal file with one value per line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Demo signal used without --input: kick, multikick or rw.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    /// Filter name such as db4 or sym8.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Also search the best wavelet-packet basis of this depth.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packet_depth: Option<usize>,
}

fn named_signal(name: &str, length: usize) -> Result<DemoSignal> {
    Ok(match name {
        "kick" => DemoSignal::kick(0.5, length),
        "multikick" => DemoSignal::Multikick {
            kicks: vec![(0.2, 1.0), (0.45, -0.6), (0.7, 0.8)],
            width: 4.0 / length as f64,
        },
        "rw" | "rw_fractal" => DemoSignal::rw_default(),
        other => return Err(Error::BadParams(format!("unknown demo signal {other:?}"))),
    })
}

fn read_signal(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::BadParams(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<f64>().map_err(|_| Error::Format(format!("bad sample {l:?}"))))
        .collect()
}

pub(super) fn dwt(a: &DwtArgs, ctx: &mut RunContext) -> Result<()> {
    let f = filter_named(a.filter.as_deref(), "db4")?;
    let signal = match &a.input {
        Some(p) => read_signal(p)?,
        None => {
            let n = a.length.unwrap_or(256);
            demo_signal(&named_signal(a.signal.as_deref().unwrap_or("kick"), n)?, n)?
        }
    };
    let levels = a.levels.unwrap_or(4);
    let decomp = dwt_periodic(&signal, &f, levels)?;
    ctx.phase("transform");
    let mut csv = String::from("index,level,kind,value\n");
    for (i, v) in decomp.coarse.iter().enumerate() {
        csv.push_str(&format!("{i},{},coarse,{v:.16e}\n", decomp.coarse_level));
    }
    let mut idx = decomp.coarse.len();
    for (k, d) in decomp.details.iter().enumerate() {
        for v in d {
            csv.push_str(&format!("{idx},{},detail,{v:.16e}\n", decomp.coarse_level + k));
            idx += 1;
        }
    }
    ctx.write("coefficients.csv", csv.as_bytes())?;
    ctx.write_json("decomposition.json", &decomp)?;
    if let Some(depth) = a.packet_depth {
        let tree = packet_best_basis(&signal, &f, depth)?;
        let nodes: Vec<_> = tree.chosen_basis.iter().map(|(l, p)| json!({"level": l, "path": p})).collect();
        ctx.write_json(
            "packet.json",
            &json!({
                "filter": f.name(),
                "depth": depth,
                "chosen_basis": nodes,
                "chosen_cost": tree.chosen_cost(),
                "dwt_cost": tree.tiling_cost(&crate::wavelet::dwt_tiling(depth)),
                "coefficients": tree.chosen_coefficients(),
            }),
        )?;
        ctx.phase("packets");
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MraArgs {
    /// kick, multikick or rw.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<String>,
    /// Full signal description, overriding --signal (config only).
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<DemoSignal>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

pub(super) fn mra_demo(a: &MraArgs, ctx: &mut RunContext) -> Result<()> {
    let n = a.length.unwrap_or(1024);
    let f = filter_named(a.filter.as_deref(), "sym8")?;
    let kind = match &a.spec {
        Some(s) => s.clone(),
        None => named_signal(a.signal.as_deref().unwrap_or("kick"), n)?,
    };
    let signal = demo_signal(&kind, n)?;
    let decomp = dwt_periodic(&signal, &f, a.levels.unwrap_or(6))?;
    let parts: Vec<(String, Vec<f64>)> = slots(&decomp)
        .into_iter()
        .map(|s| {
            let label = match s {
                LevelSlot::Coarse => format!("coarse_{}", decomp.coarse_level),
                LevelSlot::Detail(j) => format!("detail_{j}"),
            };
            reconstruct_level(&decomp, &f, s).map(|v| (label, v))
        })
        .collect::<Result<_>>()?;
    ctx.phase("decompose");
    let mut csv = String::from("t,signal");
    for (label, _) in &parts {
        csv.push(',');
        csv.push_str(label);
    }
    csv.push('\n');
    for i in 0..n {
        csv.push_str(&format!("{:.12e},{:.16e}", i as f64 / n as f64, signal[i]));
        for (_, v) in &parts {
            csv.push_str(&format!(",{:.16e}", v[i]));
        }
        csv.push('\n');
    }
    ctx.write("levels.csv", csv.as_bytes())?;
    let norms = multi_norm(&decomp);
    let cutoff = cutoff_level(&decomp, ctx.config.tolerance("cutoff", 1e-3))?;
    ctx.write_json(
        "levels.json",
        &json!({
            "signal_kind": kind.name(),
            "params": kind,
            "filter": f.name(),
            "levels": decomp.levels(),
            "columns": parts.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
            "per_level_energy": norms.per_level_energy,
            "total_energy": norms.total,
            "cutoff": cutoff,
        }),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    /// Derivative order.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

pub(super) fn conn_coeffs(a: &ConnArgs, ctx: &mut RunContext) -> Result<()> {
    let f = filter_named(a.filter.as_deref(), "db3")?;
    let cc = connection_coeffs(&f, a.order.unwrap_or(1))?;
    let body = json!({
        "filter": cc.filter_name,
        "derivative_order": cc.derivative_order,
        "half_width": cc.half_width,
        "shifts": cc.shifts().map(|(l, _)| l).collect::<Vec<_>>(),
        "values": cc.values,
        "refinement_residual": cc.refinement_residual,
    });
    println!("{}", serde_json::to_string_pretty(&body)?);
    ctx.write_json("connection.json", &body)?;
    ctx.phase("solve");
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsformArgs {
    /// ddx, d2dx2 or kernel-file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    /// Kernel samples for --op kernel-file (CSV, n x n).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Grid size; taken from the kernel for kernel-file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Write every block entry as CSV triplets.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dump: bool,
}

pub(super) fn nsform(a: &NsformArgs, ctx: &mut RunContext) -> Result<()> {
    let f = filter_named(a.filter.as_deref(), "db3")?;
    let (spec, n) = match a.op.as_deref().unwrap_or("ddx") {
        "ddx" => (OperatorSpec::Derivative { order: 1 }, a.size.unwrap_or(256)),
        "d2dx2" => (OperatorSpec::Derivative { order: 2 }, a.size.unwrap_or(256)),
        "kernel-file" => {
            let path = a
                .kernel
                .as_ref()
                .ok_or_else(|| Error::BadParams("--op kernel-file needs --kernel".into()))?;
            let text =
                std::fs::read_to_string(path).map_err(|e| Error::BadParams(format!("{}: {e}", path.display())))?;
            let m = CoefficientMatrix::from_csv(&text).map_err(|e| Error::Format(e.to_string()))?;
            let n = m.size();
            if a.size.is_some_and(|s| s != n) {
                return Err(Error::ShapeMismatch(format!("kernel is {n} x {n}, --size says otherwise")));
            }
            (OperatorSpec::Kernel { values: m.values.iter().copied().collect() }, n)
        }
        other => return Err(Error::BadParams(format!("unknown operator {other:?}"))),
    };
    let levels = a.levels.unwrap_or(4);
    let nsf = build_nonstandard_form(&spec, &f, levels, n)?;
    ctx.phase("build");
    let eps = a.threshold.unwrap_or(ctx.config.tolerance("threshold", 1e-8));
    let (thin, stats) = threshold_sparsity(&nsf, eps)?;
    ctx.phase("threshold");
    let blocks: Vec<_> = thin
        .labeled_blocks()
        .into_iter()
        .map(|(level, name, b)| json!({"level": level, "block": name, "nnz": b.nnz(), "bandwidth": b.bandwidth()}))
        .collect();
    ctx.write_json(
        "nsform_stats.json",
        &json!({
            "op": a.op.as_deref().unwrap_or("ddx"),
            "filter": f.name(),
            "levels": levels,
            "size": n,
            "threshold": eps,
            "nonzeros_before": stats.nonzeros_before,
            "nonzeros_after": stats.nonzeros_after,
            "max_apply_error_bound": stats.max_apply_error_bound,
            "blocks": blocks,
        }),
    )?;
    if a.dump {
        ctx.write("nsform_blocks.csv", thin.to_csv().as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerArgs {
    /// Wavefunction samples on the q nodes, one `re,im` (or `re`) per line.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Real oscillator-eigenstate amplitudes `c0,c1,...`, used without --input.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nq: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    /// Momentum box half-width; defaults to the marginal-exact box.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_half: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

fn read_wavefunction(path: &PathBuf) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::BadParams(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split(',').map(|v| v.trim().parse::<f64>());
            let re = it.next().and_then(|r| r.ok());
            let im = it.next().map(|r| r.ok()).unwrap_or(Some(0.0));
            match (re, im) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => Err(Error::Format(format!("bad wavefunction line {l:?}"))),
            }
        })
        .collect()
}

pub(super) fn wigner_transform(a: &WignerArgs, ctx: &mut RunContext) -> Result<()> {
    let hbar = a.hbar.unwrap_or(1.0);
    let mass = a.mass.unwrap_or(1.0);
    let omega = a.omega.unwrap_or(1.0);
    let (q_min, q_max) = (a.q_min.unwrap_or(-8.0), a.q_max.unwrap_or(8.0));
    let mut psi = match &a.input {
        Some(p) => read_wavefunction(p)?,
        None => {
            let coeffs: Vec<Complex64> = a
                .eigen
                .as_deref()
                .unwrap_or("1")
                .split(',')
                .map(|v| v.trim().parse::<f64>().map(|x| Complex64::new(x, 0.0)))
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::BadParams("--eigen expects comma-separated numbers".into()))?;
            let nq = a.nq.unwrap_or(128);
            let spec = GridSpec {
                nq,
                np: nq,
                q_min,
                q_max,
                p_min: -1.0,
                p_max: 1.0,
            };
            spec.validate()?;
            let mut psi = oscillator_superposition(&coeffs, &spec, mass, omega, hbar);
            normalize_wavefunction(&mut psi, spec.dq())?;
            psi
        }
    };
    let nq = psi.len();
    if a.nq.is_some_and(|n| n != nq) {
        return Err(Error::ShapeMismatch(format!("input has {nq} samples, --nq says otherwise")));
    }
    let mut spec = matched_momentum_grid(nq, q_min, q_max, hbar);
    if let Some(h) = a.p_half {
        spec.p_min = -h;
        spec.p_max = h;
    }
    spec.validate()?;
    if a.input.is_some() {
        // files are taken as given, up to rounding in the stored digits
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * spec.dq();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(norm));
        }
        normalize_wavefunction(&mut psi, spec.dq())?;
    }
    let w = wigner_transform_with_mass(&psi, hbar, mass, &spec)?;
    ctx.phase("transform");
    let marginal = w.position_marginal();
    let marginal_error = marginal
        .iter()
        .zip(&psi)
        .map(|(m, c)| (m - c.norm_sqr()).abs())
        .fold(0.0, f64::max);
    ctx.write("wigner.wgrd", &encode_wgrd(&w.grid))?;
    ctx.write("wigner.pgm", &encode_pgm(&w.grid))?;
    ctx.write_json(
        "wigner.json",
        &json!({
            "grid": spec,
            "hbar": hbar,
            "mass": mass,
            "total_mass": w.total_mass(),
            "position_marginal_max_error": marginal_error,
            "quantumness": quantumness_metrics(&w),
        }),
    )?;
    Ok(())
}

/// Starting Wigner function of an `evolve` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Coherent {
        q0: f64,
        p0: f64,
        #[serde(default = "one")]
        omega: f64,
    },
    Gaussian {
        q0: f64,
        p0: f64,
        sigma_q: f64,
        sigma_p: f64,
    },
    /// Superposition of oscillator eigenstates with real amplitudes.
    Eigenstates {
        amplitudes: Vec<f64>,
        #[serde(default = "one")]
        omega: f64,
    },
    Wgrd {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveArgs {
    /// Potential coefficients `u0,u1,...` of `U(q) = sum u_k q^k`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub potential: Vec<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    /// rk4 or crank_nicolson.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<String>,
    /// Time step; defaults to the explicit stability limit.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lindblad: Option<LindbladParams>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixture: Vec<MixtureComponent>,
    /// Write a snapshot every this many steps (0: first and last only).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cadence: Option<usize>,
    /// Derivative backend: a filter name such as db6, or `spectral`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    /// Worker threads for mixture components, capped by WAVELETON_THREADS.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn backend_named(name: Option<&str>) -> Result<DerivativeBackend> {
    match name {
        None => Ok(DerivativeBackend::default()),
        Some("spectral") => Ok(DerivativeBackend::Spectral),
        Some(f) => Ok(DerivativeBackend::Wavelet(WaveletFilter::from_name(f)?)),
    }
}

fn initial_state(init: &InitialState, spec: &GridSpec, hbar: f64, mass: f64) -> Result<WignerState> {
    match init {
        InitialState::Coherent { q0, p0, omega } => coherent_state(spec, *q0, *p0, mass, *omega, hbar),
        InitialState::Gaussian {
            q0,
            p0,
            sigma_q,
            sigma_p,
        } => gaussian_wigner(spec, *q0, *p0, *sigma_q, *sigma_p, hbar, mass),
        InitialState::Eigenstates { amplitudes, omega } => {
            let coeffs: Vec<Complex64> = amplitudes.iter().map(|&c| Complex64::new(c, 0.0)).collect();
            let mut psi = oscillator_superposition(&coeffs, spec, mass, *omega, hbar);
            normalize_wavefunction(&mut psi, spec.dq())?;
            wigner_transform_with_mass(&psi, hbar, mass, spec)
        }
        InitialState::Wgrd { path } => {
            let grid = read_wgrd(path)?;
            if &grid.spec() != spec {
                return Err(Error::ShapeMismatch("initial WGRD grid differs from the configured grid".into()));
            }
            WignerState::new(grid, hbar, mass)
        }
    }
}

pub(super) fn evolve(a: &EvolveArgs, ctx: &mut RunContext) -> Result<()> {
    let hbar = a.hbar.unwrap_or(1.0);
    let mass = a.mass.unwrap_or(1.0);
    let spec = a.grid.clone().unwrap_or_else(|| GridSpec::symmetric(128, 8.0));
    spec.validate()?;
    let potential = if a.potential.is_empty() {
        PolynomialPotential::harmonic(mass, 1.0)
    } else {
        PolynomialPotential::new(a.potential.clone())?
    };
    let init = a.initial.clone().unwrap_or(InitialState::Coherent {
        q0: 2.0,
        p0: 0.0,
        omega: 1.0,
    });
    let state = initial_state(&init, &spec, hbar, mass)?;
    state.check_normalized(ctx.config.tolerance("normalization", 1e-6))?;
    let integrator: Integrator = a.integrator.as_deref().unwrap_or("rk4").parse()?;
    let backend = backend_named(a.backend.as_deref())?;
    if let Some(lp) = &a.lindblad {
        lp.validate()?;
    }
    let mix = if a.mixture.is_empty() {
        None
    } else {
        let m = MixtureSpec {
            components: a.mixture.clone(),
        };
        m.validate()?;
        Some(m)
    };
    let safety = 0.4;
    let dt = match a.dt {
        Some(dt) => dt,
        None => {
            let pots: Vec<&PolynomialPotential> = match &mix {
                Some(m) => m.components.iter().map(|c| &c.potential).collect(),
                None => vec![&potential],
            };
            pots.iter()
                .map(|u| estimate_stable_dt(&spec, u, mass, hbar, a.lindblad.as_ref(), safety))
                .fold(f64::INFINITY, f64::min)
                .min(0.01)
        }
    };
    let mut opts = EvolveOptions::new(dt, a.steps.unwrap_or(100))
        .with_integrator(integrator)
        .with_backend(backend)
        .with_snapshots(a.cadence.unwrap_or(0));
    opts.safety = safety;
    opts.solver_tol = ctx.config.tolerance("solver", 1e-10);
    opts.threads = thread_budget(a.threads.unwrap_or(1));
    ctx.phase("setup");
    let write_snapshots = |ctx: &mut RunContext, prefix: &str, states: &[WignerState], every: usize| -> Result<()> {
        for (k, s) in states.iter().enumerate() {
            let step = if k + 1 == states.len() {
                opts.steps
            } else {
                k * every.max(1) * usize::from(every > 0)
            };
            ctx.write(&format!("{prefix}_{step:06}.wgrd"), &encode_wgrd(&s.grid))?;
        }
        Ok(())
    };
    match mix {
        None => {
            let traj = evolve_grid(&state, &potential, a.lindblad.as_ref(), &opts)?;
            ctx.phase("evolve");
            write_snapshots(ctx, "snapshot", &traj.snapshots, opts.snapshot_every)?;
            ctx.write("diagnostics.csv", traj.diagnostics_csv().as_bytes())?;
            ctx.write("final.pgm", &encode_pgm(&traj.final_state().grid))?;
            ctx.write_json(
                "summary.json",
                &json!({"dt": dt, "steps": opts.steps, "mass_drift": traj.mass_drift(), "final": traj.diagnostics.last()}),
            )?;
        }
        Some(m) => {
            let init: Vec<WignerState> = m.components.iter().map(|_| state.clone()).collect();
            let traj = mixture_evolve(&m, &init, a.lindblad.as_ref(), &opts)?;
            ctx.phase("evolve");
            write_snapshots(ctx, "snapshot", &traj.combined, opts.snapshot_every)?;
            ctx.write("diagnostics.csv", crate::wigner::diagnostics_csv(&traj.diagnostics).as_bytes())?;
            for (k, c) in traj.components.iter().enumerate() {
                ctx.write(&format!("component_{k}_diagnostics.csv"), c.diagnostics_csv().as_bytes())?;
            }
            ctx.write("final.pgm", &encode_pgm(&traj.final_state().grid))?;
            ctx.write_json(
                "summary.json",
                &json!({"dt": dt, "steps": opts.steps, "mass_drift": traj.mass_drift(), "final": traj.diagnostics.last()}),
            )?;
        }
    }
    let _ = StepDiagnostics::CSV_HEADER;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthArgs {
    /// ones, band:w,bv,ov, tri:w,bv,ov, random:seed, or a CSV file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    /// Decomposition depth of the rectangle-lattice basis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    /// Grid size per axis; also the matrix size for generated matrices.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    /// Matrix size when smaller than the grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_size: Option<usize>,
}

fn thresholds(ctx: &RunContext) -> ClassifyThresholds {
    let d = ClassifyThresholds::default();
    ClassifyThresholds {
        c_lo: ctx.config.tolerance("c_lo", d.c_lo),
        e_lo: ctx.config.tolerance("e_lo", d.e_lo),
        e_hi: ctx.config.tolerance("e_hi", d.e_hi),
    }
}

pub(super) fn synth(a: &SynthArgs, ctx: &mut RunContext) -> Result<()> {
    let f = filter_named(a.filter.as_deref(), "sym8")?;
    let size = a.size.unwrap_or(512);
    let levels = a.level.unwrap_or(6);
    let n = a.matrix_size.unwrap_or(size);
    let text = a.matrix.as_deref().unwrap_or("ones");
    let matrix = match text.parse::<MatrixGenerator>() {
        Ok(MatrixGenerator::Random { seed }) if !text.contains(':') => generate_matrix(&MatrixGenerator::Random { seed }, n)?,
        Ok(g) => generate_matrix(&g, n)?,
        Err(_) if text.ends_with(".csv") => {
            let body =
                std::fs::read_to_string(text).map_err(|e| Error::BadParams(format!("{text}: {e}")))?;
            CoefficientMatrix::from_csv(&body)?
        }
        Err(e) => return Err(e),
    };
    let spec = GridSpec::unit(size, size);
    let grid = synthesize(&matrix, &f, levels, &spec)?;
    ctx.phase("synthesize");
    let metrics = compute_metrics_in_basis(&grid, &f, levels)?;
    let class = classify(&metrics, &thresholds(ctx));
    ctx.phase("metrics");
    ctx.write("pattern.wgrd", &encode_wgrd(&grid))?;
    ctx.write("pattern.pgm", &encode_pgm(&grid))?;
    ctx.write_json(
        "metrics.json",
        &json!({
            "matrix": text,
            "matrix_size": matrix.size(),
            "filter": f.name(),
            "levels": levels,
            "metrics": metrics,
            "class": class,
            "thresholds": thresholds(ctx),
        }),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsArgs {
    /// WGRD grid, or CSV with a `.json` sidecar next to it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Measure participation and entropy in this wavelet basis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Also report Wigner quantumness measures with this hbar.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
}

fn load_grid(path: &PathBuf) -> Result<Grid2D> {
    if path.extension().is_some_and(|e| e == "csv") {
        let csv = std::fs::read_to_string(path).map_err(|e| Error::BadParams(format!("{}: {e}", path.display())))?;
        let side_path = path.with_extension("json");
        let side = std::fs::read_to_string(&side_path)
            .map_err(|e| Error::BadParams(format!("{}: {e}", side_path.display())))?;
        decode_csv(&csv, &side)
    } else {
        read_wgrd(path).map_err(|e| match e {
            Error::Io(io) => Error::BadParams(format!("{}: {io}", path.display())),
            other => other,
        })
    }
}

pub(super) fn metrics(a: &MetricsArgs, ctx: &mut RunContext) -> Result<()> {
    let path = a.input.as_ref().ok_or_else(|| Error::BadParams("metrics needs --input".into()))?;
    let grid = load_grid(path)?;
    let m = match &a.filter {
        Some(name) => compute_metrics_in_basis(&grid, &WaveletFilter::from_name(name)?, a.levels.unwrap_or(6))?,
        None => compute_metrics(&grid)?,
    };
    let class = classify(&m, &thresholds(ctx));
    let quantum = match a.hbar {
        Some(h) => Some(quantumness_metrics(&WignerState::new(grid.clone(), h, 1.0)?)),
        None => None,
    };
    ctx.phase("metrics");
    ctx.write_json(
        "metrics.json",
        &json!({"input": path, "metrics": m, "class": class, "quantumness": quantum, "total_mass": grid.integral()}),
    )?;
    if a.input.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "wgrd")) {
        let (csv, side) = encode_csv(&grid);
        ctx.write("grid.csv", csv.as_bytes())?;
        ctx.write("grid.json", side.as_bytes())?;
    }
    Ok(())
}
