use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use bosonic_qsp::gates::{cat_coefficients, cat_phases, compile, rotation_decomposition, Backend, CompiledGate, GateSpec};
use bosonic_qsp::kernels::modk_polynomial;
use bosonic_qsp::multitone::{multitone_at_time, step_limit};
use bosonic_qsp::nonunitary::{apply_and_measure, ideal_nla_output, kraus_compile, nla_amplitudes, nla_success_probability, Selection};
use bosonic_qsp::sim::{coherent_amplitudes, state_fidelity, wigner, HybridState, Qubit, SimConfig, WignerGrid, WignerMap};
use bosonic_qsp::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::{BackendArg, Command, GridArgs, StateArg};

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// A metric breached its threshold.
    Verification(String),
    Input(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::TruncationTooSmall | Error::AmplitudeExceedsUnity { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_wigner(path: &Path, map: &WignerMap) -> CliResult<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    map.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Synth { spec, out } => synth(&spec, &out),
        Command::Verify {
            gate,
            out,
            n_trunc,
            max_infidelity,
            max_leakage,
            max_node_error,
            max_defect,
        } => verify(
            &gate,
            out.as_deref(),
            n_trunc,
            Thresholds {
                infidelity: max_infidelity,
                leakage: max_leakage,
                node_error: max_node_error,
                defect: max_defect,
            },
        ),
        Command::Sweep {
            backend,
            n_max,
            samples,
            seed,
            times,
            t_max,
            dt,
            h,
            s,
            threads,
            out,
        } => sweep(
            &SweepArgs {
                backend: match backend {
                    BackendArg::Dispersive => Backend::Dispersive,
                    BackendArg::Jc => Backend::Jc,
                },
                n_max,
                samples,
                seed,
                times,
                t_max,
                dt,
                hs: h.zip(s),
                threads,
            },
            &out,
        ),
        Command::Cat {
            k,
            alpha,
            n_trunc,
            grid,
            out_dir,
        } => cat(k, alpha, n_trunc, grid, &out_dir),
        Command::Nla {
            gain,
            n_max,
            alpha,
            state,
            seed,
            n_trunc,
            grid,
            out_dir,
        } => nla(gain, n_max, alpha, state, seed, n_trunc, grid, &out_dir),
    }
}

fn synth(spec_path: &Path, out: &Path) -> CliResult<()> {
    let spec: GateSpec = read_json(spec_path)?;
    let gate = compile(&spec)?;
    let report = gate.verify(None)?;
    let text = serde_json::to_string_pretty(&gate).map_err(|e| CliError::Numeric(e.to_string()))?;
    write_text(out, &text)?;
    println!("total_time = {} {}", num(gate.total_time), gate.total_time_units);
    println!("polynomial_degree = {}", gate.polynomial_degree);
    if let Some(k) = gate.k {
        println!("k = {k}");
    }
    println!("normalization_defect = {}", num(gate.normalization_defect));
    println!("infidelity = {}", num(report.infidelity));
    println!("leakage = {}", num(report.leakage));
    Ok(())
}

struct Thresholds {
    infidelity: f64,
    leakage: f64,
    node_error: f64,
    defect: f64,
}

fn verify(path: &Path, out: Option<&Path>, n_trunc: Option<usize>, limits: Thresholds) -> CliResult<()> {
    let gate: CompiledGate = read_json(path)?;
    let report = gate.verify(n_trunc)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
    if let Some(out) = out {
        write_text(out, &text)?;
    }
    println!("{text}");
    let node = report.node_errors.iter().copied().fold(0.0, f64::max);
    let checks = [
        ("infidelity", report.infidelity, limits.infidelity),
        ("leakage", report.leakage, limits.leakage),
        ("node_errors", node, limits.node_error),
        ("normalization_defect", report.normalization_defect, limits.defect),
    ];
    for (name, value, limit) in checks {
        if !(value <= limit) {
            return Err(CliError::Verification(format!("{name} = {} exceeds {}", num(value), num(limit))));
        }
    }
    Ok(())
}

/// Maps `f` over `items` on `threads` workers, keeping the input order.
fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync,
{
    let workers = if threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        threads
    }
    .min(items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CliResult<R>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

struct SweepArgs {
    backend: Backend,
    n_max: usize,
    samples: usize,
    seed: u64,
    times: usize,
    t_max: Option<f64>,
    dt: f64,
    hs: Option<(usize, usize)>,
    threads: usize,
}

struct Row {
    sample: usize,
    method: &'static str,
    gate_time: f64,
    infidelity: f64,
    leakage: f64,
}

fn qsp_row(args: &SweepArgs, sample: usize, phases: &[f64]) -> CliResult<Row> {
    let mut spec = match args.backend {
        Backend::Dispersive => GateSpec::snap(phases),
        Backend::Jc => GateSpec::jc_snap(phases),
    };
    if let (Backend::Jc, Some((h, s))) = (args.backend, args.hs) {
        spec = spec.with_hs(h, s);
    }
    let gate = compile(&spec)?;
    let r = gate.verify(None)?;
    Ok(Row {
        sample,
        method: "qsp",
        gate_time: gate.total_time,
        infidelity: r.infidelity,
        leakage: r.leakage,
    })
}

fn sweep(args: &SweepArgs, out: &Path) -> CliResult<()> {
    if !(args.dt > 0.0) {
        return Err(CliError::Input("dt must be positive".into()));
    }
    if args.t_max.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(CliError::Input("t_max must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let phases: Vec<Vec<f64>> = (0..args.samples)
        .map(|_| (0..=args.n_max).map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI)).collect())
        .collect();
    let indexed: Vec<(usize, &Vec<f64>)> = phases.iter().enumerate().collect();
    let mut rows = par_map(&indexed, args.threads, |(i, p)| qsp_row(args, *i, p))?;
    let t_max = args.t_max.unwrap_or_else(|| match args.backend {
        Backend::Dispersive => 8.0 * std::f64::consts::PI,
        Backend::Jc => rows.first().map_or(1.0, |r| r.gate_time),
    });
    let jobs: Vec<(usize, f64)> = (0..args.samples)
        .flat_map(|i| (1..=args.times).map(move |j| (i, t_max * j as f64 / args.times as f64)))
        .collect();
    let base = par_map(&jobs, args.threads, |&(i, t)| {
        let mut cfg = SimConfig::new(args.n_max + 2);
        let rabi = 2.0 * std::f64::consts::PI / t;
        cfg.dt = args.dt.min(step_limit(args.backend, args.n_max, rabi, &cfg));
        let run = multitone_at_time(args.backend, &phases[i], t, &cfg)?;
        Ok(Row {
            sample: i,
            method: "multitone",
            gate_time: t,
            infidelity: run.infidelity,
            leakage: run.leakage,
        })
    })?;
    rows.extend(base);
    rows.sort_by(|a, b| {
        a.sample
            .cmp(&b.sample)
            .then(a.gate_time.total_cmp(&b.gate_time))
            .then(a.method.cmp(b.method))
    });
    let mut text = format!("#units={}\nsample_id,method,gate_time,infidelity,leakage\n", args.backend.time_units());
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.sample,
            r.method,
            num(r.gate_time),
            num(r.infidelity),
            num(r.leakage)
        ));
    }
    write_text(out, &text)?;
    println!("rows = {}", rows.len());
    Ok(())
}

fn grid_of(args: GridArgs) -> CliResult<WignerGrid> {
    if !(args.grid_half_width > 0.0) || args.grid_points == 0 {
        return Err(CliError::Input("grid needs a positive width and at least one point".into()));
    }
    Ok(WignerGrid::symmetric(args.grid_half_width, args.grid_points))
}

fn cat(k: usize, alpha: f64, n_trunc: usize, grid: GridArgs, out_dir: &Path) -> CliResult<()> {
    let grid = grid_of(grid)?;
    let gate = compile(&GateSpec::cat(k))?;
    let n_trunc = n_trunc.max(gate.default_n_trunc());
    let (input, _) = coherent_amplitudes(C64::new(alpha, 0.0), n_trunc)?;
    let op = gate.simulate(n_trunc)?;
    let full = op.apply(&HybridState::product(&input, Qubit::G, n_trunc)?);
    let output = full.branch(Qubit::G);
    let p_g: f64 = output.iter().map(|c| c.norm_sqr()).sum();
    let mut target = vec![C64::new(0.0, 0.0); n_trunc];
    for (l, c) in cat_coefficients(k).iter().enumerate() {
        let lobe = C64::from_polar(alpha, 2.0 * std::f64::consts::PI * l as f64 / k as f64);
        let (amps, _) = coherent_amplitudes(lobe, n_trunc)?;
        for (t, a) in target.iter_mut().zip(amps) {
            *t += c * a;
        }
    }
    let fidelity = state_fidelity(&output, &target);
    let xi = rotation_decomposition(&modk_polynomial(&cat_phases(k)?)?, k)?;
    let w_in = wigner(&input, &grid)?;
    let w_out = wigner(&output, &grid)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    write_wigner(&out_dir.join("wigner_input.csv"), &w_in)?;
    write_wigner(&out_dir.join("wigner_output.csv"), &w_out)?;
    let report = json!({
        "k": k,
        "alpha": alpha,
        "n_trunc": n_trunc,
        "fidelity": fidelity,
        "infidelity": (1.0 - fidelity).max(0.0),
        "probability_g": p_g,
        "total_time": gate.total_time,
        "total_time_units": gate.total_time_units,
        "xi_moduli": xi.xi.iter().map(|x| x.norm()).collect::<Vec<_>>(),
        "wigner_min_input": w_in.min_value(),
        "wigner_min_output": w_out.min_value(),
    });
    println!("{}", pretty(&report));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn nla(
    gain: f64,
    n_max: usize,
    alpha: f64,
    state: StateArg,
    seed: u64,
    n_trunc: Option<usize>,
    grid: GridArgs,
    out_dir: &Path,
) -> CliResult<()> {
    let grid = grid_of(grid)?;
    let a = alpha.abs();
    let margin = (a * a + 6.0 * a + 10.0).ceil() as usize;
    let n_trunc = n_trunc.unwrap_or(margin.max(n_max + 2));
    let (plus, _) = coherent_amplitudes(C64::new(alpha, 0.0), n_trunc)?;
    let input: Vec<C64> = match state {
        StateArg::Coherent => plus,
        StateArg::Cat => {
            let (minus, _) = coherent_amplitudes(C64::new(-alpha, 0.0), n_trunc)?;
            let sum: Vec<C64> = plus.iter().zip(&minus).map(|(x, y)| x + y).collect();
            let norm = sum.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            sum.iter().map(|c| c / norm).collect()
        }
    };
    let gate = kraus_compile(&nla_amplitudes(gain, n_max)?)?;
    let outcome = apply_and_measure(&input, &gate, Selection::Branch(Qubit::G), seed)?;
    let ideal = ideal_nla_output(&input, gain, n_max);
    let fidelity = state_fidelity(&outcome.post_state, &ideal);
    let closed = nla_success_probability(&input, gain, n_max);
    let before = wigner(&input, &grid)?;
    let after = wigner(&outcome.post_state, &grid)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    write_wigner(&out_dir.join("wigner_before.csv"), &before)?;
    write_wigner(&out_dir.join("wigner_after.csv"), &after)?;
    let report = json!({
        "gain": gain,
        "n_max": n_max,
        "alpha": alpha,
        "n_trunc": n_trunc,
        "seed": seed,
        "probability_g": outcome.probability,
        "probability_g_closed_form": closed,
        "probability_g_error": (outcome.probability - closed).abs(),
        "fidelity": fidelity,
        "infidelity": (1.0 - fidelity).max(0.0),
        "total_time": gate.total_time,
        "total_time_units": gate.total_time_units,
        "wigner_min_before": before.min_value(),
        "wigner_min_after": after.min_value(),
    });
    println!("{}", pretty(&report));
    if state == StateArg::Cat && !(after.min_value() < before.min_value()) {
        return Err(CliError::Verification(format!(
            "wigner_min_after = {} is not below wigner_min_before = {}",
            num(after.min_value()),
            num(before.min_value())
        )));
    }
    Ok(())
}
