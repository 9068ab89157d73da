use std::path::Path;

use recurlab::amplify::{amplified_recurrence, run_schedule, AmplifierSetup, DetectionEvent};
use recurlab::linalg::{eigendecompose_unitary, svd, ComplexMatrix, UnitaryMatrix};
use recurlab::nusg::{
    build_z, check_case2, embed_witness, nusg_decide, residual_case1, swap_test_estimate,
    NusgParams, VerifierInstance,
};
use recurlab::recurrence::{
    bias_to_born, build_ccphase_tensor, ccphase, default_thetas, detection_probability,
    estimate_recurrence, frac_period, haar_baseline, mixture_probability, runs_for_confidence,
    sample_recurrence, Conjugator, NoiseModel, RecurrenceInstance, SpectrumSource,
    DEFAULT_PHASE_TOL,
};
use recurlab::rng::derive_seed;
use recurlab::statevector::{QubitState, RegisterLayout};
use recurlab::sternfeld::{
    check_wrc_bound, dsa_witness, find_rook_circuit, is_wdsa, partial_tensor_embed,
    solve_labels_on_subset, Grid, GridSubset, Site,
};
use recurlab::tensorfactor::{
    solve_approx, solve_exact, solve_greedy, solve_phase, Budget, PhaseSetSumInstance,
    SetSumInstance, TensorFormat,
};
use recurlab::Error;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{
    AmplifyArgs, EventArg, Format, HaarArgs, NusgArgs, NusgMode, PaperArgs, RecurArgs,
    SternfeldArgs, SternfeldMode, TensorArgs, VerifierFamily,
};
use crate::output::{Cell, Output, ResultTable};
use crate::CliError;

pub const RECUR_COLUMNS: [&str; 7] = [
    "instance_id",
    "shots",
    "p_hat",
    "stderr",
    "p_exact",
    "frac1",
    "bias_born_prediction",
];

/// Angles, conjugator and noise of one `recur` instance.
pub struct RecurSetup {
    pub thetas: Vec<f64>,
    pub conjugator: Conjugator,
    pub noise: Option<NoiseModel>,
    pub shot_seed: u64,
}

/// Seeds for instance `i`: every random choice has its own named stream.
pub fn recur_setup(args: &RecurArgs, i: usize) -> Result<RecurSetup, CliError> {
    let base = derive_seed(args.common.seed, &format!("recur-{i}"));
    let thetas = if args.thetas.is_empty() {
        default_thetas(
            args.factors,
            args.theta_seed
                .unwrap_or_else(|| derive_seed(base, "thetas")),
        )
    } else if args.thetas.len() == args.factors {
        args.thetas.clone()
    } else {
        return Err(CliError::Usage(format!(
            "--thetas has {} angles for {} factors",
            args.thetas.len(),
            args.factors
        )));
    };
    let conjugator = match args.conjugator.as_str() {
        "identity" => Conjugator::Identity,
        "haar" => Conjugator::Haar(derive_seed(base, "conjugator")),
        s => {
            let seed: u64 = s["haar:".len()..].parse().expect("validated by the parser");
            Conjugator::Haar(seed.wrapping_add(i as u64))
        }
    };
    let noise = if args.noise_eps > 0.0 {
        Some(NoiseModel::new(args.noise_eps, derive_seed(base, "noise"))?)
    } else {
        None
    };
    Ok(RecurSetup {
        thetas,
        conjugator,
        noise,
        shot_seed: derive_seed(base, "shots"),
    })
}

pub fn recur(args: &RecurArgs, format: Option<Format>) -> Result<Output, CliError> {
    if args.instances == 0 {
        return Err(CliError::Usage("--instances must be at least 1".into()));
    }
    if format == Some(Format::SvgHistogram) {
        let s = recur_setup(args, 0)?;
        let h = build_ccphase_tensor(&s.thetas, s.conjugator)?;
        let inst = RecurrenceInstance::from_hidden(&h, args.number_qubits, s.noise)?;
        let hist = sample_recurrence(&inst, args.shots, s.shot_seed)?;
        return Ok(Output::Histogram(hist.leading(args.number_qubits)?));
    }
    let mut table = ResultTable::new(&RECUR_COLUMNS);
    for i in 0..args.instances {
        let s = recur_setup(args, i)?;
        let h = build_ccphase_tensor(&s.thetas, s.conjugator)?;
        let inst = RecurrenceInstance::from_hidden(&h, args.number_qubits, s.noise)?;
        let pair = estimate_recurrence(&inst, args.shots, s.shot_seed)?;
        let mix = mixture_probability(&h.overlap_profile(0)?, args.number_qubits);
        let frac1 = frac_period(SpectrumSource::Factors(h.factors()), 1, DEFAULT_PHASE_TOL)?;
        let born = bias_to_born(frac1, h.num_qubits())?.probability;
        let exact_k = mix
            .without_k_zero
            .map(Cell::num)
            .unwrap_or_else(|| Cell::text("undefined:j=0"));
        for (id, est, exact) in [
            (i.to_string(), pair.with_k_zero, Cell::num(mix.with_k_zero)),
            (format!("{i}:k>0"), pair.without_k_zero, exact_k),
        ] {
            table.push(vec![
                Cell::text(id),
                Cell::int(est.shots),
                Cell::num(est.probability),
                Cell::num(est.stderr),
                exact,
                Cell::num(frac1),
                Cell::num(born),
            ]);
        }
    }
    Ok(Output::Table(table))
}

pub fn haar(args: &HaarArgs) -> Result<(Output, String), CliError> {
    let b = haar_baseline(
        args.qubits,
        args.draws,
        args.ks_per_draw,
        args.k_max,
        derive_seed(args.common.seed, "haar-baseline"),
    )?;
    let mut table = ResultTable::new(&["draw", "k", "overlap_sq"]);
    for &(d, k, o) in &b.samples {
        table.push(vec![Cell::int(d as u64), Cell::int(k as u64), Cell::num(o)]);
    }
    let summary = format!("rms {} (predicted {})", b.rms(), b.predicted_rms());
    Ok((Output::Table(table), summary))
}

pub fn amplify(args: &AmplifyArgs) -> Result<Output, CliError> {
    let layout = RegisterLayout::new(args.number_qubits, args.state_qubits)?;
    let seed = args.common.seed;
    let setup =
        AmplifierSetup::synthetic(layout, args.sin_theta, derive_seed(seed, "amplify-setup"))?;
    let event = match args.event {
        EventArg::StateZero => DetectionEvent::StateRegisterZero,
        EventArg::Target => DetectionEvent::TargetProjection,
    };
    let mut table = ResultTable::new(&["iterations", "shots", "p_hat", "stderr", "p_exact"]);
    let mut push = |m: u64, est: recurlab::recurrence::RecurrenceEstimate, exact: f64| {
        table.push(vec![
            Cell::int(m),
            Cell::int(est.shots),
            Cell::num(est.probability),
            Cell::num(est.stderr),
            Cell::num(exact),
        ])
    };
    match args.auto_schedule {
        Some(eps) => {
            for r in run_schedule(
                &setup,
                eps,
                args.shots,
                derive_seed(seed, "schedule"),
                event,
            )? {
                push(r.iterations, r.estimate, r.exact);
            }
        }
        None => {
            for &m in &args.iterations {
                let est = amplified_recurrence(
                    &setup,
                    m,
                    args.shots,
                    derive_seed(seed, &format!("amplify-{m}")),
                    event,
                )?;
                push(m, est, setup.exact_detection(m, event)?);
            }
        }
    }
    Ok(Output::Table(table))
}

fn read_reals(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| CliError::Runtime(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn budget_from(kind: &str, eps: f64) -> Budget {
    match kind {
        "per-equation" => Budget::PerEquation(eps),
        "rms" => Budget::Rms(eps),
        s => Budget::Fraction {
            tol: eps,
            fraction: s["fraction:".len()..]
                .parse()
                .expect("validated by the parser"),
        },
    }
}

pub fn tensor_factor(args: &TensorArgs) -> Result<Output, CliError> {
    let format = TensorFormat::new(args.format.clone())?;
    if args.mode == "phase" {
        let phases = match (&args.values, &args.matrix) {
            (Some(p), _) => read_reals(p)?,
            (None, Some(p)) => eigendecompose_unitary(&read_json::<UnitaryMatrix>(p)?)?.eigenphases,
            _ => unreachable!("clap requires one input"),
        };
        let inst = PhaseSetSumInstance::new(phases, format, args.phase_tol)?;
        return Ok(Output::Document(match solve_phase(&inst)? {
            Some(s) => json!({
                "solvable": true,
                "axes": s.axis_phases,
                "bijection": s.bijection,
                "residuals": s.residuals,
            }),
            None => json!({ "solvable": false }),
        }));
    }
    let inst = match (&args.values, &args.matrix) {
        (Some(p), _) => SetSumInstance::new(read_reals(p)?, format, Budget::Exact)?,
        (None, Some(p)) => SetSumInstance::from_singular_values(
            &svd(&read_json::<ComplexMatrix>(p)?)?.singulars,
            format,
            Budget::Exact,
        )?,
        _ => unreachable!("clap requires one input"),
    };
    let mut heuristic = false;
    let found = match args.mode.as_str() {
        "exact" => match solve_exact(&inst) {
            Err(Error::CapExceeded(_)) if args.heuristic => {
                heuristic = true;
                solve_greedy(&inst)
            }
            r => r?,
        },
        "greedy" => solve_greedy(&inst),
        m => {
            let eps: f64 = m["approx:".len()..]
                .parse()
                .expect("validated by the parser");
            solve_approx(&inst.with_budget(budget_from(&args.budget, eps))?)?
        }
    };
    Ok(Output::Document(match found {
        Some(s) => json!({
            "solvable": true,
            "heuristic": heuristic,
            "axes": s.axis_values,
            "bijection": s.bijection,
            "residuals": s.residuals,
        }),
        // exact mode certifies; the other solvers only fail
        None => json!({ "solvable": false, "certified": args.mode == "exact" && !heuristic }),
    }))
}

fn read_sites(path: &Path) -> Result<Vec<Site>, CliError> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>())
                .collect::<Result<Site, _>>()
                .map_err(|e| CliError::Runtime(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn sternfeld(args: &SternfeldArgs) -> Result<Output, CliError> {
    let mode = args.mode.or(args.config_mode).ok_or_else(|| {
        CliError::Usage("sternfeld needs a mode: rc, wdsa, labels, embed or bound-scan".into())
    })?;
    let grid = Grid::new(args.grid.clone())?;
    if mode == SternfeldMode::BoundScan {
        let [p, q] = args.grid[..] else {
            return Err(CliError::Usage("bound-scan needs a two-axis grid".into()));
        };
        let r = check_wrc_bound(p, q)?;
        return Ok(Output::Document(
            json!({ "mode": "bound-scan", "result": r }),
        ));
    }
    let sites_path = args
        .sites
        .as_deref()
        .ok_or_else(|| CliError::Usage("this mode needs --sites".into()))?;
    let s = GridSubset::new(grid.clone(), read_sites(sites_path)?)?;
    let normalized = s.normalized(args.toroidal);
    let result = match mode {
        SternfeldMode::Rc => {
            let c = find_rook_circuit(&s)?;
            json!({ "wrc": c.is_none(), "circuit": c, "normalized_sites": normalized.sites() })
        }
        SternfeldMode::Wdsa => json!({
            "wdsa": is_wdsa(&s)?,
            "witness": dsa_witness(&s)?,
            "support_possibly_non_minimal": grid.rank() >= 3,
            "normalized_sites": normalized.sites(),
        }),
        SternfeldMode::Labels => {
            let p = args
                .values
                .as_deref()
                .ok_or_else(|| CliError::Usage("labels needs --values".into()))?;
            json!({ "labels": solve_labels_on_subset(&s, &read_reals(p)?)? })
        }
        SternfeldMode::Embed => {
            let p = args
                .matrix
                .as_deref()
                .ok_or_else(|| CliError::Usage("embed needs --matrix".into()))?;
            json!({ "embedding": partial_tensor_embed(&read_json::<ComplexMatrix>(p)?, &s)? })
        }
        SternfeldMode::BoundScan => unreachable!("handled above"),
    };
    let mode_name = serde_json::to_value(mode).expect("mode serializes");
    Ok(Output::Document(
        json!({ "mode": mode_name, "result": result }),
    ))
}

#[derive(Deserialize)]
struct VerifierFile {
    input_qubits: usize,
    ancilla_qubits: usize,
    unitary: UnitaryMatrix,
}

pub fn verifier_from(args: &NusgArgs) -> Result<VerifierInstance, CliError> {
    let (ni, na) = (args.input_qubits, args.ancilla_qubits);
    let seed = derive_seed(args.common.seed, "verifier");
    Ok(match (&args.verifier, args.family) {
        (Some(p), _) => {
            let f: VerifierFile = read_json(p)?;
            VerifierInstance::new(f.unitary, f.input_qubits, f.ancilla_qubits)?
        }
        (None, Some(VerifierFamily::AcceptAll)) => VerifierInstance::accept_all(ni, na)?,
        (None, Some(VerifierFamily::RejectAll)) => VerifierInstance::reject_all(ni, na)?,
        (None, Some(VerifierFamily::Random)) => {
            VerifierInstance::random_family(ni, na, args.beta, false, seed)?
        }
        (None, Some(VerifierFamily::RandomAccepting)) => {
            VerifierInstance::random_family(ni, na, args.beta, true, seed)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "nusg needs --verifier FILE or --family".into(),
            ))
        }
    })
}

pub fn nusg(args: &NusgArgs) -> Result<Output, CliError> {
    let mode = args
        .mode
        .or(args.config_mode)
        .ok_or_else(|| CliError::Usage("nusg needs a mode: gap, case1, case2 or swap".into()))?;
    let inst = verifier_from(args)?;
    let witness = inst.best_witness()?;
    let epsilon = match (args.epsilon, mode) {
        (Some(e), _) => e,
        (None, NusgMode::Case1 | NusgMode::Swap) => {
            (1.0 - inst.acceptance_probability(&witness)?).max(0.0)
        }
        (None, _) => 0.0,
    };
    let params = NusgParams::new(args.phi, epsilon, args.delta0)?;
    let result: Value = match mode {
        NusgMode::Gap => {
            let z = build_z(&inst, &params)?;
            let (gap, verdict) = nusg_decide(&z.z, params.delta0())?;
            json!({ "gap": gap, "bound": params.delta0(), "verdict": verdict, "satisfied": verdict != recurlab::nusg::NusgVerdict::Undetermined })
        }
        NusgMode::Case1 => {
            serde_json::to_value(residual_case1(&inst, &witness, &params)?).expect("serializes")
        }
        NusgMode::Case2 => serde_json::to_value(check_case2(&inst, &params)?).expect("serializes"),
        NusgMode::Swap => {
            let z = build_z(&inst, &params)?;
            let psi = embed_witness(inst.layout(), &witness)?;
            let zpsi = QubitState::normalized(z.z.apply(psi.amplitudes())?)?;
            let est = swap_test_estimate(
                &psi,
                &zpsi,
                args.shots,
                derive_seed(args.common.seed, "swap"),
            )?;
            json!({
                "estimate": est.estimate,
                "stderr": est.stderr,
                "exact": est.overlap_exact,
                "bound": 3.0 * est.stderr,
                "satisfied": est.consistent(3.0),
            })
        }
    };
    let mode_name = serde_json::to_value(mode).expect("mode serializes");
    Ok(Output::Document(
        json!({ "mode": mode_name, "epsilon": epsilon, "phi": params.phi(), "result": result }),
    ))
}

/// Number of CCθ factors in the 72-qubit experiment.
pub const PAPER_FACTORS: usize = 24;
pub const PAPER_RUNS: [u64; 2] = [600, 6000];
pub const PAPER_CONFIDENCE: f64 = 0.999;

pub fn paper_numbers(args: &PaperArgs) -> Result<Output, CliError> {
    let thetas = default_thetas(PAPER_FACTORS, derive_seed(args.common.seed, "paper-thetas"));
    let factors: Vec<UnitaryMatrix> = thetas.iter().map(|&t| ccphase(t)).collect();
    let frac1 = frac_period(SpectrumSource::Factors(&factors), 1, DEFAULT_PHASE_TOL)?;
    let born = bias_to_born(frac1, 3 * PAPER_FACTORS)?;
    let mut table = ResultTable::new(&["quantity", "value"]);
    table.push(vec![Cell::text("frac1"), Cell::num(frac1)]);
    table.push(vec![
        Cell::text("born_probability"),
        Cell::num(born.probability),
    ]);
    for runs in PAPER_RUNS {
        table.push(vec![
            Cell::text(format!("detection@{runs}")),
            Cell::num(detection_probability(born.probability, runs)?),
        ]);
    }
    table.push(vec![
        Cell::text(format!("runs_for_{PAPER_CONFIDENCE}")),
        Cell::int(runs_for_confidence(born.probability, PAPER_CONFIDENCE)?),
    ]);
    Ok(Output::Table(table))
}
