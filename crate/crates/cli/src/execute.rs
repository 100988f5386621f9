use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use adaptive_cp::diagnostics::{divergence, AcceptanceStats, MoveCounts, PosteriorSummary};
use adaptive_cp::recursions::{compute_recursions, exact_count_distribution, simulate_posterior};
use adaptive_cp::sampler::{run, AdaptationStats};
use adaptive_cp::{ChangepointState, CollapsedPosterior, Error as CoreError};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde_json::{json, Value};

use crate::config::{Engine, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::ingest;

/// What one engine produced.
#[derive(Debug, Clone)]
pub struct EngineOutput {
    pub engine: Engine,
    pub summary: PosteriorSummary,
    /// Exact count law, recursions engine only.
    pub exact_counts: Option<Vec<f64>>,
    /// Per-chain or per-table details for the manifest.
    pub details: Value,
    pub seconds: f64,
}

/// Outcome of [`execute`].
#[derive(Debug, Clone)]
pub struct Report {
    pub n: usize,
    pub main: EngineOutput,
    pub compare: Option<EngineOutput>,
    /// `D(main | compare)` and `D(compare | main)`.
    pub divergence: Option<(f64, f64)>,
    pub output_dir: PathBuf,
}

fn core_to_cli(e: CoreError) -> CliError {
    match e {
        CoreError::ModelMismatch { .. } => {
            CliError::Config(format!("model does not fit the data: {e}"))
        }
        CoreError::NonFinite { .. } | CoreError::TooShort { .. } => CliError::Data(e.to_string()),
        CoreError::Hyperparameter { .. } | CoreError::Config(_) | CoreError::State(_) => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Runtime(e.to_string()),
    }
}

/// Loads the data, runs the configured engines and writes every artifact.
pub fn execute(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let y = ingest(&cfg.input, &cfg.column, cfg.header, cfg.delimiter)?;
    cfg.validate_for_length(y.len())?;
    let target = CollapsedPosterior::from_data(&y, cfg.model.build()?, cfg.prior.build()?)
        .map_err(core_to_cli)?;
    let init = ChangepointState::new(&target, &cfg.sampler.init).map_err(core_to_cli)?;

    let main = run_engine(cfg, cfg.engine, &target, &init)?;
    let compare = match cfg.compare {
        Some(engine) => Some(run_engine(cfg, engine, &target, &init)?),
        None => None,
    };
    let divergence = match &compare {
        Some(other) => {
            let p = main.summary.count_hist();
            let q = other.summary.count_hist();
            let d_pq = divergence(&p, &q, cfg.delta).map_err(core_to_cli)?;
            let d_qp = divergence(&q, &p, cfg.delta).map_err(core_to_cli)?;
            Some((d_pq, d_qp))
        }
        None => None,
    };

    let report = Report {
        n: y.len(),
        main,
        compare,
        divergence,
        output_dir: cfg.output_dir.clone(),
    };
    write_report(cfg, &report)?;
    Ok(report)
}

fn run_engine(
    cfg: &RunConfig,
    engine: Engine,
    target: &CollapsedPosterior,
    init: &ChangepointState,
) -> Result<EngineOutput> {
    let start = Instant::now();
    let (summary, exact_counts, details) = match engine {
        Engine::Recursions => run_recursions(cfg, target)?,
        Engine::Adaptive | Engine::NonAdaptive => {
            let (s, d) = run_chains(cfg, engine, target, init)?;
            (s, None, d)
        }
    };
    Ok(EngineOutput {
        engine,
        summary,
        exact_counts,
        details,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_chains(
    cfg: &RunConfig,
    engine: Engine,
    target: &CollapsedPosterior,
    init: &ChangepointState,
) -> Result<(PosteriorSummary, Value)> {
    let configs = (0..cfg.chains as u64)
        .map(|i| cfg.sampler.to_config(engine, cfg.seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    let outputs = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run(target, c, init.clone())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect::<Vec<_>>()
    });
    let mut summary = PosteriorSummary::new(target.n());
    let mut chains = Vec::new();
    for (c, out) in configs.iter().zip(outputs) {
        let out = out.map_err(core_to_cli)?;
        summary.merge(&out.summary).map_err(core_to_cli)?;
        chains.push(json!({
            "seed": c.seed,
            "iterations": out.iterations,
            "seconds": out.seconds,
            "timed_out": out.timed_out,
            "burn_in": c.burn_in,
            "thin": c.thin,
            "retained": out.summary.n_samples(),
            "final_k": out.final_state.k(),
            "map_log_posterior": out.summary.map_log_post(),
            "acceptance": acceptance_json(&out.summary.acceptance),
            "adaptation": adaptation_json(&out.adaptation),
        }));
    }
    let details = json!({
        "chains": chains,
        "acceptance": acceptance_json(&summary.acceptance),
    });
    Ok((summary, details))
}

fn run_recursions(
    cfg: &RunConfig,
    target: &CollapsedPosterior,
) -> Result<(PosteriorSummary, Option<Vec<f64>>, Value)> {
    let start = Instant::now();
    let table = compute_recursions(target, cfg.truncation).map_err(core_to_cli)?;
    let precompute = start.elapsed().as_secs_f64();
    let exact = exact_count_distribution(&table, target).map_err(core_to_cli)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let draws =
        simulate_posterior(&table, target, cfg.recursion_draws, &mut rng).map_err(core_to_cli)?;
    let mut summary = PosteriorSummary::new(target.n());
    for (i, z) in draws.iter().enumerate() {
        summary.push(z);
        let lp = target.log_posterior(z).map_err(core_to_cli)?;
        if lp > summary.map_log_post() {
            summary.offer_map(z, lp, i as u64 + 1, start.elapsed().as_secs_f64());
        }
    }
    let details = json!({
        "seed": cfg.seed,
        "draws": cfg.recursion_draws,
        "log_evidence": table.log_evidence(),
        "truncation": table.truncation_threshold(),
        "truncated_terms": table.total_truncated(),
        "precompute_seconds": precompute,
    });
    Ok((summary, Some(exact), details))
}

fn rate_json(m: &MoveCounts) -> Value {
    json!({ "proposed": m.proposed, "accepted": m.accepted, "rate": m.rate() })
}

fn acceptance_json(a: &AcceptanceStats) -> Value {
    json!({ "add": rate_json(&a.add), "delete": rate_json(&a.delete), "adjust": rate_json(&a.adjust) })
}

fn adaptation_json(a: &AdaptationStats) -> Value {
    let finite = |v: f64| if v.is_finite() { Some(v) } else { None };
    json!({
        "steps": a.steps,
        "max_step_ratio": a.max_step_ratio,
        "min_log_weight": finite(a.min_log_weight),
        "max_log_weight": finite(a.max_log_weight),
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_vector(
    path: &Path,
    index_name: &str,
    values: impl Iterator<Item = (usize, f64)>,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{index_name},probability")?;
    for (i, v) in values {
        writeln!(w, "{i},{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_engine(dir: &Path, out: &EngineOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let s = &out.summary;
    write_vector(
        &dir.join("count_hist.csv"),
        "k",
        s.count_hist().into_iter().enumerate(),
    )?;
    write_vector(
        &dir.join("inclusion.csv"),
        "position",
        s.inclusion_prob().into_iter().enumerate().skip(1),
    )?;
    if let Some(exact) = &out.exact_counts {
        write_vector(
            &dir.join("exact_count.csv"),
            "k",
            exact.iter().copied().enumerate(),
        )?;
    }
    let map = json!({
        "engine": out.engine.name(),
        "log_posterior": s.map_log_post(),
        "k": s.map_positions().len(),
        "positions": s.map_positions(),
    });
    fs::write(
        dir.join("map.json"),
        serde_json::to_string_pretty(&map)? + "\n",
    )?;
    let mut w = create(&dir.join("map_trace.csv"))?;
    writeln!(w, "iteration,seconds,log_posterior")?;
    for p in s.map_trace() {
        writeln!(w, "{},{},{}", p.iteration, p.seconds, p.log_post)?;
    }
    w.flush()?;
    Ok(())
}

fn engine_json(out: &EngineOutput) -> Value {
    json!({
        "engine": out.engine.name(),
        "seconds": out.seconds,
        "samples": out.summary.n_samples(),
        "modal_count": out.summary.modal_count(),
        "map_log_posterior": out.summary.map_log_post(),
        "details": out.details,
    })
}

fn write_report(cfg: &RunConfig, report: &Report) -> Result<()> {
    let dir = &cfg.output_dir;
    write_engine(dir, &report.main)?;
    if let Some(other) = &report.compare {
        write_engine(&dir.join("compare"), other)?;
    }
    if let (Some(other), Some((d_pq, d_qp))) = (&report.compare, report.divergence) {
        let d = json!({
            "delta": cfg.delta,
            "p": report.main.engine.name(),
            "q": other.engine.name(),
            "d_p_q": d_pq,
            "d_q_p": d_qp,
        });
        fs::write(
            dir.join("divergence.json"),
            serde_json::to_string_pretty(&d)? + "\n",
        )?;
    }
    let manifest = json!({
        "config": cfg,
        "n": report.n,
        "versions": {
            "adaptive-cp": adaptive_cp::VERSION,
            "adaptive-cp-cli": env!("CARGO_PKG_VERSION"),
        },
        "main": engine_json(&report.main),
        "compare": report.compare.as_ref().map(engine_json),
    });
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}
