use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use purejump_core::{
    aj_test, analyze_day, delta_grid, histogram_export, load_ticks, mc_rejection_rate, plan_from_toml,
    preaverage_blocks, regularize, run_test, simulate, sweep, table1_demo, v_bar_test, write_count_table,
    write_day_csv, write_summaries, AjSpec, Calibration, DaySummary, DeltaGrid, ExperimentPlan, HistogramSelector,
    ModelSpec, PreAvgSpec, SamplePath, Seed, Session, SweepParam, ThresholdSpec, TruncationScale,
};

use crate::args::*;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Test(a) => test_cmd(a),
        Command::Mc(a) => mc_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Preavg(a) => preavg_cmd(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Table1(a) => table1_cmd(a),
        Command::Hist(a) => hist_cmd(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn read_path(path: &Path, horizon: Option<f64>) -> Result<SamplePath> {
    SamplePath::read_csv(open(path)?, horizon).with_context(|| format!("reading {}", path.display()))
}

pub fn model_spec(a: &ModelArgs) -> Result<ModelSpec> {
    let m = match a.model {
        ModelKind::H0 => ModelSpec::null_ou(a.beta, a.theta_prime),
        ModelKind::H1 => ModelSpec::alt_pure_jump(a.beta, a.gamma),
        ModelKind::Heston => ModelSpec::heston_sv(a.beta, a.theta_prime),
        ModelKind::Mixture => ModelSpec::mixture(a.sigma, a.beta, a.scale),
        ModelKind::Brownian => ModelSpec::brownian(a.sigma),
        ModelKind::Stable => ModelSpec::pure_stable(a.beta, a.scale),
    }
    .with_noise(a.noise_sd);
    m.validate()?;
    Ok(m)
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let model = model_spec(&a.model)?;
    let path = simulate(&model, a.n, a.horizon, Seed(a.seed))?;
    let mut out = create(&a.out)?;
    path.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn threshold_spec(t: &ThresholdArgs, k: usize) -> Result<ThresholdSpec> {
    let spec = match t.alpha {
        Some(alpha) => ThresholdSpec::direct(alpha, t.varpi),
        None => ThresholdSpec::scaled(t.delta.unwrap_or(2.0), t.kappa.unwrap_or(2.0), t.varpi),
    }
    .with_k(k);
    spec.validate()?;
    Ok(spec)
}

fn test_cmd(a: TestArgs) -> Result<()> {
    let path = read_path(&a.input, a.horizon)?;
    let report = match a.family {
        FamilyArg::SmallCount => run_test(&path, &threshold_spec(&a.threshold, a.k)?, a.theta)?,
        FamilyArg::Aj => {
            let spec = AjSpec {
                p: a.p,
                alpha_u: a.alpha_u,
                rho: a.rho,
                scale: TruncationScale::SigmaStar,
                k: a.k,
                calibration: a.c.map_or(Calibration::MonteCarlo, |c| Calibration::Fixed { c }),
            };
            aj_test(&path, &spec, a.theta)?
        }
    };
    print!("{}", report.to_csv()?);
    Ok(())
}

fn load_plan(a: &PlanArgs) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(&a.plan).with_context(|| format!("cannot read {}", a.plan.display()))?;
    let mut plan = plan_from_toml(&text).with_context(|| format!("plan {}", a.plan.display()))?;
    if let Some(s) = a.seed {
        plan.master_seed = Seed(s);
    }
    if let Some(r) = a.reps {
        plan.replications = r;
    }
    if a.workers.is_some() {
        plan.workers = a.workers;
    }
    plan.validate()?;
    Ok(plan)
}

fn mc_cmd(a: McArgs) -> Result<()> {
    let plan = load_plan(&a.plan)?;
    let rows = mc_rejection_rate(&plan)?;
    let mut out = create(&a.plan.out)?;
    write_summaries(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let plan = load_plan(&a.plan)?;
    let param = match a.param {
        SweepParamArg::ThetaPrime => SweepParam::JumpScale,
        SweepParamArg::Delta => SweepParam::Delta,
        SweepParamArg::NoiseSd => SweepParam::NoiseSd,
    };
    let rows = sweep(&plan, param, &a.values)?;
    let mut out = create(&a.plan.out)?;
    write_summaries(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn preavg_cmd(a: PreavgArgs) -> Result<()> {
    let path = read_path(&a.input, a.horizon)?;
    let spec = PreAvgSpec { block_size: a.block_size, gap: a.gap, threshold: ThresholdSpec::direct(a.alpha, a.varpi) };
    if let Some(p) = &a.series_out {
        let mut out = create(p)?;
        preaverage_blocks(&path, &spec)?.write_csv(&mut out)?;
        out.flush()?;
    }
    let result = v_bar_test(&path, &spec)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(io::stdout());
    w.serialize(result)?;
    w.flush()?;
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let ticks = load_ticks(open(&a.input)?).with_context(|| format!("reading {}", a.input.display()))?;
    let path = regularize(&ticks, a.interval, Session { open: a.open, close: a.close })?;
    if let Some(p) = &a.path_out {
        let mut out = create(p)?;
        path.write_csv(&mut out)?;
        out.flush()?;
    }
    let grid = if a.admissible {
        let g = delta_grid(&path, a.kappa, a.varpi, a.step)?;
        anyhow::ensure!(!g.is_empty(), "no admissible delta: the bound gives delta_max = {}", g.delta_max());
        g
    } else {
        DeltaGrid::fixed(&path, DeltaGrid::range(a.from, a.to, a.step), a.kappa, a.varpi)?
    };
    let points = analyze_day(&path, &grid, a.theta)?;
    let mut out = create(&a.out)?;
    write_day_csv(&points, &mut out)?;
    out.flush()?;
    let summary = DaySummary::from_points(&grid, a.theta, &points);
    match &a.summary {
        Some(p) => {
            let mut f = create(p)?;
            serde_json::to_writer_pretty(&mut f, &summary)?;
            writeln!(f)?;
            f.flush()?;
        }
        None => println!("{}", serde_json::to_string(&summary)?),
    }
    Ok(())
}

fn table1_cmd(a: Table1Args) -> Result<()> {
    let rows = table1_demo(Seed(a.seed), a.reps)?;
    match &a.out {
        Some(p) => {
            let mut out = create(p)?;
            write_count_table(&rows, &mut out)?;
            out.flush()?;
        }
        None => write_count_table(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn hist_cmd(a: HistArgs) -> Result<()> {
    let model = model_spec(&a.model)?;
    let selector = match a.statistic {
        HistStatistic::Increments => HistogramSelector::Increments,
        HistStatistic::VTilde => HistogramSelector::VTilde(ThresholdSpec::scaled(a.delta, a.kappa, a.varpi)),
        HistStatistic::Aj => HistogramSelector::AjStudentized(AjSpec::default()),
        HistStatistic::VBar => HistogramSelector::VBar(PreAvgSpec::standard()),
    };
    let h = histogram_export(&model, a.n, 1.0, selector, a.bins, a.reps, Seed(a.seed))?;
    let mut out = create(&a.out)?;
    h.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}
