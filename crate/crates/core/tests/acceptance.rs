//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use purejump_core::{
    aj_test, count_small, delta_grid_for, mc_mean, mc_rejection_rate, preaverage_blocks, run_test, sigma_star_sq,
    table1_demo, truncated_power_variation, AjSpec, ExperimentPlan, HistogramSelector, LabeledModel, ModelSpec,
    PreAvgSpec, SamplePath, Seed, Statistic, ThresholdSpec,
};
use rayon::prelude::*;

const R: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(label: &str, detail: String, pass: bool, out: &mut Vec<String>) -> bool {
    out.push(format!("  [{}] {label}: {detail}", if pass { "ok" } else { "MISS" }));
    pass
}

fn small_count_plan(models: Vec<LabeledModel>, sizes: Vec<usize>, seed: u64) -> ExperimentPlan {
    ExperimentPlan {
        models,
        sizes,
        horizon: 1.0,
        statistic: Statistic::SmallCount(ThresholdSpec::scaled(2.0, 2.0, 1.5)),
        theta: 0.05,
        replications: R,
        master_seed: Seed(seed),
        workers: None,
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn count_table() -> Outcome {
    let start = Instant::now();
    let rows = table1_demo(Seed(1), 500).expect("count demo");
    let secs = start.elapsed().as_secs_f64();
    let mut lines = Vec::new();
    let mut pass = true;
    for (row, target) in rows.iter().zip([942.0, 16_491.0, 23_313.0]) {
        pass &= check(
            &format!("stable beta={}", row.beta),
            format!("{:.1} vs {target} (+-2%)", row.stable),
            within(row.stable, target, 0.02 * target),
            &mut lines,
        );
        pass &= check(
            &format!("brownian beta={}", row.beta),
            format!("{:.1} vs 488 (+-3%)", row.brownian),
            within(row.brownian, 488.0, 0.03 * 488.0),
            &mut lines,
        );
    }
    pass &= check("runtime", format!("{secs:.1}s (< 60s)"), secs < 60.0, &mut lines);
    Outcome { pass, detail: lines.join("\n") }
}

fn size_cells() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (n, beta, target) in [(2340, 1.5, 4.27), (11_700, 1.4, 4.94), (4680, 1.6, 5.31)] {
        let plan = small_count_plan(vec![LabeledModel::new("h0", ModelSpec::null_ou(beta, 0.5))], vec![n], 3);
        let row = &mc_rejection_rate(&plan).expect("size cell")[0];
        let pct = 100.0 * row.rejection_rate;
        pass &= check(
            &format!("size n={n} beta={beta}"),
            format!("{pct:.2}% vs {target}% (+-1.5pp), mc_se {:.2}pp, inconclusive {}", 100.0 * row.mc_se, row.inconclusive),
            within(pct, target, 1.5),
            &mut lines,
        );
    }
    Outcome { pass, detail: lines.join("\n") }
}

fn power_cells() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let models = [1.2, 1.3, 1.4]
        .iter()
        .map(|&b| LabeledModel::new(format!("h1 beta={b}"), ModelSpec::alt_pure_jump(b, 1.0)))
        .collect();
    let plan = small_count_plan(models, vec![1560, 2340, 4680, 11_700, 23_400], 5);
    let rows = mc_rejection_rate(&plan).expect("power rows");
    let worst = rows.iter().map(|r| r.rejection_rate).fold(1.0, f64::min);
    pass &= check("beta<=1.4 rows", format!("min power {:.2}% (>= 99%)", 100.0 * worst), worst >= 0.99, &mut lines);
    for (beta, target, tol) in [(1.6, 63.80, 4.0), (1.9, 7.34, 3.0)] {
        let plan = small_count_plan(vec![LabeledModel::new("h1", ModelSpec::alt_pure_jump(beta, 1.0))], vec![23_400], 7);
        let row = &mc_rejection_rate(&plan).expect("power cell")[0];
        let pct = 100.0 * row.rejection_rate;
        pass &= check(
            &format!("power n=23400 beta={beta}"),
            format!("{pct:.2}% vs {target}% (+-{tol}pp), mc_se {:.2}pp", 100.0 * row.mc_se),
            within(pct, target, tol),
            &mut lines,
        );
    }
    Outcome { pass, detail: lines.join("\n") }
}

fn lln_limits() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let sel = HistogramSelector::VTilde(ThresholdSpec::scaled(2.0, 2.0, 1.5));
    let cases = [
        ("brownian", ModelSpec::brownian(1.0), 1.0),
        ("stable beta=1", ModelSpec::pure_stable(1.0, 1.0), 2f64.powf(0.5)),
        ("stable beta=1.25", ModelSpec::pure_stable(1.25, 1.0), 2f64.powf(1.0 + 1.0 / 1.25 - 1.5)),
    ];
    for (i, (name, model, limit)) in cases.into_iter().enumerate() {
        let est = mc_mean(&model, 23_400, 1.0, sel, R, Seed(11).child(i as u64)).expect("lln mean");
        let z = (est.mean - limit) / est.mc_se;
        pass &= check(
            name,
            format!("mean {:.4} vs {limit:.4}, mc_se {:.4}, z {z:.2} (|z| <= 3)", est.mean, est.mc_se),
            z.abs() <= 3.0,
            &mut lines,
        );
    }
    Outcome { pass, detail: lines.join("\n") }
}

fn aj_baseline() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let spec = AjSpec::default().resolved().expect("calibration");
    if let purejump_core::Calibration::Fixed { c } = spec.calibration {
        lines.push(format!("  calibrated C = {c:.4}"));
    }
    let plan = |model: ModelSpec, n: usize, seed: u64| ExperimentPlan {
        statistic: Statistic::Aj(spec),
        ..small_count_plan(vec![LabeledModel::new("m", model)], vec![n], seed)
    };
    for (beta, target) in [(0.5, 4.67), (1.0, 4.47)] {
        let row = &mc_rejection_rate(&plan(ModelSpec::null_ou(beta, 0.5), 2340, 13)).expect("aj size")[0];
        let pct = 100.0 * row.rejection_rate;
        pass &= check(
            &format!("size n=2340 beta={beta}"),
            format!("{pct:.2}% vs {target}% (+-2pp), mc_se {:.2}pp", 100.0 * row.mc_se),
            within(pct, target, 2.0),
            &mut lines,
        );
    }
    let row = &mc_rejection_rate(&plan(ModelSpec::alt_pure_jump(0.9, 1.0), 4680, 17)).expect("aj power")[0];
    let pct = 100.0 * row.rejection_rate;
    pass &= check(
        "power n=4680 beta=0.9",
        format!("{pct:.2}% vs 48.26% (+-6pp), mc_se {:.2}pp", 100.0 * row.mc_se),
        within(pct, 48.26, 6.0),
        &mut lines,
    );
    for beta in [0.25, 0.5, 0.75] {
        let model = ModelSpec::alt_pure_jump(beta, 1.0);
        let below = (0..R as u64)
            .into_par_iter()
            .filter(|&r| {
                let path = purejump_core::simulate(&model, 4680, 1.0, Seed(19).child(r)).expect("sim");
                aj_test(&path, &spec, 0.05).expect("aj").studentized.is_some_and(|s| s < -1.645)
            })
            .count();
        let frac = 100.0 * below as f64 / R as f64;
        pass &= check(
            &format!("studentized < -1.645 at n=4680 beta={beta}"),
            format!("{frac:.2}% (< 1%)"),
            frac < 1.0,
            &mut lines,
        );
    }
    Outcome { pass, detail: lines.join("\n") }
}

fn preaveraging() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let spec = PreAvgSpec::standard();
    let sel = HistogramSelector::VBar(spec);
    let h0 = ModelSpec::mixture(1.0, 1.0, 1.0).with_noise(0.01);
    let h1 = ModelSpec::pure_stable(1.0, 1.0).with_noise(0.01);
    let m0 = mc_mean(&h0, 23_400, 1.0, sel, 5000, Seed(23)).expect("h0 mean");
    let m1 = mc_mean(&h1, 23_400, 1.0, sel, 5000, Seed(29)).expect("h1 mean");
    pass &= check(
        "H0 mean",
        format!("{:.4} vs 1.0578 (+-0.08), mc_se {:.4}, inconclusive {}", m0.mean, m0.mc_se, m0.dropped),
        within(m0.mean, 1.0578, 0.08),
        &mut lines,
    );
    pass &= check(
        "H1 mean",
        format!("{:.4} vs 1.4781 (+-0.08), mc_se {:.4}, inconclusive {}", m1.mean, m1.mc_se, m1.dropped),
        within(m1.mean, 1.4781, 0.08),
        &mut lines,
    );
    let gap = m1.mean - m0.mean;
    pass &= check("separation", format!("{gap:.4} (>= 0.3)"), gap >= 0.3, &mut lines);
    Outcome { pass, detail: lines.join("\n") }
}

fn prop(name: &str, cases: u32, lines: &mut Vec<String>, f: impl Fn(&mut TestRunner) -> Result<(), String>) -> bool {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let res = f(&mut runner);
    check(name, res.clone().err().unwrap_or_else(|| format!("{cases} cases")), res.is_ok(), lines)
}

fn path_from(incs: &[f64]) -> SamplePath {
    SamplePath::from_increments(1.0, 0.0, incs).expect("path")
}

fn properties() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let incs = prop::collection::vec(-1.0f64..1.0, 3..200);

    pass &= prop("count scale equivariance", 256, &mut lines, |r| {
        r.run(&(incs.clone(), -6i32..6, 0.001f64..1.0), |(incs, e, thr)| {
            let c = 2f64.powi(e);
            let p = path_from(&incs);
            let scaled = p.map(|v| v * c);
            for (step, offset) in [(1, 0), (2, 0), (2, 1)] {
                prop_assert_eq!(
                    count_small(&p, step, offset, thr).unwrap(),
                    count_small(&scaled, step, offset, thr * c).unwrap()
                );
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });

    pass &= prop("threshold monotonicity", 256, &mut lines, |r| {
        r.run(&(incs.clone(), 0.001f64..1.0, 0.001f64..1.0), |(incs, a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p = path_from(&incs);
            prop_assert!(count_small(&p, 1, 0, lo).unwrap() <= count_small(&p, 1, 0, hi).unwrap());
            Ok(())
        })
        .map_err(|e| e.to_string())
    });

    pass &= prop("rejection forms agree", 256, &mut lines, |r| {
        r.run(&(prop::collection::vec(-0.05f64..0.05, 50..400), 0.5f64..4.0, 0.01f64..0.2), |(incs, delta, theta)| {
            let p = path_from(&incs);
            let rep = run_test(&p, &ThresholdSpec::scaled(delta, 2.0, 1.5), theta).unwrap();
            if let (Some(s), Some(v), Some(c)) = (rep.studentized, rep.v_tilde, rep.critical_value) {
                let margin = (s - rep.critical_z).abs();
                if margin > 1e-9 {
                    prop_assert_eq!(s > rep.critical_z, v > c);
                }
                prop_assert_eq!(rep.reject_h0, s > rep.critical_z);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });

    let det_plan = ExperimentPlan {
        replications: 40,
        ..small_count_plan(
            vec![
                LabeledModel::new("h0", ModelSpec::null_ou(1.5, 0.5)),
                LabeledModel::new("h1", ModelSpec::alt_pure_jump(1.6, 1.0)),
            ],
            vec![400, 1560],
            31,
        )
    };
    let one = mc_rejection_rate(&ExperimentPlan { workers: Some(1), ..det_plan.clone() }).unwrap();
    let four = mc_rejection_rate(&ExperimentPlan { workers: Some(4), ..det_plan.clone() }).unwrap();
    let global = mc_rejection_rate(&det_plan).unwrap();
    pass &= check("determinism across parallelism", "1, 4 and global workers".into(), one == four && one == global, &mut lines);

    // Hand enumeration: path 0, 0.3, 0.1, 0.5, 0.45, 1.0, 0.9 (increments .3 -.2 .4 -.05 .55 -.1).
    let hp = SamplePath::from_values(1.0, vec![0.0, 0.3, 0.1, 0.5, 0.45, 1.0, 0.9]).unwrap();
    let c1 = count_small(&hp, 1, 0, 0.3).unwrap();
    let c2 = count_small(&hp, 2, 0, 0.25).unwrap();
    let c3 = count_small(&hp, 2, 1, 0.25).unwrap();
    pass &= check("count_small hand oracle", format!("{c1},{c2},{c3} vs 4,1,1"), (c1, c2, c3) == (4, 1, 1), &mut lines);

    let tpv = truncated_power_variation(&hp, 2.0, 0.35).unwrap();
    let expect = 0.3f64.powi(2) + 0.2f64.powi(2) + 0.05f64.powi(2) + 0.1f64.powi(2);
    pass &= check("truncated_power_variation hand oracle", format!("{tpv:.6} vs {expect:.6}"), (tpv - expect).abs() < 1e-12, &mut lines);

    let block = SamplePath::from_values(1.0, vec![0.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 3.0, 4.0, 6.0, 8.0, 10.0, 0.0, 0.0, 0.0, 1.0, 9.0])
        .unwrap();
    let pre = preaverage_blocks(&block, &PreAvgSpec { block_size: 4, gap: 2, threshold: ThresholdSpec::direct(1.0, 1.5) })
        .unwrap();
    pass &= check(
        "preaverage_blocks hand oracle",
        format!("{:?} vs [2, 0, 4, 0.5]", pre.values),
        pre.values == vec![2.0, 0.0, 4.0, 0.5],
        &mut lines,
    );

    // n = 9, T = 1: cutoff 9^{-1/4} = 0.577; increments 0.5 and -0.2 kept, 0.6 dropped.
    let sp = SamplePath::from_increments(1.0, 0.0, &[0.5, 0.6, -0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let s = sigma_star_sq(&sp);
    pass &= check("sigma_star_sq hand oracle", format!("{s:.6} vs 0.29"), (s - 0.29).abs() < 1e-12, &mut lines);

    pass &= prop("delta_grid members satisfy the bound", 256, &mut lines, |r| {
        r.run(&(1e-6f64..1e-2, 200usize..50_000, 1.0f64..3.0, 0.51f64..1.6, 0.05f64..1.0), |(s2, n, kappa, varpi, step)| {
            let g = delta_grid_for(s2, n, 1.0, kappa, varpi, step).unwrap();
            let dt = 1.0 / n as f64;
            for &d in &g.deltas {
                prop_assert!(d * (n as f64).ln().powf(kappa) * dt.powf(varpi) <= s2.sqrt() * dt.sqrt());
            }
            let next = (g.deltas.len() + 1) as f64 * step;
            prop_assert!(next * (n as f64).ln().powf(kappa) * dt.powf(varpi) > s2.sqrt() * dt.sqrt());
            Ok(())
        })
        .map_err(|e| e.to_string())
    });

    Outcome { pass, detail: lines.join("\n") }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 small-increment count table", count_table),
        ("2 size control", size_cells),
        ("3 power", power_cells),
        ("4 LLN limits", lln_limits),
        ("5 baseline test", aj_baseline),
        ("6 pre-averaging", preaveraging),
        ("7 property suite", properties),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        println!("criterion {name}: {} ({:.1}s)", if out.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        println!("{}", out.detail);
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
