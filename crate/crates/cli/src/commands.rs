use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use vvix_core::calibration::{
    self, io as quote_io, synthetic_quotes, CalibrationSpec, DeSettings, VegaFloorRule, VvixMethod, VvixMode,
    WeightKind, WeightScheme,
};
use vvix_core::model::{preset, ParamsDocument, PRESET_NAMES};
use vvix_core::pde::{pde_vvix_report, spx_grid_with, PdeConfig, GRID_LADDER};
use vvix_core::replication::{vvix_by_replication, StrikeGrid};
use vvix_core::{
    mc_vix_future, mc_vix_option, mc_vvix_log, vix_future, vix_option, vvix_log_contract, vvix_simple, HestonParams,
    MarketConvention, OptionKind,
};

use crate::cli::*;

/// Exit status of a command that ran to completion.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 3;

pub fn load_model(args: &ModelArgs) -> Result<(HestonParams, MarketConvention)> {
    let (params, conv) = load_params(&args.params)?;
    Ok(match args.rho {
        Some(rho) => {
            let p = params.with_rho(rho);
            p.validate()?;
            (p, conv)
        }
        None => (params, conv),
    })
}

fn load_params(source: &str) -> Result<(HestonParams, MarketConvention)> {
    if let Some(p) = preset(source) {
        return Ok((p, MarketConvention::default()));
    }
    let text = std::fs::read_to_string(source)
        .with_context(|| format!("{source:?} is neither a preset ({}) nor a readable file", PRESET_NAMES.join(", ")))?;
    ParamsDocument::from_json(&text).with_context(|| format!("parsing {source}"))
}

fn vix_grid(k1: f64, strip: &StripArgs) -> Result<StrikeGrid> {
    Ok(StrikeGrid::uniform(k1, strip.kmax, strip.dk)?)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(rows: &[T], output: &Output) -> Result<()> {
    let mut w = sink(output.out.as_deref())?;
    match output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            for r in rows {
                c.serialize(r)?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct VvixRow {
    pub set: String,
    pub v0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub rho: f64,
    pub sigma: f64,
    pub f_vix: f64,
    pub log_contract: f64,
    pub replication_k1_5: f64,
    pub replication_k1_10: f64,
    pub simple: f64,
    pub mc_f_vix: Option<f64>,
    pub mc_f_vix_se: Option<f64>,
    pub mc_log_contract: Option<f64>,
    pub mc_log_contract_se: Option<f64>,
}

fn vvix_row(name: &str, p: &HestonParams, conv: &MarketConvention, strip: &StripArgs) -> Result<VvixRow> {
    let t = conv.vvix_maturity();
    Ok(VvixRow {
        set: name.to_string(),
        v0: p.v0,
        kappa: p.kappa,
        theta: p.theta,
        rho: p.rho,
        sigma: p.sigma,
        f_vix: vix_future(p, t, conv)?.points,
        log_contract: vvix_log_contract(p, t, conv)?.points,
        replication_k1_5: vvix_by_replication(p, t, conv, &vix_grid(5.0, strip)?)?.points,
        replication_k1_10: vvix_by_replication(p, t, conv, &vix_grid(10.0, strip)?)?.points,
        simple: vvix_simple(p, t, conv)?.points,
        mc_f_vix: None,
        mc_f_vix_se: None,
        mc_log_contract: None,
        mc_log_contract_se: None,
    })
}

pub fn cmd_vvix(args: &VvixArgs) -> Result<i32> {
    let (p, conv) = load_model(&args.model)?;
    let mut row = vvix_row(&args.model.params, &p, &conv, &args.strip)?;
    if args.mc_check {
        let t = conv.vvix_maturity();
        let f = mc_vix_future(&p, t, &conv, args.paths, args.seed)?;
        let l = mc_vvix_log(&p, t, &conv, args.paths, args.seed)?;
        row.mc_f_vix = Some(f.mean);
        row.mc_f_vix_se = Some(f.std_error);
        row.mc_log_contract = Some(l.mean);
        row.mc_log_contract_se = Some(l.std_error);
    }
    emit(&[row], &args.output)?;
    Ok(EXIT_OK)
}

pub fn cmd_table1(args: &Table1Args) -> Result<i32> {
    let conv = MarketConvention::default();
    let rows = PRESET_NAMES
        .iter()
        .map(|n| vvix_row(n, &preset(n).expect("preset"), &conv, &args.strip))
        .collect::<Result<Vec<_>>>()?;
    emit(&rows, &args.output)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct PdeRow {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub vvix: Option<f64>,
    /// Change from the previous successful row.
    pub increment: Option<f64>,
    pub error: Option<String>,
}

pub fn cmd_pde_table(args: &PdeTableArgs) -> Result<i32> {
    let (p, conv) = load_model(&args.model)?;
    let spx = spx_grid_with(args.spot, args.spx_strikes)?;
    let vix = vix_grid(args.k1, &args.strip)?;
    let ladder = if args.grid.is_empty() { GRID_LADDER.to_vec() } else { args.grid.clone() };
    let mut rows = Vec::with_capacity(ladder.len());
    let mut last: Option<f64> = None;
    for (n, m, l) in ladder {
        let start = Instant::now();
        let row = match pde_vvix_report(&p, &conv, args.spot, &PdeConfig::new(n, m, l), &spx, &vix) {
            Ok(rep) => {
                let v = rep.vvix.points;
                let inc = last.map(|x| v - x);
                last = Some(v);
                eprintln!("({n}, {m}, {l}): {v:.4} in {:.1} s", start.elapsed().as_secs_f64());
                PdeRow {
                    n,
                    m,
                    l,
                    vvix: Some(v),
                    increment: inc,
                    error: None,
                }
            }
            Err(e) => {
                eprintln!("({n}, {m}, {l}) failed: {e}");
                PdeRow {
                    n,
                    m,
                    l,
                    vvix: None,
                    increment: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    emit(&rows, &args.output)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub simple: f64,
    pub log_contract: f64,
    pub replication: f64,
}

pub fn sweep_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let (p, conv) = load_model(&args.model)?;
    let grid = vix_grid(args.k1, &args.strip)?;
    let t = conv.vvix_maturity();
    let (lo, hi, step) = args.sweep;
    let or_nan = |r: vvix_core::Result<vvix_core::IndexQuote>| r.map_or(f64::NAN, |q| q.points);
    let rows: Vec<SweepRow> = sweep_points(lo, hi, step)
        .into_iter()
        .map(|sigma| {
            let q = p.with_sigma(sigma);
            SweepRow {
                sigma,
                simple: or_nan(vvix_simple(&q, t, &conv)),
                log_contract: or_nan(vvix_log_contract(&q, t, &conv)),
                replication: or_nan(vvix_by_replication(&q, t, &conv, &grid)),
            }
        })
        .collect();
    emit(&rows, &args.output)?;
    Ok(EXIT_OK)
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<i32> {
    let file = File::open(&args.quotes).with_context(|| format!("opening {}", args.quotes.display()))?;
    let quotes = quote_io::read_quotes(file).with_context(|| format!("reading {}", args.quotes.display()))?;
    let mut spec = CalibrationSpec::new(quotes, args.spot);
    spec.conv = MarketConvention {
        r: args.r,
        q: args.q,
        ..MarketConvention::default()
    };
    spec.scheme = WeightScheme {
        kind: match args.weights {
            Weights::Uniform => WeightKind::Uniform,
            Weights::Discount => WeightKind::InverseDiscount,
            Weights::Vega => WeightKind::InverseVega,
        },
        vega_floor: args.vega_floor,
        floor_rule: match args.floor_rule {
            FloorRule::Floor => VegaFloorRule::Floor,
            FloorRule::PrintedMin => VegaFloorRule::PrintedMin,
        },
    };
    spec.vvix_mode = match (args.vvix_penalty, args.vvix_solve) {
        (Some((weight, target)), None) => VvixMode::Penalty {
            weight,
            target,
            method: match args.vvix_method {
                VvixMethodArg::Log => VvixMethod::LogContract,
                VvixMethodArg::Simple => VvixMethod::Simple,
            },
        },
        (None, Some(target)) => VvixMode::Solve { target },
        (None, None) => VvixMode::None,
        (Some(_), Some(_)) => bail!("--vvix-penalty and --vvix-solve are exclusive"),
    };
    spec.fix_kappa = args.fix_kappa;
    spec.fix_theta = args.fix_theta;
    spec.de = DeSettings {
        seed: args.seed,
        ..DeSettings::default()
    };
    let start = Instant::now();
    let result = calibration::calibrate(&spec)?;
    eprintln!(
        "calibrated in {:.1} s, {} evaluations, objective {:e}",
        start.elapsed().as_secs_f64(),
        result.evaluations,
        result.objective
    );
    let mut w = sink(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &result)?;
    writeln!(w)?;
    w.flush()?;
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("optimizer did not meet its tolerances; best point written");
        Ok(EXIT_NOT_CONVERGED)
    }
}

pub fn cmd_quotes(args: &QuotesArgs) -> Result<i32> {
    let (p, conv) = load_model(&args.model)?;
    let quotes = synthetic_quotes(&p, &conv, args.spot, &args.maturities, args.strikes)?;
    let mut w = sink(args.out.as_deref())?;
    quote_io::write_quotes(&mut w, &quotes)?;
    w.flush()?;
    Ok(EXIT_OK)
}

pub fn cmd_mc_check(args: &McCheckArgs) -> Result<i32> {
    let sets: Vec<(String, HestonParams, MarketConvention)> = match &args.params {
        Some(s) => {
            let (p, c) = load_params(s)?;
            vec![(s.clone(), p, c)]
        }
        None => PRESET_NAMES
            .iter()
            .map(|n| (n.to_string(), preset(n).expect("preset"), MarketConvention::default()))
            .collect(),
    };
    let mut out = io::stdout().lock();
    writeln!(out, "{:<8} {:<16} {:>12} {:>12} {:>10} {:>7}  result", "set", "quantity", "quadrature", "mc", "s.e.", "z")?;
    let mut failures = 0;
    for (name, p, conv) in &sets {
        let t = conv.vvix_maturity();
        let future = vix_future(p, t, conv)?.points;
        let mut checks = vec![
            ("F_VIX".to_string(), future, mc_vix_future(p, t, conv, args.paths, args.seed)?),
            (
                "VVIX log".to_string(),
                vvix_log_contract(p, t, conv)?.points,
                mc_vvix_log(p, t, conv, args.paths, args.seed)?,
            ),
        ];
        for m in [0.8, 1.0, 1.25] {
            let k = (m * future).round();
            checks.push((
                format!("call K={k}"),
                vix_option(p, k, t, 1.0, conv)?,
                mc_vix_option(p, k, t, OptionKind::Call, conv, args.paths, args.seed)?,
            ));
        }
        for (what, quad, mc) in checks {
            let z = mc.z_score(quad);
            let pass = z.abs() <= args.sigmas;
            failures += usize::from(!pass);
            writeln!(
                out,
                "{name:<8} {what:<16} {quad:>12.4} {:>12.4} {:>10.4} {z:>7.2}  {}",
                mc.mean,
                mc.std_error,
                if pass { "PASS" } else { "FAIL" }
            )?;
        }
    }
    writeln!(out, "{failures} failure(s)")?;
    Ok(EXIT_OK)
}
