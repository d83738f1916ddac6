use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use cvqkd::config::RunConfig;
use cvqkd::distill::accounting::REPORT_CSV_HEADER;
use cvqkd::distill::postselect::keep_all;
use cvqkd::distill::{postselect, run_pipeline, sift, to_hex, PipelineOptions, PointClass, Stage, StageReport};
use cvqkd::security::{
    boundary_curve, ensemble_rates, write_boundary_csv, Attack, EnsembleRates, BOUNDARY_CSV_HEADER,
};
use cvqkd::session::{run_session, transcript_bytes, MemoryTransport, PartyData, SessionConfig};
use cvqkd::source::{alice_estimate, measure, Basis, MeasureSeeds, Measurements};
use serde_json::{json, Value};

use crate::Status;

/// Bumped whenever a CSV header or column meaning changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const POINTS_CSV_HEADER: &str = "index,basis,Y_A,Y_B,kept,class,p,f,net_rate";

const BOUNDARY_STEP: f64 = 0.02;
const BOUNDARY_POINTS: usize = 300;

fn create(dir: &Path, name: &str) -> cvqkd::Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn simulate_data(cfg: &RunConfig) -> cvqkd::Result<Measurements> {
    measure(
        &cfg.source_model()?,
        &cfg.channel()?,
        &cfg.timing()?,
        cfg.n_symbols,
        MeasureSeeds::from_root(cfg.seed),
    )
}

fn config_json(cfg: &RunConfig) -> Value {
    json!({
        "seed": cfg.seed,
        "n_symbols": cfg.n_symbols,
        "V": cfg.v,
        "eta": cfg.eta,
        "delta": cfg.delta,
        "attack": cfg.attack.label(),
        "symbol_rate_hz": cfg.symbol_rate_hz,
        "dt_switch_s": cfg.dt_switch_s,
        "dT_sample_s": cfg.dt_sample_s,
        "epsilon_pa": cfg.epsilon_pa,
        "cascade_passes": cfg.cascade_passes,
        "eve_bound": cfg.eve_bound.label(),
        "postselect": cfg.postselect,
    })
}

fn write_summary(cfg: &RunConfig, command: &str, results: Value) -> cvqkd::Result<()> {
    let summary = json!({
        "schema_version": CSV_SCHEMA_VERSION,
        "command": command,
        "config": config_json(cfg),
        "results": results,
    });
    let mut w = create(&cfg.out_dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn report_json(report: &StageReport) -> Value {
    Value::Array(
        report
            .rows
            .iter()
            .map(|r| {
                json!({
                    "stage": r.stage.label(),
                    "I_AB": r.i_ab,
                    "eve": r.eve,
                    "net": r.net,
                    "retained_fraction": r.retained_fraction,
                    "rate_kbps": r.rate_kbps,
                })
            })
            .collect(),
    )
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn simulate(cfg: &RunConfig) -> cvqkd::Result<Status> {
    let ctx = cfg.security_context()?;
    let data = simulate_data(cfg)?;
    let pairs = sift(&data.alice, &data.bob, alice_estimate(1.0, ctx.v))?;
    let selection = if cfg.postselect {
        postselect(&pairs, &ctx, cfg.attack)?
    } else {
        keep_all(&pairs, &ctx, cfg.attack)?
    };
    let mask = selection.kept_mask();
    let classes = selection.classes(&pairs);

    let mut w = create(&cfg.out_dir, "points.csv")?;
    writeln!(w, "{POINTS_CSV_HEADER}")?;
    for (i, p) in pairs.iter().enumerate() {
        let a = &selection.assessments[i];
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            p.index,
            p.basis.label(),
            num(p.y_a),
            num(p.y_b),
            u8::from(mask[i]),
            classes[i].label(),
            num(a.p),
            num(a.f),
            num(a.net(cfg.attack))
        )?;
    }
    w.flush()?;

    let count = |c: PointClass| classes.iter().filter(|&&k| k == c).count();
    let by_basis = |b: Basis| -> Vec<(f64, f64)> { pairs.iter().filter(|p| p.basis == b).map(|p| (p.y_a, p.y_b)).collect() };
    let corr_x = pearson(&by_basis(Basis::Amplitude));
    let corr_y = pearson(&by_basis(Basis::Phase));
    let (ok, flip, insecure) = (count(PointClass::ErrorFree), count(PointClass::BitFlip), count(PointClass::Insecure));
    println!("{} symbols, {} sifted, {} kept ({} attack)", cfg.n_symbols, pairs.len(), selection.kept.len(), cfg.attack.label());
    println!("classes: {ok} error-free, {flip} bit-flip, {insecure} insecure");
    let show = |c: f64| if c.is_nan() { "n/a".to_string() } else { format!("{c:.4}") };
    println!("correlation: amplitude {}, phase {}", show(corr_x), show(corr_y));

    write_summary(
        cfg,
        "simulate",
        json!({
            "sifted": pairs.len(),
            "kept": selection.kept.len(),
            "error_free": ok,
            "bit_flip": flip,
            "insecure": insecure,
            "amplitude_correlation": corr_x,
            "phase_correlation": corr_y,
            "points_csv": POINTS_CSV_HEADER,
        }),
    )?;
    if selection.kept.is_empty() {
        return Ok(Status::Infeasible("no sifted point has a positive net rate".into()));
    }
    Ok(Status::Ok)
}

pub fn boundary(cfg: &RunConfig) -> cvqkd::Result<Status> {
    let ctx = cfg.security_context()?;
    let grid: Vec<f64> = (1..=BOUNDARY_POINTS).map(|i| i as f64 * BOUNDARY_STEP).collect();
    let curve = boundary_curve(&ctx, &grid);
    let mut w = create(&cfg.out_dir, "boundary.csv")?;
    write_boundary_csv(&mut w, &curve)?;
    w.flush()?;

    let reachable = |pick: fn(&cvqkd::security::BoundaryPoint) -> Option<f64>| curve.iter().filter(|p| pick(p).is_some()).count();
    let col = reachable(|p| p.collective);
    let ind = reachable(|p| p.individual);
    println!("{} |Y_A| values in [{BOUNDARY_STEP}, {}]", grid.len(), grid[grid.len() - 1]);
    println!("threshold found: collective {col}, individual {ind}");
    write_summary(
        cfg,
        "boundary",
        json!({
            "points": grid.len(),
            "collective_thresholds": col,
            "individual_thresholds": ind,
            "boundary_csv": BOUNDARY_CSV_HEADER,
        }),
    )?;
    if col == 0 && ind == 0 {
        return Ok(Status::Infeasible("no |Y_B| reaches a nonnegative net rate for any |Y_A|".into()));
    }
    Ok(Status::Ok)
}

pub fn distill(cfg: &RunConfig) -> cvqkd::Result<Status> {
    let ctx = cfg.security_context()?;
    let data = simulate_data(cfg)?;
    let session = SessionConfig::new(ctx, &cfg.pipeline_options());
    let (alice, bob) = PartyData::split(data, cfg.seed);
    let (ta, tb) = MemoryTransport::pair();
    let outcome = run_session(&session, &alice, &bob, ta, tb, None)?;

    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("transcript.bin"), transcript_bytes(outcome.transcript()))?;
    if let Some(report) = outcome.report() {
        report.write_csv(create(dir, "stage_report.csv")?)?;
        print!("{report}");
    }
    let leak = &outcome.leakage;
    println!(
        "transcript: {} frames, {} bytes, {} parity bits disclosed",
        leak.frames, leak.bytes, leak.parity_bits
    );

    let stats = outcome.bob_stats.as_ref();
    let mut results = json!({
        "aborted": outcome.aborted(),
        "infeasible": outcome.infeasible(),
        "sifted": stats.map(|s| s.sifted),
        "kept": stats.map(|s| s.kept),
        "qber_estimate": stats.map(|s| s.qber_est),
        "corrections": stats.map(|s| s.corrections),
        "eve_bits_per_symbol": stats.map(|s| s.eve_bits_per_symbol),
        "leakage_bits": leak.parity_bits,
        "transcript_frames": leak.frames,
        "transcript_bytes": leak.bytes,
        "key_bits": outcome.alice_key().len(),
        "report_csv": REPORT_CSV_HEADER,
    });
    if let Some(report) = outcome.report() {
        results["stage_report"] = report_json(report);
    }
    write_summary(cfg, "distill", results)?;

    if let Some(why) = outcome.aborted() {
        return Ok(Status::Aborted(why.to_string()));
    }
    fs::write(dir.join("alice_key.hex"), to_hex(outcome.alice_key()) + "\n")?;
    fs::write(dir.join("bob_key.hex"), to_hex(outcome.bob_key()) + "\n")?;
    println!("key: {} bits, hash-confirmed", outcome.alice_key().len());
    if outcome.infeasible() {
        return Ok(Status::Infeasible("post-selected data carries no positive net information".into()));
    }
    if outcome.alice_key().is_empty() {
        return Ok(Status::Infeasible(
            "privacy amplification leaves no key bits after leakage and the security margin".into(),
        ));
    }
    Ok(Status::Ok)
}

fn quadrature_line(attack: Attack, rates: &EnsembleRates) -> String {
    format!(
        "{:<22} {:>8.3} {:>8.3} {:>8.3}   ({} attack, exact expectation)",
        "raw (quadrature)",
        rates.i_ab,
        rates.eve(attack),
        rates.net(attack),
        attack.label()
    )
}

pub fn report(cfg: &RunConfig) -> cvqkd::Result<Status> {
    let data = simulate_data(cfg)?;
    let mut reports = Vec::new();
    let mut text = String::new();
    let mut any_key = false;
    for attack in [Attack::Collective, Attack::Individual] {
        let ctx = cfg.security_context()?.with_attack(attack);
        let opts = PipelineOptions {
            attack,
            ..cfg.pipeline_options()
        };
        let result = run_pipeline(&data, &ctx, &opts)?;
        let rates = ensemble_rates(&ctx);
        text.push_str(&result.report.to_string());
        text.push_str(&quadrature_line(attack, &rates));
        text.push_str("\n\n");
        any_key |= !result.alice_key.is_empty();
        reports.push((result.report, rates, result.alice_key.len()));
    }
    print!("{text}");
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("report.txt"), &text)?;

    let mut w = create(&cfg.out_dir, "report.csv")?;
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for (r, ..) in &reports {
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        // drop the per-report header
        let body = String::from_utf8_lossy(&buf);
        for line in body.lines().skip(1) {
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;

    let results: Vec<Value> = reports
        .iter()
        .map(|(r, rates, key)| {
            json!({
                "attack": r.attack.label(),
                "stages": report_json(r),
                "raw_quadrature": {
                    "I_AB": rates.i_ab,
                    "eve": rates.eve(r.attack),
                    "net": rates.net(r.attack),
                },
                "key_bits": key,
            })
        })
        .collect();
    write_summary(cfg, "report", json!({ "attacks": results, "report_csv": REPORT_CSV_HEADER }))?;

    let raw_negative = reports.iter().all(|(r, ..)| r.row(Stage::PostSelected).net <= 0.0);
    if raw_negative {
        return Ok(Status::Infeasible("net rate is nonpositive under both attacks".into()));
    }
    if !any_key {
        log::warn!("no attack yields final key bits at n = {}", cfg.n_symbols);
    }
    Ok(Status::Ok)
}
