//! Per-stage information and rate table.

use std::fmt;
use std::io::Write;

use crate::security::Attack;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Raw,
    PostSelected,
    Reconciled,
    Final,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Raw, Stage::PostSelected, Stage::Reconciled, Stage::Final];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::PostSelected => "post-selection",
            Stage::Reconciled => "reconciliation",
            Stage::Final => "privacy-amplification",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRow {
    pub stage: Stage,
    /// Bits per symbol shared by Alice and Bob.
    pub i_ab: f64,
    /// Bits per symbol bounded to Eve (χ or I_AE).
    pub eve: f64,
    pub net: f64,
    /// Symbols surviving to this stage over sifted symbols.
    pub retained_fraction: f64,
    pub rate_kbps: f64,
}

/// Counts and per-symbol means collected along one distillation run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageInputs {
    pub sifted: usize,
    /// Means over every sifted symbol.
    pub raw_i_ab: f64,
    pub raw_eve: f64,
    pub kept: usize,
    /// Means over the post-selected symbols.
    pub kept_i_ab: f64,
    pub kept_eve: f64,
    pub leakage_bits: u64,
    pub final_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub attack: Attack,
    pub symbol_rate_hz: f64,
    pub rows: Vec<StageRow>,
}

/// Builds the four-row table.
///
/// The raw row is quoted at the symbol rate. Later rows are
/// `symbol_rate_kHz × retained_fraction × max(net, 0)`; after
/// reconciliation Bob's string equals Alice's, so `I_AB = 1` and the
/// disclosed parities are charged to Eve per kept symbol. The final row holds
/// only key bits, so its net rate is 1.
pub fn stage_accounting(inputs: &StageInputs, attack: Attack, symbol_rate_hz: f64) -> StageReport {
    let khz = symbol_rate_hz / 1e3;
    let frac = |count: usize| {
        if inputs.sifted == 0 {
            0.0
        } else {
            count as f64 / inputs.sifted as f64
        }
    };
    let row = |stage, i_ab: f64, eve: f64, retained: f64| {
        let net = i_ab - eve;
        StageRow {
            stage,
            i_ab,
            eve,
            net,
            retained_fraction: retained,
            rate_kbps: khz * retained * net.max(0.0),
        }
    };
    let kept_frac = frac(inputs.kept);
    let recon_eve = if inputs.kept == 0 {
        inputs.kept_eve
    } else {
        inputs.kept_eve + inputs.leakage_bits as f64 / inputs.kept as f64
    };
    let raw = StageRow {
        stage: Stage::Raw,
        i_ab: inputs.raw_i_ab,
        eve: inputs.raw_eve,
        net: inputs.raw_i_ab - inputs.raw_eve,
        retained_fraction: 1.0,
        rate_kbps: khz,
    };
    let fin = if inputs.final_len == 0 {
        row(Stage::Final, 0.0, 0.0, 0.0)
    } else {
        row(Stage::Final, 1.0, 0.0, frac(inputs.final_len))
    };
    StageReport {
        attack,
        symbol_rate_hz,
        rows: vec![
            raw,
            row(Stage::PostSelected, inputs.kept_i_ab, inputs.kept_eve, kept_frac),
            row(Stage::Reconciled, 1.0, recon_eve, kept_frac),
            fin,
        ],
    }
}

pub const REPORT_CSV_HEADER: &str = "stage,attack,I_AB,eve,net,retained_fraction,rate_kbps";

impl StageReport {
    pub fn row(&self, stage: Stage) -> &StageRow {
        self.rows.iter().find(|r| r.stage == stage).expect("all stages present")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{REPORT_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.stage.label(),
                self.attack.label(),
                r.i_ab,
                r.eve,
                r.net,
                r.retained_fraction,
                r.rate_kbps
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eve = match self.attack {
            Attack::Collective => "chi",
            Attack::Individual => "I_AE",
        };
        writeln!(f, "{} attack, {} kHz symbol rate", self.attack.label(), self.symbol_rate_hz / 1e3)?;
        writeln!(
            f,
            "{:<22} {:>8} {:>8} {:>8} {:>10} {:>12}",
            "stage", "I_AB", eve, "net", "retained", "rate kbit/s"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<22} {:>8.3} {:>8.3} {:>8.3} {:>10.4} {:>12.1}",
                r.stage.label(),
                r.i_ab,
                r.eve,
                r.net,
                r.retained_fraction,
                r.rate_kbps
            )?;
        }
        Ok(())
    }
}
