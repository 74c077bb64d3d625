//! Eigenfrequency tables and plot data from convergence histories.
//!
//! Table values are `√κ̂` rounded half-even to a fixed number of decimals and
//! stored rounded, so a table read back from its CSV is bit-identical. The
//! order of a row is the least-squares slope of `|v_i − v_extr|` against `h`
//! over the stored values, hence reproducible from the row alone.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adaptive::{extrapolate_sequence, power_law_fit, ConvergenceHistory, LoopKind};
use crate::error::{Error, Result};

pub const DEFAULT_DIGITS: usize = 4;

/// Rounds to `digits` decimals, ties to even, and returns the `f64` nearest to
/// the decimal result.
pub fn round_half_even(x: f64, digits: usize) -> f64 {
    format_fixed(x, digits).parse().unwrap_or(x)
}

/// Decimal string of `x` rounded half-even to `digits` decimals.
pub fn format_fixed(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let scale = 10f64.powi(digits as i32);
    let y = x.abs() * scale;
    let floor = y.floor();
    let frac = y - floor;
    let mut n = floor;
    if frac > 0.5 || (frac == 0.5 && floor % 2.0 != 0.0) {
        n += 1.0;
    }
    // exact integer arithmetic up to 2^53
    let n = n as u128;
    let p = 10u128.pow(digits as u32);
    let sign = if x < 0.0 && n != 0 { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{n}")
    } else {
        format!("{sign}{}.{:0width$}", n / p, n % p, width = digits)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub mode: usize,
    /// Rounded `√κ̂` per level.
    pub values: Vec<f64>,
    /// `None` when the sequence does not support an extrapolation.
    pub order: Option<f64>,
    /// Rounded extrapolated `√κ̂`.
    pub extrapolated: Option<f64>,
    /// External `√κ̂` with its label, when known.
    pub reference: Option<f64>,
}

/// One block of rows computed on a common sequence of meshes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableBlock {
    pub label: String,
    pub levels: Vec<usize>,
    pub dofs: Vec<usize>,
    pub h: Vec<f64>,
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub digits: usize,
    pub blocks: Vec<TableBlock>,
}

/// Order of `values → extrapolated` against `h`.
pub fn row_order(h: &[f64], values: &[f64], extrapolated: f64) -> Result<f64> {
    let err: Vec<f64> = values.iter().map(|v| (v - extrapolated).abs()).collect();
    Ok(power_law_fit(h, &err)?.slope)
}

/// One block per history. Every history must be uniform, have at least 4
/// levels and track the same number of modes.
pub fn build_table(histories: &[(String, &ConvergenceHistory)], digits: usize) -> Result<ReportTable> {
    if histories.is_empty() {
        return Err(Error::InvalidArgument("no histories to tabulate".into()));
    }
    let nmodes = histories[0].1.modes.len();
    let mut blocks = Vec::with_capacity(histories.len());
    for (label, history) in histories {
        if history.kind != LoopKind::Uniform {
            return Err(Error::InvalidArgument(format!("history '{label}' is not a uniform study")));
        }
        if history.records.len() < 4 {
            return Err(Error::InvalidArgument(format!(
                "history '{label}' has {} levels, at least 4 are needed",
                history.records.len()
            )));
        }
        if history.modes.len() != nmodes {
            return Err(Error::DimensionMismatch(format!(
                "history '{label}' tracks {} modes, the first tracks {nmodes}",
                history.modes.len()
            )));
        }
        let h: Vec<f64> = history.records.iter().map(|r| r.h_max).collect();
        let mut rows = Vec::with_capacity(nmodes);
        for (i, &mode) in history.modes.iter().enumerate() {
            let raw: Vec<f64> = history.records.iter().map(|r| r.frequency[i]).collect();
            let values: Vec<f64> = raw.iter().map(|&v| round_half_even(v, digits)).collect();
            let (order, extrapolated) = match extrapolate_sequence(&h, &raw) {
                Ok(extr) => {
                    let extrapolated = round_half_even(extr.value, digits);
                    match row_order(&h, &values, extrapolated) {
                        Ok(order) => (Some(order), Some(extrapolated)),
                        Err(e) => {
                            log::warn!("block '{label}' mode {mode}: no order ({e})");
                            (None, Some(extrapolated))
                        }
                    }
                }
                Err(e) => {
                    log::warn!("block '{label}' mode {mode}: no extrapolation ({e})");
                    (None, None)
                }
            };
            let reference = history.references[i]
                .kappa_hat
                .filter(|_| history.references[i].provenance.as_deref() != Some(crate::adaptive::EXTRAPOLATED))
                .map(|k| round_half_even(k.sqrt(), digits));
            rows.push(TableRow {
                mode,
                values,
                order,
                extrapolated,
                reference,
            });
        }
        blocks.push(TableBlock {
            label: label.clone(),
            levels: history.records.iter().map(|r| r.level.unwrap_or(r.iteration)).collect(),
            dofs: history.records.iter().map(|r| r.dofs).collect(),
            h,
            rows,
        });
    }
    Ok(ReportTable { digits, blocks })
}

impl ReportTable {
    /// Long-format CSV: `block,mode,level,dofs,h,value,order,extrapolated,reference`.
    /// Order and `h` are written with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "digits,{}", self.digits)?;
        writeln!(out, "block,mode,level,dofs,h,value,order,extrapolated,reference")?;
        for b in &self.blocks {
            for r in &b.rows {
                for (j, v) in r.values.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{},{:?},{},{},{},{}",
                        b.label,
                        r.mode,
                        b.levels[j],
                        b.dofs[j],
                        b.h[j],
                        format_fixed(*v, self.digits),
                        r.order.map_or(String::new(), |o| format!("{o:?}")),
                        r.extrapolated.map_or(String::new(), |x| format_fixed(x, self.digits)),
                        r.reference.map_or(String::new(), |x| format_fixed(x, self.digits)),
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn parse_csv(text: &str) -> Result<ReportTable> {
        let bad = |line: usize, message: String| Error::Parse {
            path: "table.csv".into(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let digits = match lines.next() {
            Some((_, l)) => l
                .strip_prefix("digits,")
                .and_then(|d| d.trim().parse().ok())
                .ok_or_else(|| bad(1, "expected 'digits,<n>'".into()))?,
            None => return Err(bad(1, "empty table".into())),
        };
        lines.next();
        let mut blocks: Vec<TableBlock> = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad(lineno, format!("expected 9 fields, got {}", f.len())));
            }
            let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| bad(lineno, format!("bad number '{s}'"))) };
            let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
            let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| bad(lineno, format!("bad integer '{s}'"))) };
            let (label, mode, level, dofs, h) = (f[0], int(f[1])?, int(f[2])?, int(f[3])?, num(f[4])?);
            let value = num(f[5])?;
            let row = TableRow {
                mode,
                values: vec![],
                order: opt(f[6])?,
                extrapolated: opt(f[7])?,
                reference: opt(f[8])?,
            };
            if blocks.last().is_none_or(|b| b.label != label) {
                blocks.push(TableBlock {
                    label: label.into(),
                    levels: vec![],
                    dofs: vec![],
                    h: vec![],
                    rows: vec![],
                });
            }
            let block = blocks.last_mut().expect("block pushed");
            if block.rows.last().is_none_or(|r| r.mode != mode) {
                block.rows.push(row);
            }
            let r = block.rows.last_mut().expect("row pushed");
            let j = r.values.len();
            r.values.push(value);
            if block.levels.len() == j {
                block.levels.push(level);
                block.dofs.push(dofs);
                block.h.push(h);
            }
        }
        Ok(ReportTable { digits, blocks })
    }
}

/// Reference slope exponents drawn next to the error curves.
pub const PLOT_SLOPES: [(&str, f64); 2] = [("slope_066", -0.66), ("slope_1", -1.0)];

/// CSV `dof,err,eta_sq,eff,slope_066,slope_1` for the first tracked mode. The
/// slope columns are `err₀ (dof/dof₀)^s`, anchored at the first row.
pub fn emit_plot_data<W: Write>(history: &ConvergenceHistory, mut out: W) -> Result<()> {
    let first = history
        .records
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty history".into()))?;
    let anchor_err = first.err[0].unwrap_or(first.eta_sq());
    let anchor_dof = first.dofs as f64;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    writeln!(out, "dof,err,eta_sq,eff,{},{}", PLOT_SLOPES[0].0, PLOT_SLOPES[1].0)?;
    for r in &history.records {
        let ratio = r.dofs as f64 / anchor_dof;
        writeln!(
            out,
            "{},{},{:e},{},{:e},{:e}",
            r.dofs,
            opt(r.err[0]),
            r.eta_sq(),
            opt(r.eff),
            anchor_err * ratio.powf(PLOT_SLOPES[0].1),
            anchor_err * ratio.powf(PLOT_SLOPES[1].1),
        )?;
    }
    Ok(())
}
