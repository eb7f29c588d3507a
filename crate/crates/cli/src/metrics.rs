//! Per-iteration CSV output.

use std::io::Write;

use irl_lab_core::driver::RunRecord;

pub const CSV_HEADER: [&str; 12] = [
    "run_id",
    "seed",
    "variant",
    "t",
    "real_env_transitions",
    "j_learner",
    "j_expert",
    "gap_ft",
    "loss_ft",
    "reg_pi_running",
    "reg_f_running",
    "model_tv",
];

/// `%.9g`: nine significant digits, trailing zeros dropped, scientific
/// notation outside `1e-4 <= |v| < 1e9`.
pub fn format_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rows kept for output: every `cadence`-th iteration and the last one.
pub fn kept_rows(record: &RunRecord, cadence: usize) -> impl Iterator<Item = &irl_lab_core::driver::RunRow> {
    let last = record.rows.len();
    record
        .rows
        .iter()
        .filter(move |r| r.t % cadence.max(1) == 0 || r.t == last)
}

pub fn write_csv<W: Write>(out: W, record: &RunRecord, cadence: usize) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in kept_rows(record, cadence) {
        w.write_record([
            record.run_id.clone(),
            record.seed.to_string(),
            record.variant.name().to_string(),
            row.t.to_string(),
            row.ledger.real_env_transitions.to_string(),
            format_g(row.j_learner),
            format_g(row.j_expert),
            format_g(row.gap_ft),
            format_g(row.loss_ft),
            format_g(row.reg_pi_running),
            format_g(row.reg_f_running),
            row.model_tv.map(format_g).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
