use gfmsim_core::analysis::MetricsReport;
use gfmsim_core::tf::{TransferFunction, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Rise,
    Settle,
    Overshoot,
    Rocof,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::Rise, Column::Settle, Column::Overshoot, Column::Rocof];

    pub fn parse(s: &str) -> Option<Column> {
        match s.trim() {
            "rise" => Some(Column::Rise),
            "settle" | "settling" => Some(Column::Settle),
            "overshoot" => Some(Column::Overshoot),
            "rocof" => Some(Column::Rocof),
            _ => None,
        }
    }
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.prec$}"))
}

/// Aligned text table of metric rows.
pub fn table(rows: &[MetricsReport], cols: &[Column]) -> String {
    let mut header = vec!["strategy".to_owned(), "mode".to_owned()];
    for c in cols {
        match c {
            Column::Rise => header.push("rise_s".into()),
            Column::Settle => header.push("settling_s".into()),
            Column::Overshoot => header.push("overshoot_%".into()),
            Column::Rocof => {
                header.push("max_rocof_hz_s".into());
                header.push("rocof_pass".into());
            }
        }
    }
    let mut body: Vec<Vec<String>> = Vec::new();
    for r in rows {
        let mut line = vec![r.strategy.clone(), r.mode.clone()];
        for c in cols {
            match c {
                Column::Rise => line.push(format!("{:.4}", r.rise_time_s)),
                Column::Settle => line.push(format!("{:.4}", r.settling_time_s)),
                Column::Overshoot => line.push(format!("{:.2}", r.overshoot_pct)),
                Column::Rocof => {
                    line.push(opt(r.max_rocof_hz_s, 4));
                    line.push(match r.rocof_pass {
                        Some(true) => "pass".into(),
                        Some(false) => "FAIL".into(),
                        None => "-".into(),
                    });
                }
            }
        }
        body.push(line);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|j| body.iter().map(|l| l[j].len()).chain([header[j].len()]).max().unwrap_or(0))
        .collect();
    let fmt_line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, w))| if j < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = fmt_line(&header);
    out.push('\n');
    for l in &body {
        out.push_str(&fmt_line(l));
        out.push('\n');
    }
    out
}

pub fn format_roots(roots: &[C64]) -> String {
    if roots.is_empty() {
        return "none".into();
    }
    roots
        .iter()
        .map(|r| {
            if r.im.abs() <= 1e-9 * r.norm().max(1.0) {
                format!("{:.6}", r.re)
            } else {
                format!("{:.6}{:+.6}j", r.re, r.im)
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Log-spaced magnitude (dB) and phase (deg) samples of each function.
pub fn frequency_response(fns: &[(&str, &TransferFunction)], w_max: f64, points: usize) -> String {
    let w_min = w_max * 1e-5;
    let mut out = String::from("# w_rad_s");
    for (name, _) in fns {
        out.push_str(&format!(" {name}_mag_db {name}_phase_deg"));
    }
    out.push('\n');
    for k in 0..points {
        let w = w_min * (w_max / w_min).powf(k as f64 / (points - 1) as f64);
        out.push_str(&format!("{w:.9e}"));
        for (_, g) in fns {
            let h = g.eval(C64::new(0.0, w));
            out.push_str(&format!(" {:.9e} {:.9e}", 20.0 * h.norm().log10(), h.arg().to_degrees()));
        }
        out.push('\n');
    }
    out
}
