//! Result files: the long-format results CSV, rank and significance tables,
//! and SVG average-rank plots (one curve per method across SNR).

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::eval::{Criterion, RankTable, ResultRow};
use crate::{Error, Result};

pub const RESULTS_HEADER: [&str; 6] = ["method", "snr_db", "criterion", "fold", "repeat", "value"];

fn fmt_snr(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        v.to_string()
    }
}

pub fn write_results_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(RESULTS_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.method.to_string(),
            fmt_snr(r.snr_db),
            r.criterion.to_string(),
            r.fold.to_string(),
            r.repeat.to_string(),
            r.value.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("results csv", e))?;
    Ok(())
}

/// Parses a results CSV; errors name the 1-based line of the offending row.
pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::MalformedRow { row: 1, message: e.to_string() })?;
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(Error::MalformedRow { row: 1, message: format!("expected header {}", RESULTS_HEADER.join(",")) });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let bad = |message: String| Error::MalformedRow { row, message };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != RESULTS_HEADER.len() {
            return Err(bad(format!("{} fields, expected {}", rec.len(), RESULTS_HEADER.len())));
        }
        let method = rec[0].parse().map_err(|e: Error| bad(e.to_string()))?;
        let snr_db: f64 = rec[1].parse().map_err(|_| bad(format!("snr_db {:?} is not a number", &rec[1])))?;
        let criterion = rec[2].parse().map_err(|e: Error| bad(e.to_string()))?;
        let fold = rec[3].parse().map_err(|_| bad(format!("fold {:?} is not an index", &rec[3])))?;
        let repeat = rec[4].parse().map_err(|_| bad(format!("repeat {:?} is not an index", &rec[4])))?;
        let value: f64 = rec[5].parse().map_err(|_| bad(format!("value {:?} is not a number", &rec[5])))?;
        if snr_db.is_nan() || !value.is_finite() {
            return Err(bad("non-finite snr or value".into()));
        }
        rows.push(ResultRow { method, snr_db, criterion, fold, repeat, value });
    }
    Ok(rows)
}

pub fn write_rank_table_csv<W: Write>(out: W, table: &RankTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["criterion", "snr_db", "method", "average_rank", "mean_value", "cases", "better_than"])?;
    for row in &table.rows {
        for (k, m) in row.methods.iter().enumerate() {
            let better: Vec<String> = row.better_than[k].iter().map(|b| b.to_string()).collect();
            wtr.write_record([
                row.criterion.to_string(),
                fmt_snr(row.snr_db),
                m.to_string(),
                row.ranks[k].to_string(),
                row.means[k].to_string(),
                row.cases.to_string(),
                better.join(";"),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("rank table csv", e))?;
    Ok(())
}

pub fn write_significance_csv<W: Write>(out: W, table: &RankTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["criterion", "snr_db", "method_a", "method_b", "p_value", "p_holm", "better"])?;
    for row in &table.rows {
        for t in &row.tests {
            let better = if t.adjusted >= crate::eval::SIGNIFICANCE_LEVEL || t.direction == 0.0 {
                String::new()
            } else if t.direction > 0.0 {
                t.first.to_string()
            } else {
                t.second.to_string()
            };
            wtr.write_record([
                row.criterion.to_string(),
                fmt_snr(row.snr_db),
                t.first.to_string(),
                t.second.to_string(),
                t.p_value.to_string(),
                t.adjusted.to_string(),
                better,
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("significance csv", e))?;
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Average rank against SNR for one criterion.
pub fn rank_plot_svg(table: &RankTable, criterion: Criterion) -> String {
    let methods = table.methods();
    let snrs = table.snrs();
    let k = methods.len().max(1) as f64;
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 110.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let x_of = |i: usize| {
        if snrs.len() <= 1 {
            left + pw / 2.0
        } else {
            left + pw * i as f64 / (snrs.len() - 1) as f64
        }
    };
    let y_of = |r: f64| if k > 1.0 { top + ph * (k - r) / (k - 1.0) } else { top + ph / 2.0 };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">Average rank ({})</text>"#,
        left + pw / 2.0,
        criterion
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for r in 1..=methods.len().max(1) {
        let y = y_of(r as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/><text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{r}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    for (i, snr) in snrs.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            x_of(i),
            top + ph + 16.0,
            fmt_snr(*snr)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">SNR [dB]</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    for (mi, m) in methods.iter().enumerate() {
        let color = PALETTE[mi % PALETTE.len()];
        let pts: Vec<(f64, f64)> = snrs
            .iter()
            .enumerate()
            .filter_map(|(i, snr)| table.row(criterion, *snr).map(|row| (x_of(i), y_of(row.ranks[mi]))))
            .collect();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-method="{m}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for (x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let ly = top + 14.0 + 18.0 * mi as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{m}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
