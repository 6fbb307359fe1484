use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "elapsed_s,evals,best_value";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub elapsed: f64,
    /// Cumulative term evaluations.
    pub evals: u64,
    /// Lowest true objective value found so far.
    pub best: f64,
}

impl Record {
    pub fn csv_line(&self) -> String {
        format!("{:.6},{},{}", self.elapsed, self.evals, self.best)
    }
}

/// Best value found against time and evaluations. Times and evaluation
/// counts never decrease and best values never increase.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    records: Vec<Record>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best)
    }

    /// Appends `r`, refusing records that would break the ordering.
    pub fn push(&mut self, r: Record) -> bool {
        if let Some(last) = self.records.last() {
            if r.elapsed < last.elapsed || r.evals < last.evals || r.best > last.best || r.best.is_nan() {
                return false;
            }
        }
        self.records.push(r);
        true
    }

    pub fn is_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[0].elapsed <= w[1].elapsed && w[0].evals <= w[1].evals && w[1].best <= w[0].best)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.records {
            s += &r.csv_line();
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::config("trajectory CSV header mismatch"));
        }
        let mut t = Trajectory::new();
        for (i, line) in lines.enumerate() {
            let bad = || Error::config(format!("trajectory CSV line {}: `{line}`", i + 2));
            let mut parts = line.split(',');
            let mut next = || parts.next().ok_or_else(bad);
            let r = Record {
                elapsed: next()?.parse().map_err(|_| bad())?,
                evals: next()?.parse().map_err(|_| bad())?,
                best: next()?.parse().map_err(|_| bad())?,
            };
            if !t.push(r) {
                return Err(bad());
            }
        }
        Ok(t)
    }
}

/// Appends records to a CSV file as they arrive, flushing after each line so
/// an interrupted run keeps everything recorded so far.
pub struct CsvSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(Error::io(path))?;
        let mut sink = CsvSink {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        sink.line(CSV_HEADER)?;
        Ok(sink)
    }

    pub fn write(&mut self, r: &Record) -> Result<()> {
        self.line(&r.csv_line())
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(Error::io(&self.path))
    }
}

/// A self-contained SVG chart of best value against evaluations, one step
/// line per trajectory.
pub fn svg_chart(title: &str, series: &[(&str, &Trajectory)]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    let (left, right, top, bottom) = (80.0, 160.0, 40.0, 50.0);
    const COLORS: [&str; 8] = [
        "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    ];
    let points = series.iter().flat_map(|(_, t)| t.records());
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for r in points {
        x_max = x_max.max(r.evals as f64);
        y_min = y_min.min(r.best);
        y_max = y_max.max(r.best);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let px = |e: f64| left + e / x_max * (W - left - right);
    let py = |v: f64| top + (y_max - v) / (y_max - y_min) * (H - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#,
        H - bottom,
        W - right
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">evaluations</text>"#,
        (left + W - right) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">0</text>"#,
        left,
        H - bottom + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{x_max}</text>"#,
        W - right,
        H - bottom + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.4e}</text>"#,
        left - 6.0,
        top + 4.0,
        y_max
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.4e}</text>"#,
        left - 6.0,
        H - bottom,
        y_min
    );
    for (i, (name, t)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for (k, r) in t.records().iter().enumerate() {
            let (x, y) = (px(r.evals as f64), py(r.best));
            if k == 0 {
                let _ = write!(d, "M{x:.2} {y:.2}");
            } else {
                let _ = write!(d, " H{x:.2} V{y:.2}");
            }
        }
        if !d.is_empty() {
            let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        }
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            W - right + 10.0,
            W - right + 30.0,
            W - right + 36.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(elapsed: f64, evals: u64, best: f64) -> Record {
        Record { elapsed, evals, best }
    }

    #[test]
    fn out_of_order_records_are_refused() {
        let mut t = Trajectory::new();
        assert!(t.push(rec(0.0, 10, 5.0)));
        assert!(!t.push(rec(0.0, 9, 4.0)));
        assert!(!t.push(rec(0.0, 11, 6.0)));
        assert!(t.push(rec(0.5, 11, 5.0)));
        assert_eq!(t.records().len(), 2);
    }

    #[test]
    fn csv_round_trips() {
        let mut t = Trajectory::new();
        t.push(rec(0.0, 3, 12.5));
        t.push(rec(0.25, 40, -0.1));
        t.push(rec(1.5, 41, -1e-20));
        let back = Trajectory::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(Trajectory::from_csv("time,evals,best\n").is_err());
    }

    #[test]
    fn sink_flushes_every_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut sink = CsvSink::create(&path).unwrap();
        sink.write(&rec(0.0, 1, 2.0)).unwrap();
        // still open, yet the line is already on disk
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "elapsed_s,evals,best_value\n0.000000,1,2\n"
        );
        drop(sink);
    }

    #[test]
    fn chart_has_one_line_per_series() {
        let mut a = Trajectory::new();
        a.push(rec(0.0, 0, 3.0));
        a.push(rec(0.0, 100, 1.0));
        let b = Trajectory::new();
        let svg = svg_chart("a <b>", &[("rdis", &a), ("cgd", &b)]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 1);
        assert!(svg.contains("a &lt;b&gt;"));
    }

    proptest! {
        #[test]
        fn accepted_records_stay_monotone(steps in prop::collection::vec((0.0..1.0f64, 0u64..50, -1.0..1.0f64), 0..40)) {
            let mut t = Trajectory::new();
            let (mut time, mut evals, mut best) = (0.0, 0u64, 0.0);
            for (dt, de, db) in steps {
                let r = rec(time + dt - 0.2, evals + de, best + db);
                if t.push(r) {
                    (time, evals, best) = (r.elapsed, r.evals, r.best);
                }
            }
            prop_assert!(t.is_monotone());
        }
    }
}
