//! Tab-separated table writers. Every table starts with a header row, even
//! when it has no data rows.

use std::io::Write;

use super::frequency::CoverageRow;
use super::histogram::Histogram;
use super::partition::{CorrectnessReport, PartitionReport};
use super::stats::DistributionStats;
use super::AnalyticsError;
use crate::tsv;

/// `rank  token  count`
pub fn write_frequencies(rows: &[(String, u64)], out: impl Write) -> Result<(), AnalyticsError> {
    let mut w = tsv::headerless_writer(out);
    w.write_record(["rank", "token", "count"])?;
    for (i, (tok, n)) in rows.iter().enumerate() {
        w.write_record([(i + 1).to_string(), tok.clone(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `cell  size`, where `cell` joins source names with `+`.
pub fn write_partition(report: &PartitionReport, out: impl Write) -> Result<(), AnalyticsError> {
    let mut w = tsv::headerless_writer(out);
    w.write_record(["cell", "size"])?;
    for (mask, items) in &report.cells {
        w.write_record([report.cell_names(*mask).join("+"), items.len().to_string()])?;
    }
    w.write_record(["universe".to_string(), report.universe_size.to_string()])?;
    w.flush()?;
    Ok(())
}

/// `token  bin_lo  bin_hi  count`; `token` is empty for a corpus-wide histogram.
pub fn write_histograms<'a>(
    histograms: impl IntoIterator<Item = (&'a str, &'a Histogram)>,
    out: impl Write,
) -> Result<(), AnalyticsError> {
    let mut w = tsv::headerless_writer(out);
    w.write_record(["token", "bin_lo", "bin_hi", "count"])?;
    for (token, h) in histograms {
        for (k, n) in &h.bins {
            let (lo, hi) = h.bin_bounds(*k);
            w.write_record([token.to_string(), lo.to_string(), hi.to_string(), n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `model  quantity  count  mean  std`
pub fn write_stats(stats: &[DistributionStats], out: impl Write) -> Result<(), AnalyticsError> {
    let mut w = tsv::headerless_writer(out);
    w.write_record(["model", "quantity", "count", "mean", "std"])?;
    for s in stats {
        for (q, v) in [
            ("prediction_probability", &s.prediction_probability),
            ("attribution_sum", &s.attribution_sum),
        ] {
            w.write_record([
                s.model.clone(),
                q.to_string(),
                v.count.to_string(),
                v.mean.to_string(),
                v.std.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `cell  count`, with `none` for the examples no model got right, then one
/// `accuracy:<model>` row per model and an `oracle_bound` row.
pub fn write_correctness(report: &CorrectnessReport, out: impl Write) -> Result<(), AnalyticsError> {
    let mut w = tsv::headerless_writer(out);
    w.write_record(["cell", "value"])?;
    for (mask, examples) in &report.cells {
        let name = if *mask == 0 {
            "none".to_string()
        } else {
            report.cell_names(*mask).join("+")
        };
        w.write_record([name, examples.len().to_string()])?;
    }
    for (m, acc) in report.models.iter().zip(&report.model_accuracy) {
        w.write_record([format!("accuracy:{m}"), acc.to_string()])?;
    }
    w.write_record(["oracle_bound".to_string(), report.oracle_bound.to_string()])?;
    w.flush()?;
    Ok(())
}

/// `token  count  present_in  missing`
pub fn write_coverage(rows: &[CoverageRow], out: impl Write) -> Result<(), AnalyticsError> {
    let mut w = tsv::headerless_writer(out);
    w.write_record(["token", "count", "present_in", "missing"])?;
    for r in rows {
        w.write_record([
            r.token.clone(),
            r.count.to_string(),
            r.present_in.join("+"),
            r.missing.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::histogram;

    #[test]
    fn histogram_triples() {
        let h = histogram([0.011, 0.019, -0.001], 0.01, None).unwrap();
        let mut buf = Vec::new();
        write_histograms([("", &h)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "token\tbin_lo\tbin_hi\tcount");
        assert_eq!(lines[1], "\t-0.01\t0\t1");
        assert_eq!(lines[2], "\t0.01\t0.02\t2");
    }
}
