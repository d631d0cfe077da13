//! CSV and JSON-lines output.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::SampleSet;
use crate::refinement::LevelSolution;

/// Writes one sample per row with 17 significant digits, so values round-trip
/// exactly.
pub fn write_samples<W: Write>(out: W, samples: &SampleSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in samples.points() {
        w.write_record(p.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Coupling triplets of a level, keyed by the grid linear indices.
pub fn write_coupling<W: Write>(out: W, level: &LevelSolution) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "source_cell_linear_index",
        "target_cell_linear_index",
        "lambda",
    ])?;
    let src = level.source.partition.cells();
    let tgt = level.target.partition.cells();
    for (&(i, j), &v) in level.pattern.pairs().iter().zip(&level.coupling.values) {
        if v > 0.0 {
            w.write_record([
                src[i].linear.to_string(),
                tgt[j].linear.to_string(),
                format!("{v:.16e}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json_lines<W: Write, T: Serialize>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::load_samples;

    #[test]
    fn samples_round_trip_exactly() {
        let s = SampleSet::new(2, vec![0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567]).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &s).unwrap();
        let back = load_samples(buf.as_slice(), false).unwrap();
        assert_eq!(back, s);
    }
}
