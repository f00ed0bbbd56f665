use std::io::Write;

use super::TraceRecord;
use crate::runcode::GroupVector;
use crate::Result;

/// Writes one CSV row per block and sequence: `block,kind,symbols`, with
/// `kind` one of `u`, `v`, `c` and the symbols space-separated.
pub fn write_frame_dump<W: Write>(out: W, u: &[GroupVector], v: &[GroupVector], c: &[GroupVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["block", "kind", "symbols"])?;
    for (kind, seq) in [("u", u), ("v", v), ("c", c)] {
        for (t, b) in seq.iter().enumerate() {
            let syms: Vec<String> = b.symbols().iter().map(|s| s.to_string()).collect();
            w.write_record([t.to_string(), kind.to_string(), syms.join(" ")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes decoder trace records as CSV.
pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["target", "iteration", "layer", "mean_entropy_bits"])?;
    for r in trace {
        w.write_record([r.target.to_string(), r.iteration.to_string(), r.layer.to_string(), format!("{:.6e}", r.mean_entropy_bits)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_dump_layout() {
        let u = vec![GroupVector::new(3, vec![1, 2]).unwrap()];
        let v = vec![GroupVector::new(3, vec![1, 1, 2]).unwrap()];
        let mut buf = Vec::new();
        write_frame_dump(&mut buf, &u, &v, &v).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "block,kind,symbols\n0,u,1 2\n0,v,1 1 2\n0,c,1 1 2\n");
    }

    #[test]
    fn trace_layout() {
        let r = TraceRecord { target: 0, iteration: 1, layer: 2, mean_entropy_bits: 0.5 };
        let mut buf = Vec::new();
        write_trace(&mut buf, &[r]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "target,iteration,layer,mean_entropy_bits\n0,1,2,5.000000e-1\n");
    }
}
