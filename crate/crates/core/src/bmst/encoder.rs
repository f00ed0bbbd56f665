use super::BmstSpec;
use crate::runcode::{add_mod, run_encode, GroupVector};
use crate::{Error, Result};

/// Encodes `L` information blocks into `L + m` transmitted blocks.
pub fn bmst_encode(spec: &BmstSpec, u_blocks: &[GroupVector]) -> Result<Vec<GroupVector>> {
    if u_blocks.len() != spec.blocks() {
        return Err(Error::LengthMismatch { expected: spec.blocks(), actual: u_blocks.len() });
    }
    let v: Vec<GroupVector> = u_blocks.iter().map(|u| run_encode(spec.basic(), u)).collect::<Result<_>>()?;
    bmst_encode_codewords(spec, &v)
}

/// Superposition step alone, starting from the `L` basic codewords `v`.
pub fn bmst_encode_codewords(spec: &BmstSpec, v: &[GroupVector]) -> Result<Vec<GroupVector>> {
    if v.len() != spec.blocks() {
        return Err(Error::LengthMismatch { expected: spec.blocks(), actual: v.len() });
    }
    let n = spec.block_len();
    let q = v[0].q();
    for b in v {
        if b.q() != q {
            return Err(Error::AlphabetMismatch { expected: q, actual: b.q() });
        }
        if b.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: b.len() });
        }
    }
    let m = spec.memory();
    let perms = spec.interleavers();
    (0..spec.total_blocks())
        .map(|t| {
            let mut c = if t < v.len() { v[t].symbols().to_vec() } else { vec![0; n] };
            for i in 1..=m.min(t) {
                let Some(src) = v.get(t - i) else { continue };
                let src = src.symbols();
                for (cj, &k) in c.iter_mut().zip(&perms[i - 1]) {
                    *cj = add_mod(*cj, src[k as usize], q);
                }
            }
            GroupVector::new(q, c)
        })
        .collect()
}
