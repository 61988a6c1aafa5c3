//! SDPA sparse format (`.dat-s`) writer and reader.
//!
//! An [`SdpProblem`] is written as the SDPA dual form
//! `max <F0, Y> s.t. <F_i, Y> = c_i, Y PSD`, with `Y` the PSD blocks followed
//! by one diagonal block holding the inequality slacks and the split free
//! scalars `v = v+ - v-`. A `* ioc-sdp:` comment records the split so the file
//! re-imports to the same problem; files without it import every row as an
//! equality and every diagonal-block entry as a 1x1 PSD block.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SdpError};
use crate::problem::{LinearExpr, SdpProblem, VarRef};

const MAX_ROWS: usize = 1_000_000;
const MAX_BLOCKS: usize = 100_000;
const MAX_BLOCK_SIZE: usize = 100_000;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders `p` in SDPA sparse format.
pub fn to_sdpa_string(p: &SdpProblem) -> Result<String> {
    p.validate()?;
    let ne = p.eq_constraints.len();
    let ni = p.ineq_constraints.len();
    let nf = p.free_scalars.len();
    let m = ne + ni;
    let lp_size = ni + 2 * nf;
    let mut sizes: Vec<i64> = p.psd_blocks.iter().map(|b| b.size as i64).collect();
    if lp_size > 0 {
        sizes.push(-(lp_size as i64));
    }
    let lp_blk = p.psd_blocks.len() + 1;

    let mut out = String::new();
    out.push_str("\"ioc-sdp problem in SDPA sparse format\n");
    let _ = writeln!(out, "* ioc-sdp: free={nf} ineq={ni} eq={ne}");
    let _ = writeln!(out, "{m} =mDIM");
    let _ = writeln!(out, "{} =nBLOCK", sizes.len());
    let _ = writeln!(
        out,
        "{}",
        sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
    );
    let rhs: Vec<String> = p
        .eq_constraints
        .iter()
        .chain(&p.ineq_constraints)
        .map(|r| num(r.rhs))
        .collect();
    let _ = writeln!(out, "{}", rhs.join(" "));

    let mut emit = |mat: usize, expr: &LinearExpr, sign: f64, slack: Option<usize>| {
        let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();
        for &(var, coef) in expr.terms() {
            match var {
                VarRef::Psd { block, row, col } => {
                    let v = if row == col { coef } else { coef / 2.0 };
                    entries.push((block + 1, row + 1, col + 1, sign * v));
                }
                VarRef::Free(k) => {
                    let plus = ni + k + 1;
                    let minus = ni + nf + k + 1;
                    entries.push((lp_blk, plus, plus, sign * coef));
                    entries.push((lp_blk, minus, minus, -sign * coef));
                }
            }
        }
        if let Some(k) = slack {
            entries.push((lp_blk, k + 1, k + 1, 1.0));
        }
        entries.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
        for (blk, i, j, v) in entries {
            let _ = writeln!(out, "{mat} {blk} {i} {j} {}", num(v));
        }
    };
    emit(0, &p.objective, -1.0, None);
    for (i, row) in p.eq_constraints.iter().enumerate() {
        emit(i + 1, &row.expr, 1.0, None);
    }
    for (k, row) in p.ineq_constraints.iter().enumerate() {
        emit(ne + k + 1, &row.expr, 1.0, Some(k));
    }
    Ok(out)
}

/// Writes `p` to `path` in SDPA sparse format.
pub fn export_sdpa(p: &SdpProblem, path: impl AsRef<Path>) -> Result<()> {
    let text = to_sdpa_string(p)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn import_sdpa(path: impl AsRef<Path>) -> Result<SdpProblem> {
    let text = std::fs::read_to_string(path)?;
    parse_sdpa(&text)
}

#[derive(Clone, Copy)]
struct Meta {
    free: usize,
    ineq: usize,
    eq: usize,
}

fn parse_meta(line: &str) -> Option<Meta> {
    let rest = line.trim_start_matches('*').trim().strip_prefix("ioc-sdp:")?;
    let mut free = None;
    let mut ineq = None;
    let mut eq = None;
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=')?;
        let v: usize = v.parse().ok()?;
        match k {
            "free" => free = Some(v),
            "ineq" => ineq = Some(v),
            "eq" => eq = Some(v),
            _ => {}
        }
    }
    Some(Meta {
        free: free?,
        ineq: ineq?,
        eq: eq?,
    })
}

fn err(line: usize, msg: impl Into<String>) -> SdpError {
    SdpError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Leading numeric tokens of a line; the first non-numeric token ends the line.
fn numeric_prefix(line: &str) -> Vec<&str> {
    line.split_whitespace()
        .take_while(|t| t.parse::<f64>().is_ok())
        .collect()
}

/// Parses SDPA sparse text produced by [`to_sdpa_string`] or any other writer.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut meta = None;
    let mut lines = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let trimmed = raw.trim_start();
        if trimmed.starts_with('"') || trimmed.starts_with('*') {
            if let Some(m) = parse_meta(trimmed) {
                meta = Some(m);
            }
            continue;
        }
        let cleaned: String = raw
            .chars()
            .map(|c| if matches!(c, '{' | '}' | '(' | ')' | ',') { ' ' } else { c })
            .collect();
        if cleaned.trim().is_empty() {
            continue;
        }
        lines.push((no + 1, cleaned));
    }
    let mut it = lines.iter();

    let mut header_int = |what: &str| -> Result<(usize, i64)> {
        let (no, line) = it.next().ok_or_else(|| err(0, format!("missing {what}")))?;
        let toks = numeric_prefix(line);
        let t = toks.first().ok_or_else(|| err(*no, format!("expected {what}")))?;
        let v: i64 = t.parse().map_err(|_| err(*no, format!("{what} must be an integer")))?;
        Ok((*no, v))
    };
    let (no, m) = header_int("mDIM")?;
    if m < 0 || m as usize > MAX_ROWS {
        return Err(err(no, "mDIM out of range"));
    }
    let m = m as usize;
    let (no, nblock) = header_int("nBLOCK")?;
    if nblock < 0 || nblock as usize > MAX_BLOCKS {
        return Err(err(no, "nBLOCK out of range"));
    }
    let nblock = nblock as usize;

    // remaining content as a token stream with line numbers
    let mut tokens = lines
        .iter()
        .skip(2)
        .flat_map(|(no, l)| l.split_whitespace().map(move |t| (*no, t)));
    let mut sizes = Vec::with_capacity(nblock);
    for _ in 0..nblock {
        let (no, t) = tokens.next().ok_or_else(|| err(0, "missing block size"))?;
        let s: i64 = t
            .parse::<i64>()
            .or_else(|_| t.parse::<f64>().map(|f| f as i64))
            .map_err(|_| err(no, "bad block size"))?;
        if s == 0 || s.unsigned_abs() as usize > MAX_BLOCK_SIZE {
            return Err(err(no, "block size out of range"));
        }
        sizes.push(s);
    }
    let mut rhs = Vec::with_capacity(m);
    for _ in 0..m {
        let (no, t) = tokens.next().ok_or_else(|| err(0, "missing objective vector entry"))?;
        let v: f64 = t.parse().map_err(|_| err(no, "bad number"))?;
        if !v.is_finite() {
            return Err(err(no, "non-finite number"));
        }
        rhs.push(v);
    }

    let lp_index = sizes.iter().position(|s| *s < 0);
    if let Some(meta) = meta {
        if meta.eq.checked_add(meta.ineq) != Some(m) {
            return Err(err(0, "metadata row counts do not match mDIM"));
        }
        let lp_size = meta.free.checked_mul(2).and_then(|f| f.checked_add(meta.ineq));
        let lp_ok = match lp_index {
            None => lp_size == Some(0),
            Some(k) => k + 1 == nblock && Some(sizes[k].unsigned_abs() as usize) == lp_size,
        };
        if !lp_ok {
            return Err(err(0, "metadata does not match the diagonal block"));
        }
    }

    let mut p = SdpProblem::new();
    // block id -> either a PSD block or the diagonal block
    let mut psd_id: Vec<Option<usize>> = vec![None; nblock];
    let mut diag_blocks: Vec<Vec<usize>> = vec![Vec::new(); nblock];
    for (k, &s) in sizes.iter().enumerate() {
        if s > 0 {
            psd_id[k] = Some(p.add_psd_block(s as usize, format!("block{}", k + 1)));
        } else if meta.is_none() {
            diag_blocks[k] = (0..(-s) as usize)
                .map(|i| p.add_psd_block(1, format!("block{}[{}]", k + 1, i + 1)))
                .collect();
        }
    }
    if let Some(meta) = meta {
        for k in 0..meta.free {
            p.add_free(format!("v{k}"));
        }
    }

    let mut terms: Vec<Vec<(VarRef, f64)>> = vec![Vec::new(); m + 1];
    loop {
        let Some((no, t)) = tokens.next() else { break };
        let mut fields = [0i64; 4];
        fields[0] = t.parse().map_err(|_| err(no, "bad matrix number"))?;
        for f in fields.iter_mut().skip(1) {
            let (no2, t2) = tokens.next().ok_or_else(|| err(no, "truncated entry"))?;
            *f = t2.parse().map_err(|_| err(no2, "bad index"))?;
        }
        let (no, t) = tokens.next().ok_or_else(|| err(no, "truncated entry"))?;
        let val: f64 = t.parse().map_err(|_| err(no, "bad value"))?;
        if !val.is_finite() {
            return Err(err(no, "non-finite value"));
        }
        let [mat, blk, i, j] = fields;
        if mat < 0 || mat as usize > m {
            return Err(err(no, "matrix number out of range"));
        }
        if blk < 1 || blk as usize > nblock {
            return Err(err(no, "block number out of range"));
        }
        let bk = blk as usize - 1;
        let size = sizes[bk].unsigned_abs() as i64;
        if i < 1 || j < 1 || i > size || j > size {
            return Err(err(no, "entry index out of range"));
        }
        let (i, j) = ((i - 1) as usize, (j - 1) as usize);
        let mat = mat as usize;
        // the objective matrix F0 is the negated primal objective
        let sign = if mat == 0 { -1.0 } else { 1.0 };
        if let Some(b) = psd_id[bk] {
            let v = if i == j { val } else { 2.0 * val };
            terms[mat].push((VarRef::psd(b, i, j), sign * v));
        } else {
            if i != j {
                return Err(err(no, "off-diagonal entry in a diagonal block"));
            }
            match meta {
                None => terms[mat].push((VarRef::psd(diag_blocks[bk][i], 0, 0), sign * val)),
                Some(meta) => {
                    // slack and v- positions are implied by the layout
                    if i >= meta.ineq && i < meta.ineq + meta.free {
                        terms[mat].push((VarRef::Free(i - meta.ineq), sign * val));
                    }
                }
            }
        }
    }

    let mut terms = terms.into_iter();
    p.set_objective(LinearExpr::from_terms(terms.next().unwrap_or_default()));
    let n_eq = meta.map(|mm| mm.eq).unwrap_or(m);
    for (r, (row, b)) in terms.zip(rhs).enumerate() {
        let expr = LinearExpr::from_terms(row);
        if r < n_eq {
            p.add_eq(expr, b, format!("eq{r}"));
        } else {
            p.add_ineq(expr, b, format!("ineq{}", r - n_eq));
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_problem() -> SdpProblem {
        let mut p = SdpProblem::new();
        let q = p.add_psd_block(2, "Q");
        p.set_objective(LinearExpr::from_terms([
            (VarRef::psd(q, 0, 0), 1.0),
            (VarRef::psd(q, 1, 1), 1.0),
        ]));
        p.add_eq(LinearExpr::from_terms([(VarRef::psd(q, 0, 0), 1.0)]), 1.0, "q11");
        p.add_eq(LinearExpr::from_terms([(VarRef::psd(q, 1, 1), 1.0)]), 1.0, "q22");
        p
    }

    #[test]
    fn trace_problem_header() {
        let text = to_sdpa_string(&trace_problem()).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with(['"', '*'])).collect();
        assert_eq!(body[0], "2 =mDIM");
        assert_eq!(body[1], "1 =nBLOCK");
        assert_eq!(body[2], "2");
        assert_eq!(body[3], "1.0000000000000000e0 1.0000000000000000e0");
        assert_eq!(body[4], "0 1 1 1 -1.0000000000000000e0");
    }

    #[test]
    fn empty_problem_is_an_error() {
        assert!(to_sdpa_string(&SdpProblem::new()).is_err());
    }

    #[test]
    fn round_trip_with_free_and_inequalities() {
        let mut p = SdpProblem::new();
        let b = p.add_psd_block(3, "G");
        let e = p.add_free("eps");
        p.set_objective(LinearExpr::from_terms([(VarRef::Free(e), 1.0)]));
        p.add_eq(
            LinearExpr::from_terms([
                (VarRef::psd(b, 0, 1), 0.1),
                (VarRef::psd(b, 2, 2), -1.0 / 3.0),
                (VarRef::Free(e), 2.5),
            ]),
            std::f64::consts::PI,
            "eq0",
        );
        p.add_ineq(
            LinearExpr::from_terms([(VarRef::Free(e), -1.0), (VarRef::psd(b, 1, 2), 1e-300)]),
            1.0,
            "ineq0",
        );
        let back = parse_sdpa(&to_sdpa_string(&p).unwrap()).unwrap();
        assert_eq!(back.objective, p.objective);
        assert_eq!(back.eq_constraints[0].expr, p.eq_constraints[0].expr);
        assert_eq!(back.eq_constraints[0].rhs, p.eq_constraints[0].rhs);
        assert_eq!(back.ineq_constraints[0].expr, p.ineq_constraints[0].expr);
        assert_eq!(back.psd_blocks.len(), 1);
        assert_eq!(back.free_scalars.len(), 1);
    }

    #[test]
    fn foreign_file_with_punctuation_and_diagonal_block() {
        let text = "\"comment\n1 =mDIM\n2 =nBLOCK\n{2, -1}\n(3.0)\n0 1 1 2 0.5\n1 1 1 1 1.0\n1 2 1 1 1.0\n";
        let p = parse_sdpa(text).unwrap();
        assert_eq!(p.psd_blocks.len(), 2);
        assert_eq!(p.eq_constraints.len(), 1);
        assert_eq!(p.objective.coefficient(VarRef::psd(0, 0, 1)), -1.0);
        assert_eq!(p.eq_constraints[0].rhs, 3.0);
    }

    #[test]
    fn malformed_inputs_are_errors() {
        for text in [
            "",
            "x\n",
            "1\n1\n0\n1\n",
            "1\n1\n2\n1\n5 1 1 1 1\n",
            "1\n1\n2\n1\n1 1 3 1 1\n",
            "1\n1\n2\n1\n1 1 1 1 nan\n",
            "1\n1\n2\n1\n1 1 1\n",
        ] {
            assert!(parse_sdpa(text).is_err(), "accepted {text:?}");
        }
    }
}
