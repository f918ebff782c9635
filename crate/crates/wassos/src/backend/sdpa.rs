//! SDPA sparse format (`.dat-s`) writer and reader.
//!
//! The file encodes the standard SDPA pair with our equality form on the dual
//! side: constraint matrices are our rows, the objective line carries our
//! right-hand sides, and matrix 0 holds our objective. A minimize-sense form
//! is exported with matrix 0 negated so external solvers still see the
//! canonical max-trace dual; the leading comment records the original sense.
//!
//! Free scalars are split into differences of two adjacent nonnegative
//! diagonal entries appended after the declared nonnegative scalars; the
//! comment line records both counts so [`parse_sdpa_str`] reconstructs the
//! original form exactly. Output is byte-deterministic: entries are sorted
//! canonically, floats use the shortest round-trip representation, and line
//! endings are LF.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::backend::{BackendError, ConicStandardForm, Sense, VarRef};
use crate::Scalar;

/// Writes `form` to `destination` in SDPA sparse format.
pub fn export_sdpa<T: Scalar>(form: &ConicStandardForm<T>, destination: &Path) -> Result<(), BackendError> {
    let mut buf = Vec::new();
    write_sdpa(form, &mut buf)?;
    fs::write(destination, buf)?;
    Ok(())
}

/// Serializes `form` into any writer; see the module docs for the layout.
pub fn write_sdpa<T: Scalar>(form: &ConicStandardForm<T>, w: &mut dyn Write) -> Result<(), BackendError> {
    let nn = form.nonneg_len;
    let nf = form.free_len;
    let lp_len = nn + 2 * nf;
    let sense = match form.sense {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    };
    writeln!(w, "\"wassos sense={} nonneg={} free={}", sense, nn, nf)?;
    writeln!(w, "{}", form.rows.len())?;
    let nblocks = form.block_sizes.len() + usize::from(lp_len > 0);
    writeln!(w, "{}", nblocks)?;
    let mut sizes: Vec<String> = form.block_sizes.iter().map(|s| s.to_string()).collect();
    if lp_len > 0 {
        sizes.push(format!("-{}", lp_len));
    }
    writeln!(w, "{}", sizes.join(" "))?;
    let rhs: Vec<String> = form.rhs.iter().map(|v| fmt_val(v.to64())).collect();
    writeln!(w, "{}", rhs.join(" "))?;

    let obj_sign = match form.sense {
        Sense::Minimize => -1.0,
        Sense::Maximize => 1.0,
    };
    let lp_block = form.block_sizes.len() + 1;
    write_matrix(w, 0, form.block_sizes.len(), lp_block, nn, &form.objective, obj_sign)?;
    for (p, row) in form.rows.iter().enumerate() {
        write_matrix(w, p + 1, form.block_sizes.len(), lp_block, nn, row, 1.0)?;
    }
    Ok(())
}

fn write_matrix<T: Scalar>(
    w: &mut dyn Write,
    matno: usize,
    npsd: usize,
    lp_block: usize,
    nn: usize,
    entries: &[(VarRef, T)],
    sign: f64,
) -> io::Result<()> {
    // (blkno, i, j, value) with 1-based indices, canonical order, zeros skipped.
    let mut lines: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (r, v) in entries {
        let v = v.to64() * sign;
        if v == 0.0 {
            continue;
        }
        match *r {
            VarRef::Psd { block, i, j } => {
                lines.push((block as usize + 1, i as usize + 1, j as usize + 1, v));
            }
            VarRef::Nonneg(k) => {
                let pos = k as usize + 1;
                lines.push((lp_block, pos, pos, v));
            }
            VarRef::Free(k) => {
                let plus = nn + 2 * k as usize + 1;
                lines.push((lp_block, plus, plus, v));
                lines.push((lp_block, plus + 1, plus + 1, -v));
            }
        }
    }
    debug_assert!(npsd < lp_block);
    lines.sort_by(|a, b| {
        (a.0, a.1, a.2)
            .cmp(&(b.0, b.1, b.2))
            .then(a.3.partial_cmp(&b.3).unwrap())
    });
    for (blk, i, j, v) in lines {
        writeln!(w, "{} {} {} {} {}", matno, blk, i, j, fmt_val(v))?;
    }
    Ok(())
}

fn fmt_val(v: f64) -> String {
    // Shortest representation that round-trips the exact bits.
    format!("{}", v)
}

/// Reads an SDPA sparse file back into a [`ConicStandardForm`].
pub fn parse_sdpa<T: Scalar>(source: &Path) -> Result<ConicStandardForm<T>, BackendError> {
    let text = fs::read_to_string(source)?;
    parse_sdpa_str(&text)
}

/// Parses SDPA sparse text. On files produced by [`write_sdpa`] this is an
/// exact inverse; generic files parse with sense `max` and all diagonal
/// blocks mapped to nonnegative scalars.
pub fn parse_sdpa_str<T: Scalar>(text: &str) -> Result<ConicStandardForm<T>, BackendError> {
    let err = |line: usize, message: &str| BackendError::Parse {
        line,
        message: message.to_string(),
    };
    let mut sense = Sense::Maximize;
    let mut declared_nn: Option<usize> = None;
    let mut declared_free: Option<usize> = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, l)) = lines.peek() {
        let trimmed = l.trim_start();
        if trimmed.starts_with('"') || trimmed.starts_with('*') {
            for token in trimmed.trim_start_matches(['"', '*']).split_whitespace() {
                if let Some(v) = token.strip_prefix("sense=") {
                    sense = if v == "min" { Sense::Minimize } else { Sense::Maximize };
                } else if let Some(v) = token.strip_prefix("nonneg=") {
                    declared_nn = v.parse().ok();
                } else if let Some(v) = token.strip_prefix("free=") {
                    declared_free = v.parse().ok();
                }
            }
            lines.next();
        } else {
            break;
        }
    }

    let mut next_data = || -> Option<(usize, String)> {
        for (n, l) in lines.by_ref() {
            let cleaned: String = l
                .chars()
                .map(|c| if matches!(c, '{' | '}' | '(' | ')' | ',') { ' ' } else { c })
                .collect();
            if !cleaned.trim().is_empty() {
                return Some((n + 1, cleaned));
            }
        }
        None
    };

    let (ln, l) = next_data().ok_or_else(|| err(0, "missing constraint count"))?;
    let m: usize = l
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(ln, "invalid constraint count"))?;
    let (ln, l) = next_data().ok_or_else(|| err(ln, "missing block count"))?;
    let nblocks: usize = l
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(ln, "invalid block count"))?;
    // Empty size/objective lines (zero blocks or zero constraints) are
    // swallowed by the blank-line filter, so consume them only when needed.
    let sizes: Vec<i64> = if nblocks == 0 {
        Vec::new()
    } else {
        let (sln, l) = next_data().ok_or_else(|| err(ln, "missing block sizes"))?;
        let sizes: Vec<i64> = l
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err(sln, "invalid block size"))?;
        if sizes.len() != nblocks {
            return Err(err(sln, "block size count differs from declared block count"));
        }
        sizes
    };
    let rhs: Vec<T> = if m == 0 {
        Vec::new()
    } else {
        let (rln, l) = next_data().ok_or_else(|| err(ln, "missing objective line"))?;
        let rhs: Vec<T> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map(T::of))
            .collect::<Result<_, _>>()
            .map_err(|_| err(rln, "invalid objective value"))?;
        if rhs.len() != m {
            return Err(err(rln, "objective line length differs from constraint count"));
        }
        rhs
    };

    // Split block layout: PSD blocks keep their position; all negative blocks
    // concatenate into the scalar segment in order.
    let mut psd_sizes = Vec::new();
    let mut block_map: Vec<BlockSlot> = Vec::new();
    let mut scalar_len = 0usize;
    for s in &sizes {
        if *s >= 0 {
            block_map.push(BlockSlot::Psd(psd_sizes.len()));
            psd_sizes.push(*s as usize);
        } else {
            block_map.push(BlockSlot::Diag(scalar_len));
            scalar_len += (-s) as usize;
        }
    }
    let (nn, nf) = match (declared_nn, declared_free) {
        (Some(nn), Some(nf)) if nn + 2 * nf == scalar_len => (nn, nf),
        _ => (scalar_len, 0),
    };

    let mut objective: Vec<(VarRef, T)> = Vec::new();
    let mut rows: Vec<Vec<(VarRef, T)>> = vec![Vec::new(); m];
    while let Some((ln, l)) = next_data() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(err(ln, "entry lines need 5 fields: matno blkno i j value"));
        }
        let matno: usize = toks[0].parse().map_err(|_| err(ln, "invalid matrix number"))?;
        let blkno: usize = toks[1].parse().map_err(|_| err(ln, "invalid block number"))?;
        let i: usize = toks[2].parse().map_err(|_| err(ln, "invalid row index"))?;
        let j: usize = toks[3].parse().map_err(|_| err(ln, "invalid column index"))?;
        let value: f64 = toks[4].parse().map_err(|_| err(ln, "invalid value"))?;
        if matno > m {
            return Err(err(ln, "matrix number exceeds constraint count"));
        }
        if blkno == 0 || blkno > block_map.len() {
            return Err(err(ln, "block number out of range"));
        }
        let slot = block_map[blkno - 1];
        let vr = match slot {
            BlockSlot::Psd(b) => {
                if i == 0 || j == 0 || i > j {
                    return Err(err(ln, "PSD entries need 1-based i <= j"));
                }
                Some(VarRef::Psd {
                    block: b as u32,
                    i: (i - 1) as u32,
                    j: (j - 1) as u32,
                })
            }
            BlockSlot::Diag(offset) => {
                if i != j {
                    return Err(err(ln, "diagonal blocks only admit diagonal entries"));
                }
                let pos = offset + i - 1;
                if pos < nn {
                    Some(VarRef::Nonneg(pos as u32))
                } else {
                    let off = pos - nn;
                    // Of each split pair only the + slot carries data.
                    (off % 2 == 0).then_some(VarRef::Free((off / 2) as u32))
                }
            }
        };
        let Some(vr) = vr else { continue };
        let sign = if matno == 0 && sense == Sense::Minimize {
            -1.0
        } else {
            1.0
        };
        let entry = (vr, T::of(value * sign));
        if matno == 0 {
            objective.push(entry);
        } else {
            rows[matno - 1].push(entry);
        }
    }

    objective.sort_by(|(a, _), (b, _)| a.cmp(b));
    for row in &mut rows {
        row.sort_by(|(a, _), (b, _)| a.cmp(b));
    }

    Ok(ConicStandardForm {
        sense,
        block_sizes: psd_sizes,
        nonneg_len: nn,
        free_len: nf,
        rows,
        rhs,
        objective,
    })
}

#[derive(Clone, Copy)]
enum BlockSlot {
    Psd(usize),
    Diag(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{ConicStandardForm, Sense, VarRef};

    fn toy() -> ConicStandardForm<f64> {
        ConicStandardForm {
            sense: Sense::Maximize,
            block_sizes: vec![2],
            nonneg_len: 0,
            free_len: 0,
            rows: vec![
                vec![(VarRef::Psd { block: 0, i: 0, j: 0 }, 1.0)],
                vec![(VarRef::Psd { block: 0, i: 1, j: 1 }, 1.0)],
            ],
            rhs: vec![1.0, 1.0],
            objective: vec![(VarRef::Psd { block: 0, i: 0, j: 1 }, 0.5)],
        }
    }

    #[test]
    fn toy_has_three_entry_lines_and_one_block() {
        let mut buf = Vec::new();
        write_sdpa(&toy(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let entry_lines = text
            .lines()
            .filter(|l| l.split_whitespace().count() == 5)
            .count();
        assert_eq!(entry_lines, 3, "{text}");
        assert!(text.lines().any(|l| l.trim() == "1"), "one block declared");
    }

    #[test]
    fn structural_roundtrip() {
        let form = toy();
        let mut buf = Vec::new();
        write_sdpa(&form, &mut buf).unwrap();
        let parsed: ConicStandardForm<f64> = parse_sdpa_str(&String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(parsed, form);
    }

    #[test]
    fn byte_roundtrip_with_free_split() {
        let form = ConicStandardForm::<f64> {
            sense: Sense::Minimize,
            block_sizes: vec![2],
            nonneg_len: 1,
            free_len: 2,
            rows: vec![
                vec![
                    (VarRef::Free(0), -1.5),
                    (VarRef::Nonneg(0), 2.0),
                    (VarRef::Psd { block: 0, i: 0, j: 1 }, 0.25),
                ],
                vec![(VarRef::Free(1), 3.0)],
            ],
            rhs: vec![0.5, -1.0],
            objective: vec![(VarRef::Free(0), 1.0), (VarRef::Nonneg(0), -0.125)],
        };
        let mut first = Vec::new();
        write_sdpa(&form, &mut first).unwrap();
        let parsed: ConicStandardForm<f64> =
            parse_sdpa_str(&String::from_utf8(first.clone()).unwrap()).unwrap();
        assert_eq!(parsed, form);
        let mut second = Vec::new();
        write_sdpa(&parsed, &mut second).unwrap();
        assert_eq!(first, second, "re-export must be byte-identical");
    }

    #[test]
    fn empty_problem_round_trips() {
        let form = ConicStandardForm::<f64> {
            sense: Sense::Maximize,
            block_sizes: vec![],
            nonneg_len: 0,
            free_len: 0,
            rows: vec![],
            rhs: vec![],
            objective: vec![],
        };
        let mut buf = Vec::new();
        write_sdpa(&form, &mut buf).unwrap();
        let parsed: ConicStandardForm<f64> = parse_sdpa_str(&String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(parsed, form);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "2\n1\n2\n1.0 1.0\n1 1 1\n";
        let e = parse_sdpa_str::<f64>(bad).unwrap_err();
        match e {
            crate::backend::BackendError::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
