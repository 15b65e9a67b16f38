//! Free-format MPS with a `QMATRIX` section, for MIQP-shaped programs:
//! linear `Zero` / `Nonnegative` blocks, a quadratic objective, bounds and
//! integrality flags. Each block row becomes one named MPS row.

use std::fmt::Write as _;

use super::{fmt_num, AffineExpr, Cone, ConicError, ConicProgram, Objective, ProgramMeta, QuadTerm};

fn col_names(p: &ConicProgram) -> Vec<String> {
    (0..p.num_vars).map(|j| p.meta.var_name(j)).collect()
}

pub fn export_mps(p: &ConicProgram) -> Result<String, ConicError> {
    if let Some(c) = p.constraints.iter().find(|c| !c.cone.is_linear()) {
        return Err(ConicError::NotMiqpShaped(format!("non-linear cone {}", c.cone)));
    }
    if let Some(d) = super::validate(p).first() {
        return Err(ConicError::Invalid(d.to_string()));
    }
    let names = col_names(p);

    // (row name, sense, terms, rhs)
    let mut rows: Vec<(String, char, Vec<(usize, f64)>, f64)> = Vec::new();
    for c in &p.constraints {
        let sense = if matches!(c.cone, Cone::Zero(_)) { 'E' } else { 'G' };
        for r in &c.rows {
            let mut r = r.clone();
            r.canonicalize();
            let rhs = if r.constant == 0.0 { 0.0 } else { -r.constant };
            rows.push((format!("R{}", rows.len()), sense, r.terms, rhs));
        }
    }

    let mut cols: Vec<Vec<(&str, f64)>> = vec![Vec::new(); p.num_vars];
    let mut obj = AffineExpr { terms: p.objective.linear.clone(), constant: 0.0 };
    obj.canonicalize();
    for &(j, c) in &obj.terms {
        cols[j].push(("OBJ", c));
    }
    for (name, _, terms, _) in &rows {
        for &(j, c) in terms {
            cols[j].push((name.as_str(), c));
        }
    }

    let mut out = String::new();
    let w = &mut out;
    let name = if p.meta.name.is_empty() { "PROGRAM" } else { p.meta.name.as_str() };
    let _ = writeln!(w, "NAME {}", name.replace(char::is_whitespace, "_"));
    let _ = writeln!(w, "ROWS");
    let _ = writeln!(w, " N OBJ");
    for (name, sense, _, _) in &rows {
        let _ = writeln!(w, " {sense} {name}");
    }
    let _ = writeln!(w, "COLUMNS");
    let mut in_int = false;
    for j in 0..p.num_vars {
        if p.integer[j] != in_int {
            let tag = if p.integer[j] { "INTORG" } else { "INTEND" };
            let _ = writeln!(w, " MARKER 'MARKER' '{tag}'");
            in_int = p.integer[j];
        }
        if cols[j].is_empty() {
            let _ = writeln!(w, " {} OBJ 0", names[j]);
        }
        for (row, c) in &cols[j] {
            let _ = writeln!(w, " {} {row} {}", names[j], fmt_num(*c));
        }
    }
    if in_int {
        let _ = writeln!(w, " MARKER 'MARKER' 'INTEND'");
    }
    let _ = writeln!(w, "RHS");
    if p.objective.constant != 0.0 {
        let _ = writeln!(w, " RHS OBJ {}", fmt_num(-p.objective.constant));
    }
    for (name, _, _, rhs) in &rows {
        if *rhs != 0.0 {
            let _ = writeln!(w, " RHS {name} {}", fmt_num(*rhs));
        }
    }
    let _ = writeln!(w, "BOUNDS");
    for j in 0..p.num_vars {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        let n = &names[j];
        if p.integer[j] && lo == 0.0 && hi == 1.0 {
            let _ = writeln!(w, " BV BND {n}");
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(w, " FR BND {n}");
            }
            (true, true) if lo == hi => {
                let _ = writeln!(w, " FX BND {n} {}", fmt_num(lo));
            }
            _ => {
                if !lo.is_finite() {
                    let _ = writeln!(w, " MI BND {n}");
                } else if lo != 0.0 {
                    let _ = writeln!(w, " LO BND {n} {}", fmt_num(lo));
                }
                if hi.is_finite() {
                    let _ = writeln!(w, " UP BND {n} {}", fmt_num(hi));
                }
            }
        }
    }
    if !p.objective.quadratic.is_empty() {
        // Objective is ½ xᵀQx with Q listed in full (both triangles).
        let mut q = std::collections::BTreeMap::new();
        for t in &p.objective.quadratic {
            if t.i == t.j {
                *q.entry((t.i, t.j)).or_insert(0.0) += 2.0 * t.coef;
            } else {
                *q.entry((t.i, t.j)).or_insert(0.0) += t.coef;
                *q.entry((t.j, t.i)).or_insert(0.0) += t.coef;
            }
        }
        let _ = writeln!(w, "QMATRIX");
        for ((i, j), v) in q {
            if v != 0.0 {
                let _ = writeln!(w, " {} {} {}", names[i], names[j], fmt_num(v));
            }
        }
    }
    let _ = writeln!(w, "ENDATA");
    Ok(out)
}

/// Reads files produced by [`export_mps`]. Each MPS row becomes its own
/// one-row block; `L` rows are negated into `Nonnegative`.
pub fn import_mps(text: &str) -> Result<ConicProgram, ConicError> {
    let err = |line: usize, msg: String| ConicError::Parse { line, msg };
    let mut section = "";
    let mut name = String::new();
    let mut row_index = std::collections::HashMap::new();
    let mut rows: Vec<(char, AffineExpr)> = Vec::new();
    let mut col_index = std::collections::HashMap::new();
    let mut col_names: Vec<String> = Vec::new();
    let mut integer: Vec<bool> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut objective = Objective::default();
    let mut in_int = false;
    let mut ended = false;

    let parse = |ln: usize, s: &str| s.parse::<f64>().map_err(|_| err(ln, format!("cannot parse number '{s}'")));

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match f[0] {
                "NAME" => {
                    name = f.get(1).unwrap_or(&"").to_string();
                    "NAME"
                }
                "ROWS" => "ROWS",
                "COLUMNS" => "COLUMNS",
                "RHS" => "RHS",
                "BOUNDS" => "BOUNDS",
                "QMATRIX" => "QMATRIX",
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(ln, format!("unknown section '{other}'"))),
            };
            continue;
        }
        match section {
            "ROWS" => {
                let [sense, rname] = f[..] else { return Err(err(ln, "expected 2 fields".into())) };
                if sense == "N" {
                    row_index.insert(rname.to_string(), usize::MAX);
                    continue;
                }
                let s = sense.chars().next().unwrap_or('?');
                if !matches!(s, 'E' | 'G' | 'L') {
                    return Err(err(ln, format!("unknown row sense '{sense}'")));
                }
                row_index.insert(rname.to_string(), rows.len());
                rows.push((s, AffineExpr::new()));
            }
            "COLUMNS" => {
                if f.len() == 3 && f[1].trim_matches('\'') == "MARKER" {
                    in_int = f[2].contains("INTORG");
                    continue;
                }
                if f.len() < 3 || f.len().is_multiple_of(2) {
                    return Err(err(ln, "malformed COLUMNS entry".into()));
                }
                let j = *col_index.entry(f[0].to_string()).or_insert_with(|| {
                    col_names.push(f[0].to_string());
                    integer.push(in_int);
                    lower.push(0.0);
                    upper.push(if in_int { 1.0 } else { f64::INFINITY });
                    col_names.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let v = parse(ln, pair[1])?;
                    match row_index.get(pair[0]) {
                        Some(&usize::MAX) => objective.linear.push((j, v)),
                        Some(&r) => rows[r].1.terms.push((j, v)),
                        None => return Err(err(ln, format!("unknown row '{}'", pair[0]))),
                    }
                }
            }
            "RHS" => {
                for pair in f[1..].chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(ln, "malformed RHS entry".into()));
                    }
                    let v = parse(ln, pair[1])?;
                    match row_index.get(pair[0]) {
                        Some(&usize::MAX) => objective.constant = -v,
                        Some(&r) => rows[r].1.constant = -v,
                        None => return Err(err(ln, format!("unknown row '{}'", pair[0]))),
                    }
                }
            }
            "BOUNDS" => {
                if f.len() < 3 {
                    return Err(err(ln, "malformed BOUNDS entry".into()));
                }
                let &j = col_index.get(f[2]).ok_or_else(|| err(ln, format!("unknown column '{}'", f[2])))?;
                let val = || f.get(3).ok_or_else(|| err(ln, "missing bound value".into())).and_then(|s| parse(ln, s));
                match f[0] {
                    "FR" => (lower[j], upper[j]) = (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => lower[j] = f64::NEG_INFINITY,
                    "PL" => upper[j] = f64::INFINITY,
                    "BV" => {
                        (lower[j], upper[j]) = (0.0, 1.0);
                        integer[j] = true;
                    }
                    "LO" => lower[j] = val()?,
                    "UP" => upper[j] = val()?,
                    "FX" => {
                        let v = val()?;
                        (lower[j], upper[j]) = (v, v);
                    }
                    other => return Err(err(ln, format!("unsupported bound type '{other}'"))),
                }
            }
            "QMATRIX" => {
                let [a, b, v] = f[..] else { return Err(err(ln, "expected 3 fields".into())) };
                let i = *col_index.get(a).ok_or_else(|| err(ln, format!("unknown column '{a}'")))?;
                let j = *col_index.get(b).ok_or_else(|| err(ln, format!("unknown column '{b}'")))?;
                let v = parse(ln, v)?;
                if i <= j {
                    let coef = if i == j { 0.5 * v } else { v };
                    objective.quadratic.push(QuadTerm { i, j, coef });
                }
            }
            _ => return Err(err(ln, "data line outside a section".into())),
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let constraints = rows
        .into_iter()
        .map(|(s, mut e)| {
            let cone = match s {
                'E' => Cone::Zero(1),
                'L' => {
                    e = e.scaled(-1.0);
                    Cone::Nonnegative(1)
                }
                _ => Cone::Nonnegative(1),
            };
            e.canonicalize();
            super::ConeConstraint { cone, rows: vec![e] }
        })
        .collect();
    let mut lin = AffineExpr { terms: objective.linear, constant: 0.0 };
    lin.canonicalize();
    objective.linear = lin.terms;
    Ok(ConicProgram {
        num_vars: col_names.len(),
        objective,
        constraints,
        lower,
        upper,
        integer,
        meta: ProgramMeta { name, ..Default::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::ProgramBuilder;

    fn tiny() -> ConicProgram {
        let mut b = ProgramBuilder::new("tiny");
        let w = b.add_group("w", 1)[0];
        let z = b.add_group("z", 1)[0];
        b.set_integer(z);
        b.set_bounds(z, 0.0, 1.0);
        b.add_nonneg(vec![AffineExpr::var(w).term(z, 1000.0).plus(-1.0)]).unwrap();
        b.add_quadratic(w, w, 1.0);
        b.add_objective(z, 0.5);
        b.finish()
    }

    #[test]
    fn exports_expected_layout() {
        let text = export_mps(&tiny()).unwrap();
        let expected = "NAME tiny
ROWS
 N OBJ
 G R0
COLUMNS
 w0 R0 1
 MARKER 'MARKER' 'INTORG'
 z0 OBJ 0.5
 z0 R0 1000
 MARKER 'MARKER' 'INTEND'
RHS
 RHS R0 1
BOUNDS
 FR BND w0
 BV BND z0
QMATRIX
 w0 w0 2
ENDATA
";
        assert_eq!(text, expected);
    }

    #[test]
    fn reimport_preserves_objective() {
        let p = tiny();
        let q = import_mps(&export_mps(&p).unwrap()).unwrap();
        let pt = [1.5, 1.0];
        assert!((p.objective.eval(&pt) - q.objective.eval(&pt)).abs() < 1e-12);
        assert_eq!(q.integer, vec![false, true]);
        assert_eq!(q.constraints[0].rows[0].eval(&pt), p.constraints[0].rows[0].eval(&pt));
    }

    #[test]
    fn conic_programs_are_rejected() {
        let mut b = ProgramBuilder::new("soc");
        let x = b.add_var();
        b.add_rotated(AffineExpr::var(x), AffineExpr::var(x), vec![]).unwrap();
        assert!(matches!(export_mps(&b.finish()), Err(ConicError::NotMiqpShaped(_))));
    }
}
