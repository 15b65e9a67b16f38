//! Conic Benchmark Format (CBF) version 2, continuous programs only.
//!
//! Scalar-cone blocks become `CON` chunks (`L=`, `L+`, `Q`, `QR`) and PSD
//! blocks become `PSDCON` entries with `HCOORD` / `DCOORD` coefficients.
//! CBF stores PSD coefficients unscaled, so off-diagonal rows are divided by
//! √2 on export and multiplied back on import. Variable groups survive the
//! round trip as `# group` comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    fmt_num, AffineExpr, Cone, ConeConstraint, ConicError, ConicProgram, Objective, ProgramMeta,
};
use crate::linalg::{triangle_index, triangle_len, SQRT_2};

pub fn export_cbf(p: &ConicProgram) -> Result<String, ConicError> {
    if p.has_integers() {
        return Err(ConicError::Unsupported("integrality flags in CBF export".into()));
    }
    if p.has_bounds() {
        return Err(ConicError::Unsupported("variable bounds in CBF export".into()));
    }
    if !p.objective.quadratic.is_empty() {
        return Err(ConicError::Unsupported("quadratic objective in CBF export".into()));
    }
    let defects = super::validate(p);
    if let Some(d) = defects.first() {
        return Err(ConicError::Invalid(d.to_string()));
    }

    let mut out = String::new();
    let w = &mut out;
    if !p.meta.name.is_empty() {
        let _ = writeln!(w, "# name {}", p.meta.name.replace('\n', " "));
    }
    for (name, (s, l)) in &p.meta.groups {
        let _ = writeln!(w, "# group {name} {s} {l}");
    }
    let _ = writeln!(w, "VER\n2\n");
    let _ = writeln!(w, "OBJSENSE\nMIN\n");
    if p.num_vars > 0 {
        let _ = writeln!(w, "VAR\n{} 1\nF {}\n", p.num_vars, p.num_vars);
    } else {
        let _ = writeln!(w, "VAR\n0 0\n");
    }

    let scalar: Vec<&ConeConstraint> =
        p.constraints.iter().filter(|c| !matches!(c.cone, Cone::PsdTriangle(_))).collect();
    let psd: Vec<&ConeConstraint> =
        p.constraints.iter().filter(|c| matches!(c.cone, Cone::PsdTriangle(_))).collect();

    if !psd.is_empty() {
        let _ = writeln!(w, "PSDCON\n{}", psd.len());
        for c in &psd {
            if let Cone::PsdTriangle(m) = c.cone {
                let _ = writeln!(w, "{m}");
            }
        }
        let _ = writeln!(w);
    }

    let total_rows: usize = scalar.iter().map(|c| c.rows.len()).sum();
    if !scalar.is_empty() {
        let _ = writeln!(w, "CON\n{} {}", total_rows, scalar.len());
        for c in &scalar {
            let (tag, k) = match c.cone {
                Cone::Zero(k) => ("L=", k),
                Cone::Nonnegative(k) => ("L+", k),
                Cone::SecondOrder(k) => ("Q", k),
                Cone::RotatedSecondOrder(k) => ("QR", k),
                Cone::PsdTriangle(_) => unreachable!(),
            };
            let _ = writeln!(w, "{tag} {k}");
        }
        let _ = writeln!(w);
    }

    let mut obj = AffineExpr { terms: p.objective.linear.clone(), constant: 0.0 };
    obj.canonicalize();
    if !obj.terms.is_empty() {
        let _ = writeln!(w, "OBJACOORD\n{}", obj.terms.len());
        for (j, c) in &obj.terms {
            let _ = writeln!(w, "{j} {}", fmt_num(*c));
        }
        let _ = writeln!(w);
    }
    if p.objective.constant != 0.0 {
        let _ = writeln!(w, "OBJBCOORD\n{}\n", fmt_num(p.objective.constant));
    }

    let mut acoord = Vec::new();
    let mut bcoord = Vec::new();
    let mut row = 0usize;
    for c in &scalar {
        for r in &c.rows {
            let mut r = r.clone();
            r.canonicalize();
            for (j, v) in r.terms {
                acoord.push(format!("{row} {j} {}", fmt_num(v)));
            }
            if r.constant != 0.0 {
                bcoord.push(format!("{row} {}", fmt_num(r.constant)));
            }
            row += 1;
        }
    }
    write_section(w, "ACOORD", &acoord);
    write_section(w, "BCOORD", &bcoord);

    let mut hcoord = Vec::new();
    let mut dcoord = Vec::new();
    for (b, c) in psd.iter().enumerate() {
        let Cone::PsdTriangle(m) = c.cone else { unreachable!() };
        for i in 0..m {
            for k in 0..=i {
                let scale = if i == k { 1.0 } else { 1.0 / SQRT_2 };
                let mut r = c.rows[triangle_index(i, k)].clone();
                r.canonicalize();
                for (j, v) in r.terms {
                    hcoord.push(format!("{b} {j} {i} {k} {}", fmt_num(v * scale)));
                }
                if r.constant != 0.0 {
                    dcoord.push(format!("{b} {i} {k} {}", fmt_num(r.constant * scale)));
                }
            }
        }
    }
    write_section(w, "HCOORD", &hcoord);
    write_section(w, "DCOORD", &dcoord);
    Ok(out)
}

fn write_section(w: &mut String, key: &str, lines: &[String]) {
    if lines.is_empty() {
        return;
    }
    let _ = writeln!(w, "{key}\n{}", lines.len());
    for l in lines {
        let _ = writeln!(w, "{l}");
    }
    let _ = writeln!(w);
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate().peekable(), last: 0 }
    }

    /// Next non-blank, non-comment line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, t));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), ConicError> {
        self.next().ok_or_else(|| err(self.last + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn err(line: usize, msg: impl Into<String>) -> ConicError {
    ConicError::Parse { line, msg: msg.into() }
}

fn parse_tokens<const N: usize>(line: usize, text: &str) -> Result<[&str; N], ConicError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    toks.try_into().map_err(|t: Vec<&str>| err(line, format!("expected {N} fields, found {}", t.len())))
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, ConicError> {
    s.parse().map_err(|_| err(line, format!("cannot parse number '{s}'")))
}

pub fn import_cbf(text: &str) -> Result<ConicProgram, ConicError> {
    let mut meta = ProgramMeta::default();
    for l in text.lines() {
        let t = l.trim();
        if let Some(rest) = t.strip_prefix("# name ") {
            meta.name = rest.to_string();
        } else if let Some(rest) = t.strip_prefix("# group ") {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if let [name, s, l] = f[..] {
                if let (Ok(s), Ok(l)) = (s.parse(), l.parse()) {
                    meta.groups.insert(name.to_string(), (s, l));
                }
            }
        }
    }

    let mut lines = Lines::new(text);
    let (ln, first) = lines.expect("VER")?;
    if first != "VER" {
        return Err(err(ln, format!("expected VER header, found '{first}'")));
    }
    let (ln, ver) = lines.expect("version number")?;
    let ver: u32 = num(ln, ver)?;
    if ver > 3 {
        return Err(err(ln, format!("unsupported CBF version {ver}")));
    }

    let mut num_vars = 0usize;
    let mut cones: Vec<(Cone, usize)> = Vec::new();
    let mut total_rows = 0usize;
    let mut psd_orders: Vec<usize> = Vec::new();
    let mut obj = Objective::default();
    let mut acoord: Vec<(usize, usize, f64)> = Vec::new();
    let mut bcoord: Vec<(usize, f64)> = Vec::new();
    let mut hcoord: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    let mut dcoord: Vec<(usize, usize, usize, f64)> = Vec::new();

    while let Some((ln, key)) = lines.next() {
        match key {
            "OBJSENSE" => {
                let (ln, s) = lines.expect("objective sense")?;
                if s != "MIN" {
                    return Err(err(ln, format!("only MIN objective sense is supported, found '{s}'")));
                }
            }
            "VAR" => {
                let (ln, head) = lines.expect("VAR header")?;
                let [n, k] = parse_tokens::<2>(ln, head)?;
                num_vars = num(ln, n)?;
                let k: usize = num(ln, k)?;
                let mut seen = 0;
                for _ in 0..k {
                    let (ln, l) = lines.expect("VAR cone")?;
                    let [tag, d] = parse_tokens::<2>(ln, l)?;
                    if tag != "F" {
                        return Err(err(ln, format!("unsupported variable domain '{tag}'")));
                    }
                    seen += num::<usize>(ln, d)?;
                }
                if seen != num_vars {
                    return Err(err(ln, "VAR cone dimensions do not sum to variable count"));
                }
            }
            "INT" => return Err(err(ln, "integer variables are not supported")),
            "PSDVAR" => return Err(err(ln, "PSD variables are not supported")),
            "PSDCON" => {
                let (ln, c) = lines.expect("PSDCON count")?;
                let c: usize = num(ln, c)?;
                for _ in 0..c {
                    let (ln, m) = lines.expect("PSDCON order")?;
                    psd_orders.push(num(ln, m)?);
                }
            }
            "CON" => {
                let (ln, head) = lines.expect("CON header")?;
                let [m, k] = parse_tokens::<2>(ln, head)?;
                total_rows = num(ln, m)?;
                let k: usize = num(ln, k)?;
                let mut seen = 0;
                for _ in 0..k {
                    let (ln, l) = lines.expect("CON cone")?;
                    let [tag, d] = parse_tokens::<2>(ln, l)?;
                    let d: usize = num(ln, d)?;
                    let cone = match tag {
                        "L=" => Cone::Zero(d),
                        "L+" => Cone::Nonnegative(d),
                        "Q" => Cone::SecondOrder(d),
                        "QR" => Cone::RotatedSecondOrder(d),
                        other => return Err(err(ln, format!("unsupported cone '{other}'"))),
                    };
                    cones.push((cone, seen));
                    seen += d;
                }
                if seen != total_rows {
                    return Err(err(ln, "CON cone dimensions do not sum to row count"));
                }
            }
            "OBJACOORD" => {
                for (ln, l) in section(&mut lines)? {
                    let [j, v] = parse_tokens::<2>(ln, l)?;
                    obj.linear.push((num(ln, j)?, num(ln, v)?));
                }
            }
            "OBJBCOORD" => {
                let (ln, v) = lines.expect("OBJBCOORD value")?;
                obj.constant = num(ln, v)?;
            }
            "ACOORD" => {
                for (ln, l) in section(&mut lines)? {
                    let [i, j, v] = parse_tokens::<3>(ln, l)?;
                    let i: usize = num(ln, i)?;
                    if i >= total_rows {
                        return Err(err(ln, format!("row {i} out of range")));
                    }
                    acoord.push((i, num(ln, j)?, num(ln, v)?));
                }
            }
            "BCOORD" => {
                for (ln, l) in section(&mut lines)? {
                    let [i, v] = parse_tokens::<2>(ln, l)?;
                    let i: usize = num(ln, i)?;
                    if i >= total_rows {
                        return Err(err(ln, format!("row {i} out of range")));
                    }
                    bcoord.push((i, num(ln, v)?));
                }
            }
            "HCOORD" => {
                for (ln, l) in section(&mut lines)? {
                    let [b, j, r, c, v] = parse_tokens::<5>(ln, l)?;
                    let e = (num(ln, b)?, num(ln, j)?, num(ln, r)?, num(ln, c)?, num(ln, v)?);
                    check_psd_entry(ln, &psd_orders, e.0, e.2, e.3)?;
                    hcoord.push(e);
                }
            }
            "DCOORD" => {
                for (ln, l) in section(&mut lines)? {
                    let [b, r, c, v] = parse_tokens::<4>(ln, l)?;
                    let e = (num(ln, b)?, num(ln, r)?, num(ln, c)?, num(ln, v)?);
                    check_psd_entry(ln, &psd_orders, e.0, e.1, e.2)?;
                    dcoord.push(e);
                }
            }
            other => return Err(err(ln, format!("unknown or unsupported section '{other}'"))),
        }
    }

    let mut rows = vec![AffineExpr::new(); total_rows];
    for (i, j, v) in acoord {
        rows[i].terms.push((j, v));
    }
    for (i, v) in bcoord {
        rows[i].constant += v;
    }
    let mut constraints: Vec<ConeConstraint> = cones
        .iter()
        .map(|&(cone, start)| ConeConstraint { cone, rows: rows[start..start + cone.rows()].to_vec() })
        .collect();

    let mut psd_rows: Vec<Vec<AffineExpr>> =
        psd_orders.iter().map(|&m| vec![AffineExpr::new(); triangle_len(m)]).collect();
    let r_of = |r: usize, c: usize| -> (usize, f64) {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        (triangle_index(r, c), if r == c { 1.0 } else { SQRT_2 })
    };
    for (b, j, r, c, v) in hcoord {
        let (idx, s) = r_of(r, c);
        psd_rows[b][idx].terms.push((j, v * s));
    }
    for (b, r, c, v) in dcoord {
        let (idx, s) = r_of(r, c);
        psd_rows[b][idx].constant += v * s;
    }
    for (m, rows) in psd_orders.iter().zip(psd_rows) {
        constraints.push(ConeConstraint { cone: Cone::PsdTriangle(*m), rows });
    }
    for c in &mut constraints {
        for r in &mut c.rows {
            r.canonicalize();
        }
    }
    let mut lin = AffineExpr { terms: obj.linear, constant: 0.0 };
    lin.canonicalize();
    obj.linear = lin.terms;

    let p = ConicProgram {
        num_vars,
        objective: obj,
        constraints,
        lower: vec![f64::NEG_INFINITY; num_vars],
        upper: vec![f64::INFINITY; num_vars],
        integer: vec![false; num_vars],
        meta,
    };
    if let Some(d) = super::validate(&p).first() {
        return Err(ConicError::Invalid(d.to_string()));
    }
    Ok(p)
}

fn section<'a>(lines: &mut Lines<'a>) -> Result<Vec<(usize, &'a str)>, ConicError> {
    let (ln, head) = lines.expect("entry count")?;
    let n: usize = num(ln, head)?;
    (0..n).map(|_| lines.expect("coordinate entry")).collect()
}

fn check_psd_entry(ln: usize, orders: &[usize], b: usize, r: usize, c: usize) -> Result<(), ConicError> {
    match orders.get(b) {
        Some(&m) if r < m && c < m => Ok(()),
        Some(_) => Err(err(ln, format!("entry ({r},{c}) outside PSD block {b}"))),
        None => Err(err(ln, format!("PSD block {b} not declared"))),
    }
}

/// Counts per section, handy for quick structural summaries.
pub fn section_counts(text: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    while let Some(key) = lines.next() {
        if key.chars().all(|c| c.is_ascii_uppercase()) {
            if let Some(n) = lines.next().and_then(|l| l.split_whitespace().next()?.parse().ok()) {
                out.insert(key.to_string(), n);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{ProgramBuilder, Var};

    fn lp() -> ConicProgram {
        let mut b = ProgramBuilder::new("lp");
        let x = b.add_var();
        b.add_nonneg(vec![AffineExpr::var(x).plus(-1.0)]).unwrap();
        b.add_objective(x, 1.0);
        b.finish()
    }

    #[test]
    fn minimal_lp_round_trips() {
        let p = lp();
        let text = export_cbf(&p).unwrap();
        let q = import_cbf(&text).unwrap();
        assert!(p.structurally_equal(&q, 1e-14));
        assert_eq!(q.meta.name, "lp");
    }

    #[test]
    fn psd_and_rotated_round_trip() {
        let mut b = ProgramBuilder::new("mix");
        let v: Vec<Var> = b.add_group("v", 4);
        b.add_psd(&[
            vec![AffineExpr::var(v[0])],
            vec![AffineExpr::var(v[1]).plus(0.3), AffineExpr::var(v[2])],
        ])
        .unwrap();
        b.add_rotated(AffineExpr::var(v[3]), AffineExpr::constant(0.5), vec![AffineExpr::var(v[0])])
            .unwrap();
        b.add_objective(v[2], 1.0);
        b.add_objective_constant(2.5);
        let p = b.finish();
        let text = export_cbf(&p).unwrap();
        let q = import_cbf(&text).unwrap();
        assert!(p.structurally_equal(&q, 1e-14), "{text}");
        assert_eq!(q.meta.group("v"), Some(0..4));
        assert_eq!(export_cbf(&q).unwrap(), text);
    }

    #[test]
    fn malformed_header_reports_line_one() {
        let e = import_cbf("VERSION\n2\n").unwrap_err();
        assert!(matches!(e, ConicError::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn integer_programs_are_rejected() {
        let mut b = ProgramBuilder::new("int");
        let x = b.add_var();
        b.set_integer(x);
        assert!(export_cbf(&b.finish()).is_err());
    }

    #[test]
    fn counts_sections() {
        let c = section_counts(&export_cbf(&lp()).unwrap());
        assert_eq!(c["ACOORD"], 1);
        assert_eq!(c["BCOORD"], 1);
    }
}
