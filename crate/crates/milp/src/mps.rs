//! Fixed-format MPS export and a matching reader.
//!
//! Rows are written as `R<index>` and columns as `C<index>` so every name
//! fits the eight-character fixed fields; the objective row is `OBJ`.
//! Binaries are written as `BV` bounds, general integers between
//! `MARKER INTORG/INTEND` pairs with an explicit upper bound.

use std::collections::HashMap;
use std::fmt::Write;

use crate::error::MpsError;
use crate::model::{LinExpr, MilpModel, Relation, Sense, VarKind};

const OBJ_ROW: &str = "OBJ";

/// Formats `v` into at most 12 characters, keeping as many significant
/// digits as fit.
fn fmt_num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    let mut best: Option<(f64, String)> = None;
    let mut consider = |s: String| {
        if s.len() > 12 {
            return;
        }
        if let Ok(parsed) = s.parse::<f64>() {
            let err = (parsed - v).abs();
            if best.as_ref().map_or(true, |(e, _)| err < *e) {
                best = Some((err, s));
            }
        }
    };
    for prec in (0..=11).rev() {
        consider(format!("{v:.prec$}"));
        consider(format!("{v:.prec$e}"));
    }
    best.map(|(_, s)| s).unwrap_or(plain)
}

fn push_field_line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) {
    // columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    let mut line = String::with_capacity(61);
    let _ = write!(line, " {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}");
    if !f5.is_empty() {
        let _ = write!(line, "   {f5:<8}  {f6:>12}");
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

fn row_name(i: usize) -> String {
    format!("R{}", i + 1)
}

fn col_name(j: usize) -> String {
    format!("C{}", j + 1)
}

/// Renders `model` as fixed-format MPS text.
pub fn write_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let name: String = model
        .name
        .chars()
        .filter(|c| !c.is_whitespace())
        .take(8)
        .collect();
    let _ = writeln!(
        out,
        "NAME          {}",
        if name.is_empty() { "MODEL" } else { &name }
    );
    if model.sense() == Sense::Maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    push_field_line(&mut out, "N", OBJ_ROW, "", "", "", "");
    for (i, c) in model.constraints().iter().enumerate() {
        let t = match c.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        push_field_line(&mut out, t, &row_name(i), "", "", "", "");
    }

    // column-major view of the matrix
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (i, c) in model.constraints().iter().enumerate() {
        for &(v, a) in c.expr.terms() {
            cols[v.0].push((i, a));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int_block = false;
    let mut marker = 0usize;
    for (j, var) in model.vars().iter().enumerate() {
        let general_int = var.kind == VarKind::Integer;
        if general_int != in_int_block {
            let tag = if general_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(
                out,
                "    MARKER{marker:<4}      'MARKER'                 {tag}"
            );
            marker += 1;
            in_int_block = general_int;
        }
        let cname = col_name(j);
        let mut entries: Vec<(String, f64)> = Vec::with_capacity(cols[j].len() + 1);
        if var.obj != 0.0 || cols[j].is_empty() {
            entries.push((OBJ_ROW.to_string(), var.obj));
        }
        entries.extend(cols[j].iter().map(|&(i, a)| (row_name(i), a)));
        for pair in entries.chunks(2) {
            let (r1, v1) = (&pair[0].0, fmt_num(pair[0].1));
            match pair.get(1) {
                Some((r2, v2)) => push_field_line(&mut out, "", &cname, r1, &v1, r2, &fmt_num(*v2)),
                None => push_field_line(&mut out, "", &cname, r1, &v1, "", ""),
            }
        }
    }
    if in_int_block {
        let _ = writeln!(
            out,
            "    MARKER{marker:<4}      'MARKER'                 'INTEND'"
        );
    }

    out.push_str("RHS\n");
    let rhs: Vec<(String, f64)> = model
        .constraints()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.rhs != 0.0)
        .map(|(i, c)| (row_name(i), c.rhs))
        .collect();
    for pair in rhs.chunks(2) {
        let v1 = fmt_num(pair[0].1);
        match pair.get(1) {
            Some((r2, v2)) => {
                push_field_line(&mut out, "", "RHS", &pair[0].0, &v1, r2, &fmt_num(*v2))
            }
            None => push_field_line(&mut out, "", "RHS", &pair[0].0, &v1, "", ""),
        }
    }

    out.push_str("BOUNDS\n");
    for (j, var) in model.vars().iter().enumerate() {
        let c = col_name(j);
        match var.kind {
            VarKind::Binary if var.lower == 0.0 && var.upper == 1.0 => {
                push_field_line(&mut out, "BV", "BND", &c, "", "", "");
            }
            _ => {
                let (lo, up) = (var.lower, var.upper);
                if lo == up {
                    push_field_line(&mut out, "FX", "BND", &c, &fmt_num(lo), "", "");
                    continue;
                }
                if lo == f64::NEG_INFINITY && up == f64::INFINITY {
                    push_field_line(&mut out, "FR", "BND", &c, "", "", "");
                    continue;
                }
                if lo == f64::NEG_INFINITY {
                    push_field_line(&mut out, "MI", "BND", &c, "", "", "");
                } else if lo != 0.0 {
                    push_field_line(&mut out, "LO", "BND", &c, &fmt_num(lo), "", "");
                }
                if up.is_finite() {
                    push_field_line(&mut out, "UP", "BND", &c, &fmt_num(up), "", "");
                } else if var.kind.is_integral() {
                    push_field_line(&mut out, "PL", "BND", &c, "", "", "");
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

/// Parses MPS text (fixed or whitespace-separated fields) into a model.
pub fn read_mps(text: &str) -> Result<MilpModel, MpsError> {
    let err = |line: usize, message: String| MpsError::Parse { line, message };
    let mut section = Section::None;
    let mut name = String::from("MODEL");
    let mut sense = Sense::Minimize;
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_defs: Vec<(String, Relation)> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    // (name, integer marker, obj, entries)
    let mut cols: Vec<(String, bool, f64, Vec<(usize, f64)>)> = Vec::new();
    let mut rhs = Vec::new();
    let mut bounds: Vec<(f64, f64, Option<VarKind>)> = Vec::new();
    let mut in_int = false;

    let parse_num = |ln: usize, s: &str| {
        s.parse::<f64>()
            .map_err(|_| err(ln, format!("bad number `{s}`")))
    };

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            let mut parts = raw.split_whitespace();
            let head = parts.next().unwrap_or_default();
            section = match head {
                "NAME" => {
                    if let Some(n) = parts.next() {
                        name = n.to_string();
                    }
                    Section::Name
                }
                "OBJSENSE" => {
                    if let Some(s) = parts.next() {
                        sense = if s.starts_with("MAX") {
                            Sense::Maximize
                        } else {
                            Sense::Minimize
                        };
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(ln, format!("unsupported section `{other}`"))),
            };
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        match section {
            Section::ObjSense => {
                sense = if f[0].starts_with("MAX") {
                    Sense::Maximize
                } else {
                    Sense::Minimize
                };
            }
            Section::Rows => {
                if f.len() != 2 {
                    return Err(err(ln, "ROWS entry needs type and name".into()));
                }
                let rel = match f[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(f[1].to_string());
                        }
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    t => return Err(err(ln, format!("unknown row type `{t}`"))),
                };
                row_index.insert(f[1].to_string(), row_defs.len());
                row_defs.push((f[1].to_string(), rel));
                rhs.push(0.0);
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    in_int = match f[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        m => return Err(err(ln, format!("unknown marker `{m}`"))),
                    };
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "COLUMNS entry needs 3 or 5 fields".into()));
                }
                let j = *col_index.entry(f[0].to_string()).or_insert_with(|| {
                    cols.push((f[0].to_string(), in_int, 0.0, Vec::new()));
                    cols.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let v = parse_num(ln, pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        cols[j].2 = v;
                    } else {
                        let i = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                        cols[j].3.push((i, v));
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "RHS entry needs 3 or 5 fields".into()));
                }
                for pair in f[1..].chunks(2) {
                    let v = parse_num(ln, pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        continue;
                    }
                    let i = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                    rhs[i] = v;
                }
            }
            Section::Bounds => {
                if bounds.is_empty() {
                    bounds = cols
                        .iter()
                        .map(|c| (0.0, f64::INFINITY, c.1.then_some(VarKind::Integer)))
                        .collect();
                }
                if f.len() < 3 {
                    return Err(err(ln, "BOUNDS entry needs at least 3 fields".into()));
                }
                let j = *col_index
                    .get(f[2])
                    .ok_or_else(|| err(ln, format!("unknown column `{}`", f[2])))?;
                let val = || -> Result<f64, MpsError> {
                    f.get(3)
                        .ok_or_else(|| err(ln, "missing bound value".into()))
                        .and_then(|s| parse_num(ln, s))
                };
                let b = &mut bounds[j];
                match f[0] {
                    "UP" => b.1 = val()?,
                    "LO" => b.0 = val()?,
                    "FX" => {
                        let v = val()?;
                        b.0 = v;
                        b.1 = v;
                    }
                    "FR" => {
                        b.0 = f64::NEG_INFINITY;
                        b.1 = f64::INFINITY;
                    }
                    "MI" => b.0 = f64::NEG_INFINITY,
                    "PL" => b.1 = f64::INFINITY,
                    "BV" => {
                        b.0 = 0.0;
                        b.1 = 1.0;
                        b.2 = Some(VarKind::Binary);
                    }
                    "LI" => {
                        b.0 = val()?;
                        b.2 = Some(VarKind::Integer);
                    }
                    "UI" => {
                        b.1 = val()?;
                        b.2 = Some(VarKind::Integer);
                    }
                    t => return Err(err(ln, format!("unknown bound type `{t}`"))),
                }
            }
            Section::Name | Section::None | Section::End => {
                return Err(err(ln, "data line outside a section".into()));
            }
        }
    }
    if section != Section::End {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }
    if bounds.is_empty() {
        bounds = cols
            .iter()
            .map(|c| (0.0, f64::INFINITY, c.1.then_some(VarKind::Integer)))
            .collect();
    }

    let mut model = MilpModel::named(name, sense);
    let mut row_terms: Vec<LinExpr> = vec![LinExpr::new(); row_defs.len()];
    for (j, (cname, is_int, obj, entries)) in cols.into_iter().enumerate() {
        let (lo, up, kind) = bounds[j];
        let kind = kind.unwrap_or(if is_int {
            VarKind::Integer
        } else {
            VarKind::Continuous
        });
        let id = model.add_var_bounded(cname, kind, lo, up, obj)?;
        for (i, a) in entries {
            row_terms[i].add(id, a);
        }
    }
    for (i, ((rname, rel), expr)) in row_defs.into_iter().zip(row_terms).enumerate() {
        model.add_constraint(rname, expr, rel, rhs[i])?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting_fits_fields() {
        for v in [
            1.0,
            -0.5,
            1.0 / 3.0,
            24.0 / 23.5,
            1e-13,
            123456789012345.0,
            -2.0 / 7.0,
        ] {
            let s = fmt_num(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-7 * v.abs().max(1e-3), "{v} -> {s}");
        }
    }

    #[test]
    fn single_variable_sections() {
        let mut m = MilpModel::new(Sense::Minimize);
        m.add_var("x", VarKind::Continuous, 1.0).unwrap();
        let text = write_mps(&m);
        for s in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(
                text.lines().any(|l| l.starts_with(s)),
                "missing {s}:\n{text}"
            );
        }
    }

    #[test]
    fn equality_rows_are_typed_e() {
        let mut m = MilpModel::new(Sense::Minimize);
        let x = m.add_var("x", VarKind::Continuous, 1.0).unwrap();
        m.add_constraint("eq", LinExpr::new().term(x, 2.0), Relation::Eq, 3.0)
            .unwrap();
        let text = write_mps(&m);
        assert!(text.lines().any(|l| l.trim() == "E  R1"), "{text}");
    }

    #[test]
    fn unknown_section_is_rejected() {
        assert!(read_mps("NAME x\nRANGES\nENDATA\n").is_err());
        assert!(read_mps("NAME x\nROWS\n N  OBJ\n").is_err());
    }
}
