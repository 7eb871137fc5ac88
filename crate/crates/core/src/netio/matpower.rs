//! Reader for the subset of the Matpower case format used by the restoration
//! models: `mpc.baseMVA`, `mpc.bus`, `mpc.gen`, `mpc.branch` and optionally
//! `mpc.gencost`. Any other `mpc.*` assignment is skipped and reported.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Branch, Bus, BusType, Generator, Load, Network, Shunt};

/// Angle-difference bound substituted for missing or unusable limits (30 degrees).
pub const DEFAULT_ANGLE_LIMIT: f64 = PI / 6.0;

/// Numeric sections of a Matpower file, rows kept exactly as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawCase {
    pub name: String,
    pub base_mva: f64,
    pub bus_rows: Vec<Vec<f64>>,
    pub gen_rows: Vec<Vec<f64>>,
    pub branch_rows: Vec<Vec<f64>>,
    pub gencost_rows: Vec<Vec<f64>>,
}

/// A section the reader recognised syntactically but does not use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSection {
    pub name: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCase {
    pub case: RawCase,
    pub warnings: Vec<SkippedSection>,
}

struct Scanner<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            chars: strip_comments(src).chars().collect(),
            pos: 0,
            line: 1,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.bump() {
            if c == '\n' {
                break;
            }
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.chars.get(self.pos + i) == Some(&c))
    }

    fn ident(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        out
    }

    fn malformed(&self, message: impl Into<String>) -> Error {
        Error::MalformedSection {
            line: self.line,
            message: message.into(),
        }
    }
}

/// Removes `%` comments, leaving `%` inside single-quoted strings alone.
fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for line in src.lines() {
        let mut in_quote = false;
        for c in line.chars() {
            match c {
                '\'' => {
                    in_quote = !in_quote;
                    out.push(c);
                }
                '%' if !in_quote => break,
                _ => out.push(c),
            }
        }
        out.push('\n');
    }
    out
}

enum Value {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    Other,
}

fn parse_number(token: &str, line: usize) -> Result<f64> {
    let t = token.trim();
    let lower = t.to_ascii_lowercase();
    let v = match lower.as_str() {
        "inf" | "+inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        "nan" => f64::NAN,
        _ => t.parse::<f64>().map_err(|_| Error::MalformedSection {
            line,
            message: format!("non-numeric token `{t}`"),
        })?,
    };
    Ok(v)
}

fn read_matrix(sc: &mut Scanner<'_>) -> Result<Vec<Vec<f64>>> {
    // opening '[' already consumed
    let open_line = sc.line;
    let mut rows = Vec::new();
    let mut row: Vec<f64> = Vec::new();
    let mut token = String::new();
    let mut token_line = sc.line;

    let flush = |token: &mut String, row: &mut Vec<f64>, line: usize| -> Result<()> {
        if !token.is_empty() {
            row.push(parse_number(token, line)?);
            token.clear();
        }
        Ok(())
    };

    loop {
        let line = sc.line;
        let Some(c) = sc.bump() else {
            return Err(Error::MalformedSection {
                line: open_line,
                message: "unterminated `[` block".into(),
            });
        };
        match c {
            ']' => {
                flush(&mut token, &mut row, token_line)?;
                if !row.is_empty() {
                    rows.push(std::mem::take(&mut row));
                }
                break;
            }
            '[' => {
                return Err(Error::MalformedSection {
                    line,
                    message: "nested `[`".into(),
                })
            }
            ';' | '\n' => {
                flush(&mut token, &mut row, token_line)?;
                if !row.is_empty() {
                    rows.push(std::mem::take(&mut row));
                }
            }
            ',' | ' ' | '\t' | '\r' => flush(&mut token, &mut row, token_line)?,
            '.' if sc.starts_with("..") => {
                // line continuation
                flush(&mut token, &mut row, token_line)?;
                sc.skip_line();
            }
            _ => {
                if token.is_empty() {
                    token_line = line;
                }
                token.push(c);
            }
        }
    }
    Ok(rows)
}

fn skip_delimited(sc: &mut Scanner<'_>, open: char, close: char) -> Result<()> {
    let start = sc.line;
    let mut depth = 1usize;
    let mut in_quote = false;
    while let Some(c) = sc.bump() {
        match c {
            '\'' => in_quote = !in_quote,
            _ if in_quote => {}
            c if c == open => depth += 1,
            c if c == close => {
                depth -= 1;
                if depth == 0 {
                    return Ok(());
                }
            }
            _ => {}
        }
    }
    Err(Error::MalformedSection {
        line: start,
        message: format!("unterminated `{open}` block"),
    })
}

fn read_value(sc: &mut Scanner<'_>) -> Result<Value> {
    sc.skip_ws();
    match sc.peek() {
        Some('[') => {
            sc.bump();
            Ok(Value::Matrix(read_matrix(sc)?))
        }
        Some('{') => {
            sc.bump();
            skip_delimited(sc, '{', '}')?;
            Ok(Value::Other)
        }
        Some('\'') => {
            sc.bump();
            while let Some(c) = sc.bump() {
                if c == '\'' {
                    break;
                }
                if c == '\n' {
                    return Err(sc.malformed("unterminated string"));
                }
            }
            Ok(Value::Other)
        }
        Some(_) => {
            let line = sc.line;
            let mut text = String::new();
            while let Some(c) = sc.peek() {
                if c == ';' || c == '\n' {
                    break;
                }
                text.push(c);
                sc.bump();
            }
            Ok(Value::Scalar(parse_number(&text, line)?))
        }
        None => Err(sc.malformed("expected a value")),
    }
}

/// Parses Matpower case text.
pub fn parse_matpower(text: &str) -> Result<ParsedCase> {
    let mut sc = Scanner::new(text);
    let mut name = String::new();
    let mut base_mva = None;
    let mut bus = None;
    let mut gen = None;
    let mut branch = None;
    let mut gencost = None;
    let mut warnings = Vec::new();

    loop {
        sc.skip_ws();
        if sc.peek().is_none() {
            break;
        }
        if sc.starts_with("function") {
            // function mpc = case5
            let start = sc.pos;
            sc.skip_line();
            let decl: String = sc.chars[start..sc.pos].iter().collect();
            if let Some(rhs) = decl.split('=').nth(1) {
                name = rhs.trim().to_string();
            }
            continue;
        }
        if !sc.starts_with("mpc.") {
            sc.skip_line();
            continue;
        }
        sc.pos += 4;
        let line = sc.line;
        let field = sc.ident();
        sc.skip_ws();
        if sc.peek() != Some('=') {
            return Err(sc.malformed(format!("expected `=` after mpc.{field}")));
        }
        sc.bump();
        let value = read_value(&mut sc)?;
        sc.skip_ws();
        if sc.peek() == Some(';') {
            sc.bump();
        }

        match (field.as_str(), value) {
            ("baseMVA", Value::Scalar(v)) => base_mva = Some(v),
            ("bus", Value::Matrix(m)) => bus = Some(m),
            ("gen", Value::Matrix(m)) => gen = Some(m),
            ("branch", Value::Matrix(m)) => branch = Some(m),
            ("gencost", Value::Matrix(m)) => gencost = Some(m),
            ("version", _) => {}
            (f @ ("baseMVA" | "bus" | "gen" | "branch" | "gencost"), _) => {
                return Err(Error::MalformedSection {
                    line,
                    message: format!("mpc.{f} has the wrong shape"),
                });
            }
            (other, _) => {
                log::warn!("skipping unsupported section mpc.{other} (line {line})");
                warnings.push(SkippedSection {
                    name: other.to_string(),
                    line,
                });
            }
        }
    }

    let base_mva = base_mva.ok_or(Error::MissingSection("baseMVA"))?;
    if !(base_mva > 0.0) {
        return Err(Error::MalformedSection {
            line: 0,
            message: "baseMVA must be positive".into(),
        });
    }
    let bus_rows = bus.ok_or(Error::MissingSection("bus"))?;
    if bus_rows.is_empty() {
        return Err(Error::MissingSection("bus"));
    }
    let case = RawCase {
        name,
        base_mva,
        bus_rows,
        gen_rows: gen.ok_or(Error::MissingSection("gen"))?,
        branch_rows: branch.ok_or(Error::MissingSection("branch"))?,
        gencost_rows: gencost.unwrap_or_default(),
    };
    Ok(ParsedCase { case, warnings })
}

fn require_cols(rows: &[Vec<f64>], min: usize, section: &str) -> Result<()> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() < min) {
        return Err(Error::MalformedSection {
            line: 0,
            message: format!(
                "{section} row {} has {} columns, need at least {min}",
                i + 1,
                r.len()
            ),
        });
    }
    Ok(())
}

fn angle_limit(deg: f64, default: f64) -> f64 {
    if deg == 0.0 || deg.abs() >= 90.0 || !deg.is_finite() {
        default
    } else {
        deg.to_radians()
    }
}

/// Buses whose Matpower area column equals `area`.
pub fn area_buses(raw: &RawCase, area: usize) -> std::collections::BTreeSet<usize> {
    raw.bus_rows
        .iter()
        .filter(|r| r.get(6).is_some_and(|&a| a == area as f64))
        .map(|r| r[0] as usize)
        .collect()
}

/// Converts a parsed case to a per-unit [`Network`].
pub fn to_network(raw: &RawCase) -> Result<Network> {
    require_cols(&raw.bus_rows, 13, "bus")?;
    require_cols(&raw.gen_rows, 10, "gen")?;
    require_cols(&raw.branch_rows, 11, "branch")?;
    let base = raw.base_mva;

    let mut net = Network::empty(raw.name.clone(), base);
    let mut next_load = 1;
    let mut next_shunt = 1;
    for r in &raw.bus_rows {
        let id = r[0] as usize;
        let bus_type = match r[1] as i64 {
            1 => BusType::Pq,
            2 => BusType::Pv,
            3 => BusType::Ref,
            4 => BusType::Isolated,
            t => {
                return Err(Error::MalformedSection {
                    line: 0,
                    message: format!("bus {id} has unknown type {t}"),
                })
            }
        };
        let (vmax, vmin) = (r[11], r[12]);
        if !(vmin > 0.0) || vmax < vmin {
            return Err(Error::NonPositiveVoltageBounds(id));
        }
        if net.buses.contains_key(&id) {
            return Err(Error::DuplicateBusId(id));
        }
        let (pd, qd, gs, bs) = (r[2], r[3], r[4], r[5]);
        if pd < 0.0 {
            return Err(Error::NegativeDemand(id));
        }
        net.buses.insert(
            id,
            Bus {
                id,
                bus_type,
                vm: r[7],
                va: r[8].to_radians(),
                base_kv: r[9],
                vmin,
                vmax,
                in_service: bus_type != BusType::Isolated,
                damaged: false,
            },
        );
        if bus_type == BusType::Ref {
            net.ref_buses.insert(id);
        }
        if pd != 0.0 || qd != 0.0 {
            net.loads.insert(
                next_load,
                Load {
                    id: next_load,
                    bus: id,
                    pd: pd / base,
                    qd: qd / base,
                },
            );
            next_load += 1;
        }
        if gs != 0.0 || bs != 0.0 {
            net.shunts.insert(
                next_shunt,
                Shunt {
                    id: next_shunt,
                    bus: id,
                    gs: gs / base,
                    bs: bs / base,
                },
            );
            next_shunt += 1;
        }
    }

    for (i, r) in raw.gen_rows.iter().enumerate() {
        let id = i + 1;
        let bus = r[0] as usize;
        if !net.buses.contains_key(&bus) {
            return Err(Error::InvalidBusRef {
                kind: "gen",
                id,
                bus,
            });
        }
        net.gens.insert(
            id,
            Generator {
                id,
                bus,
                pg: r[1] / base,
                qg: r[2] / base,
                qmax: r[3] / base,
                qmin: r[4] / base,
                vg: r[5],
                in_service: r[7] > 0.0,
                pmax: r[8] / base,
                pmin: r[9] / base,
                damaged: false,
            },
        );
    }

    for (i, r) in raw.branch_rows.iter().enumerate() {
        let id = i + 1;
        let (f_bus, t_bus) = (r[0] as usize, r[1] as usize);
        for bus in [f_bus, t_bus] {
            if !net.buses.contains_key(&bus) {
                return Err(Error::InvalidBusRef {
                    kind: "branch",
                    id,
                    bus,
                });
            }
        }
        let tap = if r[8] == 0.0 { 1.0 } else { r[8] };
        let angmin = angle_limit(r.get(11).copied().unwrap_or(0.0), -DEFAULT_ANGLE_LIMIT);
        let angmax = angle_limit(r.get(12).copied().unwrap_or(0.0), DEFAULT_ANGLE_LIMIT);
        net.branches.insert(
            id,
            Branch {
                id,
                f_bus,
                t_bus,
                r: r[2],
                x: r[3],
                b_charge: r[4],
                rate_a: r[5] / base,
                tap,
                shift: r[9].to_radians(),
                angmin,
                angmax,
                in_service: r[10] > 0.0,
                damaged: false,
            },
        );
    }

    net.validate()?;
    Ok(net)
}

/// Parses case text straight into a network, logging skipped sections.
pub fn load_network(text: &str) -> Result<Network> {
    let parsed = parse_matpower(text)?;
    to_network(&parsed.case)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;
	2	1	50	10	0	0	1	1	0	230	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	100	-100	1	100	1	200	0;
];
mpc.branch = [
	1	2	0.01	0.1	0	60	60	60	0	0	1	-30	30;
];
";

    #[test]
    fn minimal_case_maps_fields() {
        let p = parse_matpower(MINIMAL).unwrap();
        assert_eq!(p.case.base_mva, 100.0);
        assert_eq!(p.case.bus_rows.len(), 2);
        assert_eq!(p.case.gen_rows.len(), 1);
        assert_eq!(p.case.branch_rows.len(), 1);
        assert_eq!(p.case.bus_rows[0].len(), 13);
        assert_eq!(p.case.name, "tiny");
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn trailing_comments_are_ignored() {
        let commented: String = MINIMAL
            .lines()
            .map(|l| format!("{l}  % note ; [ ]\n"))
            .collect();
        let a = parse_matpower(MINIMAL).unwrap();
        let b = parse_matpower(&commented).unwrap();
        assert_eq!(a.case, b.case);
    }

    #[test]
    fn storage_block_is_skipped_with_warning() {
        let with_storage =
            format!("{MINIMAL}\n%% storage\nmpc.storage = [\n  2 0 0 1 2 3 4;\n];\n");
        let a = parse_matpower(MINIMAL).unwrap();
        let b = parse_matpower(&with_storage).unwrap();
        assert_eq!(a.case, b.case);
        assert_eq!(b.warnings.len(), 1);
        assert_eq!(b.warnings[0].name, "storage");
    }

    #[test]
    fn cell_arrays_and_strings_are_skipped() {
        let text = format!("{MINIMAL}\nmpc.bus_name = {{\n 'A%b';\n 'B';\n}};\n");
        let p = parse_matpower(&text).unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].name, "bus_name");
    }

    #[test]
    fn unbalanced_bracket_reports_line() {
        let text = "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;\n";
        match parse_matpower(text) {
            Err(Error::MalformedSection { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_token_reports_line() {
        let text = "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;\n 2 1 abc 0 0 0 1 1 0 230 1 1.1 0.9;\n];";
        match parse_matpower(text) {
            Err(Error::MalformedSection { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_sections_are_typed() {
        assert!(matches!(
            parse_matpower("mpc.bus = [1 3 0 0 0 0 1 1 0 230 1 1.1 0.9];"),
            Err(Error::MissingSection("baseMVA"))
        ));
        assert!(matches!(
            parse_matpower("mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0 0 0 1 1 0 230 1 1.1 0.9];"),
            Err(Error::MissingSection("gen"))
        ));
    }

    #[test]
    fn per_unit_conversion() {
        let net = load_network(MINIMAL).unwrap();
        assert_eq!(net.loads.len(), 1);
        let load = &net.loads[&1];
        assert_eq!(load.bus, 2);
        assert!((load.pd - 0.5).abs() < 1e-12);
        let b = &net.buses[&2];
        assert_eq!((b.vmin, b.vmax), (0.9, 1.1));
        assert!((net.branches[&1].rate_a - 0.6).abs() < 1e-12);
        assert!((net.branches[&1].angmax - DEFAULT_ANGLE_LIMIT).abs() < 1e-12);
        assert_eq!(net.ref_buses.iter().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn gen_status_zero_is_inactive() {
        let text = MINIMAL.replace(
            "1	0	0	100	-100	1	100	1	200	0;",
            "1	0	0	100	-100	1	100	0	200	0;",
        );
        let net = load_network(&text).unwrap();
        assert!(!net.gens[&1].in_service);
    }

    #[test]
    fn zero_angle_limits_take_defaults() {
        let text = MINIMAL.replace("1	-30	30;", "1	0	0;");
        let net = load_network(&text).unwrap();
        let br = &net.branches[&1];
        assert!((br.angmin + DEFAULT_ANGLE_LIMIT).abs() < 1e-12);
        assert!((br.angmax - DEFAULT_ANGLE_LIMIT).abs() < 1e-12);
    }

    #[test]
    fn bad_references_are_rejected() {
        let text = MINIMAL.replace("1	2	0.01", "1	7	0.01");
        assert!(matches!(
            load_network(&text),
            Err(Error::InvalidBusRef {
                kind: "branch",
                bus: 7,
                ..
            })
        ));
        let text = MINIMAL.replace(
            "2	1	50	10	0	0	1	1	0	230	1	1.1	0.9",
            "1	1	50	10	0	0	1	1	0	230	1	1.1	0.9",
        );
        assert!(matches!(load_network(&text), Err(Error::DuplicateBusId(1))));
        let text = MINIMAL.replace("230	1	1.1	0.9;\n	2", "230	1	1.1	0.0;\n	2");
        assert!(matches!(
            load_network(&text),
            Err(Error::NonPositiveVoltageBounds(1))
        ));
    }
}
