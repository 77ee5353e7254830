//! Line-oriented robot description.
//!
//! ```text
//! # 1-link arm
//! [link]
//! mass = 1
//! length = 1
//! com = 1
//! inertia = 0
//!
//! [rotor]
//! inertia = 0.01
//! output_tau_max = 20
//!
//! [reduction]
//! N = 10
//!
//! [efficiency]
//! eta_f = 0.8
//! ```
//!
//! Sections: `base` (`mass`, `side`, `dof`, optional `inertia`), repeated
//! `link` (`mass`, `length`, optional `com` and `inertia`, defaulting to a
//! uniform rod), repeated `rotor` (`inertia`, optional `tau_max` on the rotor
//! side or `output_tau_max` on the joint side), `reduction` (`N`),
//! `topology` (`D`), `efficiency` (`eta_f`, optional `eta_b`, optional `map`
//! table of `eta_f, eta_b` rows), `pose` (`q`) and `gravity` (`g`).
//!
//! Vectors are comma or whitespace separated. A matrix key with an empty value
//! takes the following indented lines as rows. Numbers may be written as
//! multiples of `pi`, e.g. `pi/3` or `-2*pi/3`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rigid_body::{FloatingBase, PlanarBody, RobotModel, DEFAULT_GRAVITY};
use crate::transmission::{backward_from_forward, EfficiencyMap, TransmissionSet};

/// A parsed model together with the efficiency map it declared.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: RobotModel,
    pub map: EfficiencyMap,
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    line: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        Some(self.entries.remove(i))
    }

    fn scalar(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match e.rows.as_slice() {
                [row] if row.len() == 1 => Ok(Some(row[0])),
                _ => Err(syntax(e.line, format!("`{key}` expects a single number"))),
            },
        }
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        self.scalar(key)?.ok_or_else(|| {
            syntax(self.line, format!("[{}] is missing `{key}`", self.name))
        })
    }

    fn vector(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let line = e.line;
                if e.rows.len() != 1 {
                    return Err(syntax(line, format!("`{key}` expects one row of numbers")));
                }
                Ok(Some((e.rows.into_iter().next().unwrap(), line)))
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.first() {
            Some(e) => Err(syntax(
                e.line,
                format!("unknown key `{}` in [{}]", e.key, self.name),
            )),
            None => Ok(()),
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

fn semantic(e: Error) -> Error {
    match e {
        Error::Syntax { .. } | Error::Semantic(_) => e,
        other => Error::Semantic(other.to_string()),
    }
}

fn number(token: &str, line: usize) -> Result<f64> {
    let t = token.trim();
    if let Ok(v) = t.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    if let Some(v) = pi_multiple(t) {
        return Ok(v);
    }
    Err(syntax(line, format!("`{t}` is not a finite number")))
}

/// `[-][k*]pi[/d]`.
fn pi_multiple(t: &str) -> Option<f64> {
    let (sign, rest) = match t.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, t),
    };
    let (num, den) = match rest.split_once('/') {
        Some((n, d)) => (n, d.trim().parse::<f64>().ok()?),
        None => (rest, 1.0),
    };
    let k = match num.trim().strip_suffix("pi")? {
        "" => 1.0,
        k => k.trim().strip_suffix('*')?.trim().parse::<f64>().ok()?,
    };
    use std::f64::consts::*;
    // correctly rounded constants where available
    let unit = match den {
        d if d == 1.0 => PI,
        d if d == 2.0 => FRAC_PI_2,
        d if d == 3.0 => FRAC_PI_3,
        d if d == 4.0 => FRAC_PI_4,
        d if d == 6.0 => FRAC_PI_6,
        d if d == 8.0 => FRAC_PI_8,
        d => PI / d,
    };
    let v = sign * k * unit;
    v.is_finite().then_some(v)
}

/// Comma or whitespace separated numbers, `pi` multiples allowed.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    row(text, 1).map_err(|e| match e {
        Error::Syntax { message, .. } => Error::InvalidParameter(message),
        other => other,
    })
}

fn row(text: &str, line: usize) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| number(t, line))
        .collect()
}

fn lex(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    let mut open_matrix = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let trimmed = content.trim();
        if trimmed.starts_with('[') {
            let name = trimmed
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .map(str::trim)
                .filter(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
                .ok_or_else(|| syntax(line, format!("malformed section header `{trimmed}`")))?;
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            open_matrix = false;
            continue;
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| syntax(line, "content before the first [section]"))?;
        if let Some((key, value)) = trimmed.split_once('=') {
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(syntax(line, format!("invalid key `{key}`")));
            }
            if section.entries.iter().any(|e| e.key == key) {
                return Err(syntax(line, format!("duplicate key `{key}` in [{}]", section.name)));
            }
            let value = value.trim();
            let rows = if value.is_empty() {
                Vec::new()
            } else {
                value
                    .split(';')
                    .map(|r| row(r, line))
                    .collect::<Result<Vec<_>>>()?
            };
            open_matrix = value.is_empty();
            section.entries.push(Entry {
                key: key.to_string(),
                line,
                rows,
            });
        } else if open_matrix && raw.starts_with(char::is_whitespace) {
            let entry = section.entries.last_mut().expect("open matrix has an entry");
            entry.rows.push(row(trimmed, line)?);
        } else {
            return Err(syntax(line, format!("expected `key = value`, got `{trimmed}`")));
        }
    }
    for s in &sections {
        for e in &s.entries {
            if e.rows.is_empty() || e.rows.iter().any(|r| r.is_empty()) {
                return Err(syntax(e.line, format!("`{}` has no value", e.key)));
            }
        }
    }
    Ok(sections)
}

/// Parses a model description; see the module docs for the format.
pub fn parse_model(text: &str) -> Result<RobotModel> {
    parse_document(text).map(|d| d.model)
}

pub fn parse_document(text: &str) -> Result<ModelDocument> {
    let sections = lex(text)?;
    let mut base: Option<(Section, usize)> = None;
    let mut links = Vec::new();
    let mut rotors = Vec::new();
    let mut singles: Vec<Section> = Vec::new();
    for s in sections {
        match s.name.as_str() {
            "link" => links.push(s),
            "rotor" => rotors.push(s),
            "base" | "reduction" | "topology" | "efficiency" | "pose" | "gravity" => {
                if singles.iter().any(|o| o.name == s.name) || (s.name == "base" && base.is_some()) {
                    return Err(syntax(s.line, format!("[{}] appears more than once", s.name)));
                }
                if s.name == "base" {
                    let line = s.line;
                    base = Some((s, line));
                } else {
                    singles.push(s);
                }
            }
            other => return Err(syntax(s.line, format!("unknown section [{other}]"))),
        }
    }
    let mut single = |name: &str| -> Option<Section> {
        let i = singles.iter().position(|s| s.name == name)?;
        Some(singles.remove(i))
    };

    let base = match base {
        None => None,
        Some((mut s, line)) => {
            let dof = s.scalar("dof")?.unwrap_or(3.0);
            let mass = s.scalar("mass")?;
            let side = s.scalar("side")?;
            let inertia = s.scalar("inertia")?;
            s.finish()?;
            match dof {
                d if d == 0.0 => None,
                d if d == 3.0 => {
                    let mass = mass.ok_or_else(|| syntax(line, "[base] is missing `mass`"))?;
                    let side = side.unwrap_or(0.0);
                    let mut b = FloatingBase::uniform_square(mass, side).map_err(semantic)?;
                    if let Some(i) = inertia {
                        b.inertia = i;
                        b.validate().map_err(semantic)?;
                    }
                    Some(b)
                }
                d => return Err(Error::Semantic(format!("base dof must be 0 or 3, got {d}"))),
            }
        }
    };

    let m = links.len();
    if m == 0 {
        return Err(Error::Semantic("a model needs at least one [link]".into()));
    }
    if rotors.len() != m {
        return Err(Error::Semantic(format!(
            "{m} [link] sections but {} [rotor] sections",
            rotors.len()
        )));
    }
    let mut bodies = Vec::with_capacity(m);
    for mut s in links {
        let mass = s.required("mass")?;
        let length = s.required("length")?;
        let com = s.scalar("com")?.unwrap_or(0.5 * length);
        let inertia = s.scalar("inertia")?.unwrap_or(mass * length * length / 12.0);
        s.finish()?;
        bodies.push(PlanarBody::new(mass, length, com, inertia).map_err(semantic)?);
    }

    let expect_len = |v: &[f64], n: usize, what: &str, line: usize| -> Result<()> {
        if v.len() != n {
            return Err(Error::Semantic(format!(
                "line {line}: {what} has {} entries, expected {n}",
                v.len()
            )));
        }
        Ok(())
    };

    let ratios = match single("reduction") {
        None => vec![1.0; m],
        Some(mut s) => {
            let (n, line) = s
                .vector("N")?
                .ok_or_else(|| syntax(s.line, "[reduction] is missing `N`"))?;
            s.finish()?;
            expect_len(&n, m, "N", line)?;
            n
        }
    };

    let topology = match single("topology") {
        None => DMatrix::identity(m, m),
        Some(mut s) => {
            let e = s
                .take("D")
                .ok_or_else(|| syntax(s.line, "[topology] is missing `D`"))?;
            s.finish()?;
            if e.rows.len() != m || e.rows.iter().any(|r| r.len() != m) {
                return Err(Error::Semantic(format!(
                    "line {}: D must be {m}x{m}",
                    e.line
                )));
            }
            DMatrix::from_fn(m, m, |i, j| e.rows[i][j])
        }
    };

    let (forward, backward_given, map) = match single("efficiency") {
        None => (vec![1.0; m], None, EfficiencyMap::default()),
        Some(mut s) => {
            let (f, fl) = s
                .vector("eta_f")?
                .ok_or_else(|| syntax(s.line, "[efficiency] is missing `eta_f`"))?;
            expect_len(&f, m, "eta_f", fl)?;
            let b = s.vector("eta_b")?;
            if let Some((b, bl)) = &b {
                expect_len(b, m, "eta_b", *bl)?;
            }
            let map = match s.take("map") {
                None => EfficiencyMap::default(),
                Some(e) => {
                    if e.rows.iter().any(|r| r.len() != 2) {
                        return Err(syntax(e.line, "`map` rows must be `eta_f, eta_b` pairs"));
                    }
                    EfficiencyMap::table(e.rows.iter().map(|r| (r[0], r[1])).collect())
                        .map_err(semantic)?
                }
            };
            s.finish()?;
            (f, b.map(|(b, _)| b), map)
        }
    };
    let backward = match backward_given {
        Some(b) => b,
        None => forward
            .iter()
            .map(|&f| backward_from_forward(f, &map))
            .collect::<Result<Vec<_>>>()
            .map_err(semantic)?,
    };
    if backward.iter().any(|&b| b <= 0.0) {
        return Err(Error::Semantic(
            "backward efficiency is zero: the transmission cannot be backdriven".into(),
        ));
    }
    let transmissions =
        TransmissionSet::new(ratios.clone(), forward, backward, topology).map_err(semantic)?;

    let mut inertias = Vec::with_capacity(m);
    let mut limits = Vec::with_capacity(m);
    for (i, mut s) in rotors.into_iter().enumerate() {
        inertias.push(s.required("inertia")?);
        let rotor_side = s.scalar("tau_max")?;
        let output_side = s.scalar("output_tau_max")?;
        let limit = match (rotor_side, output_side) {
            (Some(_), Some(_)) => {
                return Err(syntax(s.line, "give either `tau_max` or `output_tau_max`, not both"))
            }
            (Some(t), None) => t,
            (None, Some(t)) => t / ratios[i],
            (None, None) => 0.0,
        };
        s.finish()?;
        limits.push(limit);
    }

    let mut model = RobotModel::new(base, bodies, inertias, transmissions).map_err(semantic)?;
    model.torque_limits = limits;
    if let Some(mut s) = single("gravity") {
        model.gravity = s.required("g")?;
        s.finish()?;
    } else {
        model.gravity = DEFAULT_GRAVITY;
    }
    if let Some(mut s) = single("pose") {
        let (q, line) = s
            .vector("q")?
            .ok_or_else(|| syntax(s.line, "[pose] is missing `q`"))?;
        s.finish()?;
        expect_len(&q, model.dof(), "q", line)?;
        model.pose = DVector::from_vec(q);
    }
    model.validate().map_err(semantic)?;
    Ok(ModelDocument { model, map })
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes every field explicitly, rotor-side torque limits and both
/// efficiency vectors included, so that parsing the output restores `model`.
pub fn serialize_model(model: &RobotModel) -> String {
    let mut out = String::new();
    let t = &model.transmissions;
    if let Some(b) = &model.base {
        out += &format!(
            "[base]\ndof = 3\nmass = {:?}\nside = {:?}\ninertia = {:?}\n\n",
            b.mass, b.side, b.inertia
        );
    }
    for l in &model.links {
        out += &format!(
            "[link]\nmass = {:?}\nlength = {:?}\ncom = {:?}\ninertia = {:?}\n\n",
            l.mass, l.length, l.com_offset, l.inertia_com
        );
    }
    for (i, r) in model.rotor_inertias.iter().enumerate() {
        out += &format!(
            "[rotor]\ninertia = {r:?}\ntau_max = {:?}\n\n",
            model.torque_limits[i]
        );
    }
    out += &format!("[reduction]\nN = {}\n\n", join(t.ratios().iter().copied()));
    out += "[topology]\nD =\n";
    for row in t.topology().row_iter() {
        out += &format!("    {}\n", join(row.iter().copied()));
    }
    out += &format!(
        "\n[efficiency]\neta_f = {}\neta_b = {}\n\n",
        join(t.forward().iter().copied()),
        join(t.backward().iter().copied())
    );
    out += &format!("[pose]\nq = {}\n\n", join(model.pose.iter().copied()));
    out += &format!("[gravity]\ng = {:?}\n", model.gravity);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ONE_LINK: &str = "\
[link]
mass = 1
length = 1
com = 1
inertia = 0

[rotor]
inertia = 0.01
output_tau_max = 20

[reduction]
N = 10

[efficiency]
eta_f = 0.8
";

    #[test]
    fn minimal_document_defaults() {
        let model = parse_model(ONE_LINK).unwrap();
        assert_eq!(model.joint_count(), 1);
        assert_eq!(model.base_dof(), 0);
        assert_eq!(model.gravity, 9.81);
        assert_eq!(model.torque_limits, vec![2.0]);
        assert_relative_eq!(model.transmissions.backward()[0], 0.75, epsilon = 1e-15);
        assert_eq!(model.pose.len(), 1);
    }

    #[test]
    fn matrices_and_pi() {
        let text = "\
[link]
mass = 1
length = 1
[link]
mass = 1
length = 1
[rotor]
inertia = 0
[rotor]
inertia = 0
[topology]
D =
    1, 0
    -1, 1   # parallelogram
[pose]
q = pi/3, -2*pi/3
";
        let model = parse_model(text).unwrap();
        assert_eq!(model.transmissions.topology()[(1, 0)], -1.0);
        assert_relative_eq!(model.pose[1], -2.0 * std::f64::consts::FRAC_PI_3, epsilon = 1e-15);
        assert_relative_eq!(model.links[0].inertia_com, 1.0 / 12.0);
        let inline = text.replace("D =\n    1, 0\n    -1, 1   # parallelogram", "D = 1 0; -1 1");
        assert_eq!(parse_model(&inline).unwrap(), model);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let bad = ONE_LINK.replace("length = 1", "length = one");
        assert_eq!(
            parse_model(&bad).unwrap_err(),
            Error::Syntax {
                line: 3,
                message: "`one` is not a finite number".into()
            }
        );
        let e = parse_model("mass = 1\n").unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 1, .. }));
        let e = parse_model(&format!("{ONE_LINK}[widget]\n")).unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 16, .. }));
        let e = parse_model(&ONE_LINK.replace("inertia = 0.01", "inertia = 0.01\ncolor = 3")).unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 9, .. }));
    }

    #[test]
    fn semantic_errors() {
        let e = parse_model(&ONE_LINK.replace("[rotor]\ninertia = 0.01\noutput_tau_max = 20\n", "")).unwrap_err();
        assert!(matches!(e, Error::Semantic(_)));
        assert_eq!(e.exit_code(), 2);
        let text = "[link]\nmass=1\nlength=1\n[link]\nmass=1\nlength=1\n[rotor]\ninertia=0\n[rotor]\ninertia=0\n[topology]\nD = 1 1; 1 1\n";
        let e = parse_model(text).unwrap_err();
        assert!(matches!(e, Error::Semantic(_)));
        assert_eq!(e.exit_code(), 2);
        let locked = ONE_LINK.replace("eta_f = 0.8", "eta_f = 0.5");
        assert!(matches!(parse_model(&locked), Err(Error::Semantic(_))));
    }

    #[test]
    fn round_trip() {
        let mut model = parse_model(ONE_LINK).unwrap();
        model.pose[0] = 0.1 + 0.2;
        let again = parse_model(&serialize_model(&model)).unwrap();
        assert_eq!(again, model);
    }

    #[test]
    fn map_table() {
        let text = ONE_LINK.replace(
            "eta_f = 0.8",
            "eta_f = 0.8\nmap =\n    0.5, 0.0\n    1.0, 1.0",
        );
        let doc = parse_document(&text).unwrap();
        assert!(!doc.map.is_approximate());
        assert_relative_eq!(doc.model.transmissions.backward()[0], 0.6, epsilon = 1e-12);
    }
}
