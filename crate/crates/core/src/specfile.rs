//! Human-readable spec files and bit-exact output formats.
//!
//! One spec file fully describes a reproducible experiment: Lie algebra or
//! explicit group law, grading, lattice scales, fundamental box, stretch
//! factor, quasinorm, substitution table and analysis parameters. All
//! numbers are exact fraction literals; decimal floats are parse errors.
//! Rendering is canonical (fixed section order, sorted keys), so identical
//! models produce byte-identical files on every platform.

use std::collections::BTreeMap;

use crate::error::CoreError;
use crate::group::GradedGroup;
use crate::lattice::{DilationDatum, LatticePoint, QuasiNorm};
use crate::lie::LieAlgebraSpec;
use crate::patch::{Alphabet, Patch};
use crate::poly::Polynomial;
use crate::scalar::{format_scalar, parse_scalar, Scalar};
use crate::substitution::SubstitutionDatum;

#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraSection {
    pub dimension: usize,
    /// (i, j, k, coefficient), 1-based, i < j.
    pub brackets: Vec<(usize, usize, usize, Scalar)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawKind {
    /// Law derived from the lie_algebra section via the BCH series.
    Bch,
    /// Explicit polynomial per coordinate.
    Explicit(Vec<Polynomial>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSection {
    pub degrees: Vec<u32>,
    pub law: LawKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSection {
    pub scales: Vec<Scalar>,
    pub box_lo: Vec<Scalar>,
    pub box_hi: Vec<Scalar>,
    pub stretch: Scalar,
    pub quasinorm: QuasiNorm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubstitutionSection {
    pub alphabet: Vec<String>,
    /// (letter, point coordinates, image letter)
    pub rules: Vec<(String, Vec<Scalar>, String)>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct AnalysisSection {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub window: Option<Scalar>,
    pub radii: Vec<Scalar>,
    /// (letter, weight) for the Delone export.
    pub weights: Vec<(String, Scalar)>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SpecFile {
    pub lie_algebra: Option<LieAlgebraSection>,
    pub group: Option<GroupSection>,
    pub lattice: Option<LatticeSection>,
    pub substitution: Option<SubstitutionSection>,
    pub analysis: Option<AnalysisSection>,
}

// ----------------------------------------------------------------------
// polynomial text grammar
// ----------------------------------------------------------------------

/// Parses the polynomial grammar produced by `Polynomial`'s Display:
/// terms joined by `+`/`-`, each an optional fraction coefficient followed
/// by juxtaposed variables `x<i>`/`y<i>` with optional `^<exp>`.
pub fn parse_polynomial(text: &str, dim: usize) -> Result<Polynomial, String> {
    let nvars = 2 * dim;
    let mut p = Polynomial::zero(nvars);
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.is_empty() {
        return Err("empty polynomial".into());
    }
    let mut i = 0;
    let mut sign = 1i64;
    // a leading sign may be glued to the first token
    loop {
        if i >= toks.len() {
            break;
        }
        // 1. sign token(s)
        if toks[i] == "+" {
            sign = 1;
            i += 1;
            continue;
        }
        if toks[i] == "-" {
            sign = -1;
            i += 1;
            continue;
        }
        // 2. one term: optional coefficient then variables
        let mut coeff: Option<Scalar> = None;
        let mut mono = vec![0u32; nvars];
        let mut saw_factor = false;
        while i < toks.len() && toks[i] != "+" && toks[i] != "-" {
            let mut tok = toks[i];
            if !saw_factor && coeff.is_none() && (tok.starts_with('-') && tok.len() > 1) {
                sign = -sign;
                tok = &tok[1..];
            }
            let (var_part, exp) = match tok.split_once('^') {
                Some((v, e)) => {
                    let exp: u32 = e.parse().map_err(|_| format!("bad exponent `{e}`"))?;
                    (v, exp)
                }
                None => (tok, 1),
            };
            if let Some(rest) = var_part.strip_prefix('x') {
                let idx: usize = rest.parse().map_err(|_| format!("bad variable `{tok}`"))?;
                if idx < 1 || idx > dim {
                    return Err(format!("variable x{idx} out of range 1..{dim}"));
                }
                mono[idx - 1] += exp;
                saw_factor = true;
            } else if let Some(rest) = var_part.strip_prefix('y') {
                let idx: usize = rest.parse().map_err(|_| format!("bad variable `{tok}`"))?;
                if idx < 1 || idx > dim {
                    return Err(format!("variable y{idx} out of range 1..{dim}"));
                }
                mono[dim + idx - 1] += exp;
                saw_factor = true;
            } else {
                if coeff.is_some() || saw_factor {
                    return Err(format!("unexpected token `{tok}`"));
                }
                coeff = Some(parse_scalar(var_part)?);
            }
            i += 1;
        }
        if coeff.is_none() && !saw_factor {
            return Err("dangling sign".into());
        }
        let mut c = coeff.unwrap_or_else(|| Scalar::from_integer(1.into()));
        if sign < 0 {
            c = -c;
        }
        p.add_term(mono, c);
        sign = 1;
    }
    Ok(p)
}

// ----------------------------------------------------------------------
// parsing
// ----------------------------------------------------------------------

fn parse_point(text: &str) -> Result<Vec<Scalar>, String> {
    let t = text.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| format!("expected a parenthesized point, got `{t}`"))?;
    inner
        .split(',')
        .map(|c| parse_scalar(c.trim()))
        .collect::<Result<Vec<_>, _>>()
}

fn format_point_scalars(p: &[Scalar]) -> String {
    format!(
        "({})",
        p.iter().map(format_scalar).collect::<Vec<_>>().join(", ")
    )
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<SpecFile, CoreError> {
        let mut spec = SpecFile::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CoreError::parse(line, raw.len(), "unterminated section header"))?;
                section = name.trim().to_string();
                match section.as_str() {
                    "lie_algebra" => {
                        spec.lie_algebra = Some(LieAlgebraSection {
                            dimension: 0,
                            brackets: vec![],
                        })
                    }
                    "group" => {
                        spec.group = Some(GroupSection {
                            degrees: vec![],
                            law: LawKind::Bch,
                        })
                    }
                    "lattice" => {
                        spec.lattice = Some(LatticeSection {
                            scales: vec![],
                            box_lo: vec![],
                            box_hi: vec![],
                            stretch: Scalar::from_integer(0.into()),
                            quasinorm: QuasiNorm::LInf,
                        })
                    }
                    "substitution" => {
                        spec.substitution = Some(SubstitutionSection {
                            alphabet: vec![],
                            rules: vec![],
                        })
                    }
                    "analysis" => spec.analysis = Some(AnalysisSection::default()),
                    other => {
                        return Err(CoreError::parse(
                            line,
                            1,
                            format!("unknown section `{other}`"),
                        ))
                    }
                }
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                CoreError::parse(line, 1, format!("expected `key = value`, got `{trimmed}`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            let col = content.find('=').unwrap_or(0) + 2;
            let perr = |msg: String| CoreError::parse(line, col, msg);
            match section.as_str() {
                "lie_algebra" => {
                    let sec = spec.lie_algebra.as_mut().unwrap();
                    if key == "dimension" {
                        sec.dimension = value.parse().map_err(|_| {
                            perr(format!("bad dimension `{value}`"))
                        })?;
                    } else if let Some(rest) = key.strip_prefix("bracket") {
                        let idx: Vec<&str> = rest.split_whitespace().collect();
                        if idx.len() != 2 {
                            return Err(perr("bracket key needs two indices `bracket i j`".into()));
                        }
                        let i: usize = idx[0].parse().map_err(|_| perr("bad index".into()))?;
                        let j: usize = idx[1].parse().map_err(|_| perr("bad index".into()))?;
                        for item in value.split_whitespace() {
                            let (k, c) = item.split_once(':').ok_or_else(|| {
                                perr(format!("bracket entries are `k:coeff`, got `{item}`"))
                            })?;
                            let k: usize = k.parse().map_err(|_| perr("bad target index".into()))?;
                            let c = parse_scalar(c).map_err(|e| perr(e))?;
                            sec.brackets.push((i, j, k, c));
                        }
                    } else {
                        return Err(perr(format!("unknown lie_algebra key `{key}`")));
                    }
                }
                "group" => {
                    let dim = spec
                        .group
                        .as_ref()
                        .map(|g| g.degrees.len())
                        .unwrap_or(0);
                    let sec = spec.group.as_mut().unwrap();
                    if key == "degrees" {
                        sec.degrees = value
                            .split_whitespace()
                            .map(|d| d.parse::<u32>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| perr(format!("bad degrees `{value}`")))?;
                        if let LawKind::Explicit(polys) = &mut sec.law {
                            if polys.is_empty() {
                                *polys = Vec::new();
                            }
                        }
                    } else if key == "law" {
                        sec.law = match value {
                            "bch" => LawKind::Bch,
                            "explicit" => LawKind::Explicit(vec![]),
                            other => {
                                return Err(perr(format!(
                                    "law must be `bch` or `explicit`, got `{other}`"
                                )))
                            }
                        };
                    } else if let Some(rest) = key.strip_prefix("mul") {
                        let idx: usize = rest
                            .trim()
                            .parse()
                            .map_err(|_| perr(format!("bad mul index `{rest}`")))?;
                        let LawKind::Explicit(polys) = &mut sec.law else {
                            return Err(perr("mul lines require `law = explicit`".into()));
                        };
                        if dim == 0 {
                            return Err(perr("degrees must precede mul lines".into()));
                        }
                        if idx != polys.len() + 1 {
                            return Err(perr(format!(
                                "mul lines must appear in order; expected mul {} next",
                                polys.len() + 1
                            )));
                        }
                        let poly = parse_polynomial(value, dim).map_err(perr)?;
                        polys.push(poly);
                    } else {
                        return Err(perr(format!("unknown group key `{key}`")));
                    }
                }
                "lattice" => {
                    let sec = spec.lattice.as_mut().unwrap();
                    if key == "scales" {
                        sec.scales = value
                            .split_whitespace()
                            .map(parse_scalar)
                            .collect::<Result<_, _>>()
                            .map_err(perr)?;
                    } else if let Some(rest) = key.strip_prefix("box") {
                        let idx: usize = rest
                            .trim()
                            .parse()
                            .map_err(|_| perr(format!("bad box index `{rest}`")))?;
                        let parts: Vec<&str> = value.split_whitespace().collect();
                        if parts.len() != 2 {
                            return Err(perr("box lines are `box i = lo hi`".into()));
                        }
                        if idx != sec.box_lo.len() + 1 {
                            return Err(perr(format!(
                                "box lines must appear in order; expected box {} next",
                                sec.box_lo.len() + 1
                            )));
                        }
                        sec.box_lo.push(parse_scalar(parts[0]).map_err(perr)?);
                        sec.box_hi.push(parse_scalar(parts[1]).map_err(|e| {
                            CoreError::parse(line, col, e)
                        })?);
                    } else if key == "stretch" {
                        sec.stretch = parse_scalar(value).map_err(perr)?;
                    } else if key == "quasinorm" {
                        sec.quasinorm = match value {
                            "linf" => QuasiNorm::LInf,
                            "koranyi" => QuasiNorm::Koranyi,
                            other => {
                                return Err(perr(format!(
                                    "quasinorm must be `linf` or `koranyi`, got `{other}`"
                                )))
                            }
                        };
                    } else {
                        return Err(perr(format!("unknown lattice key `{key}`")));
                    }
                }
                "substitution" => {
                    let sec = spec.substitution.as_mut().unwrap();
                    if key == "alphabet" {
                        sec.alphabet = value.split_whitespace().map(|s| s.to_string()).collect();
                    } else if let Some(rest) = key.strip_prefix("rule") {
                        let rest = rest.trim();
                        let Some(paren) = rest.find('(') else {
                            return Err(perr("rule keys are `rule <letter> (point)`".into()));
                        };
                        let letter = rest[..paren].trim().to_string();
                        let point = parse_point(&rest[paren..]).map_err(perr)?;
                        sec.rules.push((letter, point, value.to_string()));
                    } else {
                        return Err(perr(format!("unknown substitution key `{key}`")));
                    }
                }
                "analysis" => {
                    let sec = spec.analysis.as_mut().unwrap();
                    match key {
                        "seed" => {
                            sec.seed = Some(
                                value.parse().map_err(|_| perr(format!("bad seed `{value}`")))?,
                            )
                        }
                        "budget" => {
                            sec.budget = Some(
                                value
                                    .parse()
                                    .map_err(|_| perr(format!("bad budget `{value}`")))?,
                            )
                        }
                        "window" => sec.window = Some(parse_scalar(value).map_err(perr)?),
                        "radii" => {
                            sec.radii = value
                                .split_whitespace()
                                .map(parse_scalar)
                                .collect::<Result<_, _>>()
                                .map_err(perr)?
                        }
                        "weights" => {
                            sec.weights = value
                                .split_whitespace()
                                .map(|item| {
                                    let (l, w) = item.split_once(':').ok_or_else(|| {
                                        format!("weights are `letter:weight`, got `{item}`")
                                    })?;
                                    Ok((l.to_string(), parse_scalar(w)?))
                                })
                                .collect::<Result<_, String>>()
                                .map_err(perr)?
                        }
                        other => return Err(perr(format!("unknown analysis key `{other}`"))),
                    }
                }
                "" => {
                    return Err(CoreError::parse(
                        line,
                        1,
                        "key-value line before any section header",
                    ))
                }
                _ => unreachable!(),
            }
        }
        Ok(spec)
    }

    /// Canonical rendering: stable section order, brackets and rules
    /// sorted, exact fractions throughout.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(sec) = &self.lie_algebra {
            out.push_str("[lie_algebra]\n");
            out.push_str(&format!("dimension = {}\n", sec.dimension));
            let mut grouped: BTreeMap<(usize, usize), Vec<(usize, Scalar)>> = BTreeMap::new();
            for (i, j, k, c) in &sec.brackets {
                grouped.entry((*i, *j)).or_default().push((*k, c.clone()));
            }
            for ((i, j), mut targets) in grouped {
                targets.sort_by_key(|(k, _)| *k);
                let rhs = targets
                    .iter()
                    .map(|(k, c)| format!("{k}:{}", format_scalar(c)))
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push_str(&format!("bracket {i} {j} = {rhs}\n"));
            }
            out.push('\n');
        }
        if let Some(sec) = &self.group {
            out.push_str("[group]\n");
            out.push_str(&format!(
                "degrees = {}\n",
                sec.degrees
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
            match &sec.law {
                LawKind::Bch => out.push_str("law = bch\n"),
                LawKind::Explicit(polys) => {
                    out.push_str("law = explicit\n");
                    for (i, p) in polys.iter().enumerate() {
                        out.push_str(&format!("mul {} = {}\n", i + 1, p));
                    }
                }
            }
            out.push('\n');
        }
        if let Some(sec) = &self.lattice {
            out.push_str("[lattice]\n");
            out.push_str(&format!(
                "scales = {}\n",
                sec.scales
                    .iter()
                    .map(format_scalar)
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
            for i in 0..sec.box_lo.len() {
                out.push_str(&format!(
                    "box {} = {} {}\n",
                    i + 1,
                    format_scalar(&sec.box_lo[i]),
                    format_scalar(&sec.box_hi[i])
                ));
            }
            out.push_str(&format!("stretch = {}\n", format_scalar(&sec.stretch)));
            out.push_str(&format!(
                "quasinorm = {}\n",
                match sec.quasinorm {
                    QuasiNorm::LInf => "linf",
                    QuasiNorm::Koranyi => "koranyi",
                }
            ));
            out.push('\n');
        }
        if let Some(sec) = &self.substitution {
            out.push_str("[substitution]\n");
            out.push_str(&format!("alphabet = {}\n", sec.alphabet.join(" ")));
            let mut rules = sec.rules.clone();
            rules.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            for (letter, point, image) in rules {
                out.push_str(&format!(
                    "rule {letter} {} = {image}\n",
                    format_point_scalars(&point)
                ));
            }
            out.push('\n');
        }
        if let Some(sec) = &self.analysis {
            out.push_str("[analysis]\n");
            if let Some(seed) = sec.seed {
                out.push_str(&format!("seed = {seed}\n"));
            }
            if let Some(budget) = sec.budget {
                out.push_str(&format!("budget = {budget}\n"));
            }
            if let Some(window) = &sec.window {
                out.push_str(&format!("window = {}\n", format_scalar(window)));
            }
            if !sec.radii.is_empty() {
                out.push_str(&format!(
                    "radii = {}\n",
                    sec.radii
                        .iter()
                        .map(format_scalar)
                        .collect::<Vec<_>>()
                        .join(" ")
                ));
            }
            if !sec.weights.is_empty() {
                out.push_str(&format!(
                    "weights = {}\n",
                    sec.weights
                        .iter()
                        .map(|(l, w)| format!("{l}:{}", format_scalar(w)))
                        .collect::<Vec<_>>()
                        .join(" ")
                ));
            }
            out.push('\n');
        }
        out
    }

    // ------------------------------------------------------------------
    // building domain objects
    // ------------------------------------------------------------------

    pub fn build_lie_algebra(&self) -> Result<LieAlgebraSpec, CoreError> {
        let sec = self
            .lie_algebra
            .as_ref()
            .ok_or_else(|| CoreError::Invalid("spec has no [lie_algebra] section".into()))?;
        if sec.dimension == 0 {
            return Err(CoreError::Invalid("lie_algebra dimension missing".into()));
        }
        let mut alg = LieAlgebraSpec::new(sec.dimension);
        for (i, j, k, c) in &sec.brackets {
            if *i > sec.dimension || *j > sec.dimension || *k > sec.dimension || *i == 0 || *j == 0
            {
                return Err(CoreError::Invalid(format!(
                    "bracket indices ({i},{j},{k}) out of range"
                )));
            }
            alg.add_bracket(*i, *j, *k, c.clone());
        }
        alg.check_jacobi()?;
        Ok(alg)
    }

    pub fn build_group(&self) -> Result<GradedGroup, CoreError> {
        let sec = self
            .group
            .as_ref()
            .ok_or_else(|| CoreError::Invalid("spec has no [group] section".into()))?;
        if sec.degrees.is_empty() {
            return Err(CoreError::Invalid("group degrees missing".into()));
        }
        match &sec.law {
            LawKind::Bch => {
                let alg = self.build_lie_algebra()?;
                GradedGroup::from_bch(&alg, sec.degrees.clone())
            }
            LawKind::Explicit(polys) => {
                if polys.len() != sec.degrees.len() {
                    return Err(CoreError::Invalid(format!(
                        "explicit law has {} coordinates, degrees have {}",
                        polys.len(),
                        sec.degrees.len()
                    )));
                }
                GradedGroup::explicit(sec.degrees.clone(), polys.clone())
            }
        }
    }

    pub fn build_datum(&self) -> Result<DilationDatum, CoreError> {
        let group = self.build_group()?;
        let sec = self
            .lattice
            .as_ref()
            .ok_or_else(|| CoreError::Invalid("spec has no [lattice] section".into()))?;
        DilationDatum::new(
            group,
            sec.scales.clone(),
            sec.box_lo.clone(),
            sec.box_hi.clone(),
            sec.stretch.clone(),
            sec.quasinorm,
        )
    }

    pub fn build_substitution(
        &self,
        datum: &DilationDatum,
        budget: u64,
    ) -> Result<SubstitutionDatum, CoreError> {
        let sec = self
            .substitution
            .as_ref()
            .ok_or_else(|| CoreError::Invalid("spec has no [substitution] section".into()))?;
        let alphabet = Alphabet::new(sec.alphabet.clone())?;
        let mut per_letter: Vec<Vec<(LatticePoint, u8)>> = vec![Vec::new(); alphabet.len()];
        for (letter, point, image) in &sec.rules {
            let Some(l) = alphabet.index(letter) else {
                return Err(CoreError::Invalid(format!(
                    "rule letter `{letter}` not in alphabet"
                )));
            };
            let Some(img) = alphabet.index(image) else {
                return Err(CoreError::Invalid(format!(
                    "rule image `{image}` not in alphabet"
                )));
            };
            let p = datum.element_to_point(point)?;
            per_letter[l as usize].push((p, img));
        }
        let table = per_letter
            .into_iter()
            .map(Patch::from_pairs)
            .collect::<Result<Vec<_>, _>>()?;
        let subst = SubstitutionDatum::new(alphabet, table)?;
        subst.validate(datum, budget)?;
        Ok(subst)
    }

    /// Model of a substitution datum for rendering.
    pub fn substitution_section(
        datum: &DilationDatum,
        subst: &SubstitutionDatum,
    ) -> SubstitutionSection {
        let mut rules = Vec::new();
        for (l, patch) in subst.table.iter().enumerate() {
            for (p, img) in patch.iter() {
                rules.push((
                    subst.alphabet.name(l as u8).to_string(),
                    datum.point_to_element(p),
                    subst.alphabet.name(img).to_string(),
                ));
            }
        }
        SubstitutionSection {
            alphabet: subst.alphabet.names().to_vec(),
            rules,
        }
    }
}

// ----------------------------------------------------------------------
// exports
// ----------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Result<Self, CoreError> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(CoreError::Invalid(format!(
                "format must be csv or json, got `{other}`"
            ))),
        }
    }
}

fn coord_header(dim: usize) -> String {
    (1..=dim)
        .map(|i| format!("x{i}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Patch export: one exact fraction per coordinate, then the letter name.
/// Rows in coordinate-lexicographic order.
pub fn export_patch(
    datum: &DilationDatum,
    alphabet: &Alphabet,
    patch: &Patch,
    format: ExportFormat,
) -> String {
    match format {
        ExportFormat::Csv => {
            let mut out = format!("{},letter\n", coord_header(datum.dim()));
            for (p, l) in patch.iter() {
                let coords = datum.point_to_element(p);
                out.push_str(&format!(
                    "{},{}\n",
                    coords.iter().map(format_scalar).collect::<Vec<_>>().join(","),
                    alphabet.name(l)
                ));
            }
            out
        }
        ExportFormat::Json => {
            let mut rows = Vec::with_capacity(patch.len());
            for (p, l) in patch.iter() {
                let coords = datum.point_to_element(p);
                rows.push(format!(
                    "{{\"coords\":[{}],\"letter\":\"{}\"}}",
                    coords
                        .iter()
                        .map(|c| format!("\"{}\"", format_scalar(c)))
                        .collect::<Vec<_>>()
                        .join(","),
                    alphabet.name(l)
                ));
            }
            format!("{{\"points\":[{}]}}\n", rows.join(","))
        }
    }
}

/// Weighted point export for Delone sets.
pub fn export_weighted(
    points: &[(Vec<Scalar>, Scalar)],
    dim: usize,
    format: ExportFormat,
) -> String {
    match format {
        ExportFormat::Csv => {
            let mut out = format!("{},weight\n", coord_header(dim));
            for (coords, w) in points {
                out.push_str(&format!(
                    "{},{}\n",
                    coords.iter().map(format_scalar).collect::<Vec<_>>().join(","),
                    format_scalar(w)
                ));
            }
            out
        }
        ExportFormat::Json => {
            let rows: Vec<String> = points
                .iter()
                .map(|(coords, w)| {
                    format!(
                        "{{\"coords\":[{}],\"weight\":\"{}\"}}",
                        coords
                            .iter()
                            .map(|c| format!("\"{}\"", format_scalar(c)))
                            .collect::<Vec<_>>()
                            .join(","),
                        format_scalar(w)
                    )
                })
                .collect();
            format!("{{\"points\":[{}]}}\n", rows.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::{bundled_substitution, heisenberg_datum};
    use crate::scalar::{s_frac, s_int};

    #[test]
    fn polynomial_grammar_round_trip() {
        let texts = [
            "x3 + y3 + 1/2 x1 y2 - 1/2 x2 y1",
            "x1 + y1",
            "x4 + y4 + 1/12 x1^2 y2 - 5/3 x2 y1 y3",
        ];
        for t in texts {
            let p = parse_polynomial(t, 4).unwrap();
            assert_eq!(p.to_string(), t);
        }
        assert!(parse_polynomial("x1 + 0.5 y1", 3).is_err());
        assert!(parse_polynomial("x9 + y1", 3).is_err());
    }

    #[test]
    fn spec_round_trip_with_substitution() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let spec = SpecFile {
            lie_algebra: None,
            group: Some(GroupSection {
                degrees: vec![1, 1, 2],
                law: LawKind::Explicit(datum.group.law.clone()),
            }),
            lattice: Some(LatticeSection {
                scales: datum.scales.clone(),
                box_lo: datum.box_lo.clone(),
                box_hi: datum.box_hi.clone(),
                stretch: datum.stretch.clone(),
                quasinorm: datum.quasinorm,
            }),
            substitution: Some(SpecFile::substitution_section(&datum, &subst)),
            analysis: Some(AnalysisSection {
                seed: Some(0),
                budget: Some(4_000_000),
                window: Some(s_int(54)),
                radii: vec![s_int(1), s_int(3), s_int(9)],
                weights: vec![("a".into(), s_int(1)), ("b".into(), s_int(2))],
            }),
        };
        let text = spec.render();
        let reparsed = SpecFile::parse(&text).unwrap();
        assert_eq!(reparsed, spec);
        // render of the reparse is byte-identical
        assert_eq!(reparsed.render(), text);
        // and the built objects reproduce the bundled ones
        let datum2 = reparsed.build_datum().unwrap();
        assert_eq!(datum2.scales, datum.scales);
        let subst2 = reparsed.build_substitution(&datum2, 1_000_000).unwrap();
        assert_eq!(subst2, subst);
    }

    #[test]
    fn floats_rejected_with_position() {
        let text = "[lattice]\nscales = 2 2 2\nbox 1 = -1 1\nbox 2 = -1 1\nbox 3 = -0.5 1\nstretch = 3\nquasinorm = linf\n";
        match SpecFile::parse(text) {
            Err(CoreError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_sections_error() {
        assert!(SpecFile::parse("[bogus]\n").is_err());
        assert!(SpecFile::parse("[group]\nfoo = 1\n").is_err());
        assert!(SpecFile::parse("orphan = 1\n").is_err());
    }

    #[test]
    fn export_formats() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let patch = &subst.table[0];
        let csv = export_patch(&datum, &subst.alphabet, patch, ExportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 82); // header + 81 rows
        assert_eq!(lines[0], "x1,x2,x3,letter");
        // empty patch: header only
        let empty = export_patch(
            &datum,
            &subst.alphabet,
            &Patch::empty(),
            ExportFormat::Csv,
        );
        assert_eq!(empty, "x1,x2,x3,letter\n");
        // deterministic output
        let again = export_patch(&datum, &subst.alphabet, patch, ExportFormat::Csv);
        assert_eq!(csv, again);
        let json = export_patch(&datum, &subst.alphabet, patch, ExportFormat::Json);
        assert!(json.starts_with("{\"points\":[{\"coords\":[\"-2\",\"-2\",\"-8\"]"));
        // weighted export
        let weighted = vec![
            (vec![s_int(0), s_int(0), s_int(0)], s_int(1)),
            (vec![s_frac(1, 2), s_int(2), s_int(-4)], s_int(2)),
        ];
        let wcsv = export_weighted(&weighted, 3, ExportFormat::Csv);
        assert!(wcsv.contains("1/2,2,-4,2"));
    }
}
