//! Problem files: a `[base]` section, named `[elements]`, then commands.
//!
//! The format is line oriented. `#` starts a comment, `[name]` opens a
//! section and every other line is `key = value`. The grammar is given in
//! the repository README.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::axioms::Reading;
use crate::chains::TypeFamily;
use crate::cylinder::{BaseSpace, CylinderElement};
use crate::topology::{mask_from_points, FiniteTopology, PointSet};
use crate::transform::FiniteTransformation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

type Parsed<T> = std::result::Result<T, ParseError>;

fn fail<T>(line: usize, message: impl Into<String>) -> Parsed<T> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

/// An element together with the name or expression it was written as.
pub type Named = (String, CylinderElement);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomGroup {
    Cylindric,
    Interior,
    Substitution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadingChoice {
    Both,
    Only(Reading),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomsCommand {
    pub groups: Vec<AxiomGroup>,
    pub reading: ReadingChoice,
    pub generators: Vec<Named>,
    pub index_bound: usize,
    pub random: usize,
    /// Check every topology on the base's points instead of the given one.
    pub all_topologies: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentCommand {
    pub seed: Named,
    pub steps: usize,
    pub bound: usize,
    pub terms: Vec<Named>,
    pub transformations: usize,
    /// Interior checks for coordinates below this bound; 0 skips them.
    pub interior: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Only when no interpolant is found.
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolateCommand {
    pub x1: Vec<Named>,
    pub x2: Vec<Named>,
    pub a: Named,
    pub c: Named,
    pub support_cap: usize,
    pub depth_cap: usize,
    pub filter_steps: usize,
    pub filters: FilterMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmitCommand {
    pub seed: Named,
    pub families: Vec<(String, Vec<CylinderElement>)>,
    pub depth: usize,
    pub steps: usize,
    pub bound: usize,
    pub transformations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinsCommand {
    pub steps: usize,
    pub census: Vec<Named>,
    pub depth: usize,
    pub min_disagreements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitsCommand {
    pub generators: Vec<Named>,
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Axioms(AxiomsCommand),
    Represent(RepresentCommand),
    Interpolate(InterpolateCommand),
    Omit(OmitCommand),
    Twins(TwinsCommand),
    Orbits(OrbitsCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Axioms(_) => "axioms",
            Command::Represent(_) => "represent",
            Command::Interpolate(_) => "interpolate",
            Command::Omit(_) => "omit",
            Command::Twins(_) => "twins",
            Command::Orbits(_) => "orbits",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub base: BaseSpace,
    pub elements: Vec<Named>,
    /// Commands with the line of their section header.
    pub commands: Vec<(usize, Command)>,
}

impl ProblemFile {
    pub fn element(&self, name: &str) -> Option<&CylinderElement> {
        self.elements.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }
}

pub fn parse_file(path: &Path, support_cap: Option<usize>) -> Parsed<ProblemFile> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_with_cap(&text, support_cap),
        Err(e) => fail(0, format!("cannot read {}: {e}", path.display())),
    }
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    line: usize,
    name: String,
    entries: Vec<Entry>,
}

fn split_sections(text: &str) -> Parsed<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return fail(line, "unterminated section header");
            };
            sections.push(Section {
                line,
                name: name.trim().to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return fail(line, format!("expected `key = value`, found `{content}`"));
        };
        let Some(section) = sections.last_mut() else {
            return fail(line, "entry before the first section");
        };
        section.entries.push(Entry {
            line,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

/// Parses a whole problem file.
pub fn parse(text: &str) -> Parsed<ProblemFile> {
    parse_with_cap(text, None)
}

/// Parses a whole problem file; `support_cap` replaces the one in [base].
pub fn parse_with_cap(text: &str, support_cap: Option<usize>) -> Parsed<ProblemFile> {
    let sections = split_sections(text)?;
    let mut iter = sections.into_iter();
    let Some(first) = iter.next() else {
        return fail(1, "missing [base] section");
    };
    if first.name != "base" {
        return fail(
            first.line,
            format!("the first section must be [base], found [{}]", first.name),
        );
    }
    let mut base = parse_base(&first)?;
    if let Some(cap) = support_cap {
        base = base.with_support_cap(cap);
    }
    let mut ctx = Context {
        base,
        elements: Vec::new(),
    };
    let mut commands = Vec::new();
    let mut seen_elements = false;
    for section in iter {
        match section.name.as_str() {
            "base" => return fail(section.line, "duplicate [base] section"),
            "elements" => {
                if seen_elements || !commands.is_empty() {
                    return fail(section.line, "[elements] must come once, before any command");
                }
                seen_elements = true;
                for entry in &section.entries {
                    let name = entry.key.as_str();
                    if !is_identifier(name) || RESERVED.contains(&name) {
                        return fail(entry.line, format!("`{name}` is not a usable element name"));
                    }
                    if ctx.lookup(name).is_some() {
                        return fail(entry.line, format!("element `{name}` defined twice"));
                    }
                    let e = ctx.expr(&entry.value, entry.line)?;
                    ctx.elements.push((name.to_string(), e));
                }
            }
            "axioms" => commands.push((section.line, Command::Axioms(ctx.axioms(&section)?))),
            "represent" => commands.push((section.line, Command::Represent(ctx.represent(&section)?))),
            "interpolate" => commands.push((section.line, Command::Interpolate(ctx.interpolate(&section)?))),
            "omit" => commands.push((section.line, Command::Omit(ctx.omit(&section)?))),
            "twins" => commands.push((section.line, Command::Twins(ctx.twins(&section)?))),
            "orbits" => commands.push((section.line, Command::Orbits(ctx.orbits(&section)?))),
            other => return fail(section.line, format!("unknown section [{other}]")),
        }
    }
    Ok(ProblemFile {
        base: ctx.base,
        elements: ctx.elements,
        commands,
    })
}

const RESERVED: &[&str] = &[
    "zero", "one", "eq", "diag", "table", "not", "meet", "join", "cyl", "int", "sub", "chain",
];

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The entries of one section, checked against the keys it accepts.
struct Keys<'a> {
    section: &'a Section,
}

impl<'a> Keys<'a> {
    fn new(section: &'a Section, allowed: &[&str]) -> Parsed<Self> {
        let mut seen = BTreeSet::new();
        for e in &section.entries {
            if !allowed.contains(&e.key.as_str()) {
                return fail(e.line, format!("unknown key `{}` in [{}]", e.key, section.name));
            }
            if e.key != "family" && !seen.insert(e.key.as_str()) {
                return fail(e.line, format!("duplicate key `{}`", e.key));
            }
        }
        Ok(Self { section })
    }

    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.section.entries.iter().find(|e| e.key == key)
    }

    fn all(&self, key: &str) -> Vec<&'a Entry> {
        self.section.entries.iter().filter(|e| e.key == key).collect()
    }

    fn number(&self, key: &str, default: usize) -> Parsed<usize> {
        match self.get(key) {
            Some(e) => parse_number(&e.value, e.line),
            None => Ok(default),
        }
    }

    fn word(&self, key: &str, default: &'static str) -> (String, usize) {
        match self.get(key) {
            Some(e) => (e.value.clone(), e.line),
            None => (default.to_string(), self.section.line),
        }
    }
}

fn parse_number(s: &str, line: usize) -> Parsed<usize> {
    s.trim()
        .parse()
        .or_else(|_| fail(line, format!("expected a number, found `{s}`")))
}

fn parse_base(section: &Section) -> Parsed<BaseSpace> {
    let keys = Keys::new(section, &["points", "topology", "opens", "subbasis", "support_cap"])?;
    let Some(points) = keys.get("points") else {
        return fail(section.line, "[base] needs `points`");
    };
    let n = parse_number(&points.value, points.line)?;
    let given: Vec<&Entry> = ["topology", "opens", "subbasis"]
        .iter()
        .filter_map(|k| keys.get(k))
        .collect();
    if given.len() > 1 {
        return fail(given[1].line, "give only one of `topology`, `opens`, `subbasis`");
    }
    let topology = match given.first() {
        None => FiniteTopology::discrete(n),
        Some(e) if e.key == "topology" => match e.value.as_str() {
            "discrete" => FiniteTopology::discrete(n),
            "indiscrete" => FiniteTopology::indiscrete(n),
            "sierpinski" if n == 2 => Ok(FiniteTopology::sierpinski()),
            "sierpinski" => return fail(e.line, "the Sierpinski topology needs points = 2"),
            other => return fail(e.line, format!("unknown topology `{other}`")),
        },
        Some(e) => {
            let sets = parse_sets(&e.value, n, e.line)?;
            if e.key == "opens" {
                FiniteTopology::new(n, &sets)
            } else {
                FiniteTopology::from_subbasis(n, &sets)
            }
        }
    };
    let line = given.first().map_or(points.line, |e| e.line);
    let topology = topology.or_else(|err| fail(line, err.to_string()))?;
    let mut base = BaseSpace::new(topology).or_else(|err| fail(line, err.to_string()))?;
    if let Some(e) = keys.get("support_cap") {
        base = base.with_support_cap(parse_number(&e.value, e.line)?);
    }
    Ok(base)
}

/// `{0, 1}, {}, {2}`
fn parse_sets(s: &str, n: usize, line: usize) -> Parsed<Vec<PointSet>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let Some(body) = rest.strip_prefix('{') else {
            return fail(line, format!("expected `{{` in set list, found `{rest}`"));
        };
        let Some(end) = body.find('}') else {
            return fail(line, "unterminated set");
        };
        let points: Vec<usize> = body[..end]
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| parse_number(p, line))
            .collect::<Parsed<_>>()?;
        out.push(mask_from_points(n, &points).or_else(|e| fail(line, e.to_string()))?);
        rest = body[end + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        }
    }
    Ok(out)
}

/// Splits at commas (or `sep`) outside brackets.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

struct Context {
    base: BaseSpace,
    elements: Vec<Named>,
}

impl Context {
    fn lookup(&self, name: &str) -> Option<&CylinderElement> {
        self.elements.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    fn expr(&self, text: &str, line: usize) -> Parsed<CylinderElement> {
        let mut p = ExprParser {
            src: text.as_bytes(),
            pos: 0,
            line,
            ctx: self,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return fail(line, format!("unexpected `{}` after expression", &text[p.pos..]));
        }
        Ok(e)
    }

    fn named(&self, text: &str, line: usize) -> Parsed<Named> {
        Ok((text.trim().to_string(), self.expr(text, line)?))
    }

    fn named_list(&self, text: &str, line: usize) -> Parsed<Vec<Named>> {
        split_top(text, ',').into_iter().map(|t| self.named(t, line)).collect()
    }

    fn list_or_all(&self, entry: Option<&Entry>) -> Parsed<Vec<Named>> {
        match entry {
            Some(e) => self.named_list(&e.value, e.line),
            None => Ok(self.elements.clone()),
        }
    }

    fn axioms(&self, section: &Section) -> Parsed<AxiomsCommand> {
        let keys = Keys::new(
            section,
            &["groups", "reading", "generators", "index_bound", "random", "topologies"],
        )?;
        let groups = match keys.get("groups") {
            None => vec![AxiomGroup::Cylindric, AxiomGroup::Interior, AxiomGroup::Substitution],
            Some(e) => split_top(&e.value, ',')
                .into_iter()
                .map(|g| match g {
                    "ca" => Ok(AxiomGroup::Cylindric),
                    "tca" => Ok(AxiomGroup::Interior),
                    "sub" => Ok(AxiomGroup::Substitution),
                    other => fail(e.line, format!("unknown axiom group `{other}` (ca, tca, sub)")),
                })
                .collect::<Parsed<_>>()?,
        };
        let (reading, line) = keys.word("reading", "both");
        let reading = match reading.as_str() {
            "both" => ReadingChoice::Both,
            "literal" => ReadingChoice::Only(Reading::Literal),
            "corrected" => ReadingChoice::Only(Reading::Corrected),
            other => return fail(line, format!("unknown reading `{other}` (both, literal, corrected)")),
        };
        let generators = self.list_or_all(keys.get("generators"))?;
        let index_bound = keys.number("index_bound", 3)?;
        if index_bound < 2 {
            return fail(section.line, "index_bound must be at least 2");
        }
        let random = keys.number("random", 0)?;
        let (topologies, line) = keys.word("topologies", "given");
        let all_topologies = match topologies.as_str() {
            "given" => false,
            "all" => true,
            other => return fail(line, format!("unknown topologies choice `{other}` (given, all)")),
        };
        Ok(AxiomsCommand {
            groups,
            reading,
            generators,
            index_bound,
            random,
            all_topologies,
        })
    }

    fn represent(&self, section: &Section) -> Parsed<RepresentCommand> {
        let keys = Keys::new(
            section,
            &["seed", "steps", "bound", "terms", "transformations", "interior"],
        )?;
        let Some(seed) = keys.get("seed") else {
            return fail(section.line, "[represent] needs `seed`");
        };
        Ok(RepresentCommand {
            seed: self.named(&seed.value, seed.line)?,
            steps: keys.number("steps", 1000)?,
            bound: keys.number("bound", 4)?,
            terms: self.list_or_all(keys.get("terms"))?,
            transformations: keys.number("transformations", 50)?,
            interior: keys.number("interior", 0)?,
        })
    }

    fn interpolate(&self, section: &Section) -> Parsed<InterpolateCommand> {
        let keys = Keys::new(
            section,
            &[
                "x1",
                "x2",
                "a",
                "c",
                "support_cap",
                "depth_cap",
                "filter_steps",
                "filters",
            ],
        )?;
        let required = |key: &str| match keys.get(key) {
            Some(e) => Ok(e),
            None => fail(section.line, format!("[interpolate] needs `{key}`")),
        };
        let (x1, x2, a, c) = (required("x1")?, required("x2")?, required("a")?, required("c")?);
        let (filters, line) = keys.word("filters", "auto");
        let filters = match filters.as_str() {
            "auto" => FilterMode::Auto,
            "always" => FilterMode::Always,
            "never" => FilterMode::Never,
            other => return fail(line, format!("unknown filters mode `{other}` (auto, always, never)")),
        };
        Ok(InterpolateCommand {
            x1: self.named_list(&x1.value, x1.line)?,
            x2: self.named_list(&x2.value, x2.line)?,
            a: self.named(&a.value, a.line)?,
            c: self.named(&c.value, c.line)?,
            support_cap: keys.number("support_cap", 2)?,
            depth_cap: keys.number("depth_cap", 3)?,
            filter_steps: keys.number("filter_steps", 8)?,
            filters,
        })
    }

    fn family(&self, e: &Entry) -> Parsed<(String, Vec<CylinderElement>)> {
        let text = e.value.trim();
        if let Some(args) = text
            .strip_prefix("chain")
            .map(str::trim_start)
            .and_then(|r| r.strip_prefix('('))
        {
            let Some(args) = args.strip_suffix(')') else {
                return fail(e.line, "unterminated chain(j, m_max)");
            };
            let nums = split_top(args, ',');
            if nums.len() != 2 {
                return fail(e.line, format!("chain takes 2 arguments, found {}", nums.len()));
            }
            let (j, m) = (parse_number(nums[0], e.line)?, parse_number(nums[1], e.line)?);
            let members = TypeFamily::chain(&self.base, j, m).or_else(|err| fail(e.line, err.to_string()))?;
            return Ok((format!("chain({j}, {m})"), members));
        }
        let members = self.named_list(text, e.line)?.into_iter().map(|(_, x)| x).collect();
        Ok((text.to_string(), members))
    }

    fn omit(&self, section: &Section) -> Parsed<OmitCommand> {
        let keys = Keys::new(
            section,
            &["seed", "family", "depth", "steps", "bound", "transformations"],
        )?;
        let families: Vec<(String, Vec<CylinderElement>)> = keys
            .all("family")
            .into_iter()
            .map(|e| self.family(e))
            .collect::<Parsed<_>>()?;
        if families.is_empty() {
            return fail(section.line, "[omit] needs at least one `family`");
        }
        let seed = match keys.get("seed") {
            Some(e) => self.named(&e.value, e.line)?,
            None => ("one".to_string(), self.base.one()),
        };
        Ok(OmitCommand {
            seed,
            families,
            depth: keys.number("depth", 2)?,
            steps: keys.number("steps", 2000)?,
            bound: keys.number("bound", 4)?,
            transformations: keys.number("transformations", 20)?,
        })
    }

    fn twins(&self, section: &Section) -> Parsed<TwinsCommand> {
        let keys = Keys::new(section, &["steps", "census", "depth", "min_disagreements"])?;
        let census = match keys.get("census") {
            Some(e) => self.named_list(&e.value, e.line)?,
            None => self.named_list("eq(0, 0), eq(1, 0)", section.line)?,
        };
        Ok(TwinsCommand {
            steps: keys.number("steps", 500)?,
            census,
            depth: keys.number("depth", 3)?,
            min_disagreements: keys.number("min_disagreements", 1)?,
        })
    }

    fn orbits(&self, section: &Section) -> Parsed<OrbitsCommand> {
        let keys = Keys::new(section, &["generators", "window"])?;
        let Some(gens) = keys.get("generators") else {
            return fail(section.line, "[orbits] needs `generators`");
        };
        let window = match keys.get("window") {
            Some(e) => Some(parse_number(&e.value, e.line)?),
            None => None,
        };
        Ok(OrbitsCommand {
            generators: self.named_list(&gens.value, gens.line)?,
            window,
        })
    }
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    ctx: &'a Context,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Parsed<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            fail(
                self.line,
                format!("expected `{}` at column {}", c as char, self.pos + 1),
            )
        }
    }

    fn word(&mut self) -> Parsed<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return fail(
                self.line,
                format!("expected a name or number at column {}", self.pos + 1),
            );
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Parsed<usize> {
        let w = self.word()?;
        parse_number(&w, self.line)
    }

    fn tuple(&mut self) -> Parsed<Vec<usize>> {
        self.expect(b'(')?;
        let mut out = Vec::new();
        if self.peek() == Some(b')') {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.number()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return fail(self.line, "expected `,` or `)` in tuple"),
            }
        }
    }

    fn args(&mut self) -> Parsed<Vec<CylinderElement>> {
        let mut out = vec![self.expr()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(self.expr()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn lift<T>(&self, r: crate::error::Result<T>) -> Parsed<T> {
        r.or_else(|e| fail(self.line, e.to_string()))
    }

    fn expr(&mut self) -> Parsed<CylinderElement> {
        let base = &self.ctx.base;
        let head = self.word()?;
        let nullary = match head.as_str() {
            "zero" => Some(base.zero()),
            "one" => Some(base.one()),
            _ => None,
        };
        if let Some(e) = nullary {
            return Ok(e);
        }
        if !RESERVED.contains(&head.as_str()) {
            return match self.ctx.lookup(&head) {
                Some(e) => Ok(e.clone()),
                None => fail(self.line, format!("undefined element `{head}`")),
            };
        }
        self.expect(b'(')?;
        match head.as_str() {
            "eq" | "diag" => {
                let i = self.number()?;
                self.expect(b',')?;
                let j = self.number()?;
                self.expect(b')')?;
                if head == "eq" {
                    self.lift(base.literal(i, j))
                } else {
                    self.lift(base.diagonal(i, j))
                }
            }
            "table" => {
                let support = self.tuple()?;
                self.expect(b',')?;
                self.expect(b'[')?;
                let mut rows = Vec::new();
                while self.peek() == Some(b'(') {
                    let row = self.tuple()?;
                    if row.len() != support.len() {
                        return fail(
                            self.line,
                            format!(
                                "row of arity {} for a support of {} coordinates",
                                row.len(),
                                support.len()
                            ),
                        );
                    }
                    rows.push(row);
                    if self.peek() == Some(b',') {
                        self.pos += 1;
                    }
                }
                self.expect(b']')?;
                self.expect(b')')?;
                self.lift(base.element(&support, &rows))
            }
            "not" | "meet" | "join" => {
                let args = self.args()?;
                match head.as_str() {
                    "not" if args.len() == 1 => Ok(base.complement(&args[0])),
                    "not" => fail(self.line, format!("not takes 1 argument, found {}", args.len())),
                    "meet" => self.lift(base.meet_all(&args)),
                    _ => {
                        let mut acc = base.zero();
                        for a in &args {
                            acc = self.lift(base.join(&acc, a))?;
                        }
                        Ok(acc)
                    }
                }
            }
            "cyl" | "int" => {
                let k = self.number()?;
                self.expect(b',')?;
                let x = self.expr()?;
                self.expect(b')')?;
                if head == "cyl" {
                    self.lift(base.cylindrify(k, &x))
                } else {
                    self.lift(base.interior(k, &x))
                }
            }
            "sub" => {
                let i = self.number()?;
                self.expect(b',')?;
                let j = self.number()?;
                self.expect(b',')?;
                let x = self.expr()?;
                self.expect(b')')?;
                self.lift(base.substitute(&FiniteTransformation::replace(i, j), &x))
            }
            other => fail(self.line, format!("`{other}` cannot be used as an element")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let p = parse("[base]\npoints = 2\n[elements]\np = eq(0, 0)\n[axioms]\n").unwrap();
        assert_eq!(p.base.n(), 2);
        assert!(p.base.topology().is_discrete());
        assert_eq!(p.elements.len(), 1);
        assert!(matches!(p.commands[0], (5, Command::Axioms(_))));
    }

    #[test]
    fn undefined_name_is_reported_with_its_line() {
        let err = parse("[base]\npoints = 2\n[elements]\np = eq(0, 0)\nq = meet(p, r)\n").unwrap_err();
        assert_eq!(err.line, 5);
        assert!(err.message.contains("`r`"), "{err}");
    }

    #[test]
    fn sierpinski_from_subbasis() {
        let p = parse("[base]\npoints = 2\nsubbasis = {0}\n").unwrap();
        assert_eq!(p.base.topology(), &FiniteTopology::sierpinski());
        let q = parse("[base]\npoints = 2\nopens = {}, {0}, {0, 1}\n").unwrap();
        assert_eq!(q.base.topology(), p.base.topology());
    }

    #[test]
    fn expressions_evaluate() {
        let text = "[base]\npoints = 2\n[elements]\n\
            p = eq(0, 0)\n\
            t = table((0), [(0)])\n\
            d = diag(0, 1)\n\
            both = meet(p, d)\n\
            moved = sub(0, 1, p)\n\
            lost = cyl(0, p)\n";
        let p = parse(text).unwrap();
        let b = &p.base;
        assert_eq!(p.element("t"), p.element("p"));
        assert_eq!(p.element("moved").unwrap(), &b.literal(1, 0).unwrap());
        assert!(p.element("lost").unwrap().is_one());
        assert_eq!(
            p.element("both").unwrap(),
            &b.meet(&b.literal(0, 0).unwrap(), &b.diagonal(0, 1).unwrap()).unwrap()
        );
    }

    #[test]
    fn diagnostics() {
        for (text, line, needle) in [
            ("[base]\npoints = 2\nfoo = 1\n", 3, "unknown key"),
            ("[base]\npoints = 2\n[elements]\nt = table((0, 1), [(0)])\n", 4, "arity"),
            ("[base]\npoints = 2\n[elements]\nzero = eq(0, 0)\n", 4, "usable"),
            ("[base]\npoints = 2\n[omit]\nsteps = 3\n", 3, "family"),
            ("[base]\npoints = 2\n[frobnicate]\n", 3, "unknown section"),
            ("[elements]\n", 1, "[base]"),
            ("[base]\npoints = 2\nopens = {0}\n", 3, ""),
        ] {
            let err = parse(text).unwrap_err();
            assert_eq!(err.line, line, "{text}: {err}");
            assert!(err.message.contains(needle), "{err}");
        }
    }

    #[test]
    fn command_sections() {
        let text = "[base]\npoints = 2\n[elements]\nx = eq(0, 0)\ny = eq(1, 0)\nz = eq(2, 1)\n\
            [interpolate]\nx1 = x, y\nx2 = x, z\na = meet(x, y)\nc = join(x, z)\n\
            [omit]\nfamily = chain(0, 3)\nfamily = y, z\n\
            [orbits]\ngenerators = x, y\n";
        let p = parse(text).unwrap();
        let Command::Interpolate(ip) = &p.commands[0].1 else {
            panic!()
        };
        assert_eq!(ip.x1.len(), 2);
        assert_eq!(ip.a.0, "meet(x, y)");
        let Command::Omit(om) = &p.commands[1].1 else { panic!() };
        assert_eq!(om.families.len(), 2);
        assert_eq!(om.families[0].1.len(), 3);
        let Command::Orbits(or) = &p.commands[2].1 else {
            panic!()
        };
        assert_eq!(or.window, None);
    }
}
