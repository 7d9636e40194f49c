//! The `.strat` text format.
//!
//! ```text
//! document := (space | morphism | tower)*
//! space    := "space" NAME "{" (stratum | order | link)* "}"
//! stratum  := "stratum" NAME "dim" (INT | "inf") ["compact"] ["connected"]
//! order    := "order" NAME "<" NAME ("<" NAME)*
//! link     := "link" NAME "=" NAME
//! morphism := "morphism" NAME ":" NAME "->" NAME "{" (entry | decl | linkmap)* "}"
//! entry    := NAME "->" NAME ["onto"]
//! decl     := "declare" ("proper" | "injective" | "immersion")
//! linkmap  := "linkmap" NAME "=" NAME
//! tower    := "tower" NAME "{" ("stage" NAME)+ ("map" NAME)+ "}"
//! ```
//!
//! `#` starts a comment that runs to the end of the line. A `link` names
//! another space of the same file as the link of a stratum; a `linkmap` names
//! the morphism between links induced at a source stratum.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limits::Tower;
use crate::morphisms::{
    classify_candidate, Classification, Declarations, MorphismError, StrataMorphism,
};
use crate::pseudomanifold::{PseudoMorphism, PseudoSkeleton};
use crate::skeleton::{Dim, RawSkeleton, Skeleton, StratumId, StratumLabel, Violation};

/// Source position, 1-based. Positions are diagnostic only and never take
/// part in equality.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DslErrorKind {
    Syntax,
    Duplicate,
    Unresolved,
    Cycle,
    Invalid,
}

impl fmt::Display for DslErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DslErrorKind::Syntax => "syntax error",
            DslErrorKind::Duplicate => "duplicate name",
            DslErrorKind::Unresolved => "unresolved reference",
            DslErrorKind::Cycle => "cyclic reference",
            DslErrorKind::Invalid => "invalid",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{pos}: {kind}: {message}{}", token.as_ref().map(|t| format!(" (at `{t}`)")).unwrap_or_default())]
pub struct DslError {
    pub kind: DslErrorKind,
    pub pos: Pos,
    pub token: Option<String>,
    pub message: String,
}

impl DslError {
    fn new(kind: DslErrorKind, pos: Pos, token: Option<&str>, message: impl Into<String>) -> Self {
        DslError {
            kind,
            pos,
            token: token.map(str::to_string),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Named {
    pub name: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumDecl {
    pub name: Named,
    pub dim: Dim,
    pub compact: bool,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkDecl {
    pub stratum: Named,
    pub space: Named,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDecl {
    pub name: Named,
    pub strata: Vec<StratumDecl>,
    /// Each chain `a < b < c` is one entry.
    pub orders: Vec<Vec<Named>>,
    pub links: Vec<LinkDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDecl {
    pub from: Named,
    pub to: Named,
    pub onto: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismDecl {
    pub name: Named,
    pub source: Named,
    pub target: Named,
    pub entries: Vec<EntryDecl>,
    pub declares: Vec<Named>,
    pub linkmaps: Vec<LinkDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDecl {
    pub name: Named,
    pub stages: Vec<Named>,
    pub maps: Vec<Named>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub spaces: Vec<SpaceDecl>,
    pub morphisms: Vec<MorphismDecl>,
    pub towers: Vec<TowerDecl>,
}

fn named(name: &str) -> Named {
    Named {
        name: name.to_string(),
        pos: Pos::default(),
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    LBrace,
    RBrace,
    Colon,
    Arrow,
    Lt,
    Eq,
    Eof,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Ident(s) => s.clone(),
            Tok::Int(n) => n.to_string(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Colon => ":".into(),
            Tok::Arrow => "->".into(),
            Tok::Lt => "<".into(),
            Tok::Eq => "=".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, DslError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
        } else if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while chars
                .peek()
                .is_some_and(|&c| c.is_alphanumeric() || c == '_')
            {
                s.push(bump(&mut chars));
            }
            out.push((Tok::Ident(s), pos));
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                s.push(bump(&mut chars));
            }
            let n = s.parse().map_err(|_| {
                DslError::new(DslErrorKind::Syntax, pos, Some(&s), "integer out of range")
            })?;
            out.push((Tok::Int(n), pos));
        } else {
            bump(&mut chars);
            let tok = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ':' => Tok::Colon,
                '<' => Tok::Lt,
                '=' => Tok::Eq,
                '-' if chars.peek() == Some(&'>') => {
                    bump(&mut chars);
                    Tok::Arrow
                }
                other => {
                    return Err(DslError::new(
                        DslErrorKind::Syntax,
                        pos,
                        Some(&other.to_string()),
                        "unexpected character",
                    ))
                }
            };
            out.push((tok, pos));
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> DslError {
        let (tok, pos) = &self.toks[self.at];
        DslError::new(
            DslErrorKind::Syntax,
            *pos,
            Some(&tok.text()),
            format!("expected {expected}"),
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Pos, DslError> {
        if *self.peek() == tok {
            Ok(self.next().1)
        } else {
            Err(self.error(what))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, DslError> {
        if self.is_keyword(kw) {
            Ok(self.next().1)
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn name(&mut self) -> Result<Named, DslError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let pos = self.next().1;
                Ok(Named { name, pos })
            }
            _ => Err(self.error("a name")),
        }
    }

    fn document(&mut self) -> Result<Document, DslError> {
        let mut doc = Document::default();
        loop {
            match self.peek() {
                Tok::Eof => return Ok(doc),
                Tok::Ident(s) if s == "space" => doc.spaces.push(self.space()?),
                Tok::Ident(s) if s == "morphism" => doc.morphisms.push(self.morphism()?),
                Tok::Ident(s) if s == "tower" => doc.towers.push(self.tower()?),
                _ => return Err(self.error("`space`, `morphism` or `tower`")),
            }
        }
    }

    fn space(&mut self) -> Result<SpaceDecl, DslError> {
        self.keyword("space")?;
        let name = self.name()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut decl = SpaceDecl {
            name,
            ..Default::default()
        };
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.next();
                    return Ok(decl);
                }
                Tok::Ident(s) if s == "stratum" => {
                    self.next();
                    let name = self.name()?;
                    self.keyword("dim")?;
                    let dim = match self.next() {
                        (Tok::Int(n), pos) => Dim::Finite(u32::try_from(n).map_err(|_| {
                            DslError::new(
                                DslErrorKind::Syntax,
                                pos,
                                Some(&n.to_string()),
                                "dimension too large",
                            )
                        })?),
                        (Tok::Ident(s), _) if s == "inf" => Dim::Inf,
                        _ => {
                            self.at -= 1;
                            return Err(self.error("a dimension"));
                        }
                    };
                    let compact = self.is_keyword("compact") && self.keyword("compact").is_ok();
                    let connected =
                        self.is_keyword("connected") && self.keyword("connected").is_ok();
                    decl.strata.push(StratumDecl {
                        name,
                        dim,
                        compact,
                        connected,
                    });
                }
                Tok::Ident(s) if s == "order" => {
                    self.next();
                    let mut chain = vec![self.name()?];
                    self.expect(Tok::Lt, "`<`")?;
                    chain.push(self.name()?);
                    while *self.peek() == Tok::Lt {
                        self.next();
                        chain.push(self.name()?);
                    }
                    decl.orders.push(chain);
                }
                Tok::Ident(s) if s == "link" => {
                    self.next();
                    let stratum = self.name()?;
                    self.expect(Tok::Eq, "`=`")?;
                    let space = self.name()?;
                    decl.links.push(LinkDecl { stratum, space });
                }
                _ => return Err(self.error("`stratum`, `order`, `link` or `}`")),
            }
        }
    }

    fn morphism(&mut self) -> Result<MorphismDecl, DslError> {
        self.keyword("morphism")?;
        let name = self.name()?;
        self.expect(Tok::Colon, "`:`")?;
        let source = self.name()?;
        self.expect(Tok::Arrow, "`->`")?;
        let target = self.name()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut decl = MorphismDecl {
            name,
            source,
            target,
            entries: Vec::new(),
            declares: Vec::new(),
            linkmaps: Vec::new(),
        };
        loop {
            match (self.peek().clone(), self.peek2().clone()) {
                (Tok::RBrace, _) => {
                    self.next();
                    return Ok(decl);
                }
                (Tok::Ident(s), Tok::Ident(_)) if s == "declare" => {
                    self.next();
                    let what = self.name()?;
                    if !matches!(what.name.as_str(), "proper" | "injective" | "immersion") {
                        return Err(DslError::new(
                            DslErrorKind::Syntax,
                            what.pos,
                            Some(&what.name),
                            "expected `proper`, `injective` or `immersion`",
                        ));
                    }
                    decl.declares.push(what);
                }
                (Tok::Ident(s), Tok::Ident(_)) if s == "linkmap" => {
                    self.next();
                    let stratum = self.name()?;
                    self.expect(Tok::Eq, "`=`")?;
                    let space = self.name()?;
                    decl.linkmaps.push(LinkDecl { stratum, space });
                }
                (Tok::Ident(_), _) => {
                    let from = self.name()?;
                    self.expect(Tok::Arrow, "`->`")?;
                    let to = self.name()?;
                    let onto = self.is_keyword("onto")
                        && *self.peek2() != Tok::Arrow
                        && self.keyword("onto").is_ok();
                    decl.entries.push(EntryDecl { from, to, onto });
                }
                _ => return Err(self.error("an entry, `declare`, `linkmap` or `}`")),
            }
        }
    }

    fn tower(&mut self) -> Result<TowerDecl, DslError> {
        self.keyword("tower")?;
        let name = self.name()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut stages = Vec::new();
        while self.is_keyword("stage") {
            self.next();
            stages.push(self.name()?);
        }
        if stages.is_empty() {
            return Err(self.error("`stage`"));
        }
        let mut maps = Vec::new();
        while self.is_keyword("map") {
            self.next();
            maps.push(self.name()?);
        }
        if maps.is_empty() {
            return Err(self.error("`map`"));
        }
        self.expect(Tok::RBrace, "`map` or `}`")?;
        Ok(TowerDecl { name, stages, maps })
    }
}

/// Parses and checks names: duplicates, unresolved references between
/// declarations, and cycles among links. Stratum-level problems (unknown
/// strata, order cycles) surface when a declaration is built.
pub fn parse(text: &str) -> Result<Document, DslError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let doc = p.document()?;
    doc.check_names()?;
    Ok(doc)
}

impl Document {
    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty() && self.morphisms.is_empty() && self.towers.is_empty()
    }

    pub fn space(&self, name: &str) -> Option<&SpaceDecl> {
        self.spaces.iter().find(|s| s.name.name == name)
    }

    pub fn morphism_decl(&self, name: &str) -> Option<&MorphismDecl> {
        self.morphisms.iter().find(|s| s.name.name == name)
    }

    pub fn tower_decl(&self, name: &str) -> Option<&TowerDecl> {
        self.towers.iter().find(|s| s.name.name == name)
    }

    fn check_names(&self) -> Result<(), DslError> {
        fn unique<'a>(names: impl Iterator<Item = &'a Named>) -> Result<(), DslError> {
            let mut seen = BTreeSet::new();
            for n in names {
                if !seen.insert(n.name.as_str()) {
                    return Err(DslError::new(
                        DslErrorKind::Duplicate,
                        n.pos,
                        Some(&n.name),
                        "declared twice",
                    ));
                }
            }
            Ok(())
        }
        let unresolved = |n: &Named, what: &str| {
            DslError::new(
                DslErrorKind::Unresolved,
                n.pos,
                Some(&n.name),
                format!("no {what} of this name"),
            )
        };
        unique(self.spaces.iter().map(|s| &s.name))?;
        unique(self.morphisms.iter().map(|s| &s.name))?;
        unique(self.towers.iter().map(|s| &s.name))?;
        for s in &self.spaces {
            unique(s.links.iter().map(|l| &l.stratum))?;
            for l in &s.links {
                if self.space(&l.space.name).is_none() {
                    return Err(unresolved(&l.space, "space"));
                }
            }
        }
        for m in &self.morphisms {
            for n in [&m.source, &m.target] {
                if self.space(&n.name).is_none() {
                    return Err(unresolved(n, "space"));
                }
            }
            unique(m.linkmaps.iter().map(|l| &l.stratum))?;
            for l in &m.linkmaps {
                if self.morphism_decl(&l.space.name).is_none() {
                    return Err(unresolved(&l.space, "morphism"));
                }
            }
        }
        for t in &self.towers {
            for n in &t.stages {
                if self.space(&n.name).is_none() {
                    return Err(unresolved(n, "space"));
                }
            }
            for n in &t.maps {
                if self.morphism_decl(&n.name).is_none() {
                    return Err(unresolved(n, "morphism"));
                }
            }
        }
        let space_edges: BTreeMap<&str, Vec<&Named>> = self
            .spaces
            .iter()
            .map(|s| {
                (
                    s.name.name.as_str(),
                    s.links.iter().map(|l| &l.space).collect(),
                )
            })
            .collect();
        find_cycle(&space_edges)?;
        let morphism_edges: BTreeMap<&str, Vec<&Named>> = self
            .morphisms
            .iter()
            .map(|m| {
                (
                    m.name.name.as_str(),
                    m.linkmaps.iter().map(|l| &l.space).collect(),
                )
            })
            .collect();
        find_cycle(&morphism_edges)
    }

    /// The space `name` as a bare skeleton (links ignored).
    pub fn skeleton(&self, name: &str) -> Result<Skeleton, DslError> {
        let decl = self.space(name).ok_or_else(|| {
            DslError::new(
                DslErrorKind::Unresolved,
                Pos::default(),
                Some(name),
                "no space of this name",
            )
        })?;
        let raw = raw_of(decl, decl.orders.len());
        raw.build().map_err(|report| {
            let v = &report.violations[0];
            let (pos, token) = locate(decl, v);
            DslError::new(
                DslErrorKind::Invalid,
                pos,
                Some(&token),
                format!("space `{name}`: {v}"),
            )
        })
    }

    /// The space `name` with its links, recursively.
    pub fn pseudo(&self, name: &str) -> Result<PseudoSkeleton, DslError> {
        let base = self.skeleton(name)?;
        let decl = self.space(name).expect("skeleton resolved it");
        let mut links = BTreeMap::new();
        for l in &decl.links {
            if !base.contains(&l.stratum.name) {
                return Err(DslError::new(
                    DslErrorKind::Unresolved,
                    l.stratum.pos,
                    Some(&l.stratum.name),
                    format!("space `{name}` has no such stratum"),
                ));
            }
            let id = StratumId::new(l.stratum.name.as_str()).expect("lexed names are valid ids");
            links.insert(id, self.pseudo(&l.space.name)?);
        }
        Ok(PseudoSkeleton::new(base, links))
    }

    pub fn morphism(&self, name: &str) -> Result<StrataMorphism, DslError> {
        let decl = self.morphism_decl(name).ok_or_else(|| {
            DslError::new(
                DslErrorKind::Unresolved,
                Pos::default(),
                Some(name),
                "no morphism of this name",
            )
        })?;
        let source = self.skeleton(&decl.source.name)?;
        let target = self.skeleton(&decl.target.name)?;
        StrataMorphism::new(source, target, entries_of(decl), declarations_of(decl))
            .map_err(|e| morphism_error(decl, e))
    }

    /// Classifies the morphism `name` even when its entries do not define a
    /// function, which is reported as `NotMorphism`.
    pub fn classification(&self, name: &str) -> Result<Classification, DslError> {
        let decl = self.morphism_decl(name).ok_or_else(|| {
            DslError::new(
                DslErrorKind::Unresolved,
                Pos::default(),
                Some(name),
                "no morphism of this name",
            )
        })?;
        let source = self.skeleton(&decl.source.name)?;
        let target = self.skeleton(&decl.target.name)?;
        classify_candidate(&source, &target, entries_of(decl), declarations_of(decl))
            .map_err(|e| morphism_error(decl, e))
    }

    pub fn pseudo_morphism(&self, name: &str) -> Result<PseudoMorphism, DslError> {
        let carrier = self.morphism(name)?;
        let decl = self.morphism_decl(name).expect("morphism resolved it");
        let source = self.pseudo(&decl.source.name)?;
        let target = self.pseudo(&decl.target.name)?;
        let mut maps = BTreeMap::new();
        for l in &decl.linkmaps {
            let id = StratumId::new(l.stratum.name.as_str()).expect("lexed names are valid ids");
            maps.insert(id, self.pseudo_morphism(&l.space.name)?);
        }
        PseudoMorphism::new(source, target, carrier, maps).map_err(|e| {
            DslError::new(
                DslErrorKind::Invalid,
                decl.name.pos,
                Some(name),
                format!("morphism `{name}`: {e}"),
            )
        })
    }

    pub fn tower(&self, name: &str) -> Result<Tower, DslError> {
        let decl = self.tower_decl(name).ok_or_else(|| {
            DslError::new(
                DslErrorKind::Unresolved,
                Pos::default(),
                Some(name),
                "no tower of this name",
            )
        })?;
        if decl.maps.len() + 1 != decl.stages.len() {
            return Err(DslError::new(
                DslErrorKind::Invalid,
                decl.name.pos,
                Some(name),
                format!(
                    "{} stages need {} maps",
                    decl.stages.len(),
                    decl.stages.len() - 1
                ),
            ));
        }
        for (i, m) in decl.maps.iter().enumerate() {
            let md = self.morphism_decl(&m.name).expect("checked by parse");
            if md.source.name != decl.stages[i].name || md.target.name != decl.stages[i + 1].name {
                return Err(DslError::new(
                    DslErrorKind::Invalid,
                    m.pos,
                    Some(&m.name),
                    format!(
                        "map does not go from `{}` to `{}`",
                        decl.stages[i].name,
                        decl.stages[i + 1].name
                    ),
                ));
            }
        }
        let stages = decl
            .stages
            .iter()
            .map(|s| self.skeleton(&s.name))
            .collect::<Result<Vec<_>, _>>()?;
        let maps = decl
            .maps
            .iter()
            .map(|m| self.morphism(&m.name))
            .collect::<Result<Vec<_>, _>>()?;
        let regular = vec![false; maps.len()];
        Tower::new(stages, maps, regular).map_err(|e| {
            DslError::new(
                DslErrorKind::Invalid,
                decl.name.pos,
                Some(name),
                format!("tower `{name}`: {e}"),
            )
        })
    }

    /// Adds `s` as a space called `name`, listing its cover relations.
    pub fn push_skeleton(&mut self, name: &str, s: &Skeleton) {
        self.spaces.push(space_decl(name, s));
    }

    /// Adds `x` as a space called `name`; the link of stratum `s` becomes a
    /// space `name_s` (suffixed if that name is taken), recursively.
    pub fn push_pseudo(&mut self, name: &str, x: &PseudoSkeleton) {
        let mut decl = space_decl(name, &x.base);
        for (s, l) in &x.links {
            let mut link_name = format!("{name}_{s}");
            let mut k = 2;
            while self.space(&link_name).is_some() || link_name == name {
                link_name = format!("{name}_{s}_{k}");
                k += 1;
            }
            self.push_pseudo(&link_name, l);
            decl.links.push(LinkDecl {
                stratum: named(s.as_str()),
                space: named(&link_name),
            });
        }
        self.spaces.push(decl);
    }
}

fn declarations_of(decl: &MorphismDecl) -> Declarations {
    let mut declarations = Declarations::default();
    for d in &decl.declares {
        match d.name.as_str() {
            "proper" => declarations.proper = true,
            "injective" => declarations.injective = true,
            _ => declarations.immersion = true,
        }
    }
    declarations
}

fn entries_of(decl: &MorphismDecl) -> impl Iterator<Item = (&str, &str, bool)> {
    decl.entries
        .iter()
        .map(|e| (e.from.name.as_str(), e.to.name.as_str(), e.onto))
}

fn morphism_error(decl: &MorphismDecl, e: MorphismError) -> DslError {
    let name = decl.name.name.as_str();
    let pos = match &e {
        MorphismError::UnknownStratum { id, .. }
        | MorphismError::Dimension { source_id: id, .. } => decl
            .entries
            .iter()
            .find(|x| &x.from.name == id || &x.to.name == id)
            .map_or(decl.name.pos, |x| x.from.pos),
        MorphismError::NoStratumPreservingMap { stratum, .. } => decl
            .entries
            .iter()
            .find(|x| &x.from.name == stratum)
            .map_or(decl.name.pos, |x| x.from.pos),
        _ => decl.name.pos,
    };
    DslError::new(
        DslErrorKind::Invalid,
        pos,
        Some(name),
        format!("morphism `{name}`: {e}"),
    )
}

/// Declaration listing the strata and cover relations of `s`.
pub fn space_decl(name: &str, s: &Skeleton) -> SpaceDecl {
    SpaceDecl {
        name: named(name),
        strata: s
            .ids()
            .iter()
            .zip(s.labels())
            .map(|(id, l)| StratumDecl {
                name: named(id.as_str()),
                dim: l.dim,
                compact: l.compact,
                connected: l.connected,
            })
            .collect(),
        orders: s
            .covers()
            .into_iter()
            .map(|(a, b)| vec![named(s.id(a).as_str()), named(s.id(b).as_str())])
            .collect(),
        links: Vec::new(),
    }
}

fn raw_of(decl: &SpaceDecl, orders: usize) -> RawSkeleton {
    let mut raw = RawSkeleton::new();
    for st in &decl.strata {
        raw = raw.stratum(
            &st.name.name,
            StratumLabel {
                dim: st.dim,
                compact: st.compact,
                connected: st.connected,
                display_name: None,
            },
        );
    }
    for chain in &decl.orders[..orders] {
        for w in chain.windows(2) {
            raw = raw.below(&w[0].name, &w[1].name);
        }
    }
    raw
}

/// Source position responsible for a violation.
fn locate(decl: &SpaceDecl, v: &Violation) -> (Pos, String) {
    let mention = |id: &str| {
        decl.orders
            .iter()
            .flatten()
            .find(|n| n.name == id)
            .map(|n| (n.pos, id.to_string()))
    };
    let fallback = (decl.name.pos, decl.name.name.clone());
    match v {
        Violation::DuplicateStratum { id } => decl
            .strata
            .iter()
            .filter(|s| &s.name.name == id)
            .nth(1)
            .map_or(fallback, |s| (s.name.pos, id.clone())),
        Violation::UnknownStratum { id } | Violation::InvalidId { id } => {
            mention(id).unwrap_or(fallback)
        }
        Violation::Antisymmetry { a, .. } => {
            // the first order clause after which the cycle exists
            (1..=decl.orders.len())
                .find(|&k| !raw_of(decl, k).validate_order_only())
                .map(|k| {
                    let n = &decl.orders[k - 1][0];
                    (
                        n.pos,
                        decl.orders[k - 1]
                            .iter()
                            .map(|n| n.name.as_str())
                            .collect::<Vec<_>>()
                            .join(" < "),
                    )
                })
                .or_else(|| mention(a))
                .unwrap_or(fallback)
        }
    }
}

trait OrderCheck {
    fn validate_order_only(&self) -> bool;
}

impl OrderCheck for RawSkeleton {
    fn validate_order_only(&self) -> bool {
        match self.build() {
            Ok(_) => true,
            Err(r) => !r
                .violations
                .iter()
                .any(|v| matches!(v, Violation::Antisymmetry { .. })),
        }
    }
}

fn find_cycle(edges: &BTreeMap<&str, Vec<&Named>>) -> Result<(), DslError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit<'a>(
        v: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a Named>>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), DslError> {
        state.insert(v, 1);
        for n in edges.get(v).into_iter().flatten() {
            match state.get(n.name.as_str()).copied().unwrap_or(0) {
                1 => {
                    return Err(DslError::new(
                        DslErrorKind::Cycle,
                        n.pos,
                        Some(&n.name),
                        "links refer back to themselves",
                    ))
                }
                0 => visit(n.name.as_str(), edges, state)?,
                _ => {}
            }
        }
        state.insert(v, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for &v in edges.keys() {
        if !state.contains_key(v) {
            visit(v, edges, &mut state)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- printer

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            if !std::mem::take(&mut first) {
                writeln!(f)?;
            }
            Ok::<(), fmt::Error>(())
        };
        for s in &self.spaces {
            sep(f)?;
            writeln!(f, "space {} {{", s.name.name)?;
            for st in &s.strata {
                write!(f, "  stratum {} dim {}", st.name.name, st.dim)?;
                if st.compact {
                    write!(f, " compact")?;
                }
                if st.connected {
                    write!(f, " connected")?;
                }
                writeln!(f)?;
            }
            for chain in &s.orders {
                let names: Vec<&str> = chain.iter().map(|n| n.name.as_str()).collect();
                writeln!(f, "  order {}", names.join(" < "))?;
            }
            for l in &s.links {
                writeln!(f, "  link {} = {}", l.stratum.name, l.space.name)?;
            }
            writeln!(f, "}}")?;
        }
        for m in &self.morphisms {
            sep(f)?;
            writeln!(
                f,
                "morphism {} : {} -> {} {{",
                m.name.name, m.source.name, m.target.name
            )?;
            for e in &m.entries {
                write!(f, "  {} -> {}", e.from.name, e.to.name)?;
                if e.onto {
                    write!(f, " onto")?;
                }
                writeln!(f)?;
            }
            for d in &m.declares {
                writeln!(f, "  declare {}", d.name)?;
            }
            for l in &m.linkmaps {
                writeln!(f, "  linkmap {} = {}", l.stratum.name, l.space.name)?;
            }
            writeln!(f, "}}")?;
        }
        for t in &self.towers {
            sep(f)?;
            writeln!(f, "tower {} {{", t.name.name)?;
            for s in &t.stages {
                writeln!(f, "  stage {}", s.name)?;
            }
            for m in &t.maps {
                writeln!(f, "  map {}", m.name)?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphisms::MorphClass;
    use crate::pseudomanifold::validate_pseudo;

    const EIGHT: &str = "
        # the 8-curve
        space gamma1 {
          stratum p dim 0 compact connected
          stratum C1 dim 1 connected
          stratum C2 dim 1 connected
          order p < C1
          order p < C2
        }
    ";

    #[test]
    fn eight_curve_parses() {
        let doc = parse(EIGHT).unwrap();
        let s = doc.skeleton("gamma1").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.minimal_strata().names(), ["p"]);
        assert!(s.label_of("p").unwrap().compact);
    }

    #[test]
    fn pseudo_text_round_trip() {
        let point = PseudoSkeleton::manifold(
            Skeleton::trivial("t", StratumLabel::new(0).compact().connected()).unwrap(),
        );
        let (two, _) = crate::skeleton::disjoint_union(&point.base, &point.base);
        let x = crate::pseudomanifold::cone_pseudo(&PseudoSkeleton::manifold(two)).unwrap();
        let mut doc = Document::default();
        doc.push_pseudo("x", &x);
        let back = parse(&doc.to_string()).unwrap();
        assert_eq!(back.pseudo("x").unwrap(), x);
    }

    #[test]
    fn empty_file() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn self_loop_reports_position() {
        let doc = parse("space s {\n  stratum a dim 0\n  order a < a\n}\n").unwrap();
        let e = doc.skeleton("s").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Invalid);
        assert_eq!((e.pos.line, e.pos.col), (3, 9));
        assert!(e.message.contains("antisymmetry(a,a)"), "{e}");
    }

    #[test]
    fn cycle_over_two_clauses_points_at_the_second() {
        let doc =
            parse("space s {\n stratum a dim 0\n stratum b dim 1\n order a < b\n order b < a\n}")
                .unwrap();
        let e = doc.skeleton("s").unwrap_err();
        assert_eq!(e.pos.line, 5);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse("space s {\n  stratum a dimm 0\n}").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Syntax);
        assert_eq!((e.pos.line, e.pos.col), (2, 13));
        assert_eq!(e.token.as_deref(), Some("dimm"));
        let e = parse("space s { stratum a dim 0 } $").unwrap_err();
        assert_eq!(e.token.as_deref(), Some("$"));
        let e = parse("tower t { stage a }").unwrap_err();
        assert!(e.message.contains("`map`"));
    }

    #[test]
    fn references_are_checked() {
        let e = parse("space a {}\nspace a {}").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Duplicate);
        assert_eq!(e.pos.line, 2);
        let e = parse("morphism f : a -> b {}").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Unresolved);
        let e =
            parse("space a { stratum p dim 0 link p = b }\nspace b { stratum q dim 0 link q = a }")
                .unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Cycle);
        let doc = parse("space a { stratum p dim 0 order p < q }").unwrap();
        assert!(doc
            .skeleton("a")
            .unwrap_err()
            .message
            .contains("unknown(q)"));
    }

    #[test]
    fn morphisms_and_declarations() {
        let text = format!(
            "{EIGHT}
            space pt {{ stratum x dim 0 compact connected }}
            morphism f : pt -> gamma1 {{
              x -> p onto
              declare proper
              declare injective
              declare immersion
            }}"
        );
        let doc = parse(&text).unwrap();
        let f = doc.morphism("f").unwrap();
        assert_eq!(f.classify().class, MorphClass::StrongEmbedding);
        let bad = parse(&text.replace("x -> p onto", "x -> C1 onto")).unwrap();
        let e = bad.morphism("f").unwrap_err();
        assert_eq!(e.kind, DslErrorKind::Invalid);
    }

    #[test]
    fn links_and_linkmaps() {
        let text = "
            space two { stratum a dim 0 compact connected  stratum b dim 0 compact connected }
            space pt { stratum a dim 0 compact connected }
            space cone2 {
              stratum v dim 0 connected
              stratum a dim 1 connected
              stratum b dim 1 connected
              order v < a
              order v < b
              link v = two
            }
            space cone1 {
              stratum v dim 0 connected
              stratum a dim 1 connected
              order v < a
              link v = pt
            }
            morphism l : pt -> two { a -> a onto declare proper declare injective declare immersion }
            morphism g : cone1 -> cone2 {
              v -> v onto
              a -> a onto
              declare proper declare injective declare immersion
              linkmap v = l
            }
        ";
        let doc = parse(text).unwrap();
        let c = doc.pseudo("cone2").unwrap();
        assert!(validate_pseudo(&c).is_ok());
        let g = doc.pseudo_morphism("g").unwrap();
        assert_eq!(g.link_maps().len(), 1);
        let wrong = parse(&text.replace("linkmap v = l", "linkmap a = l")).unwrap();
        assert!(wrong.pseudo_morphism("g").is_err());
    }

    #[test]
    fn print_round_trip() {
        let text = format!(
            "{EIGHT}
            space pt {{ stratum x dim inf }}
            morphism f : pt -> gamma1 {{ x -> p declare proper linkmap x = f2 }}
            morphism f2 : pt -> pt {{ x -> x onto }}
            tower t {{ stage pt stage pt map f2 }}
            space chain {{ stratum a dim 0 stratum b dim 1 stratum c dim 2 order a < b < c }}"
        );
        let doc = parse(&text).unwrap();
        let printed = doc.to_string();
        assert_eq!(parse(&printed).unwrap(), doc);
        assert_eq!(parse(&printed).unwrap().to_string(), printed);
    }

    #[test]
    fn skeleton_to_text_and_back() {
        let doc = parse(EIGHT).unwrap();
        let s = doc.skeleton("gamma1").unwrap();
        let mut out = Document::default();
        out.push_skeleton("copy", &s);
        assert_eq!(
            parse(&out.to_string()).unwrap().skeleton("copy").unwrap(),
            s
        );
    }

    #[test]
    fn towers_resolve() {
        let text = "
            space s1 { stratum z dim 0 stratum r dim 1 order z < r }
            space s2 { stratum z dim 0 stratum r dim 2 order z < r }
            morphism i : s1 -> s2 { z -> z onto r -> r declare proper declare injective declare immersion }
            tower t { stage s1 stage s2 map i }
            tower bad { stage s2 stage s1 map i }
        ";
        let doc = parse(text).unwrap();
        assert_eq!(doc.tower("t").unwrap().stages().len(), 2);
        assert_eq!(doc.tower("bad").unwrap_err().kind, DslErrorKind::Invalid);
    }
}
