//! Dataset ingestion and inverse-link augmentation.
//!
//! Input files are tab-separated, five columns per line:
//! `subject TAB relation TAB object TAB begin TAB end`. Dates may be plain
//! years (`1984`), full dates whose month/day are discarded (`1984-05-17`),
//! or unknown markers (`####-##-##`, `####`, empty). Unknown begins map to
//! the minimum observed year, unknown ends to the maximum. BCE years carry a
//! leading minus (`-431-##-##`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Entity, Quadruple, Relation, Split, TimeInterval, Year};
use crate::error::{Result, TkgcError};

/// Suffix appended to a relation name to form its inverse's name.
pub const INVERSE_SUFFIX: &str = "^-1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TkgDataset {
    entity_names: Vec<String>,
    relation_names: Vec<String>,
    entity_ids: HashMap<String, Entity>,
    relation_ids: HashMap<String, Relation>,
    pub train: Vec<Quadruple>,
    pub valid: Vec<Quadruple>,
    pub test: Vec<Quadruple>,
    t_min: Year,
    t_max: Year,
    num_base_relations: usize,
    augmented: bool,
}

// A parsed raw line before year normalization.
struct RawFact {
    subject: String,
    relation: String,
    object: String,
    begin: Option<Year>,
    end: Option<Year>,
    file: String,
    line: usize,
}

/// Load the `train.txt` / `valid.txt` / `test.txt` triple found in `dir`,
/// at one-year granularity (month and day information is discarded).
pub fn load_dataset(dir: &Path) -> Result<TkgDataset> {
    let mut raw: Vec<(Split, Vec<RawFact>)> = Vec::new();
    for (split, name) in [
        (Split::Train, "train.txt"),
        (Split::Valid, "valid.txt"),
        (Split::Test, "test.txt"),
    ] {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(TkgcError::MissingFile(path));
        }
        raw.push((split, parse_file(&path)?));
    }

    // Min/max over every year observed in any split; unknown endpoints
    // normalize against these.
    let mut t_min = Year::MAX;
    let mut t_max = Year::MIN;
    for (_, facts) in &raw {
        for f in facts {
            for y in [f.begin, f.end].into_iter().flatten() {
                t_min = t_min.min(y);
                t_max = t_max.max(y);
            }
        }
    }
    if t_min > t_max {
        return Err(TkgcError::Parse {
            file: dir.display().to_string(),
            line: 0,
            msg: "no known year in any split".into(),
        });
    }

    let mut ds = TkgDataset {
        entity_names: Vec::new(),
        relation_names: Vec::new(),
        entity_ids: HashMap::new(),
        relation_ids: HashMap::new(),
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        t_min,
        t_max,
        num_base_relations: 0,
        augmented: false,
    };

    for (split, facts) in raw {
        for f in facts {
            let start = f.begin.unwrap_or(t_min);
            let end = f.end.unwrap_or(t_max);
            if start > end {
                log::warn!(
                    "{}:{}: dropping fact with reversed interval [{start}, {end}]",
                    f.file,
                    f.line
                );
                continue;
            }
            let s = ds.intern_entity(&f.subject);
            let r = ds.intern_relation(&f.relation);
            let o = ds.intern_entity(&f.object);
            let quad = Quadruple {
                subject: s,
                relation: r,
                object: o,
                interval: TimeInterval { start, end },
            };
            match split {
                Split::Train => ds.train.push(quad),
                Split::Valid => ds.valid.push(quad),
                Split::Test => ds.test.push(quad),
            }
        }
    }
    ds.num_base_relations = ds.relation_names.len();
    Ok(ds)
}

fn parse_file(path: &Path) -> Result<Vec<RawFact>> {
    let text = std::fs::read_to_string(path)?;
    let file = path.display().to_string();
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 5 {
            return Err(TkgcError::Parse {
                file,
                line: lineno,
                msg: format!("expected 5 tab-separated columns, found {}", cols.len()),
            });
        }
        let begin = parse_year_field(cols[3]).map_err(|msg| TkgcError::Parse {
            file: file.clone(),
            line: lineno,
            msg,
        })?;
        let end = parse_year_field(cols[4]).map_err(|msg| TkgcError::Parse {
            file: file.clone(),
            line: lineno,
            msg,
        })?;
        out.push(RawFact {
            subject: cols[0].trim().to_string(),
            relation: cols[1].trim().to_string(),
            object: cols[2].trim().to_string(),
            begin,
            end,
            file: file.clone(),
            line: lineno,
        });
    }
    Ok(out)
}

// `Ok(None)` means the year is unknown.
fn parse_year_field(field: &str) -> std::result::Result<Option<Year>, String> {
    let s = field.trim();
    if s.is_empty() {
        return Ok(None);
    }
    // The year token runs up to the first '-' date separator; a leading '-'
    // is a BCE sign, not a separator.
    let body = s.strip_prefix('-').unwrap_or(s);
    let negative = body.len() < s.len();
    let token = body.split('-').next().unwrap_or("");
    if token.is_empty() || token.contains('#') {
        return Ok(None);
    }
    let year: Year = token
        .parse()
        .map_err(|_| format!("unparseable date `{s}`"))?;
    Ok(Some(if negative { -year } else { year }))
}

/// One human-readable fact for programmatic dataset construction.
pub type NamedFact<'a> = (&'a str, &'a str, &'a str, Year, Year);

impl TkgDataset {
    /// Build a dataset directly from named facts, interning names in
    /// first-occurrence order (train, then valid, then test).
    pub fn from_facts(
        train: &[NamedFact],
        valid: &[NamedFact],
        test: &[NamedFact],
    ) -> Result<Self> {
        let mut ds = TkgDataset {
            entity_names: Vec::new(),
            relation_names: Vec::new(),
            entity_ids: HashMap::new(),
            relation_ids: HashMap::new(),
            train: Vec::new(),
            valid: Vec::new(),
            test: Vec::new(),
            t_min: Year::MAX,
            t_max: Year::MIN,
            num_base_relations: 0,
            augmented: false,
        };
        for (split, facts) in [
            (Split::Train, train),
            (Split::Valid, valid),
            (Split::Test, test),
        ] {
            for &(s, r, o, start, end) in facts {
                let interval = TimeInterval::new(start, end)?;
                ds.t_min = ds.t_min.min(start);
                ds.t_max = ds.t_max.max(end);
                let quad = Quadruple {
                    subject: ds.intern_entity(s),
                    relation: ds.intern_relation(r),
                    object: ds.intern_entity(o),
                    interval,
                };
                match split {
                    Split::Train => ds.train.push(quad),
                    Split::Valid => ds.valid.push(quad),
                    Split::Test => ds.test.push(quad),
                }
            }
        }
        ds.num_base_relations = ds.relation_names.len();
        Ok(ds)
    }

    fn intern_entity(&mut self, name: &str) -> Entity {
        if let Some(&e) = self.entity_ids.get(name) {
            return e;
        }
        let e = Entity(self.entity_names.len() as u32);
        self.entity_names.push(name.to_string());
        self.entity_ids.insert(name.to_string(), e);
        e
    }

    fn intern_relation(&mut self, name: &str) -> Relation {
        if let Some(&r) = self.relation_ids.get(name) {
            return r;
        }
        let r = Relation(self.relation_names.len() as u32);
        self.relation_names.push(name.to_string());
        self.relation_ids.insert(name.to_string(), r);
        r
    }

    /// Add the inverse twin `(o, r^-1, s, T)` of every quadruple in every
    /// split. Twins are appended after the originals, so quadruple `i` of a
    /// split with `n` originals has its twin at `i + n` (and vice versa).
    pub fn augment_inverses(&mut self) -> Result<()> {
        if self.augmented {
            return Err(TkgcError::AlreadyAugmented);
        }
        let base = self.num_base_relations as u32;
        for r in 0..base {
            let name = format!("{}{}", self.relation_names[r as usize], INVERSE_SUFFIX);
            let inv = Relation(self.relation_names.len() as u32);
            self.relation_ids.insert(name.clone(), inv);
            self.relation_names.push(name);
        }
        for split in [&mut self.train, &mut self.valid, &mut self.test] {
            let originals = split.len();
            for i in 0..originals {
                let q = split[i];
                split.push(Quadruple {
                    subject: q.object,
                    relation: Relation(q.relation.0 + base),
                    object: q.subject,
                    interval: q.interval,
                });
            }
        }
        self.augmented = true;
        Ok(())
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    /// Current relation count (doubled after augmentation).
    pub fn num_relations(&self) -> usize {
        self.relation_names.len()
    }

    pub fn num_base_relations(&self) -> usize {
        self.num_base_relations
    }

    /// Inverse of `r`: id shifted by the base relation count, so applying
    /// twice is the identity.
    pub fn inverse_relation(&self, r: Relation) -> Relation {
        let base = self.num_base_relations as u32;
        if r.0 < base {
            Relation(r.0 + base)
        } else {
            Relation(r.0 - base)
        }
    }

    pub fn is_inverse(&self, r: Relation) -> bool {
        r.idx() >= self.num_base_relations
    }

    /// Index of the twin of quadruple `id` within the same (augmented) split.
    pub fn twin_quad_id(&self, split_len: usize, id: usize) -> usize {
        debug_assert!(self.augmented && split_len.is_multiple_of(2));
        let n = split_len / 2;
        if id < n {
            id + n
        } else {
            id - n
        }
    }

    pub fn split(&self, split: Split) -> &[Quadruple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn entity_name(&self, e: Entity) -> &str {
        &self.entity_names[e.idx()]
    }

    pub fn relation_name(&self, r: Relation) -> &str {
        &self.relation_names[r.idx()]
    }

    pub fn entity_id(&self, name: &str) -> Result<Entity> {
        self.entity_ids
            .get(name)
            .copied()
            .ok_or_else(|| TkgcError::UnknownEntity(name.to_string()))
    }

    pub fn relation_id(&self, name: &str) -> Result<Relation> {
        self.relation_ids
            .get(name)
            .copied()
            .ok_or_else(|| TkgcError::UnknownRelation(name.to_string()))
    }

    pub fn t_min(&self) -> Year {
        self.t_min
    }

    pub fn t_max(&self) -> Year {
        self.t_max
    }

    fn all_quads(&self) -> impl Iterator<Item = &Quadruple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    /// Counts in the shape of the standard benchmark statistics tables.
    /// Relation and fact counts refer to the raw (unaugmented) data.
    pub fn summary(&self) -> String {
        let div = if self.augmented { 2 } else { 1 };
        let mut instants: Vec<Year> = self
            .all_quads()
            .flat_map(|q| [q.interval.start, q.interval.end])
            .collect();
        instants.sort_unstable();
        instants.dedup();
        let mut intervals: Vec<TimeInterval> = self.all_quads().map(|q| q.interval).collect();
        intervals.sort_unstable();
        intervals.dedup();

        let mut s = String::new();
        let _ = writeln!(s, "#Entities\t{}", self.num_entities());
        let _ = writeln!(s, "#Relations\t{}", self.num_base_relations);
        let _ = writeln!(s, "#Instants\t{}", instants.len());
        let _ = writeln!(s, "#Intervals\t{}", intervals.len());
        let _ = writeln!(s, "#Training\t{}", self.train.len() / div);
        let _ = writeln!(s, "#Validation\t{}", self.valid.len() / div);
        let _ = writeln!(s, "#Test\t{}", self.test.len() / div);
        s
    }
}
