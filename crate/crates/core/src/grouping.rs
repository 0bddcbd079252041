//! A priori groupings of window cells into Shapley players.
//!
//! A window is a grid of `instants × features`. A [`Grouping`] partitions
//! that grid; each part becomes one player of the coalition game. Three
//! strategies are provided: one group per instant (temporal), one group per
//! encoded feature (feature), and one group per logical unit such as a
//! sensor or a process (multi-feature).

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::window::WindowShape;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupingStrategy {
    Temporal,
    Feature,
    #[serde(alias = "multi-feature")]
    Multifeature,
}

/// Aggregation level used by multi-feature groupings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// The original (pre one-hot) column.
    Source,
    /// A higher-level unit, such as an industrial process.
    Unit,
    Custom,
}

/// Provenance of one encoded feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub source: String,
    pub unit: String,
}

/// Maps every encoded feature index to its source column and unit.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureMap {
    pub entries: Vec<FeatureEntry>,
}

impl FeatureMap {
    pub fn new(entries: Vec<FeatureEntry>) -> Self {
        Self { entries }
    }

    /// One feature per name, each its own unit.
    pub fn identity<S: AsRef<str>>(names: &[S]) -> Self {
        Self {
            entries: names
                .iter()
                .map(|n| FeatureEntry {
                    source: n.as_ref().to_owned(),
                    unit: n.as_ref().to_owned(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reassigns units from a `source -> unit` table; unlisted sources keep
    /// their current unit.
    pub fn with_units(mut self, units: &HashMap<String, String>) -> Self {
        for e in &mut self.entries {
            if let Some(u) = units.get(&e.source) {
                e.unit = u.clone();
            }
        }
        self
    }

    fn name(&self, index: usize, level: Level) -> &str {
        let e = &self.entries[index];
        match level {
            Level::Unit => &e.unit,
            Level::Source | Level::Custom => &e.source,
        }
    }
}

/// A named partition of the `instants × features` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    shape: WindowShape,
    strategy: GroupingStrategy,
    names: Vec<String>,
    cells: Vec<Vec<(usize, usize)>>,
    // group index per cell, instant-major
    cell_group: Vec<usize>,
}

impl Grouping {
    /// Builds a grouping from explicit cell lists and checks that they
    /// partition the grid: non-empty, pairwise disjoint, covering, uniquely
    /// named.
    pub fn from_cells(
        shape: WindowShape,
        strategy: GroupingStrategy,
        groups: Vec<(String, Vec<(usize, usize)>)>,
    ) -> Result<Self> {
        check_dims(shape.instants, shape.features)?;
        if groups.is_empty() {
            return Err(Error::InvalidPartition("no groups".into()));
        }
        let mut cell_group = vec![usize::MAX; shape.cells()];
        let mut seen_names = HashMap::new();
        let mut names = Vec::with_capacity(groups.len());
        let mut cells = Vec::with_capacity(groups.len());
        for (g, (name, members)) in groups.into_iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidPartition(format!("group '{name}' is empty")));
            }
            if seen_names.insert(name.clone(), g).is_some() {
                return Err(Error::InvalidPartition(format!("duplicate group name '{name}'")));
            }
            for &(t, f) in &members {
                if t >= shape.instants || f >= shape.features {
                    return Err(Error::InvalidPartition(format!(
                        "cell ({t}, {f}) of group '{name}' lies outside the {shape} grid"
                    )));
                }
                let slot = &mut cell_group[shape.offset(t, f)];
                if *slot != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "cell ({t}, {f}) belongs to more than one group"
                    )));
                }
                *slot = g;
            }
            names.push(name);
            cells.push(members);
        }
        if let Some(missing) = cell_group.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidPartition(format!(
                "cell ({}, {}) is not covered",
                missing / shape.features,
                missing % shape.features
            )));
        }
        Ok(Self {
            shape,
            strategy,
            names,
            cells,
            cell_group,
        })
    }

    /// One group per instant, named `t0..t{w-1}`.
    pub fn temporal(window_size: usize, feature_count: usize) -> Result<Self> {
        check_dims(window_size, feature_count)?;
        let groups = (0..window_size)
            .map(|t| (format!("t{t}"), (0..feature_count).map(|f| (t, f)).collect()))
            .collect();
        Self::from_cells(
            WindowShape::new(window_size, feature_count),
            GroupingStrategy::Temporal,
            groups,
        )
    }

    /// One group per encoded feature, named `f0..`.
    pub fn feature(window_size: usize, feature_count: usize) -> Result<Self> {
        let names: Vec<String> = (0..feature_count).map(|f| format!("f{f}")).collect();
        Self::feature_named(window_size, &names)
    }

    /// One group per encoded feature, named after the given columns.
    pub fn feature_named<S: AsRef<str>>(window_size: usize, names: &[S]) -> Result<Self> {
        check_dims(window_size, names.len())?;
        let groups = names
            .iter()
            .enumerate()
            .map(|(f, n)| (n.as_ref().to_owned(), (0..window_size).map(|t| (t, f)).collect()))
            .collect();
        Self::from_cells(
            WindowShape::new(window_size, names.len()),
            GroupingStrategy::Feature,
            groups,
        )
    }

    /// One group per distinct source column or unit of `map`, ordered by
    /// first appearance. One-hot siblings share a source and so share a group.
    pub fn multifeature(window_size: usize, map: &FeatureMap, level: Level) -> Result<Self> {
        check_dims(window_size, map.len())?;
        let mut order: Vec<String> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut features: Vec<Vec<usize>> = Vec::new();
        for f in 0..map.len() {
            let name = map.name(f, level);
            let g = *index.entry(name).or_insert_with(|| {
                order.push(name.to_owned());
                features.push(Vec::new());
                order.len() - 1
            });
            features[g].push(f);
        }
        Self::from_feature_sets(window_size, map.len(), order.into_iter().zip(features).collect())
    }

    /// Expands a group-map document (groups listed by pre-encoding column
    /// name) through `map` and validates the resulting partition.
    pub fn from_group_map(window_size: usize, map: &FeatureMap, doc: &GroupMap) -> Result<Self> {
        if doc.groups.is_empty() {
            if doc.level == Level::Custom {
                return Err(Error::InvalidPartition("custom group map lists no groups".into()));
            }
            return Self::multifeature(window_size, map, doc.level);
        }
        check_dims(window_size, map.len())?;
        let mut by_source: HashMap<&str, Vec<usize>> = HashMap::new();
        for (f, e) in map.entries.iter().enumerate() {
            by_source.entry(e.source.as_str()).or_default().push(f);
        }
        let mut sets = Vec::with_capacity(doc.groups.len());
        for (name, columns) in &doc.groups {
            let mut feats = Vec::new();
            for col in columns {
                let fs = by_source
                    .get(col.as_str())
                    .ok_or_else(|| Error::UnknownColumn(col.clone()))?;
                feats.extend_from_slice(fs);
            }
            sets.push((name.clone(), feats));
        }
        Self::from_feature_sets(window_size, map.len(), sets)
    }

    fn from_feature_sets(
        window_size: usize,
        feature_count: usize,
        sets: Vec<(String, Vec<usize>)>,
    ) -> Result<Self> {
        let mut owner = vec![None; feature_count];
        for (name, feats) in &sets {
            for &f in feats {
                if let Some(prev) = owner[f].replace(name.as_str()) {
                    return Err(Error::InvalidPartition(format!(
                        "encoded feature {f} is claimed by both '{prev}' and '{name}'"
                    )));
                }
            }
        }
        if let Some(f) = owner.iter().position(Option::is_none) {
            return Err(Error::IncompleteFeatureMap(f));
        }
        let groups = sets
            .into_iter()
            .map(|(name, feats)| {
                let cells = (0..window_size)
                    .flat_map(|t| feats.iter().map(move |&f| (t, f)))
                    .collect();
                (name, cells)
            })
            .collect();
        Self::from_cells(
            WindowShape::new(window_size, feature_count),
            GroupingStrategy::Multifeature,
            groups,
        )
    }

    pub fn shape(&self) -> WindowShape {
        self.shape
    }

    pub fn strategy(&self) -> GroupingStrategy {
        self.strategy
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cells(&self, group: usize) -> &[(usize, usize)] {
        &self.cells[group]
    }

    /// Group index for every cell, in instant-major order.
    pub fn cell_groups(&self) -> &[usize] {
        &self.cell_group
    }

    pub fn group_of(&self, instant: usize, feature: usize) -> usize {
        self.cell_group[self.shape.offset(instant, feature)]
    }

    /// Reorders groups; `order[k]` is the old index of new group `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::InvalidPartition("permutation length mismatch".into()));
        }
        let groups = order
            .iter()
            .map(|&g| (self.names[g].clone(), self.cells[g].clone()))
            .collect();
        Self::from_cells(self.shape, self.strategy, groups)
    }
}

fn check_dims(window_size: usize, feature_count: usize) -> Result<()> {
    if window_size == 0 || feature_count == 0 {
        return Err(Error::InvalidDimensions(format!(
            "window size {window_size} and feature count {feature_count} must be positive"
        )));
    }
    Ok(())
}

/// `{"level": "source"|"unit"|"custom", "groups": {"<name>": ["<column>", ...]}}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMap {
    pub level: Level,
    #[serde(default, with = "ordered_groups")]
    pub groups: Vec<(String, Vec<String>)>,
}

impl GroupMap {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

// Group maps are JSON objects whose key order is the group order.
mod ordered_groups {
    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};

    type Groups = Vec<(String, Vec<String>)>;

    pub fn serialize<S: Serializer>(groups: &Groups, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(groups.len()))?;
        for (k, v) in groups {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Groups, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Groups;
            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("an object of group name to column list")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Groups, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, Vec<String>>()? {
                    out.push((k, v));
                }
                Ok(out)
            }
        }
        d.deserialize_map(V)
    }
}
