use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::collapse_whitespace;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    /// attribute kind (e.g. `genre`, `author`) -> values
    pub attributes: BTreeMap<String, BTreeSet<String>>,
}

impl CatalogEntry {
    pub fn has_attributes(&self) -> bool {
        self.attributes.values().any(|v| !v.is_empty())
    }

    /// Flattened `kind:value` tokens.
    pub fn attribute_tokens(&self) -> impl Iterator<Item = String> + '_ {
        self.attributes
            .iter()
            .flat_map(|(k, vs)| vs.iter().map(move |v| format!("{k}:{v}")))
    }
}

/// Item identities with display names and attribute sets, ordered by item id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ItemCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl ItemCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or renames an item. Names are whitespace-normalized and must
    /// be non-empty.
    pub fn insert_name(&mut self, item: &str, name: &str) -> Result<()> {
        let name = collapse_whitespace(name);
        if name.is_empty() {
            return Err(Error::InvalidArgument(format!("item {item:?} has an empty name")));
        }
        self.entries.entry(item.to_string()).or_default().name = name;
        Ok(())
    }

    pub fn insert_attribute(&mut self, item: &str, kind: &str, value: &str) {
        let entry = self.entry_mut(item);
        entry
            .attributes
            .entry(kind.to_string())
            .or_default()
            .insert(value.to_string());
    }

    fn entry_mut(&mut self, item: &str) -> &mut CatalogEntry {
        self.entries.entry(item.to_string()).or_insert_with(|| CatalogEntry {
            name: item.to_string(),
            attributes: BTreeMap::new(),
        })
    }

    pub fn get(&self, item: &str) -> Option<&CatalogEntry> {
        self.entries.get(item)
    }

    pub fn name(&self, item: &str) -> Option<&str> {
        self.entries.get(item).map(|e| e.name.as_str())
    }

    pub fn contains(&self, item: &str) -> bool {
        self.entries.contains_key(item)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CatalogEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Merges `other` into `self`; names from `other` win, attributes union.
    pub fn merge(&mut self, other: ItemCatalog) {
        for (item, entry) in other.entries {
            let dst = self.entry_mut(&item);
            if entry.name != item || dst.name == item {
                dst.name = entry.name;
            }
            for (kind, values) in entry.attributes {
                dst.attributes.entry(kind).or_default().extend(values);
            }
        }
    }

    /// Keeps only the given items.
    pub fn restrict<'a>(&self, items: impl IntoIterator<Item = &'a str>) -> ItemCatalog {
        let keep: BTreeSet<&str> = items.into_iter().collect();
        ItemCatalog {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keep.contains(k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Reads `(item_id, attribute_kind, attribute_value)` triples. A row with
/// only an item id declares an item without attributes.
pub fn parse_attributes(path: impl AsRef<Path>) -> Result<ItemCatalog> {
    let path = path.as_ref();
    parse_attributes_str(&read_text(path)?, path)
}

pub(crate) fn parse_attributes_str(text: &str, path: &Path) -> Result<ItemCatalog> {
    let mut catalog = ItemCatalog::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        match cols.as_slice() {
            [item] if !item.is_empty() => {
                catalog.entry_mut(item);
            }
            [item, kind, value] => {
                if item.is_empty() || kind.is_empty() {
                    return Err(Error::malformed(path, line_no, "empty item id or attribute kind"));
                }
                if value.is_empty() {
                    return Err(Error::malformed(path, line_no, "empty attribute value"));
                }
                catalog.insert_attribute(item, kind, value);
            }
            _ => {
                return Err(Error::malformed(
                    path,
                    line_no,
                    format!("expected 3 tab-separated columns, found {}", cols.len()),
                ))
            }
        }
    }
    let bare = catalog.iter().filter(|(_, e)| !e.has_attributes()).count();
    if bare > 0 {
        log::warn!("{}: {bare} items have no attributes", path.display());
    }
    Ok(catalog)
}

/// Reads `item_id \t display name` rows.
pub fn parse_item_names(path: impl AsRef<Path>) -> Result<ItemCatalog> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut catalog = ItemCatalog::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (item, name) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(path, idx + 1, "expected item_id<TAB>name"))?;
        catalog
            .insert_name(item.trim(), name)
            .map_err(|_| Error::malformed(path, idx + 1, "empty item name"))?;
    }
    Ok(catalog)
}

const MOVIELENS_GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

/// Reads MovieLens-100k `u.item` (pipe-separated, ISO-8859-1) into names and
/// `genre` attributes.
pub fn parse_movielens_items(path: impl AsRef<Path>) -> Result<ItemCatalog> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // ISO-8859-1 maps bytes to code points one to one.
    let text: String = bytes.iter().map(|&b| b as char).collect();
    let mut catalog = ItemCatalog::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('|').collect();
        if cols.len() != 5 + MOVIELENS_GENRES.len() {
            return Err(Error::malformed(
                path,
                idx + 1,
                format!("expected 24 pipe-separated columns, found {}", cols.len()),
            ));
        }
        let item = cols[0].trim();
        catalog
            .insert_name(item, cols[1])
            .map_err(|_| Error::malformed(path, idx + 1, "empty title"))?;
        for (flag, genre) in cols[5..].iter().zip(MOVIELENS_GENRES) {
            if flag.trim() == "1" {
                catalog.insert_attribute(item, "genre", genre);
            }
        }
    }
    Ok(catalog)
}
