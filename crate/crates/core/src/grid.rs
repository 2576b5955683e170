//! Network data model and the bundled test feeders.
//!
//! A dataset on disk is a directory holding three files:
//!
//! - `buses.csv` with header `id,demand_kw`
//! - `branches.csv` with header `id,from,to,r_ohm,x_ohm,is_tie`
//! - `manifest.json` with `{name, root_bus, format_version}`
//!
//! Ids are 1-based and contiguous. Rows may appear in any order.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

pub const FORMAT_VERSION: u32 = 1;

/// Environment variable that overrides where named datasets are looked up.
pub const DATA_DIR_ENV: &str = "GRIDCONF_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchId(pub u32);

impl BusId {
    /// Zero-based position in [`Network::buses`].
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        BusId(i as u32 + 1)
    }
}

impl BranchId {
    /// Zero-based position in [`Network::branches`].
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        BranchId(i as u32 + 1)
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub demand_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub resistance_ohm: f64,
    pub reactance_ohm: f64,
    pub is_tie: bool,
}

impl Branch {
    /// Impedance magnitude `sqrt(r² + x²)`.
    #[inline]
    pub fn impedance(&self) -> f64 {
        self.resistance_ohm.hypot(self.reactance_ohm)
    }

    /// The endpoint that is not `bus`. Assumes `bus` is an endpoint.
    #[inline]
    pub fn other(&self, bus: BusId) -> BusId {
        if self.from == bus {
            self.to
        } else {
            self.from
        }
    }
}

/// Immutable distribution network: buses, branches and the substation root.
///
/// Buses and branches are stored in id order, so `buses[i].id == BusId::from_index(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    name: String,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    root: BusId,
    // per bus: (neighbour bus index, branch index)
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Network {
    /// Builds and validates a network. Buses and branches may be given in any order.
    pub fn new(
        name: impl Into<String>,
        mut buses: Vec<Bus>,
        mut branches: Vec<Branch>,
        root: BusId,
    ) -> Result<Self, DataError> {
        let invalid = |m: String| Err(DataError::Validation(m));

        buses.sort_by_key(|b| b.id);
        branches.sort_by_key(|b| b.id);

        if buses.is_empty() {
            return invalid("no buses".into());
        }
        for (i, bus) in buses.iter().enumerate() {
            if bus.id != BusId::from_index(i) {
                return invalid(format!(
                    "bus ids must be unique and contiguous from 1; found {} at position {}",
                    bus.id,
                    i + 1
                ));
            }
            if !(bus.demand_kw.is_finite() && bus.demand_kw >= 0.0) {
                return invalid(format!("bus {}: demand must be finite and >= 0", bus.id));
            }
        }
        let n = buses.len();
        if root.0 == 0 || root.index() >= n {
            return invalid(format!("root bus {root} does not exist"));
        }

        for (i, br) in branches.iter().enumerate() {
            if br.id != BranchId::from_index(i) {
                return invalid(format!(
                    "branch ids must be unique and contiguous from 1; found {} at position {}",
                    br.id,
                    i + 1
                ));
            }
            for end in [br.from, br.to] {
                if end.0 == 0 || end.index() >= n {
                    return invalid(format!("branch {}: unknown bus {end}", br.id));
                }
            }
            if br.from == br.to {
                return invalid(format!("branch {}: self loop on bus {}", br.id, br.from));
            }
            for (what, v) in [
                ("resistance", br.resistance_ohm),
                ("reactance", br.reactance_ohm),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return invalid(format!("branch {}: {what} must be finite and >= 0", br.id));
                }
            }
        }
        if !branches.iter().any(|b| b.impedance() > 0.0) {
            return invalid("every branch has zero impedance".into());
        }

        let ties = branches.iter().filter(|b| b.is_tie).count();
        if ties == 0 {
            return invalid("network has no tie branches".into());
        }
        if branches.len() - ties != n - 1 {
            return invalid(format!(
                "expected {} non-tie branches for {} buses, found {}",
                n - 1,
                n,
                branches.len() - ties
            ));
        }

        let mut adjacency = vec![Vec::new(); n];
        for (e, br) in branches.iter().enumerate() {
            adjacency[br.from.index()].push((br.to.index(), e));
            adjacency[br.to.index()].push((br.from.index(), e));
        }

        let net = Network {
            name: name.into(),
            buses,
            branches,
            root,
            adjacency,
        };
        let all_closed = vec![true; net.branches.len()];
        if net.reachable_from_root(&all_closed).iter().any(|r| !r) {
            return invalid("network is disconnected with every branch closed".into());
        }
        Ok(net)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn root(&self) -> BusId {
        self.root
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Number of tie branches, which is also the number of open switches in
    /// every radial configuration.
    pub fn tie_count(&self) -> usize {
        self.branches.iter().filter(|b| b.is_tie).count()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        (id.0 >= 1).then(|| self.buses.get(id.index())).flatten()
    }

    pub fn branch(&self, id: BranchId) -> Option<&Branch> {
        (id.0 >= 1).then(|| self.branches.get(id.index())).flatten()
    }

    pub fn total_demand_kw(&self) -> f64 {
        self.buses.iter().map(|b| b.demand_kw).sum()
    }

    /// `(neighbour bus index, branch index)` pairs incident to bus index `bus`.
    #[inline]
    pub fn neighbours(&self, bus: usize) -> &[(usize, usize)] {
        &self.adjacency[bus]
    }

    /// Breadth-first reachability from the root, using only branches with `closed[e]`.
    pub fn reachable_from_root(&self, closed: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::new();
        seen[self.root.index()] = true;
        queue.push_back(self.root.index());
        while let Some(k) = queue.pop_front() {
            for &(m, e) in &self.adjacency[k] {
                if closed[e] && !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Serialises the network back to the on-disk dataset format.
    pub fn to_dataset(&self) -> DatasetText {
        let mut buses = String::from("id,demand_kw\n");
        for b in &self.buses {
            buses.push_str(&format!("{},{}\n", b.id, b.demand_kw));
        }
        let mut branches = String::from("id,from,to,r_ohm,x_ohm,is_tie\n");
        for b in &self.branches {
            branches.push_str(&format!(
                "{},{},{},{},{},{}\n",
                b.id, b.from, b.to, b.resistance_ohm, b.reactance_ohm, b.is_tie as u8
            ));
        }
        let manifest = Manifest {
            name: self.name.clone(),
            root_bus: self.root.0,
            format_version: FORMAT_VERSION,
        };
        DatasetText {
            buses,
            branches,
            manifest: serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n",
        }
    }
}

/// The decision variable: the set of open branches.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    open: Vec<BranchId>,
}

impl Configuration {
    /// Validates that every id exists, ids are distinct and exactly
    /// [`Network::tie_count`] branches are open.
    pub fn new(net: &Network, open: impl IntoIterator<Item = BranchId>) -> Result<Self, DataError> {
        let mut seen = BTreeSet::new();
        for id in open {
            if net.branch(id).is_none() {
                return Err(DataError::Configuration(format!("unknown branch {id}")));
            }
            if !seen.insert(id) {
                return Err(DataError::Configuration(format!(
                    "branch {id} listed twice"
                )));
            }
        }
        if seen.len() != net.tie_count() {
            return Err(DataError::Configuration(format!(
                "expected {} open branches, got {}",
                net.tie_count(),
                seen.len()
            )));
        }
        Ok(Configuration {
            open: seen.into_iter().collect(),
        })
    }

    /// Convenience for tests and literals: `Configuration::from_ids(&net, [7, 14, 26, 33, 34])`.
    pub fn from_ids(net: &Network, ids: impl IntoIterator<Item = u32>) -> Result<Self, DataError> {
        Self::new(net, ids.into_iter().map(BranchId))
    }

    /// Open branch ids in ascending order.
    pub fn open_edges(&self) -> &[BranchId] {
        &self.open
    }

    pub fn is_open(&self, id: BranchId) -> bool {
        self.open.binary_search(&id).is_ok()
    }

    /// `closed[e]` for every branch index of `net`.
    pub fn closed_mask(&self, net: &Network) -> Vec<bool> {
        let mut closed = vec![true; net.branch_count()];
        for id in &self.open {
            closed[id.index()] = false;
        }
        closed
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.open.iter().map(|b| b.to_string()).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

/// Normally-open configuration: every tie branch open.
pub fn base_configuration(net: &Network) -> Configuration {
    Configuration {
        open: net
            .branches
            .iter()
            .filter(|b| b.is_tie)
            .map(|b| b.id)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub root_bus: u32,
    pub format_version: u32,
}

/// Raw text of the three dataset files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetText {
    pub buses: String,
    pub branches: String,
    pub manifest: String,
}

impl DatasetText {
    pub fn read_dir(dir: &Path) -> Result<Self, DataError> {
        let read = |file: &str| {
            let path = dir.join(file);
            std::fs::read_to_string(&path).map_err(|e| DataError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        };
        Ok(DatasetText {
            buses: read("buses.csv")?,
            branches: read("branches.csv")?,
            manifest: read("manifest.json")?,
        })
    }

    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("buses.csv"), &self.buses)?;
        std::fs::write(dir.join("branches.csv"), &self.branches)?;
        std::fs::write(dir.join("manifest.json"), &self.manifest)
    }
}

#[derive(Debug, Deserialize)]
struct BusRow {
    id: u32,
    demand_kw: f64,
}

#[derive(Debug, Deserialize)]
struct BranchRow {
    id: u32,
    from: u32,
    to: u32,
    r_ohm: f64,
    x_ohm: f64,
    is_tie: u8,
}

fn parse_rows<T: serde::de::DeserializeOwned>(
    file: &'static str,
    text: &str,
    header: &[&str],
) -> Result<Vec<(u64, T)>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got = rdr.headers().map_err(|e| DataError::Parse {
        file,
        line: 1,
        message: e.to_string(),
    })?;
    if got.iter().ne(header.iter().copied()) {
        return Err(DataError::Parse {
            file,
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    let headers = got.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Parse {
            file,
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = rec
            .deserialize(Some(&headers))
            .map_err(|e| DataError::Parse {
                file,
                line,
                message: match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                },
            })?;
        rows.push((line, row));
    }
    Ok(rows)
}

/// Parses and validates a dataset.
pub fn load_network(source: &DatasetText) -> Result<Network, DataError> {
    let manifest: Manifest =
        serde_json::from_str(&source.manifest).map_err(|e| DataError::Manifest(e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(DataError::FormatVersion(manifest.format_version));
    }

    let buses = parse_rows::<BusRow>("buses.csv", &source.buses, &["id", "demand_kw"])?
        .into_iter()
        .map(|(_, r)| Bus {
            id: BusId(r.id),
            demand_kw: r.demand_kw,
        })
        .collect();

    let mut branches = Vec::new();
    for (line, r) in parse_rows::<BranchRow>(
        "branches.csv",
        &source.branches,
        &["id", "from", "to", "r_ohm", "x_ohm", "is_tie"],
    )? {
        let is_tie = match r.is_tie {
            0 => false,
            1 => true,
            v => {
                return Err(DataError::Parse {
                    file: "branches.csv",
                    line,
                    message: format!("is_tie must be 0 or 1, got {v}"),
                })
            }
        };
        branches.push(Branch {
            id: BranchId(r.id),
            from: BusId(r.from),
            to: BusId(r.to),
            resistance_ohm: r.r_ohm,
            reactance_ohm: r.x_ohm,
            is_tie,
        });
    }

    Network::new(manifest.name, buses, branches, BusId(manifest.root_bus))
}

/// Bundled feeders, addressed as `33`/`ieee33` or `69`/`ieee69`.
pub fn bundled(name: &str) -> Option<DatasetText> {
    let (buses, branches, manifest) = match name {
        "33" | "ieee33" => (
            include_str!("../data/ieee33/buses.csv"),
            include_str!("../data/ieee33/branches.csv"),
            include_str!("../data/ieee33/manifest.json"),
        ),
        "69" | "ieee69" => (
            include_str!("../data/ieee69/buses.csv"),
            include_str!("../data/ieee69/branches.csv"),
            include_str!("../data/ieee69/manifest.json"),
        ),
        _ => return None,
    };
    Some(DatasetText {
        buses: buses.into(),
        branches: branches.into(),
        manifest: manifest.into(),
    })
}

/// Resolves a dataset argument: an existing directory path, or a bundled name.
/// Named datasets are read from `$GRIDCONF_DATA_DIR/ieee<N>` when that variable is set.
pub fn resolve_dataset(arg: &str) -> Result<DatasetText, DataError> {
    let path = Path::new(arg);
    if path.is_dir() {
        return DatasetText::read_dir(path);
    }
    let canonical = match arg {
        "33" | "ieee33" => "ieee33",
        "69" | "ieee69" => "ieee69",
        _ => {
            return Err(DataError::Io {
                path: arg.to_string(),
                message: "not a dataset directory or bundled dataset name".into(),
            })
        }
    };
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => DatasetText::read_dir(&Path::new(&dir).join(canonical)),
        None => Ok(bundled(canonical).expect("bundled dataset exists")),
    }
}

/// Loads a bundled feeder. Panics only if the bundled files are corrupt.
pub fn bundled_network(name: &str) -> Network {
    let text = bundled(name).unwrap_or_else(|| panic!("no bundled dataset named {name}"));
    load_network(&text).expect("bundled dataset is valid")
}
