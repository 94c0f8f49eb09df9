//! The catalogue of QC-LDPC codes available to the matcher.
//!
//! Every code in the registry is a member of the IEEE 802.16 family: a
//! compact base matrix of cyclic-shift values over 24 block columns, plus an
//! expansion factor `z` that blows each entry up into a `z`×`z` circulant (or
//! all-zero) block. The registry ships the seven configurations used by the
//! matcher; base matrices are ingested from plain-text data files so the
//! shift tables stay auditable.

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

/// Marker for an absent block in a base matrix.
pub const BLANK: i32 = -1;

/// Base matrices are specified for the largest family member (n = 2304,
/// z = 96); smaller codes derive their shifts from these values.
pub const Z_BASE: u32 = 96;

/// Number of block columns in every 802.16 base matrix.
pub const BASE_COLS: usize = 24;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read base matrix file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed header line {line:?}")]
    BadHeader { path: String, line: String },
    #[error("{path}: row {row}: malformed entry {entry:?}")]
    BadEntry {
        path: String,
        row: usize,
        entry: String,
    },
    #[error("{path}: row {row}: shift {value} outside [0, 95]")]
    ShiftRange { path: String, row: usize, value: i64 },
    #[error("{path}: expected {expected} rows of {cols} entries, found {found}")]
    Dimensions {
        path: String,
        expected: usize,
        cols: usize,
        found: usize,
    },
    #[error("{name}: base matrix fails validation: {reason}")]
    Invalid { name: String, reason: String },
}

/// Rate family of a code, which also selects the shift-scaling rule used
/// when the expansion factor is smaller than 96.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFamily {
    /// Rate 2/3, "A" construction. Shifts scale as `p mod z`.
    TwoThirdsA,
    /// Rate 5/6. Shifts scale as `floor(p * z / 96)`.
    FiveSixths,
}

impl RateFamily {
    pub fn label(&self) -> &'static str {
        match self {
            RateFamily::TwoThirdsA => "2/3A",
            RateFamily::FiveSixths => "5/6",
        }
    }
}

impl fmt::Display for RateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Compact shift-value matrix for one code family.
///
/// Entries are either [`BLANK`] or a shift in `[0, 95]`, expressed for
/// `z = 96` and rescaled per code on expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    rows: usize,
    entries: Vec<i32>, // rows * BASE_COLS, row-major
}

impl BaseMatrix {
    /// Builds a base matrix from row-major entries, enforcing the
    /// structural invariants (24 columns, shifts in range, row weight >= 2,
    /// column weight >= 1).
    pub fn new(rows: usize, entries: Vec<i32>) -> Result<Self, String> {
        if rows == 0 {
            return Err("no rows".into());
        }
        if entries.len() != rows * BASE_COLS {
            return Err(format!(
                "expected {} entries, got {}",
                rows * BASE_COLS,
                entries.len()
            ));
        }
        for (i, &e) in entries.iter().enumerate() {
            if e != BLANK && !(0..=95).contains(&e) {
                return Err(format!(
                    "entry {} at row {} col {} outside [0, 95]",
                    e,
                    i / BASE_COLS,
                    i % BASE_COLS
                ));
            }
        }
        let m = BaseMatrix { rows, entries };
        for r in 0..rows {
            let weight = m.row(r).iter().filter(|&&e| e != BLANK).count();
            if weight < 2 {
                return Err(format!("row {r} has weight {weight} < 2"));
            }
        }
        for c in 0..BASE_COLS {
            if (0..rows).all(|r| m.at(r, c) == BLANK) {
                return Err(format!("column {c} is empty"));
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        BASE_COLS
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> i32 {
        self.entries[row * BASE_COLS + col]
    }

    pub fn row(&self, row: usize) -> &[i32] {
        &self.entries[row * BASE_COLS..(row + 1) * BASE_COLS]
    }

    /// Non-BLANK count per column, used to cross-check expanded matrices.
    pub fn column_weights(&self) -> Vec<usize> {
        (0..BASE_COLS)
            .map(|c| (0..self.rows).filter(|&r| self.at(r, c) != BLANK).count())
            .collect()
    }
}

/// One named QC-LDPC code configuration.
#[derive(Debug)]
pub struct QcCodeSpec {
    /// Stable identifier, e.g. `n1920_k1280`.
    pub name: String,
    /// Codeword length in bits. Always `24 * z`.
    pub n: usize,
    /// Information length in bits.
    pub k: usize,
    /// Expansion factor.
    pub z: usize,
    /// Rate family derived from the (n, k) dimensions.
    pub rate: RateFamily,
    /// Rate label carried over from the source system catalogue. The
    /// catalogue lists every configuration as "2/3A" even where the
    /// dimensions say 5/6, so this is kept as metadata only.
    pub catalog_rate: &'static str,
    /// How many codec blocks one 1280-sample template occupies.
    pub blocks_per_template: usize,
    /// Free-form note shown by the code listing.
    pub notes: &'static str,
    pub base: BaseMatrix,
    expanded: OnceLock<ParityCheckMatrix>,
}

impl QcCodeSpec {
    /// Number of base-matrix rows, i.e. decoding layers.
    pub fn layers(&self) -> usize {
        self.base.rows()
    }

    /// Parity length `n - k` of one block.
    pub fn parity_len(&self) -> usize {
        self.n - self.k
    }

    /// Total information capacity of one template (`blocks * k`).
    pub fn template_info_capacity(&self) -> usize {
        self.blocks_per_template * self.k
    }

    /// The expanded parity-check matrix, built on first use and cached.
    pub fn matrix(&self) -> &ParityCheckMatrix {
        self.expanded.get_or_init(|| expand(self))
    }
}

impl Clone for QcCodeSpec {
    fn clone(&self) -> Self {
        QcCodeSpec {
            name: self.name.clone(),
            n: self.n,
            k: self.k,
            z: self.z,
            rate: self.rate,
            catalog_rate: self.catalog_rate,
            blocks_per_template: self.blocks_per_template,
            notes: self.notes,
            base: self.base.clone(),
            expanded: OnceLock::new(),
        }
    }
}

/// Sparse binary parity-check matrix, stored as per-row sorted column
/// indices. Row `r` of layer `l` covers expanded rows `l*z .. (l+1)*z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_rows: usize,
    n_cols: usize,
    z: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl ParityCheckMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Layer size (checks per layer).
    pub fn z(&self) -> usize {
        self.z
    }

    /// Number of layers (base-matrix rows).
    pub fn layers(&self) -> usize {
        self.n_rows / self.z
    }

    /// Total number of edges (stored ones).
    pub fn n_edges(&self) -> usize {
        self.col_idx.len()
    }

    /// Sorted column indices of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// Edge-index range of row `r` into the flat edge arrays.
    #[inline]
    pub fn row_edges(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    /// Column weights, by scanning all rows.
    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0usize; self.n_cols];
        for &c in &self.col_idx {
            w[c as usize] += 1;
        }
        w
    }
}

/// Rescales a base shift value for expansion factor `z`.
///
/// The 2/3A family uses modulo scaling; every other family scales down
/// proportionally with a floor.
pub fn scale_shift(p: u32, z: usize, rate: RateFamily) -> u32 {
    debug_assert!(p <= 95);
    match rate {
        RateFamily::TwoThirdsA => p % z as u32,
        RateFamily::FiveSixths => (p as usize * z / Z_BASE as usize) as u32,
    }
}

/// Expands a code's base matrix into its sparse parity-check matrix.
///
/// Block `(i, j)` with scaled shift `s` becomes the z×z identity cyclically
/// right-shifted by `s`: expanded row `i*z + r` holds a one at column
/// `j*z + ((r + s) mod z)`. BLANK blocks contribute nothing.
pub fn expand(spec: &QcCodeSpec) -> ParityCheckMatrix {
    let z = spec.z;
    let rows = spec.base.rows();
    let mut row_ptr = Vec::with_capacity(rows * z + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for i in 0..rows {
        // Pre-scale the shifts of this base row once.
        let shifts: Vec<(usize, u32)> = spec
            .base
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != BLANK)
            .map(|(j, &p)| (j, scale_shift(p as u32, z, spec.rate)))
            .collect();
        for r in 0..z {
            for &(j, s) in &shifts {
                col_idx.push((j * z + (r + s as usize) % z) as u32);
            }
            row_ptr.push(col_idx.len());
        }
    }
    ParityCheckMatrix {
        n_rows: rows * z,
        n_cols: BASE_COLS * z,
        z,
        row_ptr,
        col_idx,
    }
}

/// Static definition of one registry entry; the base matrix comes from its
/// data file.
struct CodeDef {
    name: &'static str,
    n: usize,
    k: usize,
    rate: RateFamily,
    blocks: usize,
    notes: &'static str,
    builtin: &'static str,
}

/// The seven supported configurations, in catalogue order. All of them are
/// listed as rate 2/3A in the source catalogue; the functional rate family
/// here follows the (n, k) dimensions.
const CODE_DEFS: &[CodeDef] = &[
    CodeDef {
        name: "n1920_k1280",
        n: 1920,
        k: 1280,
        rate: RateFamily::TwoThirdsA,
        blocks: 1,
        notes: "",
        builtin: include_str!("../data/n1920_k1280.txt"),
    },
    CodeDef {
        name: "n2016_k1680",
        n: 2016,
        k: 1680,
        rate: RateFamily::FiveSixths,
        blocks: 1,
        notes: "",
        builtin: include_str!("../data/n2016_k1680.txt"),
    },
    CodeDef {
        name: "n1920_k1600",
        n: 1920,
        k: 1600,
        rate: RateFamily::FiveSixths,
        blocks: 1,
        notes: "",
        builtin: include_str!("../data/n1920_k1600.txt"),
    },
    CodeDef {
        name: "n2016_k1344",
        n: 2016,
        k: 1344,
        rate: RateFamily::TwoThirdsA,
        blocks: 1,
        notes: "",
        builtin: include_str!("../data/n2016_k1344.txt"),
    },
    CodeDef {
        name: "n960_k640_v1",
        n: 960,
        k: 640,
        rate: RateFamily::TwoThirdsA,
        blocks: 2,
        notes: "2blk, V1 feature extraction",
        builtin: include_str!("../data/n960_k640_v1.txt"),
    },
    CodeDef {
        name: "n960_k640",
        n: 960,
        k: 640,
        rate: RateFamily::TwoThirdsA,
        blocks: 2,
        notes: "2blk",
        builtin: include_str!("../data/n960_k640.txt"),
    },
    CodeDef {
        name: "n960_k800",
        n: 960,
        k: 800,
        rate: RateFamily::FiveSixths,
        blocks: 2,
        notes: "2blk",
        builtin: include_str!("../data/n960_k800.txt"),
    },
];

/// The loaded registry of code configurations.
#[derive(Debug, Clone)]
pub struct Registry {
    codes: Vec<QcCodeSpec>,
}

impl Registry {
    /// Registry backed by the base-matrix tables compiled into the binary.
    pub fn builtin() -> Registry {
        let codes = CODE_DEFS
            .iter()
            .map(|def| {
                build_spec(def, def.builtin, &format!("<builtin:{}>", def.name))
                    .expect("builtin base matrices are valid")
            })
            .collect();
        Registry { codes }
    }

    pub fn codes(&self) -> &[QcCodeSpec] {
        &self.codes
    }

    pub fn get(&self, name: &str) -> Option<&QcCodeSpec> {
        self.codes.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.codes.iter().map(|c| c.name.as_str())
    }
}

/// Loads the registry from a directory holding one base-matrix file per
/// code, named `<code>.txt`.
pub fn load_registry(config_dir: &Path) -> Result<Registry, RegistryError> {
    let mut codes = Vec::with_capacity(CODE_DEFS.len());
    for def in CODE_DEFS {
        let path = config_dir.join(format!("{}.txt", def.name));
        let text = std::fs::read_to_string(&path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        codes.push(build_spec(def, &text, &path.display().to_string())?);
    }
    Ok(Registry { codes })
}

fn build_spec(def: &CodeDef, text: &str, path: &str) -> Result<QcCodeSpec, RegistryError> {
    let z = def.n / BASE_COLS;
    let expected_rows = (def.n - def.k) / z;
    let base = parse_base_matrix(text, path, expected_rows)?;
    // Cross-check the declared dimensions against the file.
    if def.n % BASE_COLS != 0 || (def.n - def.k) % z != 0 || base.rows() != expected_rows {
        return Err(RegistryError::Dimensions {
            path: path.to_string(),
            expected: expected_rows,
            cols: BASE_COLS,
            found: base.rows(),
        });
    }
    Ok(QcCodeSpec {
        name: def.name.to_string(),
        n: def.n,
        k: def.k,
        z,
        rate: def.rate,
        catalog_rate: "2/3A",
        blocks_per_template: def.blocks,
        notes: def.notes,
        base,
        expanded: OnceLock::new(),
    })
}

fn parse_base_matrix(
    text: &str,
    path: &str,
    expected_rows: usize,
) -> Result<BaseMatrix, RegistryError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or("");
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || RegistryError::BadHeader {
        path: path.to_string(),
        line: header.to_string(),
    };
    if fields.len() != 3 || fields[2] != "z_base=96" {
        return Err(bad_header());
    }
    let rows: usize = fields[0].parse().map_err(|_| bad_header())?;
    let cols: usize = fields[1].parse().map_err(|_| bad_header())?;
    if cols != BASE_COLS {
        return Err(bad_header());
    }

    let mut entries = Vec::with_capacity(rows * cols);
    let mut n_rows = 0usize;
    for (r, line) in lines.enumerate() {
        n_rows += 1;
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != cols {
            return Err(RegistryError::Dimensions {
                path: path.to_string(),
                expected: expected_rows,
                cols,
                found: n_rows,
            });
        }
        for tok in row {
            let v: i64 = tok.parse().map_err(|_| RegistryError::BadEntry {
                path: path.to_string(),
                row: r,
                entry: tok.to_string(),
            })?;
            if v != BLANK as i64 && !(0..=95).contains(&v) {
                return Err(RegistryError::ShiftRange {
                    path: path.to_string(),
                    row: r,
                    value: v,
                });
            }
            entries.push(v as i32);
        }
    }
    if n_rows != rows || rows != expected_rows {
        return Err(RegistryError::Dimensions {
            path: path.to_string(),
            expected: expected_rows,
            cols,
            found: n_rows,
        });
    }
    BaseMatrix::new(rows, entries).map_err(|reason| RegistryError::Invalid {
        name: path.to_string(),
        reason,
    })
}
