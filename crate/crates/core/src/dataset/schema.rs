//! Column names and value ranges of the TLC feature table.

/// Eluent volume fractions.
pub const SOLVENT_COLUMNS: [&str; 5] = ["Hex", "EA", "DCM", "MeOH", "Et2O"];

/// Functional-group distribution descriptors.
pub const DISTRIBUTION_COLUMNS: [&str; 3] = ["NBen", "MSD", "DM"];

/// Functional-group counts.
pub const FG_COLUMNS: [&str; 16] = [
    "CtPhenol",
    "CtOH",
    "CtAldehyde",
    "CtCO2H",
    "CtRCO2R",
    "CtR2CO",
    "CtROR",
    "CtCN",
    "CtNH2",
    "CtNO2",
    "CtAmide",
    "CtMe",
    "CtF",
    "CtCl",
    "CtBr",
    "CtI",
];

pub const TARGET_COLUMN: &str = "Rf";

/// Optional free-text compound identifier.
pub const ID_COLUMN: &str = "compound";

/// Alternative spellings accepted in CSV headers and equation files,
/// mapped to the canonical column name.
pub const ALIASES: [(&str, &str); 8] = [
    ("CtAmides", "CtAmide"),
    ("CtRNH2", "CtNH2"),
    ("CtMethyl", "CtMe"),
    ("CtR2C=O", "CtR2CO"),
    ("Et₂O", "Et2O"),
    ("RF", "Rf"),
    ("Compound", "compound"),
    ("SMILES", "compound"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// Volume fraction in [0, 1].
    Fraction,
    /// Nonnegative integer count.
    Count,
    /// Integer code 0..=12.
    SkeletonCode,
    /// Nonnegative real (dipole moment, Debye).
    NonNegative,
    /// Observed retardation factor in [0, 1].
    Target,
}

impl ColumnKind {
    pub fn check(self, v: f64) -> Result<(), &'static str> {
        if !v.is_finite() {
            return Err("value is not finite");
        }
        let ok = match self {
            ColumnKind::Fraction | ColumnKind::Target => (0.0..=1.0).contains(&v),
            ColumnKind::Count => v >= 0.0 && v.fract() == 0.0,
            ColumnKind::SkeletonCode => (0.0..=12.0).contains(&v) && v.fract() == 0.0,
            ColumnKind::NonNegative => v >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(match self {
                ColumnKind::Fraction => "expected a volume fraction in [0, 1]",
                ColumnKind::Target => "expected Rf in [0, 1]",
                ColumnKind::Count => "expected a nonnegative integer count",
                ColumnKind::SkeletonCode => "expected an integer skeleton code in 0..=12",
                ColumnKind::NonNegative => "expected a nonnegative value",
            })
        }
    }
}

/// The 24 input columns plus the target, in canonical order.
pub fn feature_columns() -> impl Iterator<Item = &'static str> {
    SOLVENT_COLUMNS
        .into_iter()
        .chain(DISTRIBUTION_COLUMNS)
        .chain(FG_COLUMNS)
}

pub fn schema_columns() -> impl Iterator<Item = &'static str> {
    feature_columns().chain(std::iter::once(TARGET_COLUMN))
}

pub fn column_kind(name: &str) -> Option<ColumnKind> {
    if SOLVENT_COLUMNS.contains(&name) {
        Some(ColumnKind::Fraction)
    } else if name == "NBen" || FG_COLUMNS.contains(&name) {
        Some(ColumnKind::Count)
    } else if name == "MSD" {
        Some(ColumnKind::SkeletonCode)
    } else if name == "DM" {
        Some(ColumnKind::NonNegative)
    } else if name == TARGET_COLUMN {
        Some(ColumnKind::Target)
    } else {
        None
    }
}

/// Maps an alias to its canonical name; canonical names map to themselves.
pub fn canonical_name(name: &str) -> &str {
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == name)
        .map(|(_, c)| *c)
        .unwrap_or(name)
}
