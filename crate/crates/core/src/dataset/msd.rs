//! Molecular skeleton descriptor: an integer code 0..=12 for the
//! substitution pattern of a six-membered aromatic ring.
//!
//! | code | pattern |
//! |------|---------|
//! | 0 | no ring |
//! | 1 | mono-substituted |
//! | 2, 3, 4 | di: ortho, meta, para |
//! | 5, 6, 7 | tri: 1,2,3 / 1,2,4 / 1,3,5 |
//! | 8, 9, 10 | tetra: 1,2,3,4 / 1,2,3,5 / 1,2,4,5 |
//! | 11 | penta |
//! | 12 | hexa |
//!
//! Patterns are compared up to the 12 symmetries of the hexagon. A ring with
//! no substituents has no code of its own; it is mapped to 1.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("ring position {0} outside 1..=6")]
    Position(u8),
    #[error("ring position {0} listed twice")]
    Repeated(u8),
    #[error("substituents given without a ring")]
    NoRing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubstitutionPattern {
    ring: bool,
    /// Bit `p - 1` set when position `p` carries a substituent.
    mask: u8,
}

impl SubstitutionPattern {
    pub fn no_ring() -> Self {
        SubstitutionPattern {
            ring: false,
            mask: 0,
        }
    }

    pub fn ring(positions: impl IntoIterator<Item = u8>) -> Result<Self, PatternError> {
        let mut mask = 0u8;
        for p in positions {
            if !(1..=6).contains(&p) {
                return Err(PatternError::Position(p));
            }
            let bit = 1 << (p - 1);
            if mask & bit != 0 {
                return Err(PatternError::Repeated(p));
            }
            mask |= bit;
        }
        Ok(SubstitutionPattern { ring: true, mask })
    }

    pub fn from_mask(ring: bool, mask: u8) -> Result<Self, PatternError> {
        if !ring && mask != 0 {
            return Err(PatternError::NoRing);
        }
        Ok(SubstitutionPattern {
            ring,
            mask: mask & 0x3f,
        })
    }

    pub fn has_ring(&self) -> bool {
        self.ring
    }

    pub fn positions(&self) -> Vec<u8> {
        (1..=6)
            .filter(|p| self.mask & (1 << (p - 1)) != 0)
            .collect()
    }

    pub fn mask(&self) -> u8 {
        self.mask
    }
}

/// Image of `mask` under rotation by `shift` steps, optionally preceded by
/// a reflection.
pub fn transform(mask: u8, shift: u8, reflect: bool) -> u8 {
    let mut out = 0u8;
    for p in 0..6u8 {
        if mask & (1 << p) != 0 {
            let q = if reflect {
                (shift + 6 - p) % 6
            } else {
                (p + shift) % 6
            };
            out |= 1 << q;
        }
    }
    out
}

fn canonical(mask: u8) -> u8 {
    (0..6u8)
        .flat_map(|s| [transform(mask, s, false), transform(mask, s, true)])
        .min()
        .expect("twelve images")
}

const CLASSES: [(u8, u8); 9] = [
    (0b000011, 2),
    (0b000101, 3),
    (0b001001, 4),
    (0b000111, 5),
    (0b001011, 6),
    (0b010101, 7),
    (0b001111, 8),
    (0b010111, 9),
    (0b011011, 10),
];

pub fn msd_value(p: &SubstitutionPattern) -> u8 {
    if !p.ring {
        return 0;
    }
    match p.mask.count_ones() {
        0 | 1 => 1,
        5 => 11,
        6 => 12,
        _ => {
            let c = canonical(p.mask);
            CLASSES
                .iter()
                .find(|(rep, _)| canonical(*rep) == c)
                .map(|(_, code)| *code)
                .expect("every 2-4 substituent pattern is one of the nine classes")
        }
    }
}
