use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VarTableError {
    #[error("duplicate variable name `{0}`")]
    Duplicate(String),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
}

/// Ordered variable names; index `i` names column `i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarTable {
    pub fn new<I, S>(names: I) -> Result<Self, VarTableError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = VarTable::default();
        for name in names {
            table.push(name)?;
        }
        Ok(table)
    }

    /// Names `x0 .. x{n-1}`.
    pub fn numbered(n: usize) -> Self {
        VarTable::new((0..n).map(|i| format!("x{i}"))).expect("numbered names are unique")
    }

    pub fn push(&mut self, name: impl Into<String>) -> Result<usize, VarTableError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(VarTableError::InvalidName(name));
        }
        if self.index.contains_key(&name) {
            return Err(VarTableError::Duplicate(name));
        }
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        Ok(i)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`, excluding the function names.
pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && super::UnaryOp::from_name(s).is_none()
        && s != "sigmoid"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_contiguous() {
        let t = VarTable::new(["Hex", "EA", "DCM"]).unwrap();
        assert_eq!(t.get("Hex"), Some(0));
        assert_eq!(t.get("DCM"), Some(2));
        assert_eq!(t.get("MeOH"), None);
        assert_eq!(t.name(1), "EA");
    }

    #[test]
    fn rejects_duplicates_and_bad_names() {
        assert_eq!(
            VarTable::new(["a", "a"]).unwrap_err(),
            VarTableError::Duplicate("a".into())
        );
        assert!(matches!(
            VarTable::new(["1a"]),
            Err(VarTableError::InvalidName(_))
        ));
        assert!(matches!(
            VarTable::new(["exp"]),
            Err(VarTableError::InvalidName(_))
        ));
    }
}
