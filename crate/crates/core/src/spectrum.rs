use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Steklov,
    BoundaryLaplacian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub value: f64,
    pub multiplicity: usize,
    /// Spherical-harmonic degree for ball spectra; position in the sorted
    /// list for discrete spectra.
    pub mode_degree: usize,
}

/// Sorted eigenvalues with multiplicities. Index `j` of the flattened view
/// counts eigenvalues with multiplicity starting from `j = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    kind: SpectrumKind,
    entries: Vec<SpectrumEntry>,
}

impl SpectrumTable {
    pub fn new(kind: SpectrumKind, entries: Vec<SpectrumEntry>) -> Result<Self> {
        let table = Self { kind, entries };
        table.validate()?;
        Ok(table)
    }

    /// Builds a table from sorted values, one entry per value.
    pub fn from_sorted_values(kind: SpectrumKind, values: &[f64]) -> Result<Self> {
        let entries = values
            .iter()
            .enumerate()
            .map(|(j, &value)| SpectrumEntry {
                value,
                multiplicity: 1,
                mode_degree: j,
            })
            .collect();
        Self::new(kind, entries)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .entries
            .first()
            .ok_or_else(|| Error::BadSpectrum("empty table".into()))?;
        if first.value != 0.0 || first.multiplicity != 1 {
            return Err(Error::BadSpectrum(format!(
                "entry 0 must be the simple eigenvalue 0, got {} (x{})",
                first.value, first.multiplicity
            )));
        }
        for w in self.entries.windows(2) {
            if !(w[1].value >= w[0].value) {
                return Err(Error::BadSpectrum(format!(
                    "values not nondecreasing: {} then {}",
                    w[0].value, w[1].value
                )));
            }
        }
        if let Some(e) = self.entries.iter().find(|e| e.multiplicity == 0) {
            return Err(Error::BadSpectrum(format!(
                "zero multiplicity at value {}",
                e.value
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    /// Number of eigenvalues counted with multiplicity.
    pub fn flat_len(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// `σ_j` or `λ_j`.
    pub fn value(&self, j: usize) -> Option<f64> {
        self.entry_at(j).map(|e| e.value)
    }

    /// The entry that flattened index `j` belongs to.
    pub fn entry_at(&self, j: usize) -> Option<&SpectrumEntry> {
        let mut seen = 0;
        for e in &self.entries {
            seen += e.multiplicity;
            if j < seen {
                return Some(e);
            }
        }
        None
    }

    pub fn flattened(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
            .collect()
    }

    /// Flattened `(j, entry)` pairs.
    pub fn iter_flat(&self) -> impl Iterator<Item = (usize, &SpectrumEntry)> + '_ {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e, e.multiplicity))
            .enumerate()
    }
}
