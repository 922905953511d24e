use super::SeiError;
use crate::scalar::Scalar;

/// Ordered ordinal variables with their category counts. Category 1 is the
/// worst-off level and `levels` the best-off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalSchema {
    variables: Vec<(String, usize)>,
}

impl OrdinalSchema {
    pub fn new(variables: Vec<(String, usize)>) -> Result<Self, SeiError> {
        if variables.is_empty() {
            return Err(SeiError::InvalidSchema("no variables".into()));
        }
        if let Some((name, k)) = variables.iter().find(|(_, k)| *k < 2) {
            return Err(SeiError::InvalidSchema(format!("{name} has {k} levels, need at least 2")));
        }
        Ok(OrdinalSchema { variables })
    }

    /// The eleven household indicators in their canonical order, with the
    /// given level counts.
    pub fn census(levels: [usize; 11]) -> Result<Self, SeiError> {
        const NAMES: [&str; 11] = [
            "home_ownership",
            "materials_quality",
            "services_connection",
            "construction_quality",
            "overcrowding",
            "unsatisfied_basic_needs",
            "household_education",
            "unemployed_count",
            "domestic_services",
            "head_activity",
            "head_education",
        ];
        Self::new(NAMES.iter().zip(levels).map(|(n, k)| (n.to_string(), k)).collect())
    }

    pub fn variables(&self) -> &[(String, usize)] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// Encoded width: one column per level above the first.
    pub fn width(&self) -> usize {
        self.variables.iter().map(|(_, k)| k - 1).sum()
    }

    pub fn total_levels(&self) -> usize {
        self.variables.iter().map(|(_, k)| k).sum()
    }

    /// Column range of variable `i` in the encoded matrix.
    pub fn columns(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.variables[..i].iter().map(|(_, k)| k - 1).sum();
        start..start + self.variables[i].1 - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|(n, _)| n == name)
    }
}

/// Dense row-major 0/1 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermometerMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> ThermometerMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, SeiError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(SeiError::RowWidth { row: i, got: r.len(), expected: cols });
        }
        let n = rows.len();
        Ok(ThermometerMatrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Column `k - 2` of a variable's group is 1 exactly when the value is at
/// least `k`.
pub fn encode_thermometer<T: Scalar>(schema: &OrdinalSchema, rows: &[Vec<u32>]) -> Result<ThermometerMatrix<T>, SeiError> {
    let width = schema.width();
    let mut data = Vec::with_capacity(rows.len() * width);
    for (j, row) in rows.iter().enumerate() {
        if row.len() != schema.len() {
            return Err(SeiError::RowWidth { row: j, got: row.len(), expected: schema.len() });
        }
        for ((name, levels), &v) in schema.variables.iter().zip(row) {
            if v < 1 || v as usize > *levels {
                return Err(SeiError::OutOfRangeCategory { row: j, variable: name.clone(), value: v, levels: *levels });
            }
            data.extend((2..=*levels as u32).map(|k| if v >= k { T::one() } else { T::zero() }));
        }
    }
    Ok(ThermometerMatrix { rows: rows.len(), cols: width, data })
}
