use std::collections::HashMap;

use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// Columnar time series. Every column has the same length; vector signals
/// occupy one column per component named `<signal><robot>.<index>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl Trace {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::contract(format!("duplicate trace column `{n}`")));
            }
        }
        Ok(Self {
            columns: vec![Vec::new(); names.len()],
            names,
            index,
        })
    }

    /// Column name of component `j` of a per-robot vector signal.
    pub fn vector_name(signal: &str, robot: usize, j: usize) -> String {
        format!("{signal}{robot}.{j}")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::Dimension {
                expected: self.names.len(),
                got: row.len(),
            });
        }
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
        Ok(())
    }

    pub fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.index
            .get(name)
            .map(|&i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.columns[i]),
            None => Err(Error::MissingColumn(name.to_string())),
        }
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[k]).collect()
    }

    /// Number of components of a per-robot vector signal.
    pub fn signal_dim(&self, signal: &str, robot: usize) -> usize {
        (0..)
            .take_while(|j| self.has(&Self::vector_name(signal, robot, *j)))
            .count()
    }

    /// The columns of a per-robot vector signal.
    pub fn signal_columns(&self, signal: &str, robot: usize) -> Result<Vec<&[f64]>> {
        let dim = self.signal_dim(signal, robot);
        if dim == 0 {
            return Err(Error::MissingColumn(Self::vector_name(signal, robot, 0)));
        }
        (0..dim)
            .map(|j| self.column(&Self::vector_name(signal, robot, j)))
            .collect()
    }

    /// A per-robot vector signal as one vector per row.
    pub fn signal(&self, signal: &str, robot: usize) -> Result<Vec<JointVec>> {
        let cols = self.signal_columns(signal, robot)?;
        Ok((0..self.len())
            .map(|k| JointVec::from_iterator(cols.len(), cols.iter().map(|c| c[k])))
            .collect())
    }

    /// Value of a per-robot vector signal at row `k`.
    pub fn signal_at(&self, signal: &str, robot: usize, k: usize) -> Result<JointVec> {
        let cols = self.signal_columns(signal, robot)?;
        Ok(JointVec::from_iterator(cols.len(), cols.iter().map(|c| c[k])))
    }

    /// Drops rows from `len` on.
    pub fn truncate(&mut self, len: usize) {
        for c in &mut self.columns {
            c.truncate(len);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        let names = ["t", "q1.0", "q1.1", "q2.0"].map(String::from).to_vec();
        let mut tr = Trace::new(names).unwrap();
        tr.push_row(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        tr.push_row(&[0.1, 1.5, 2.5, 3.5]).unwrap();
        tr
    }

    #[test]
    fn columns_and_signals() {
        let tr = sample();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.column("t").unwrap(), &[0.0, 0.1]);
        assert_eq!(tr.signal_dim("q", 1), 2);
        assert_eq!(tr.signal_dim("q", 2), 1);
        assert_eq!(tr.signal_at("q", 1, 1).unwrap().as_slice(), &[1.5, 2.5]);
        assert!(matches!(tr.column("tau1_star.0"), Err(Error::MissingColumn(_))));
        assert!(tr.signal("z", 2).is_err());
    }

    #[test]
    fn rejects_bad_rows_and_duplicates() {
        let mut tr = sample();
        assert!(tr.push_row(&[1.0]).is_err());
        assert!(Trace::new(vec!["t".into(), "t".into()]).is_err());
    }
}
