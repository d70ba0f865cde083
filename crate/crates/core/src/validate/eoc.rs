//! L1 errors against exact solutions and experimental orders of convergence.

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::MeshSnapshot;
use crate::num::{Real, Vec3};
use crate::solver::{neumaier_sum, CellState};

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EocRecord<T> {
    pub elements: usize,
    pub h_bar: T,
    pub l1_error: T,
    /// Absent on the first row.
    pub eoc: Option<T>,
}

impl<T: Real> EocRecord<T> {
    /// EOC rounded to two decimals, empty on the first row.
    pub fn eoc_display(&self) -> String {
        self.eoc.map(|e| format!("{:.2}", e.as_f64())).unwrap_or_default()
    }
}

impl<T: Real> fmt::Display for EocRecord<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:>9} {:>10.5} {:>12.5e} {:>6}",
            self.elements,
            self.h_bar.as_f64(),
            self.l1_error.as_f64(),
            self.eoc.map(|e| format!("{:.2}", e.as_f64())).unwrap_or_else(|| "---".into())
        )
    }
}

/// `ln(E_{i-1} / E_i) / ln(h_{i-1} / h_i)`.
pub fn eoc<T: Real>(coarse: (T, T), fine: (T, T)) -> T {
    (coarse.1 / fine.1).ln() / (coarse.0 / fine.0).ln()
}

/// Builds table rows from `(h̄, L1 error)` pairs and element counts.
pub fn eoc_table<T: Real>(pairs: &[(T, T)], elements: &[usize]) -> Result<Vec<EocRecord<T>>> {
    if pairs.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 rows, got {}", pairs.len())));
    }
    if elements.len() != pairs.len() {
        return Err(Error::Domain(format!(
            "{} element counts for {} rows",
            elements.len(),
            pairs.len()
        )));
    }
    if let Some(&(h, e)) = pairs.iter().find(|&&(h, e)| !(h > T::zero()) || !(e > T::zero())) {
        return Err(Error::Domain(format!("non-positive entry h = {h}, error = {e}")));
    }
    Ok(pairs
        .iter()
        .zip(elements)
        .enumerate()
        .map(|(i, (&(h_bar, l1_error), &elements))| EocRecord {
            elements,
            h_bar,
            l1_error,
            eoc: (i > 0).then(|| eoc(pairs[i - 1], (h_bar, l1_error))),
        })
        .collect())
}

/// `Σ_j V_j |u_j - exact(lift(b_j), t)|` with `b_j` the flat barycenter.
pub fn l1_error<T: Real>(
    state: &CellState<T>,
    snapshot: &MeshSnapshot<T>,
    exact: &dyn Fn(Vec3<T>, T) -> T,
    lift: &dyn Fn(Vec3<T>, T) -> Vec3<T>,
) -> T {
    let t = snapshot.time;
    neumaier_sum(
        state
            .values
            .iter()
            .zip(&snapshot.barycenter)
            .zip(&snapshot.cell_measure)
            .map(|((&u, &b), &v)| v * (u - exact(lift(b, t), t)).abs()),
    )
}
