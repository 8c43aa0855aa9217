//! Converts raw acceptance counts into the rate matrix the estimator consumes.
//!
//! Step 1 divides each count by the school's student total. Step 2 has two
//! readings: dividing by the number of universities (`Literal`), which scales
//! everything by one constant and cannot change any ordering, or normalizing
//! each university column to unit total (`ColumnTotal`), which actually
//! accounts for acceptance-volume differences between universities.
//! `ColumnTotal` is the default; `Literal` is kept for strict fidelity.

use crate::dataset::Dataset;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StandardizeMode {
    Literal,
    #[default]
    ColumnTotal,
}

impl StandardizeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StandardizeMode::Literal => "literal",
            StandardizeMode::ColumnTotal => "column_total",
        }
    }
}

impl std::str::FromStr for StandardizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(StandardizeMode::Literal),
            "column_total" | "column-total" => Ok(StandardizeMode::ColumnTotal),
            other => Err(format!(
                "unknown standardize mode {other:?} (expected literal or column_total)"
            )),
        }
    }
}

/// School-by-university acceptance rates after both standardizing steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedMatrix {
    grid: Grid<f64>,
    mode: StandardizeMode,
}

impl StandardizedMatrix {
    pub fn mode(&self) -> StandardizeMode {
        self.mode
    }

    pub fn school_count(&self) -> usize {
        self.grid.rows()
    }

    pub fn university_count(&self) -> usize {
        self.grid.cols()
    }

    #[inline]
    pub fn rate(&self, school: usize, university: usize) -> f64 {
        self.grid.at(school, university)
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    #[cfg(test)]
    pub(crate) fn scaled(&self, lambda: f64) -> StandardizedMatrix {
        let rows = self
            .grid
            .iter_rows()
            .map(|r| r.iter().map(|v| v * lambda).collect())
            .collect();
        StandardizedMatrix {
            grid: Grid::from_rows(rows).unwrap(),
            mode: self.mode,
        }
    }
}

/// Rates above 1 are possible in field data (a student passing several exams
/// is counted once per exam) and pass through unclamped.
pub fn standardize(dataset: &Dataset, mode: StandardizeMode) -> StandardizedMatrix {
    let rows = dataset.school_count();
    let cols = dataset.university_count();
    let mut grid = Grid::new(rows, cols);
    for r in 0..rows {
        let students = f64::from(dataset.schools()[r].student_count);
        for c in 0..cols {
            grid.set(r, c, f64::from(dataset.count(r, c)) / students);
        }
    }
    match mode {
        StandardizeMode::Literal => {
            let scale = 1.0 / cols as f64;
            for r in 0..rows {
                for c in 0..cols {
                    grid.set(r, c, grid.at(r, c) * scale);
                }
            }
        }
        StandardizeMode::ColumnTotal => {
            for c in 0..cols {
                let total: f64 = (0..rows).map(|r| grid.at(r, c)).sum();
                // zero-acceptance columns are rejected at dataset build
                for r in 0..rows {
                    grid.set(r, c, grid.at(r, c) / total);
                }
            }
        }
    }
    StandardizedMatrix { grid, mode }
}
