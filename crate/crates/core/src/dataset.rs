//! Acceptance-count data model shared by every other module.
//!
//! The data is aggregate only: how many students of each school passed each
//! university's examination. There are no student-level records, and absence
//! of a (school, university) pair means a zero count.

use std::collections::HashMap;

use crate::grid::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HighSchool {
    pub id: String,
    pub student_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct University {
    pub id: String,
    pub entrant_count: u32,
    /// Ground-truth difficulty rank when known (simulation, or supplied with
    /// field data); 1 = most difficult.
    pub true_rank: Option<u32>,
}

/// Validated acceptance-count dataset. Immutable after construction, so it is
/// safe to share across concurrent estimation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schools: Vec<HighSchool>,
    universities: Vec<University>,
    acceptance: Grid<u32>,
}

impl Dataset {
    /// Validates and builds a dataset.
    ///
    /// Rejects dimension mismatches, duplicate ids, non-positive student or
    /// entrant counts, duplicate true ranks, and universities whose acceptance
    /// column sums to zero (their rate features would be all-zero, making any
    /// rank assignment arbitrary; all offending ids are reported at once).
    pub fn build(
        schools: Vec<HighSchool>,
        universities: Vec<University>,
        acceptance: Grid<u32>,
    ) -> Result<Self> {
        if acceptance.rows() != schools.len() || acceptance.cols() != universities.len() {
            return Err(Error::DimensionMismatch {
                rows: acceptance.rows(),
                cols: acceptance.cols(),
                schools: schools.len(),
                universities: universities.len(),
            });
        }

        let mut seen = HashMap::new();
        for s in &schools {
            if s.student_count == 0 {
                return Err(Error::ZeroCount {
                    kind: "school",
                    id: s.id.clone(),
                });
            }
            if seen.insert(s.id.clone(), ()).is_some() {
                return Err(Error::DuplicateId {
                    kind: "school",
                    id: s.id.clone(),
                });
            }
        }

        let mut seen = HashMap::new();
        let mut ranks: HashMap<u32, &str> = HashMap::new();
        for u in &universities {
            if u.entrant_count == 0 {
                return Err(Error::ZeroCount {
                    kind: "university",
                    id: u.id.clone(),
                });
            }
            if seen.insert(u.id.clone(), ()).is_some() {
                return Err(Error::DuplicateId {
                    kind: "university",
                    id: u.id.clone(),
                });
            }
            if let Some(rank) = u.true_rank {
                if let Some(first) = ranks.insert(rank, &u.id) {
                    return Err(Error::DuplicateTrueRank {
                        rank,
                        first: first.to_string(),
                        second: u.id.clone(),
                    });
                }
            }
        }

        let dead: Vec<String> = (0..universities.len())
            .filter(|&c| (0..schools.len()).all(|r| acceptance.at(r, c) == 0))
            .map(|c| universities[c].id.clone())
            .collect();
        if !dead.is_empty() {
            return Err(Error::ZeroAcceptance { ids: dead });
        }

        Ok(Self {
            schools,
            universities,
            acceptance,
        })
    }

    pub fn from_counts(
        schools: Vec<HighSchool>,
        universities: Vec<University>,
        counts: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let rows = counts.len();
        let grid = Grid::from_rows(counts).ok_or(Error::DimensionMismatch {
            rows,
            cols: 0,
            schools: schools.len(),
            universities: universities.len(),
        })?;
        Self::build(schools, universities, grid)
    }

    pub fn schools(&self) -> &[HighSchool] {
        &self.schools
    }

    pub fn universities(&self) -> &[University] {
        &self.universities
    }

    pub fn school_count(&self) -> usize {
        self.schools.len()
    }

    pub fn university_count(&self) -> usize {
        self.universities.len()
    }

    pub fn count(&self, school: usize, university: usize) -> u32 {
        self.acceptance.at(school, university)
    }

    pub fn acceptance(&self) -> &Grid<u32> {
        &self.acceptance
    }

    pub fn university_index(&self, id: &str) -> Option<usize> {
        self.universities.iter().position(|u| u.id == id)
    }

    pub fn school_index(&self, id: &str) -> Option<usize> {
        self.schools.iter().position(|s| s.id == id)
    }

    /// True ranks keyed by university id, when every university has one.
    pub fn truth_map(&self) -> Option<HashMap<String, u32>> {
        self.universities
            .iter()
            .map(|u| u.true_rank.map(|r| (u.id.clone(), r)))
            .collect()
    }

    /// Dataset restricted to a subset of school rows (given by index, any
    /// order preserved). Universities that lose every acceptance are dropped;
    /// their ids are returned alongside.
    pub fn restrict_schools(&self, keep: &[usize]) -> Result<(Dataset, Vec<String>)> {
        let schools: Vec<HighSchool> = keep.iter().map(|&r| self.schools[r].clone()).collect();
        let alive: Vec<usize> = (0..self.university_count())
            .filter(|&c| keep.iter().any(|&r| self.acceptance.at(r, c) > 0))
            .collect();
        let dropped: Vec<String> = (0..self.university_count())
            .filter(|c| !alive.contains(c))
            .map(|c| self.universities[c].id.clone())
            .collect();
        let universities: Vec<University> =
            alive.iter().map(|&c| self.universities[c].clone()).collect();
        let mut grid = Grid::new(schools.len(), universities.len());
        for (gi, &r) in keep.iter().enumerate() {
            for (gj, &c) in alive.iter().enumerate() {
                grid.set(gi, gj, self.acceptance.at(r, c));
            }
        }
        Ok((Dataset::build(schools, universities, grid)?, dropped))
    }

    /// Dataset without one university column.
    pub fn drop_university(&self, index: usize) -> Result<Dataset> {
        let universities: Vec<University> = self
            .universities
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != index)
            .map(|(_, u)| u.clone())
            .collect();
        let mut grid = Grid::new(self.school_count(), universities.len());
        for r in 0..self.school_count() {
            let mut gj = 0;
            for c in 0..self.university_count() {
                if c != index {
                    grid.set(r, gj, self.acceptance.at(r, c));
                    gj += 1;
                }
            }
        }
        Dataset::build(self.schools.clone(), universities, grid)
    }
}

/// A difficulty ranking: most difficult first. `score` carries the averaged
/// temporary rank when the ranking came out of the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub entries: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub university_id: String,
    pub rank: u32,
    pub score: Option<f64>,
}

impl Ranking {
    pub fn rank_of(&self, id: &str) -> Option<u32> {
        self.entries
            .iter()
            .find(|e| e.university_id == id)
            .map(|e| e.rank)
    }
}
