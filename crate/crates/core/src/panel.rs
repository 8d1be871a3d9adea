use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row layout shared by every balanced panel: provinces outermost, years
/// innermost, so row `p * n_years + y` holds province `p` in year `y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelIndex {
    provinces: Vec<String>,
    first_year: i32,
    n_years: usize,
}

impl PanelIndex {
    pub fn new(provinces: Vec<String>, first_year: i32, n_years: usize) -> Result<Self> {
        if provinces.is_empty() || n_years == 0 {
            return Err(Error::EmptyPanel(
                "a panel needs at least one province and one year".into(),
            ));
        }
        let mut sorted = provinces.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("province identifiers must be unique".into()));
        }
        Ok(PanelIndex {
            provinces,
            first_year,
            n_years,
        })
    }

    pub fn provinces(&self) -> &[String] {
        &self.provinces
    }

    pub fn n_provinces(&self) -> usize {
        self.provinces.len()
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.n_years as i32).map(move |k| self.first_year + k)
    }

    pub fn n_rows(&self) -> usize {
        self.provinces.len() * self.n_years
    }

    pub fn row(&self, province: usize, year_offset: usize) -> usize {
        province * self.n_years + year_offset
    }

    /// `(province index, year offset)` of a row.
    pub fn cell(&self, row: usize) -> (usize, usize) {
        (row / self.n_years, row % self.n_years)
    }

    pub fn province_position(&self, id: &str) -> Option<usize> {
        self.provinces.iter().position(|p| p == id)
    }

    /// Index for a panel assembled from drawn province blocks. Duplicated
    /// draws get distinct labels so each block keeps its own fixed effect.
    pub fn resampled(&self, draws: &[usize]) -> PanelIndex {
        let provinces = draws
            .iter()
            .enumerate()
            .map(|(k, &p)| format!("{}#{k}", self.provinces[p]))
            .collect();
        PanelIndex {
            provinces,
            first_year: self.first_year,
            n_years: self.n_years,
        }
    }

    /// Row numbers, in order, of the panel built from `draws`.
    pub fn resampled_rows(&self, draws: &[usize]) -> Vec<usize> {
        draws
            .iter()
            .flat_map(|&p| (0..self.n_years).map(move |y| p * self.n_years + y))
            .collect()
    }
}
