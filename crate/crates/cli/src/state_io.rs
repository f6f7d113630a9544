//! State files: `{"dims": [d1, d2, ...], "matrix": [[[re, im], ...], ...]}`,
//! row-major, one `[re, im]` pair per entry.

use std::path::Path;

use qsep::tensor_core::{c64, CMat};
use qsep::{DimProfile, MultiState};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl StateFile {
    pub fn from_state(rho: &MultiState) -> Self {
        let m = rho.matrix();
        Self {
            dims: rho.profile().dims().to_vec(),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }

    /// Shape checks raise parse errors; state invariants raise invariant
    /// errors naming the failed check.
    pub fn into_state(self) -> Result<MultiState, CliError> {
        let profile = DimProfile::new(self.dims.clone()).map_err(|e| CliError::Parse(e.to_string()))?;
        let d = profile.total();
        if self.matrix.len() != d || self.matrix.iter().any(|row| row.len() != d) {
            return Err(CliError::Parse(format!(
                "matrix must be {d}x{d} for dims {:?}",
                self.dims
            )));
        }
        if self.matrix.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(CliError::Parse("matrix entries must be finite".into()));
        }
        let mat = CMat::from_fn(d, d, |i, j| {
            let [re, im] = self.matrix[i][j];
            c64(re, im)
        });
        MultiState::from_matrix(profile, mat).map_err(CliError::from)
    }
}

pub fn load_state(path: &Path) -> Result<MultiState, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    file.into_state()
}

/// File stem used as `state_id` in sweep rows.
pub fn state_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "state".into())
}
