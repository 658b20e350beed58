//! JSON encodings of POVMs and density matrices. Complex entries are
//! `[re, im]` pairs; matrices are flattened row-major.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::Povm;
use crate::tensor::{DensityMatrix, HermitianOperator, HilbertSpec, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub dims: Vec<usize>,
    pub elements: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<[f64; 2]>,
}

fn flatten(m: &DMatrix<C64>) -> Vec<[f64; 2]> {
    let n = m.nrows();
    (0..n * n).map(|i| {
        let z = m[(i / n, i % n)];
        [z.re, z.im]
    }).collect()
}

fn unflatten(spec: &HilbertSpec, entries: &[[f64; 2]]) -> Result<HermitianOperator> {
    let n = spec.total_dim();
    if entries.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "{} matrix entries for dimension {n}, expected {}",
            entries.len(),
            n * n
        )));
    }
    if entries.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix entries must be finite".into()));
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        let [re, im] = entries[i * n + j];
        C64::new(re, im)
    });
    HermitianOperator::new(spec.clone(), m)
}

impl PovmFile {
    pub fn from_povm(povm: &Povm) -> Self {
        Self {
            dims: povm.spec().dims().to_vec(),
            elements: povm.elements().iter().map(|e| flatten(e.matrix())).collect(),
            labels: povm.labels().map(|l| l.to_vec()),
        }
    }

    pub fn into_povm(self) -> Result<Povm> {
        let spec = HilbertSpec::new(self.dims)?;
        let elements = self.elements.iter().map(|e| unflatten(&spec, e)).collect::<Result<Vec<_>>>()?;
        Povm::new(elements, self.labels)
    }
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        Self { dims: rho.spec().dims().to_vec(), matrix: flatten(rho.op().matrix()) }
    }

    pub fn into_state(self) -> Result<DensityMatrix> {
        let spec = HilbertSpec::new(self.dims)?;
        DensityMatrix::new(unflatten(&spec, &self.matrix)?)
    }
}

pub fn povm_from_json(s: &str) -> Result<Povm> {
    serde_json::from_str::<PovmFile>(s)?.into_povm()
}

pub fn povm_to_json(povm: &Povm) -> Result<String> {
    Ok(serde_json::to_string_pretty(&PovmFile::from_povm(povm))?)
}

pub fn state_from_json(s: &str) -> Result<DensityMatrix> {
    serde_json::from_str::<StateFile>(s)?.into_state()
}

pub fn state_to_json(rho: &DensityMatrix) -> Result<String> {
    Ok(serde_json::to_string_pretty(&StateFile::from_state(rho))?)
}

pub fn read_povm(path: impl AsRef<Path>) -> Result<Povm> {
    povm_from_json(&fs::read_to_string(path)?)
}

pub fn write_povm(path: impl AsRef<Path>, povm: &Povm) -> Result<()> {
    fs::write(path, povm_to_json(povm)? + "\n")?;
    Ok(())
}

pub fn read_state(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    state_from_json(&fs::read_to_string(path)?)
}

pub fn write_state(path: impl AsRef<Path>, rho: &DensityMatrix) -> Result<()> {
    fs::write(path, state_to_json(rho)? + "\n")?;
    Ok(())
}
