use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenpairs, EigenOptions};
use crate::mesh::{cotangent_laplacian, obj, TriMesh};

/// Low-frequency eigenbasis of a canonical mesh's cotangent Laplacian.
#[derive(Debug, Clone)]
pub struct GhdBasis {
    canonical: TriMesh,
    /// `N x n`, unit-norm orthogonal columns.
    modes: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

/// The `n` lowest-frequency modes of the canonical mesh, ascending.
pub fn compute_basis(canonical: &TriMesh, n: usize) -> Result<GhdBasis> {
    compute_basis_with(canonical, n, &EigenOptions::default())
}

pub fn compute_basis_with(canonical: &TriMesh, n: usize, opts: &EigenOptions) -> Result<GhdBasis> {
    if n > canonical.num_vertices() {
        return Err(Error::Invalid(format!(
            "mode count {n} exceeds vertex count {}",
            canonical.num_vertices()
        )));
    }
    let lap = cotangent_laplacian(canonical)?;
    let pairs = smallest_eigenpairs(lap.csr(), n, opts)?;
    Ok(GhdBasis {
        canonical: canonical.clone(),
        modes: pairs.vectors,
        eigenvalues: pairs.values,
    })
}

#[derive(Serialize, Deserialize)]
struct BasisHeader {
    #[serde(rename = "N")]
    vertices: usize,
    n: usize,
    checksum: String,
}

/// SHA-256 of the canonical mesh's OBJ serialization.
pub fn mesh_checksum(mesh: &TriMesh) -> String {
    hex::encode(Sha256::digest(obj::to_obj_string(mesh).as_bytes()))
}

impl GhdBasis {
    pub fn from_parts(canonical: TriMesh, modes: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        if modes.nrows() != canonical.num_vertices() || modes.ncols() != eigenvalues.len() {
            return Err(Error::Shape(format!(
                "modes {}x{} vs mesh {} / {} eigenvalues",
                modes.nrows(),
                modes.ncols(),
                canonical.num_vertices(),
                eigenvalues.len()
            )));
        }
        Ok(GhdBasis {
            canonical,
            modes,
            eigenvalues,
        })
    }

    pub fn canonical(&self) -> &TriMesh {
        &self.canonical
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.modes.nrows()
    }

    pub fn mode(&self, i: usize) -> &[f64] {
        let n = self.modes.nrows();
        &self.modes.as_slice()[i * n..(i + 1) * n]
    }

    /// The first `k` modes as a new basis.
    pub fn truncated(&self, k: usize) -> Result<GhdBasis> {
        if k == 0 || k > self.mode_count() {
            return Err(Error::OutOfRange {
                index: k,
                len: self.mode_count(),
            });
        }
        Ok(GhdBasis {
            canonical: self.canonical.clone(),
            modes: self.modes.columns(0, k).into_owned(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
        })
    }

    /// Binary cache: JSON header line, little-endian f64 eigenvalues, then
    /// the column-major mode matrix.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = BasisHeader {
            vertices: self.num_vertices(),
            n: self.mode_count(),
            checksum: mesh_checksum(&self.canonical),
        };
        let io = |e| Error::io("<basis stream>", e);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(io)?;
        let mut buf = Vec::with_capacity(8 * (self.mode_count() * (1 + self.num_vertices())));
        for v in &self.eigenvalues {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.modes.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(io)
    }

    pub fn read_from(r: impl Read, canonical: &TriMesh) -> Result<GhdBasis> {
        let io = |e| Error::io("<basis stream>", e);
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line).map_err(io)?;
        let header: BasisHeader = serde_json::from_str(line.trim_end())?;
        if header.vertices != canonical.num_vertices() || header.checksum != mesh_checksum(canonical) {
            return Err(Error::Invalid("basis cache does not match the canonical mesh".into()));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(io)?;
        let need = 8 * header.n * (1 + header.vertices);
        if rest.len() != need {
            return Err(Error::Shape(format!("basis payload {} bytes, expected {need}", rest.len())));
        }
        let vals: Vec<f64> = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (eig, modes) = vals.split_at(header.n);
        GhdBasis::from_parts(
            canonical.clone(),
            DMatrix::from_column_slice(header.vertices, header.n, modes),
            eig.to_vec(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, canonical: &TriMesh) -> Result<GhdBasis> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        GhdBasis::read_from(f, canonical)
    }

    /// Largest `||L u_i - l_i u_i||` over the modes.
    pub fn max_residual(&self) -> Result<f64> {
        let lap = cotangent_laplacian(&self.canonical)?;
        let mut worst = 0.0f64;
        for i in 0..self.mode_count() {
            let u = self.mode(i);
            let lu = lap.matvec(u);
            let r: f64 = lu
                .iter()
                .zip(u)
                .map(|(a, b)| (a - self.eigenvalues[i] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// Largest deviation of `U^T U` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.modes.transpose() * &self.modes;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).abs());
            }
        }
        worst
    }
}
