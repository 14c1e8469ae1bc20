//! Levi-Civita connection and curvature of a coframe field via Cartan's
//! structure equations.
//!
//! Conventions: `de^i = -w^i_j ^ e^j`, `w_ij = -w_ji`, `nabla e_i = e_j w^j_i`,
//! and `W^i_j = dw^i_j + w^i_k ^ w^k_j`. The curvature operator pairs as
//! `<R(e_a^e_b), e_c^e_d> = W_ab(e_c, e_d)`, so `<R(X^Y), X^Y>` is the sectional
//! curvature of an orthonormal pair and the round unit sphere has `R = Id`.

use nalgebra::{Matrix3, Matrix4, Matrix6, SymmetricEigen, Vector3};

use crate::coframe::{CoframeField, Point};
use crate::error::{Error, Result};
use crate::fd::central_richardson;
use crate::forms::{pair_index, OperatorOnForms, PAIRS};

/// `|det e|` below this is treated as a singular coframe.
pub const SINGULAR_DET: f64 = 1e-10;

/// Default relative finite-difference step (fraction of each coordinate range).
pub const DEFAULT_FD_STEP: f64 = 5e-4;

/// Coframe, inverse frame and coframe partials at one point.
#[derive(Debug, Clone, Copy)]
pub struct FrameAt {
    pub e: Matrix4<f64>,
    /// `f[(mu, a)]`: coordinate components of the frame vector `e_a`.
    pub f: Matrix4<f64>,
    pub de: [Matrix4<f64>; 4],
}

impl FrameAt {
    pub fn new(cf: &CoframeField, x: &Point) -> Result<Self> {
        let jet = cf.jet(x);
        let det = jet.e.determinant();
        if !(det.abs() > SINGULAR_DET) {
            return Err(Error::SingularCoframe { point: *x, det });
        }
        let f = jet.e.try_inverse().ok_or(Error::SingularCoframe { point: *x, det })?;
        Ok(Self {
            e: jet.e,
            f,
            de: jet.de,
        })
    }

    /// Anholonomy coefficients `c[i][a][b] = de^i(e_a, e_b)`.
    pub fn anholonomy(&self) -> [[[f64; 4]; 4]; 4] {
        let gf: [Matrix4<f64>; 4] = std::array::from_fn(|nu| self.de[nu] * self.f);
        let mut c = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let mut acc = 0.0;
                    for nu in 0..4 {
                        acc += self.f[(nu, a)] * gf[nu][(i, b)] - self.f[(nu, b)] * gf[nu][(i, a)];
                    }
                    c[i][a][b] = acc;
                }
            }
        }
        c
    }
}

/// Connection coefficients `w_ij = sum_k coeffs[i][j][k] e^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionAtPoint {
    pub coeffs: [[[f64; 4]; 4]; 4],
}

impl ConnectionAtPoint {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeffs[i][j][k]
    }

    /// Coordinate components `w_ij(d/dx^mu)` given the coframe matrix.
    pub fn coordinate_components(&self, e: &Matrix4<f64>) -> [[[f64; 4]; 4]; 4] {
        let mut out = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for mu in 0..4 {
                    out[i][j][mu] = (0..4).map(|k| self.coeffs[i][j][k] * e[(k, mu)]).sum();
                }
            }
        }
        out
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.iter().flatten().flatten().all(|c| c.abs() <= tol)
    }
}

/// Torsion-free metric connection in closed form from the anholonomy
/// coefficients: `w_ij,k = (c_ijk + c_jki - c_kij) / 2`.
pub fn connection_from_frame(frame: &FrameAt) -> ConnectionAtPoint {
    let c = frame.anholonomy();
    let mut coeffs = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in 0..4 {
                let w = 0.5 * (c[i][j][k] + c[j][k][i] - c[k][i][j]);
                coeffs[i][j][k] = w;
                coeffs[j][i][k] = -w;
            }
        }
    }
    ConnectionAtPoint { coeffs }
}

pub fn connection_at(cf: &CoframeField, x: &Point) -> Result<ConnectionAtPoint> {
    Ok(connection_from_frame(&FrameAt::new(cf, x)?))
}

/// Max-norm of `de^i + w^i_j ^ e^j` over all frame components. The
/// connection comes from the analytic coframe partials; `de` is taken
/// independently by finite differences of the coframe, so the residual also
/// catches catalog partials that disagree with their coframe.
pub fn structure_residual(cf: &CoframeField, x: &Point) -> Result<f64> {
    let analytic = FrameAt::new(cf, x)?;
    let w = connection_from_frame(&analytic);
    let steps = cf.chart().steps(DEFAULT_FD_STEP);
    cf.chart().check_stencil(x, &steps)?;
    let de = std::array::from_fn(|nu| {
        let d = central_richardson(
            |h| {
                let mut y = *x;
                y[nu] += h;
                let e = cf.coeff(&y);
                std::array::from_fn::<f64, 16, _>(|k| e[k])
            },
            steps[nu],
        );
        Matrix4::from_column_slice(&d.value)
    });
    let c = FrameAt { de, ..analytic }.anholonomy();
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                // (w_ij ^ e^j)(e_a, e_b) = w_ib,a - w_ia,b
                let r = c[i][a][b] + w.get(i, b, a) - w.get(i, a, b);
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// Full curvature data at one chart point, in orthonormal frame components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCurvature {
    /// Curvature operator in the `(s+, s-)` block basis.
    pub r: OperatorOnForms,
    pub ricci: Matrix4<f64>,
    pub s: f64,
    pub wplus: Matrix3<f64>,
    pub wminus: Matrix3<f64>,
    /// Trace-free Ricci block mapping `L2-` to `L2+`.
    pub rr: Matrix3<f64>,
    /// Frobenius asymmetry of the assembled operator before symmetrisation.
    pub asymmetry: f64,
    /// Estimated finite-difference error of the operator entries.
    pub fd_error: f64,
}

impl PointCurvature {
    /// Decompose a curvature operator given in the storage basis.
    pub fn from_storage_operator(m: &Matrix6<f64>, fd_error: f64) -> Self {
        let raw = OperatorOnForms::from_storage_basis(m);
        let asymmetry = raw.asymmetry();
        let r = raw.symmetrized();
        let rm = riemann_from_storage(&r.to_storage_basis());
        let ricci = Matrix4::from_fn(|a, c| (0..4).map(|b| rm[a][b][c][b]).sum());
        let s = ricci.trace();
        let id = Matrix3::identity() * (s / 12.0);
        Self {
            r,
            ricci,
            s,
            wplus: r.plus_plus() - id,
            wminus: r.minus_minus() - id,
            rr: r.plus_minus(),
            asymmetry,
            fd_error,
        }
    }

    /// Four-index tensor `Rm(e_a, e_b, e_c, e_d) = <R(e_a^e_b), e_c^e_d>`.
    pub fn riemann(&self) -> [[[[f64; 4]; 4]; 4]; 4] {
        riemann_from_storage(&self.r.to_storage_basis())
    }

    /// Reassemble the block matrix from its irreducible pieces.
    pub fn reassembled(&self) -> OperatorOnForms {
        let id = Matrix3::identity() * (self.s / 12.0);
        OperatorOnForms::from_blocks(&(self.wplus + id), &self.rr, &(self.wminus + id))
    }

    /// Scalar curvature as twice the trace of the operator.
    pub fn scalar_from_operator(&self) -> f64 {
        2.0 * self.r.0.trace()
    }

    /// Ascending eigenvalues of W+.
    pub fn wplus_spectrum(&self) -> Vector3<f64> {
        sorted_eigen(&self.wplus).0
    }

    pub fn wminus_spectrum(&self) -> Vector3<f64> {
        sorted_eigen(&self.wminus).0
    }
}

/// Eigen-decomposition of a symmetric 3x3 with eigenvalues ascending and
/// eigenvectors as matching columns.
pub fn sorted_eigen(m: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let eig = SymmetricEigen::new(*m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Vector3::from_fn(|i, _| eig.eigenvalues[idx[i]]);
    let vecs = Matrix3::from_fn(|r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

fn riemann_from_storage(m: &Matrix6<f64>) -> [[[[f64; 4]; 4]; 4]; 4] {
    let mut out = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let Some((p, sp)) = pair_index(a, b) else {
                continue;
            };
            for c in 0..4 {
                for d in 0..4 {
                    if let Some((q, sq)) = pair_index(c, d) {
                        out[a][b][c][d] = sp * sq * m[(p, q)];
                    }
                }
            }
        }
    }
    out
}

/// Coordinate components of the six independent connection forms, flattened
/// as `[pair * 4 + mu]`.
fn coordinate_connection(cf: &CoframeField, x: &Point) -> Result<[f64; 24]> {
    let frame = FrameAt::new(cf, x)?;
    let w = connection_from_frame(&frame).coordinate_components(&frame.e);
    let mut out = [0.0; 24];
    for (p, &(i, j)) in PAIRS.iter().enumerate() {
        for mu in 0..4 {
            out[p * 4 + mu] = w[i][j][mu];
        }
    }
    Ok(out)
}

/// Curvature at `x`, with `dw` taken by Richardson-extrapolated central
/// differences of the connection. `fd_step` is relative to each coordinate
/// range.
pub fn curvature_at(cf: &CoframeField, x: &Point, fd_step: f64) -> Result<PointCurvature> {
    if !(fd_step > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "fd_step",
            value: fd_step,
            reason: "must be positive",
        });
    }
    let chart = cf.chart();
    let steps = chart.steps(fd_step);
    chart.check_stencil(x, &steps)?;

    let frame = FrameAt::new(cf, x)?;
    let conn = connection_from_frame(&frame);

    // Partials d_nu w_p,mu, propagating failures from the stencil points.
    let mut dw = [[0.0; 24]; 4];
    let mut dw_err = [[0.0; 24]; 4];
    for nu in 0..4 {
        let mut failure = None;
        let d = central_richardson(
            |t| {
                let mut y = *x;
                y[nu] += t;
                match coordinate_connection(cf, &y) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        [0.0; 24]
                    }
                }
            },
            steps[nu],
        );
        if let Some(e) = failure {
            return Err(e);
        }
        dw[nu] = d.value;
        dw_err[nu] = d.error;
    }

    let f = &frame.f;
    let mut m = Matrix6::zeros();
    let mut err: f64 = 0.0;
    for (p, &(i, j)) in PAIRS.iter().enumerate() {
        for (q, &(a, b)) in PAIRS.iter().enumerate() {
            let mut val = 0.0;
            let mut e = 0.0;
            for nu in 0..4 {
                for mu in 0..4 {
                    let weight = f[(nu, a)] * f[(mu, b)] - f[(mu, a)] * f[(nu, b)];
                    val += weight * dw[nu][p * 4 + mu];
                    e += weight.abs() * dw_err[nu][p * 4 + mu];
                }
            }
            for k in 0..4 {
                val += conn.get(i, k, a) * conn.get(k, j, b) - conn.get(i, k, b) * conn.get(k, j, a);
            }
            m[(p, q)] = val;
            err = err.max(e);
        }
    }
    Ok(PointCurvature::from_storage_operator(&m, err))
}

/// `max(|rr|_F, |ricci - (s/4) Id|_F)`.
pub fn einstein_residual(pc: &PointCurvature) -> f64 {
    let trace_free = pc.ricci - Matrix4::identity() * (pc.s / 4.0);
    pc.rr.norm().max(trace_free.norm())
}
