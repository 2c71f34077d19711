//! The unipotent `u(x)`, the diagonal flow `g_t`, and general matrices acting on `∧^ℓ R^{d+1}`.

use nalgebra::DMatrix;

use super::vector::{basis_index, exterior_basis, ExteriorVector};
use crate::error::{invalid, Result};

/// `u(x) = [[1, x], [0, I]]`: fixes `e_0`, sends `e_i` to `e_i + x_i e_0`.
pub fn u_matrix(x: &[f64]) -> DMatrix<f64> {
    let n = x.len() + 1;
    let mut m = DMatrix::identity(n, n);
    for (i, xi) in x.iter().enumerate() {
        m[(0, i + 1)] = *xi;
    }
    m
}

/// `g_t = diag(t^{−d/(d+1)}, t^{1/(d+1)}, …)`.
pub fn g_matrix(t: f64, d: usize) -> DMatrix<f64> {
    let n = d + 1;
    let mut m = DMatrix::identity(n, n);
    m[(0, 0)] = t.powf(-(d as f64) / n as f64);
    let c = t.powf(1.0 / n as f64);
    for i in 1..n {
        m[(i, i)] = c;
    }
    m
}

/// Weight `w(I)` with `g_t e_I = t^{w(I)} e_I`.
pub fn diagonal_weight(set: &[usize], d: usize) -> f64 {
    let n = (d + 1) as f64;
    set.iter().map(|&i| if i == 0 { -(d as f64) / n } else { 1.0 / n }).sum()
}

/// `u(x) v` by the coordinate formula: for `I ∌ 0` and `i ∈ I` at position `p`, the term
/// `(−1)^p x_i v_I` lands on `e_{(I∖{i})∪{0}}`.
pub fn apply_unipotent(x: &[f64], v: &ExteriorVector) -> Result<ExteriorVector> {
    let n = v.ambient();
    if x.len() + 1 != n {
        return Err(invalid(format!("x has length {}, expected {}", x.len(), n - 1)));
    }
    let mut out = v.clone();
    for (k, set) in v.basis().iter().enumerate() {
        let c = v.coords()[k];
        if c == 0.0 || set[0] == 0 {
            continue;
        }
        for (p, &i) in set.iter().enumerate() {
            let mut target: Vec<usize> = Vec::with_capacity(set.len());
            target.push(0);
            target.extend(set.iter().filter(|&&j| j != i));
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            out.coords_mut()[basis_index(n, &target)] += sign * x[i - 1] * c;
        }
    }
    Ok(out)
}

/// `g_t v`.
pub fn apply_diagonal(t: f64, v: &ExteriorVector) -> Result<ExteriorVector> {
    if !(t > 0.0) {
        return Err(invalid(format!("t = {t} must be positive")));
    }
    let d = v.ambient() - 1;
    let lt = t.ln();
    let mut out = v.clone();
    for (k, set) in v.basis().iter().enumerate() {
        out.coords_mut()[k] *= (diagonal_weight(set, d) * lt).exp();
    }
    Ok(out)
}

/// Matrix of `∧^ℓ m` in the lexicographic basis: entry `(I, J)` is the minor `det m[I, J]`.
pub fn wedge_matrix(m: &DMatrix<f64>, ell: usize) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(invalid("matrix must be square"));
    }
    let basis = exterior_basis(n, ell)?;
    let k = basis.len();
    Ok(DMatrix::from_fn(k, k, |a, b| {
        let rows = &basis[a];
        let cols = &basis[b];
        DMatrix::from_fn(ell, ell, |i, j| m[(rows[i], cols[j])]).determinant()
    }))
}

/// `(∧^ℓ m) v` via minors.
pub fn wedge_action(m: &DMatrix<f64>, v: &ExteriorVector) -> Result<ExteriorVector> {
    if m.nrows() != v.ambient() {
        return Err(invalid("matrix size does not match the exterior vector"));
    }
    let w = wedge_matrix(m, v.level())?;
    let coords = &w * nalgebra::DVector::from_column_slice(v.coords());
    ExteriorVector::new(v.ambient(), v.level(), coords.iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &ExteriorVector, b: &ExteriorVector, tol: f64) -> bool {
        let scale = 1.0 + a.norm().max(b.norm());
        a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn unipotent_on_e1() {
        let v = ExteriorVector::monomial(3, &[1]).unwrap();
        let w = apply_unipotent(&[0.7, -2.0], &v).unwrap();
        assert_eq!(w.coords(), &[0.7, 1.0, 0.0]);
    }

    #[test]
    fn unipotent_fixes_top_form() {
        let v = ExteriorVector::monomial(4, &[0, 1, 2, 3]).unwrap();
        assert_eq!(apply_unipotent(&[1.0, 2.0, 3.0], &v).unwrap(), v);
    }

    #[test]
    fn unipotent_matches_minors_level_two() {
        let v = ExteriorVector::new(3, 2, vec![0.3, -1.2, 2.5]).unwrap();
        let x = [0.4, -1.7];
        let a = apply_unipotent(&x, &v).unwrap();
        let b = wedge_action(&u_matrix(&x), &v).unwrap();
        assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn diagonal_examples() {
        let t = 0.37;
        let e0 = ExteriorVector::monomial(2, &[0]).unwrap();
        let w = apply_diagonal(t, &e0).unwrap();
        assert!((w.coords()[0] - t.powf(-0.5)).abs() < 1e-15);
        let top = ExteriorVector::monomial(2, &[0, 1]).unwrap();
        assert!((apply_diagonal(t, &top).unwrap().coords()[0] - 1.0).abs() < 1e-15);
        assert!(apply_diagonal(0.0, &top).is_err());
    }

    #[test]
    fn diagonal_semigroup_law() {
        let v = ExteriorVector::new(4, 2, vec![1.0, -2.0, 0.5, 0.25, 3.0, -1.0]).unwrap();
        let (t, s) = (0.3, 2.7);
        let a = apply_diagonal(t, &apply_diagonal(s, &v).unwrap()).unwrap();
        let b = apply_diagonal(t * s, &v).unwrap();
        assert!(close(&a, &b, 1e-12));
        let c = wedge_action(&g_matrix(t, 3), &v).unwrap();
        assert!(close(&apply_diagonal(t, &v).unwrap(), &c, 1e-12));
    }
}
