//! Numeric evaluation of normal forms and of expression trees on a grid.

use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64;

use super::expr::{CoeffExpr, OpExpr};
use super::normal::{Factor, NormalForm};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::linalg::{self, CMat, ONE, ZERO};
use crate::operators::{difference_op, q_op, shift_op, Sign, DEFAULT_DENSE_CAP};

pub type Bindings = BTreeMap<String, Field>;

fn check_axis(grid: &GridSpec, axis: usize) -> Result<()> {
    if axis >= grid.dim() {
        return Err(Error::DimensionMismatch);
    }
    Ok(())
}

fn binding<'a>(bindings: &'a Bindings, grid: &GridSpec, name: &str) -> Result<&'a Field> {
    let f = bindings.get(name).ok_or_else(|| Error::UnboundFunction(name.to_string()))?;
    if f.grid() != grid {
        return Err(Error::DimensionMismatch);
    }
    Ok(f)
}

fn factor_field(grid: &GridSpec, bindings: &Bindings, factor: &Factor) -> Result<Field> {
    match factor {
        Factor::Coord(k) => {
            check_axis(grid, *k)?;
            Ok(Field::coordinate(grid, *k))
        }
        Factor::Fun { name, back, diffs } => {
            let mut f = binding(bindings, grid, name)?.clone();
            for axis in 0..back.len() {
                if diffs[axis] + back[axis] == 0 {
                    continue;
                }
                check_axis(grid, axis)?;
                for _ in 0..diffs[axis] {
                    f = f.difference(axis);
                }
                f = f.shifted(axis, -(back[axis] as isize) * grid.steps() as isize);
            }
            Ok(f)
        }
    }
}

/// Dense matrix of a normal form.
pub fn numeric_eval(nf: &NormalForm, grid: &GridSpec, bindings: &Bindings) -> Result<CMat> {
    let n = grid.len();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::TooLargeForDense { rows: n, cap: DEFAULT_DENSE_CAP });
    }
    let mut out: CMat = Mat::zeros(n, n);
    for (word, mono, scalar) in nf.terms() {
        for (axis, &e) in word.iter().enumerate() {
            if e != 0 {
                check_axis(grid, axis)?;
            }
        }
        let s = scalar.eval(grid.beta());
        let mut coeff = vec![s; n];
        for factor in mono {
            let f = factor_field(grid, bindings, factor)?;
            coeff.iter_mut().zip(f.values()).for_each(|(c, v)| *c *= v);
        }
        for (i, c) in coeff.iter().enumerate() {
            let mut j = i;
            for (axis, &e) in word.iter().enumerate().take(grid.dim()) {
                j = grid.offset(j, axis, e as isize * grid.steps() as isize);
            }
            out[(i, j)] += c;
        }
    }
    Ok(out)
}

/// Dense matrix of an expression built by composing the concrete operators.
pub fn compose(e: &OpExpr, grid: &GridSpec, bindings: &Bindings) -> Result<CMat> {
    let n = grid.len();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::TooLargeForDense { rows: n, cap: DEFAULT_DENSE_CAP });
    }
    let identity = || -> CMat { Mat::identity(n, n) };
    Ok(match e {
        OpExpr::Scalar(s) => linalg::scaled(&identity(), s.eval(grid.beta())),
        OpExpr::Mult(c) => {
            let f = coefficient_field(c, grid, bindings)?;
            Mat::from_fn(n, n, |i, j| if i == j { f.values()[i] } else { ZERO })
        }
        OpExpr::ShiftOp { axis, adjoint } => {
            check_axis(grid, *axis)?;
            shift_op(grid, *axis, if *adjoint { Sign::Minus } else { Sign::Plus }).to_dense()?
        }
        OpExpr::DiffOp(j) => {
            check_axis(grid, *j)?;
            difference_op(grid, *j).to_dense()?
        }
        OpExpr::QOp(j) => {
            check_axis(grid, *j)?;
            q_op(grid, *j).to_dense()?
        }
        OpExpr::Add(a, b) => compose(a, grid, bindings)? + compose(b, grid, bindings)?,
        OpExpr::Sub(a, b) => compose(a, grid, bindings)? - compose(b, grid, bindings)?,
        OpExpr::Neg(a) => linalg::scaled(&compose(a, grid, bindings)?, -ONE),
        OpExpr::Mul(a, b) => compose(a, grid, bindings)? * compose(b, grid, bindings)?,
        OpExpr::Div(a, b) => {
            let d = compose(b, grid, bindings)?;
            linalg::scaled(&compose(a, grid, bindings)?, ONE / d[(0, 0)])
        }
        OpExpr::Commutator(a, b) => linalg::commutator(&compose(a, grid, bindings)?, &compose(b, grid, bindings)?),
    })
}

/// Sampled coefficient of a multiplication operator, computed with the
/// operator-module differences and shifts.
fn coefficient_field(c: &CoeffExpr, grid: &GridSpec, bindings: &Bindings) -> Result<Field> {
    match c {
        CoeffExpr::Coord(k) => {
            check_axis(grid, *k)?;
            Ok(Field::coordinate(grid, *k))
        }
        CoeffExpr::Fun(name) => Ok(binding(bindings, grid, name)?.clone()),
        CoeffExpr::Diff(j, e) => {
            check_axis(grid, *j)?;
            Ok(difference_op(grid, *j).apply(&multiplication_field(e, grid, bindings)?))
        }
        CoeffExpr::Shift { axis, adjoint, arg } => {
            check_axis(grid, *axis)?;
            let sign = if *adjoint { Sign::Minus } else { Sign::Plus };
            Ok(shift_op(grid, *axis, sign).apply(&multiplication_field(arg, grid, bindings)?))
        }
    }
}

/// The diagonal of a shift-free expression.
fn multiplication_field(e: &OpExpr, grid: &GridSpec, bindings: &Bindings) -> Result<Field> {
    let m = compose(e, grid, bindings)?;
    let values: Vec<Complex64> = (0..grid.len()).map(|i| m[(i, i)]).collect();
    Field::from_values(grid, values)
}
