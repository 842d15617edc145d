use crate::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// A single linear row `sum(coef * x[var]) <relation> rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            terms,
            relation,
            rhs,
        }
    }

    /// Builds a row from a dense coefficient vector, dropping zeros.
    pub fn dense(coeffs: &[f64], relation: Relation, rhs: f64) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j, *c))
            .collect();
        Constraint {
            terms,
            relation,
            rhs,
        }
    }
}

/// A linear program over `objective.len()` variables.
///
/// Variables default to the bounds `[0, +inf)`; either side may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, constraint: Constraint) -> &mut Self {
        self.constraints.push(constraint);
        self
    }

    pub fn add_terms(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> &mut Self {
        self.add(Constraint::new(terms, relation, rhs))
    }

    pub fn add_dense(&mut self, coeffs: &[f64], relation: Relation, rhs: f64) -> &mut Self {
        self.add(Constraint::dense(coeffs, relation, rhs))
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.bounds[var] = (lower, upper);
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Objective value of `x` under this program's objective (no feasibility check).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(j, a)| a * x[*j]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (v, (lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    pub(crate) fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::ObjectiveLength {
                got: self.bounds.len(),
                expected: n,
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite("constraint right-hand side"));
            }
            for &(var, a) in &c.terms {
                if var >= n {
                    return Err(LpError::DimensionMismatch {
                        row,
                        var,
                        num_vars: n,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite("constraint coefficient"));
                }
            }
        }
        for (lo, hi) in &self.bounds {
            if lo.is_nan() || hi.is_nan() || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                return Err(LpError::NonFinite("variable bound"));
            }
        }
        Ok(())
    }
}
