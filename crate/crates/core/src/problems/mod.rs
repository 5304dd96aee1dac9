//! Small equilibrium problems with independently computed solutions.

pub mod oracles;

use nalgebra::DMatrix;

use crate::bifunctions::{sum, AffineMap, Bifunction, ConvexFunction};
use crate::error::Result;
use crate::hilbert::{ConvexSet, Vector, MEMBERSHIP_TOL};
use crate::operators::{bifunction_from_operator, GridSpec, MonotoneOperator};

/// What is known about the solution set of an instance.
#[derive(Clone, Debug, PartialEq)]
pub enum KnownSolutions {
    /// Every point of `C` solves the problem.
    EntireSet,
    Points(Vec<Vector>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    BruteForce,
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub name: &'static str,
    pub summary: String,
    pub f: Bifunction,
    pub g: Bifunction,
    /// Default starting point.
    pub x0: Vector,
    pub known: KnownSolutions,
    pub provenance: Provenance,
    /// How `known` was obtained.
    pub oracle_spec: String,
    /// Window for grid-based cross-checks.
    pub grid: GridSpec,
}

impl ProblemInstance {
    pub fn set(&self) -> &ConvexSet {
        self.f.set()
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `F + G`.
    pub fn combined(&self) -> Bifunction {
        sum(&self.f, &self.g).expect("corpus bifunctions share their set")
    }

    /// Distance from `p` to the known solution set.
    pub fn distance_to_solutions(&self, p: &Vector) -> f64 {
        match &self.known {
            KnownSolutions::EntireSet => self.set().project(p).distance(p),
            KnownSolutions::Points(points) => points.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Whether `p` is a known solution within `tol`.
    pub fn is_known_solution(&self, p: &Vector, tol: f64) -> bool {
        match &self.known {
            KnownSolutions::EntireSet => self.set().contains(p, tol.max(MEMBERSHIP_TOL)),
            KnownSolutions::Points(_) => self.distance_to_solutions(p) <= tol,
        }
    }
}

pub const NAMES: [&str; 6] = [
    "pure-feasibility",
    "quadratic-1d",
    "vi-over-box",
    "mixed-equilibrium",
    "skew-saddle",
    "operator-bridge",
];

/// The six reference instances, in a fixed order.
pub fn corpus() -> Vec<ProblemInstance> {
    vec![
        pure_feasibility().expect("valid instance"),
        quadratic_1d(1.0).expect("valid instance"),
        vi_over_box().expect("valid instance"),
        mixed_equilibrium(1.5, 1.0).expect("valid instance"),
        skew_saddle().expect("valid instance"),
        operator_bridge().expect("valid instance"),
    ]
}

pub fn by_name(name: &str) -> Option<ProblemInstance> {
    corpus().into_iter().find(|p| p.name == name)
}

/// `F = G = 0` on `[-1, 1]^2`: every point of the box solves it.
pub fn pure_feasibility() -> Result<ProblemInstance> {
    let set = ConvexSet::cube(2, -1.0, 1.0)?;
    Ok(ProblemInstance {
        name: "pure-feasibility",
        summary: "F = G = 0 on [-1,1]^2".into(),
        f: Bifunction::zero(set.clone()),
        g: Bifunction::zero(set),
        x0: Vector::from([5.0, 5.0]),
        known: KnownSolutions::EntireSet,
        provenance: Provenance::Analytic,
        oracle_spec: "trivial: every point of C satisfies 0 >= 0".into(),
        grid: GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.1)?,
    })
}

/// `F(x, y) = y^2 - x^2`, `G(x, y) = b (y - x)` on the line; solution `-b/2`.
pub fn quadratic_1d(b: f64) -> Result<ProblemInstance> {
    let line = ConvexSet::whole_space(1)?;
    let square = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1))?;
    let f = Bifunction::function_difference(line.clone(), square)?;
    let g = Bifunction::operator_induced(line, AffineMap::new(DMatrix::zeros(1, 1), Vector::from([b]))?)?;
    let root = oracles::scalar_root(|x| 2.0 * x + b, -1e3, 1e3).expect("sign change");
    Ok(ProblemInstance {
        name: "quadratic-1d",
        summary: format!("F = y^2 - x^2, G = {b} (y - x) on R"),
        f,
        g,
        x0: Vector::from([3.0]),
        known: KnownSolutions::Points(vec![Vector::from([root])]),
        provenance: Provenance::Analytic,
        oracle_spec: "bisection root of the optimality condition 2x + b = 0".into(),
        grid: GridSpec::interval(-2.0, 2.0, 1e-3)?,
    })
}

/// `F(x, y) = <M x + q, y - x>` with `M = [[2, 1], [1, 2]]`, `q = (-1, 1)`,
/// `G = 0` on `[0, 1]^2`.
pub fn vi_over_box() -> Result<ProblemInstance> {
    let set = ConvexSet::cube(2, 0.0, 1.0)?;
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
    let q = [-1.0, 1.0];
    let solutions = oracles::box_vi_active_set(&m, &q, &[0.0, 0.0], &[1.0, 1.0]);
    let f = Bifunction::operator_induced(set.clone(), AffineMap::new(m, Vector::from(q))?)?;
    Ok(ProblemInstance {
        name: "vi-over-box",
        summary: "F = <M x + q, y - x>, M = [[2,1],[1,2]], q = (-1,1), G = 0 on [0,1]^2".into(),
        f,
        g: Bifunction::zero(set),
        x0: Vector::from([1.0, 1.0]),
        known: KnownSolutions::Points(solutions),
        provenance: Provenance::Analytic,
        oracle_spec: "enumeration of the 9 lower/free/upper face cases of the box KKT system".into(),
        grid: GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], 1e-2)?,
    })
}

/// `F(x, y) = <x - d, y - x>`, `G(x, y) = w (|y| - |x|)` on `[-1, 1]`.
pub fn mixed_equilibrium(d: f64, w: f64) -> Result<ProblemInstance> {
    let set = ConvexSet::cube(1, -1.0, 1.0)?;
    let f = Bifunction::operator_induced(
        set.clone(),
        AffineMap::new(DMatrix::from_element(1, 1, 1.0), Vector::from([-d]))?,
    )?;
    let g = Bifunction::function_difference(set, ConvexFunction::weighted_l1(Vector::from([w]))?)?;
    let solutions = oracles::mixed_equilibrium_kkt(d, w, -1.0, 1.0)
        .into_iter()
        .map(|x| Vector::from([x]))
        .collect();
    Ok(ProblemInstance {
        name: "mixed-equilibrium",
        summary: format!("F = <x - {d}, y - x>, G = {w} (|y| - |x|) on [-1,1]"),
        f,
        g,
        x0: Vector::from([-0.8]),
        known: KnownSolutions::Points(solutions),
        provenance: Provenance::Analytic,
        oracle_spec: "enumeration of the bound, kink and smooth-branch KKT cases".into(),
        grid: GridSpec::interval(-1.0, 1.0, 1e-3)?,
    })
}

/// `F(x, y) = <S x, y - x>` with the rotation `S = [[0, 1], [-1, 0]]`,
/// `G(x, y) = |y|^2 / 2 - |x|^2 / 2` on R^2.
pub fn skew_saddle() -> Result<ProblemInstance> {
    let plane = ConvexSet::whole_space(2)?;
    let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let zero = oracles::linear_zero(&(&s + DMatrix::identity(2, 2))).expect("S + I is invertible");
    let f = Bifunction::operator_induced(plane.clone(), AffineMap::new(s, Vector::zeros(2))?)?;
    let g = Bifunction::function_difference(
        plane,
        ConvexFunction::quadratic(DMatrix::identity(2, 2), Vector::zeros(2))?,
    )?;
    Ok(ProblemInstance {
        name: "skew-saddle",
        summary: "F = <S x, y - x> with S a quarter rotation, G = |y|^2/2 - |x|^2/2 on R^2".into(),
        f,
        g,
        x0: Vector::from([1.0, -1.0]),
        known: KnownSolutions::Points(vec![zero]),
        provenance: Provenance::Analytic,
        oracle_spec: "LU solve of (S + I) x = 0".into(),
        grid: GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 0.05)?,
    })
}

/// `G(x, y) = y^2 - x^2` and `F = F_B` for `B x = x - 1` on the line.
pub fn operator_bridge() -> Result<ProblemInstance> {
    let line = ConvexSet::whole_space(1)?;
    let b = MonotoneOperator::affine(AffineMap::new(DMatrix::from_element(1, 1, 1.0), Vector::from([-1.0]))?)?;
    let f = bifunction_from_operator(&b, &line)?;
    let square = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1))?;
    let g = Bifunction::function_difference(line, square)?;
    let root = oracles::scalar_root(|x| 2.0 * x + (x - 1.0), -1e3, 1e3).expect("sign change");
    Ok(ProblemInstance {
        name: "operator-bridge",
        summary: "F = max over B x = x - 1 of <y - x, u>, G = y^2 - x^2 on R".into(),
        f,
        g,
        x0: Vector::from([2.0]),
        known: KnownSolutions::Points(vec![Vector::from([root])]),
        provenance: Provenance::Analytic,
        oracle_spec: "bisection root of 2x + (x - 1) = 0".into(),
        grid: GridSpec::interval(-2.0, 2.0, 1e-3)?,
    })
}
