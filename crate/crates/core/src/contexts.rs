//! Double-distance contexts: placements, bar rows and assembled rigidity
//! matrices.
//!
//! Each row is the gradient of a separation functional that is a smooth,
//! strictly monotone function of the context's distance off degeneracies
//! (squared Euclidean, `q`-th power of the `l_q` norm, squared geodesic on the
//! cylinder, plain arc length on the sphere), so row rank and kernel match the
//! distance-based rigidity matrix.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BiColouredGraph, Colour, ColouredEdge};
use crate::sparsity::SparsityClass;

/// Joints closer than this in the relevant coordinates are coincident.
pub const DEGENERATE_EPS: f64 = 1e-12;
/// Tolerance on the surface equation for supplied placements.
pub const SURFACE_TOL: f64 = 1e-9;
/// Closest approach to the cylinder's cut locus accepted by a geodesic row.
pub const CUT_LOCUS_GUARD: f64 = 1e-3;

/// Minimal coordinate separation in sampled planar and separable placements.
pub const PLANAR_MARGIN: f64 = 0.05;
/// Sampled cylinder placements keep every principal angle gap within
/// `[ANGLE_MIN_GAP, PI - CUT_LOCUS_MARGIN]` and axial gaps above `PLANAR_MARGIN`.
pub const CUT_LOCUS_MARGIN: f64 = 0.1;
pub const ANGLE_MIN_GAP: f64 = 0.05;
/// Sampled sphere placements keep pairwise angles within `[m, PI - m]`.
pub const SPHERE_ANGLE_MARGIN: f64 = 0.1;

const MAX_ATTEMPTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextSpec {
    /// Unit cylinder `x^2 + y^2 = 1`; blue chords, red geodesics.
    Cylinder,
    /// Unit sphere; blue chords, red geodesics.
    Sphere,
    /// Plane with blue Euclidean and red `l_q` bars.
    MixedLqPlane { q: f64 },
    /// Plane with blue direction and red Euclidean length bars.
    DirectionLengthEuclidean,
    /// Plane with blue direction and red `l_q` length bars.
    DirectionLengthLq { q: f64 },
    /// `R^{d0} x R^{d1}`; blue bars measure the first block, red the second.
    Separable { blocks: Vec<u8> },
}

impl ContextSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ContextSpec::MixedLqPlane { q } | ContextSpec::DirectionLengthLq { q } => {
                if !(q.is_finite() && *q > 1.0 && *q != 2.0) {
                    return Err(Error::InvalidContext(format!("q must lie in (1, inf) without 2, got {q}")));
                }
                Ok(())
            }
            ContextSpec::Separable { blocks } => SparsityClass::separable(blocks).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Coordinates per joint.
    pub fn dim(&self) -> usize {
        match self {
            ContextSpec::Cylinder | ContextSpec::Sphere => 3,
            ContextSpec::Separable { blocks } => blocks.iter().map(|&d| d as usize).sum(),
            _ => 2,
        }
    }

    /// Dimension of the joint manifold.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            ContextSpec::Separable { .. } => self.dim(),
            _ => 2,
        }
    }

    pub fn has_normal_rows(&self) -> bool {
        matches!(self, ContextSpec::Cylinder | ContextSpec::Sphere)
    }

    /// Dimension of the rigid-motion flex space for two or more joints.
    pub fn trivial_dim(&self) -> usize {
        match self {
            ContextSpec::Sphere => 3,
            ContextSpec::Separable { blocks } => blocks.iter().map(|&d| if d == 1 { 1 } else { 3 }).sum(),
            _ => 2,
        }
    }

    /// Rigid-motion flex dimension for `n` joints: a single joint moves
    /// freely in its tangent space.
    pub fn trivial_dim_for(&self, n: usize) -> usize {
        match n {
            0 => 0,
            1 => self.intrinsic_dim(),
            _ => self.trivial_dim(),
        }
    }

    /// Maxwell edge count `intrinsic_dim * n - trivial_dim` for `n` joints.
    pub fn maxwell_count(&self, n: usize) -> i64 {
        (self.intrinsic_dim() * n) as i64 - self.trivial_dim_for(n) as i64
    }

    /// Rank of the assembled matrix of a rigid framework on `n` joints.
    pub fn required_rank(&self, n: usize) -> usize {
        self.dim() * n - self.trivial_dim_for(n)
    }

    /// The sparsity class characterising minimal rigidity.
    pub fn class(&self) -> SparsityClass {
        match self {
            ContextSpec::Cylinder => SparsityClass::Tight22,
            ContextSpec::Sphere => SparsityClass::Tight23,
            ContextSpec::MixedLqPlane { .. } | ContextSpec::DirectionLengthLq { .. } => {
                SparsityClass::Tight22BlueLimited
            }
            ContextSpec::DirectionLengthEuclidean => SparsityClass::Tight22MonoLimited,
            ContextSpec::Separable { blocks } => SparsityClass::Separable { blocks: blocks.clone() },
        }
    }

    pub fn name(&self) -> String {
        match self {
            ContextSpec::Cylinder => "cylinder".into(),
            ContextSpec::Sphere => "sphere".into(),
            ContextSpec::MixedLqPlane { q } => format!("mixed:{q}"),
            ContextSpec::DirectionLengthEuclidean => "dl-euclid".into(),
            ContextSpec::DirectionLengthLq { q } => format!("dl-lq:{q}"),
            ContextSpec::Separable { blocks } => {
                let dims: Vec<String> = blocks.iter().map(u8::to_string).collect();
                format!("separable:{}", dims.join(","))
            }
        }
    }

    fn block_range(&self, colour: Colour) -> std::ops::Range<usize> {
        let ContextSpec::Separable { blocks } = self else { return 0..self.dim() };
        let start = if colour == Colour::Blue { 0 } else { blocks[0] as usize };
        start..start + blocks[colour.index()] as usize
    }
}

impl fmt::Display for ContextSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ContextSpec {
    type Err = Error;

    /// `cylinder`, `sphere`, `mixed:<q>`, `dl-euclid`, `dl-lq:<q>`,
    /// `separable:<d0>,<d1>`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
        let q = || -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidContext(format!("{head} needs an exponent, e.g. {head}:3")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidContext(format!("bad exponent in {s:?}: {e}")))
        };
        let ctx = match head {
            "cylinder" => ContextSpec::Cylinder,
            "sphere" => ContextSpec::Sphere,
            "mixed" => ContextSpec::MixedLqPlane { q: q()? },
            "dl-euclid" => ContextSpec::DirectionLengthEuclidean,
            "dl-lq" => ContextSpec::DirectionLengthLq { q: q()? },
            "separable" => {
                let class: SparsityClass = s.parse()?;
                let SparsityClass::Separable { blocks } = class else { unreachable!() };
                ContextSpec::Separable { blocks }
            }
            _ => return Err(Error::InvalidContext(format!("unknown context {s:?}"))),
        };
        ctx.validate()?;
        Ok(ctx)
    }
}

/// Joint coordinates, one vector of length `dim` per vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub coords: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementFile {
    context: ContextSpec,
    coords: Vec<Vec<f64>>,
}

impl Placement {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    pub fn to_json(&self, ctx: &ContextSpec) -> String {
        serde_json::to_string(&PlacementFile { context: ctx.clone(), coords: self.coords.clone() })
            .expect("placement serialization is infallible")
    }

    pub fn parse(text: &str) -> Result<(ContextSpec, Placement)> {
        let file: PlacementFile = serde_json::from_str(text)?;
        file.context.validate()?;
        let p = Placement { coords: file.coords };
        p.check(&file.context)?;
        Ok((file.context, p))
    }

    /// Dimension, finiteness and surface membership.
    pub fn check(&self, ctx: &ContextSpec) -> Result<()> {
        for (i, c) in self.coords.iter().enumerate() {
            if c.len() != ctx.dim() {
                return Err(Error::PlacementMismatch(format!(
                    "joint {i} has {} coordinates, context {ctx} needs {}",
                    c.len(),
                    ctx.dim()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::PlacementMismatch(format!("joint {i} has non-finite coordinates")));
            }
            on_surface(ctx, c)?;
        }
        Ok(())
    }
}

fn on_surface(ctx: &ContextSpec, p: &[f64]) -> Result<()> {
    let residual = match ctx {
        ContextSpec::Cylinder => p[0] * p[0] + p[1] * p[1] - 1.0,
        ContextSpec::Sphere => p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 1.0,
        _ => return Ok(()),
    };
    if residual.abs() > SURFACE_TOL {
        return Err(Error::PlacementMismatch(format!("joint {p:?} is off the {ctx} (residual {residual:e})")));
    }
    Ok(())
}

/// Wraps an angle difference into `(-PI, PI]`.
pub fn principal_angle(d: f64) -> f64 {
    let mut a = d.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Samples a generic placement of `n` joints for `ctx`, deterministic in `seed`.
pub fn random_placement(ctx: &ContextSpec, n: usize, seed: u64) -> Result<Placement> {
    ctx.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut attempts = 0;
        let point = loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(Error::SamplingFailed(MAX_ATTEMPTS));
            }
            let candidate = sample_point(ctx, &mut rng);
            if coords.iter().all(|q| well_separated(ctx, &candidate, q)) {
                break candidate;
            }
        };
        coords.push(point);
    }
    Ok(Placement { coords })
}

fn sample_point(ctx: &ContextSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match ctx {
        ContextSpec::Cylinder => {
            let theta = rng.random_range(0.0..2.0 * PI);
            vec![theta.cos(), theta.sin(), rng.random_range(-1.0..1.0)]
        }
        ContextSpec::Sphere => loop {
            let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm > 1e-6 {
                break v.iter().map(|x| x / norm).collect();
            }
        },
        _ => (0..ctx.dim()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

fn well_separated(ctx: &ContextSpec, a: &[f64], b: &[f64]) -> bool {
    match ctx {
        ContextSpec::Cylinder => {
            let gap = principal_angle(a[1].atan2(a[0]) - b[1].atan2(b[0])).abs();
            (ANGLE_MIN_GAP..=PI - CUT_LOCUS_MARGIN).contains(&gap) && (a[2] - b[2]).abs() >= PLANAR_MARGIN
        }
        ContextSpec::Sphere => {
            let angle = dot(a, b).clamp(-1.0, 1.0).acos();
            (SPHERE_ANGLE_MARGIN..=PI - SPHERE_ANGLE_MARGIN).contains(&angle)
        }
        _ => a.iter().zip(b).all(|(x, y)| (x - y).abs() >= PLANAR_MARGIN),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn degenerate(msg: impl Into<String>) -> Error {
    Error::Degenerate(msg.into())
}

/// Row entries at joint `i` and at joint `j`.
pub type BarRow = (Vec<f64>, Vec<f64>);

fn antisymmetric(at_i: Vec<f64>) -> BarRow {
    let at_j = at_i.iter().map(|x| -x).collect();
    (at_i, at_j)
}

fn coincident_check(d: &[f64]) -> Result<()> {
    if d.iter().all(|x| x.abs() < DEGENERATE_EPS) {
        return Err(degenerate("coincident joints"));
    }
    Ok(())
}

/// Gradient of `|p_i - p_j|^2`.
pub fn euclidean_sq_row(pi: &[f64], pj: &[f64]) -> Result<BarRow> {
    let d = diff(pi, pj);
    coincident_check(&d)?;
    Ok(antisymmetric(d.iter().map(|x| 2.0 * x).collect()))
}

/// Gradient of `sum_k |p_i - p_j|_k^q`.
pub fn lq_pow_row(q: f64, pi: &[f64], pj: &[f64]) -> Result<BarRow> {
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::InvalidContext(format!("q must exceed 1, got {q}")));
    }
    let d = diff(pi, pj);
    coincident_check(&d)?;
    Ok(antisymmetric(d.iter().map(|&x| q * x.signum() * x.abs().powf(q - 1.0)).collect()))
}

/// Gradient of the direction functional `(dy)^2 / (dx)^2`.
pub fn direction_row(pi: &[f64], pj: &[f64]) -> Result<BarRow> {
    let (dx, dy) = (pi[0] - pj[0], pi[1] - pj[1]);
    if dx.abs() < DEGENERATE_EPS {
        return Err(degenerate("vertical direction bar"));
    }
    let slope = dy / dx;
    Ok(antisymmetric(vec![-2.0 * slope * slope / dx, 2.0 * slope / dx]))
}

/// Blue: squared chord; red: squared geodesic `dtheta^2 + dz^2`.
pub fn cylinder_rows(colour: Colour, pi: &[f64], pj: &[f64]) -> Result<BarRow> {
    for p in [pi, pj] {
        on_surface(&ContextSpec::Cylinder, p)?;
    }
    match colour {
        Colour::Blue => euclidean_sq_row(pi, pj),
        Colour::Red => {
            let dtheta = principal_angle(pi[1].atan2(pi[0]) - pj[1].atan2(pj[0]));
            let dz = pi[2] - pj[2];
            if dtheta.abs() > PI - CUT_LOCUS_GUARD {
                return Err(degenerate(format!("geodesic bar at the cut locus (angle gap {dtheta})")));
            }
            if dtheta.abs() < DEGENERATE_EPS && dz.abs() < DEGENERATE_EPS {
                return Err(degenerate("coincident joints"));
            }
            let at_i = vec![-2.0 * dtheta * pi[1], 2.0 * dtheta * pi[0], 2.0 * dz];
            let at_j = vec![2.0 * dtheta * pj[1], -2.0 * dtheta * pj[0], -2.0 * dz];
            Ok((at_i, at_j))
        }
    }
}

/// Blue: squared chord; red: arc length `arccos(p_i . p_j)`.
pub fn sphere_rows(colour: Colour, pi: &[f64], pj: &[f64]) -> Result<BarRow> {
    for p in [pi, pj] {
        on_surface(&ContextSpec::Sphere, p)?;
    }
    let c = dot(pi, pj);
    let s2 = 1.0 - c * c;
    if s2 < DEGENERATE_EPS {
        return Err(degenerate(if c > 0.0 { "coincident joints" } else { "antipodal joints" }));
    }
    match colour {
        Colour::Blue => euclidean_sq_row(pi, pj),
        Colour::Red => {
            let s = s2.sqrt();
            Ok((pj.iter().map(|x| -x / s).collect(), pi.iter().map(|x| -x / s).collect()))
        }
    }
}

/// The surface normal at `p` (a single-joint row).
pub fn normal_row(ctx: &ContextSpec, p: &[f64]) -> Result<Vec<f64>> {
    on_surface(ctx, p)?;
    match ctx {
        ContextSpec::Cylinder => Ok(vec![p[0], p[1], 0.0]),
        ContextSpec::Sphere => Ok(p.to_vec()),
        _ => Err(Error::InvalidContext(format!("{ctx} has no normal rows"))),
    }
}

/// Squared distance on the bar colour's block, zero elsewhere.
pub fn separable_rows(ctx: &ContextSpec, colour: Colour, pi: &[f64], pj: &[f64]) -> Result<BarRow> {
    let ContextSpec::Separable { .. } = ctx else {
        return Err(Error::InvalidContext(format!("{ctx} is not separable")));
    };
    ctx.validate()?;
    let block = ctx.block_range(colour);
    let (bi, bj) = euclidean_sq_row(&pi[block.clone()], &pj[block.clone()])
        .map_err(|_| degenerate(format!("zero difference on block {block:?}")))?;
    let mut at_i = vec![0.0; ctx.dim()];
    let mut at_j = vec![0.0; ctx.dim()];
    at_i[block.clone()].copy_from_slice(&bi);
    at_j[block].copy_from_slice(&bj);
    Ok((at_i, at_j))
}

/// The row of a `colour` bar from `pi` to `pj` in `ctx`.
pub fn bar_row(ctx: &ContextSpec, colour: Colour, pi: &[f64], pj: &[f64]) -> Result<BarRow> {
    match (ctx, colour) {
        (ContextSpec::Cylinder, c) => cylinder_rows(c, pi, pj),
        (ContextSpec::Sphere, c) => sphere_rows(c, pi, pj),
        (ContextSpec::MixedLqPlane { .. }, Colour::Blue) => euclidean_sq_row(pi, pj),
        (ContextSpec::MixedLqPlane { q }, Colour::Red) => lq_pow_row(*q, pi, pj),
        (ContextSpec::DirectionLengthEuclidean | ContextSpec::DirectionLengthLq { .. }, Colour::Blue) => {
            direction_row(pi, pj)
        }
        (ContextSpec::DirectionLengthEuclidean, Colour::Red) => euclidean_sq_row(pi, pj),
        (ContextSpec::DirectionLengthLq { q }, Colour::Red) => lq_pow_row(*q, pi, pj),
        (ContextSpec::Separable { .. }, c) => separable_rows(ctx, c, pi, pj),
    }
}

/// The scalar functional whose gradient [`bar_row`] returns, extended off the
/// surface where needed (`atan2` for the cylinder angle, the plain dot product
/// for the sphere).
pub fn bar_functional(ctx: &ContextSpec, colour: Colour, pi: &[f64], pj: &[f64]) -> f64 {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    match (ctx, colour) {
        (ContextSpec::Cylinder, Colour::Red) => {
            let dtheta = principal_angle(pi[1].atan2(pi[0]) - pj[1].atan2(pj[0]));
            dtheta * dtheta + (pi[2] - pj[2]).powi(2)
        }
        (ContextSpec::Sphere, Colour::Red) => dot(pi, pj).clamp(-1.0, 1.0).acos(),
        (ContextSpec::MixedLqPlane { q }, Colour::Red) | (ContextSpec::DirectionLengthLq { q }, Colour::Red) => {
            pi.iter().zip(pj).map(|(x, y)| (x - y).abs().powf(*q)).sum()
        }
        (ContextSpec::DirectionLengthEuclidean | ContextSpec::DirectionLengthLq { .. }, Colour::Blue) => {
            let (dx, dy) = (pi[0] - pj[0], pi[1] - pj[1]);
            dy * dy / (dx * dx)
        }
        (ContextSpec::Separable { .. }, c) => {
            let block = ctx.block_range(c);
            sq(&pi[block.clone()], &pj[block])
        }
        _ => sq(pi, pj),
    }
}

/// Distance of a bar from the degeneracies of its row formula.
pub fn bar_margin(ctx: &ContextSpec, colour: Colour, pi: &[f64], pj: &[f64]) -> f64 {
    let sep = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let min_sep = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(f64::INFINITY, f64::min);
    match (ctx, colour) {
        (ContextSpec::Cylinder, Colour::Red) => {
            let dtheta = principal_angle(pi[1].atan2(pi[0]) - pj[1].atan2(pj[0])).abs();
            (PI - dtheta).min(sep(pi, pj))
        }
        (ContextSpec::Sphere, _) => {
            let angle = dot(pi, pj).clamp(-1.0, 1.0).acos();
            angle.min(PI - angle)
        }
        (ContextSpec::MixedLqPlane { .. } | ContextSpec::DirectionLengthLq { .. }, Colour::Red) => min_sep(pi, pj),
        (ContextSpec::DirectionLengthEuclidean | ContextSpec::DirectionLengthLq { .. }, Colour::Blue) => {
            (pi[0] - pj[0]).abs()
        }
        (ContextSpec::Separable { .. }, c) => {
            let block = ctx.block_range(c);
            sep(&pi[block.clone()], &pj[block])
        }
        _ => sep(pi, pj),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowLabel {
    Bar(ColouredEdge),
    Normal(usize),
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLabel::Bar(e) => write!(f, "bar{e}"),
            RowLabel::Normal(v) => write!(f, "normal({v})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidityMatrix {
    pub matrix: DMatrix<f64>,
    pub rows: Vec<RowLabel>,
    /// `(vertex, coordinate)` per column.
    pub cols: Vec<(usize, usize)>,
}

impl RigidityMatrix {
    /// One labelled row per line, entries with 17 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (r, label) in self.rows.iter().enumerate() {
            let entries: Vec<String> = (0..self.matrix.ncols()).map(|c| format!("{:.16e}", self.matrix[(r, c)])).collect();
            out.push_str(&format!("{label}: {}\n", entries.join(" ")));
        }
        out
    }

    pub fn without_row(&self, r: usize) -> RigidityMatrix {
        RigidityMatrix {
            matrix: self.matrix.clone().remove_row(r),
            rows: self.rows.iter().enumerate().filter(|&(i, _)| i != r).map(|(_, l)| *l).collect(),
            cols: self.cols.clone(),
        }
    }
}

/// Assembles the rigidity matrix of `(g, p)`: one row per edge in canonical
/// order, then one normal row per joint on the cylinder and sphere.
pub fn assemble(ctx: &ContextSpec, g: &BiColouredGraph, p: &Placement) -> Result<RigidityMatrix> {
    ctx.validate()?;
    if let Some(e) = g.edges().find(|e| e.is_loop()) {
        return Err(Error::LoopNotAllowed(format!("loop {e} has an identically zero row")));
    }
    if p.n() != g.n() {
        return Err(Error::PlacementMismatch(format!("{} joints for {} vertices", p.n(), g.n())));
    }
    p.check(ctx)?;
    let d = ctx.dim();
    let normals = if ctx.has_normal_rows() { g.n() } else { 0 };
    let mut matrix = DMatrix::zeros(g.edge_count() + normals, d * g.n());
    let mut rows = Vec::with_capacity(matrix.nrows());
    for (r, e) in g.edges().enumerate() {
        let (at_i, at_j) = bar_row(ctx, e.colour, p.point(e.u), p.point(e.v))
            .map_err(|source| Error::Row { edge: *e, source: Box::new(source) })?;
        for k in 0..d {
            matrix[(r, d * e.u + k)] = at_i[k];
            matrix[(r, d * e.v + k)] = at_j[k];
        }
        rows.push(RowLabel::Bar(*e));
    }
    for v in 0..normals {
        let r = g.edge_count() + v;
        let row = normal_row(ctx, p.point(v))?;
        for k in 0..d {
            matrix[(r, d * v + k)] = row[k];
        }
        rows.push(RowLabel::Normal(v));
    }
    let cols = (0..g.n()).flat_map(|v| (0..d).map(move |k| (v, k))).collect();
    Ok(RigidityMatrix { matrix, rows, cols })
}

/// Rigid-motion flexes at `p`, one per column, linearly independent.
pub fn trivial_flex_basis(ctx: &ContextSpec, p: &Placement) -> Result<DMatrix<f64>> {
    ctx.validate()?;
    p.check(ctx)?;
    let d = ctx.dim();
    let n = p.n();
    let field = |f: &dyn Fn(&[f64]) -> Vec<f64>| -> Vec<f64> { p.coords.iter().flat_map(|c| f(c)).collect() };
    let unit = |k: usize| move |_: &[f64]| -> Vec<f64> { (0..d).map(|i| f64::from(i == k)).collect() };
    let mut generators: Vec<Vec<f64>> = Vec::new();
    match ctx {
        ContextSpec::Cylinder => {
            generators.push(field(&unit(2)));
            generators.push(field(&|c: &[f64]| vec![-c[1], c[0], 0.0]));
        }
        ContextSpec::Sphere => {
            generators.push(field(&|c: &[f64]| vec![0.0, -c[2], c[1]]));
            generators.push(field(&|c: &[f64]| vec![c[2], 0.0, -c[0]]));
            generators.push(field(&|c: &[f64]| vec![-c[1], c[0], 0.0]));
        }
        ContextSpec::Separable { blocks } => {
            let mut start = 0;
            for &dim in blocks {
                let dim = dim as usize;
                for k in start..start + dim {
                    generators.push(field(&unit(k)));
                }
                if dim == 2 {
                    let (a, b) = (start, start + 1);
                    generators.push(field(&|c: &[f64]| {
                        let mut v = vec![0.0; d];
                        v[a] = -c[b];
                        v[b] = c[a];
                        v
                    }));
                }
                start += dim;
            }
        }
        _ => {
            generators.push(field(&unit(0)));
            generators.push(field(&unit(1)));
        }
    }
    // Keep a generator only if it is independent of those already kept.
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut orthonormal: Vec<Vec<f64>> = Vec::new();
    for g in generators {
        let mut r = g.clone();
        for q in &orthonormal {
            let c = dot(&r, q);
            r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let norm = dot(&r, &r).sqrt();
        if norm > 1e-9 * dot(&g, &g).sqrt().max(1.0) {
            orthonormal.push(r.iter().map(|x| x / norm).collect());
            kept.push(g);
        }
    }
    Ok(DMatrix::from_fn(d * n, kept.len(), |r, c| kept[c][r]))
}
