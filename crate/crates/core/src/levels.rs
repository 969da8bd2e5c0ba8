//! Spin-3/2 level structure: operator algebra, uniaxial Hamiltonian, eigenlevels
//! versus magnetic field and temperature, transition frequencies, and
//! resonance-field root finding.
//!
//! Units: energies are stored as E/h in MHz, magnetic fields in mT. The single
//! conversion constant is [`MU_B_MHZ_PER_MT`].

use crate::linalg::{eigen_hermitian, overlap2, LinalgError, Mat4, C64};
use thiserror::Error;

/// Bohr magneton over Planck constant, MHz per mT.
pub const MU_B_MHZ_PER_MT: f64 = 13.996;

/// Fields below this magnitude (mT) are treated as exactly zero.
const ZERO_FIELD_EPS: f64 = 1e-12;

/// Minimum separation of the two largest eigenvector overlaps before level
/// labels are declared ambiguous at a continuation step.
const LABEL_OVERLAP_MARGIN: f64 = 1e-6;

/// Number of field steps used for adiabatic continuation from the high-field
/// starting point down to the requested field.
const CONTINUATION_STEPS: usize = 80;

#[derive(Debug, Error)]
pub enum LevelsError {
    #[error("temperature {0} K outside supported range (0, 600)")]
    TemperatureOutOfRange(f64),
    #[error("ambiguous level labeling at B = {b_mt} mT (overlap margin {margin:.3e})")]
    LabelingAmbiguity { b_mt: f64, margin: f64 },
    #[error("g-factor must be positive, got {0}")]
    NonPositiveGFactor(f64),
    #[error("field axis must be a nonzero vector")]
    ZeroAxis,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Spin projection onto the quantization axis, in the high-field limit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinProjection {
    MinusThreeHalf,
    MinusHalf,
    PlusHalf,
    PlusThreeHalf,
}

impl SpinProjection {
    pub const ALL: [SpinProjection; 4] = [
        SpinProjection::MinusThreeHalf,
        SpinProjection::MinusHalf,
        SpinProjection::PlusHalf,
        SpinProjection::PlusThreeHalf,
    ];

    /// Projection value m.
    pub fn value(self) -> f64 {
        self.twice() as f64 / 2.0
    }

    /// 2m, an integer.
    pub fn twice(self) -> i32 {
        match self {
            SpinProjection::MinusThreeHalf => -3,
            SpinProjection::MinusHalf => -1,
            SpinProjection::PlusHalf => 1,
            SpinProjection::PlusThreeHalf => 3,
        }
    }
}

impl std::fmt::Display for SpinProjection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SpinProjection::MinusThreeHalf => "-3/2",
            SpinProjection::MinusHalf => "-1/2",
            SpinProjection::PlusHalf => "+1/2",
            SpinProjection::PlusThreeHalf => "+3/2",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SpinProjection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "-3/2" => Ok(SpinProjection::MinusThreeHalf),
            "-1/2" => Ok(SpinProjection::MinusHalf),
            "+1/2" | "1/2" => Ok(SpinProjection::PlusHalf),
            "+3/2" | "3/2" => Ok(SpinProjection::PlusThreeHalf),
            other => Err(format!("unknown spin projection '{other}'")),
        }
    }
}

/// The three spin-3/2 operators in the S_z eigenbasis (m = 3/2, 1/2, -1/2, -3/2).
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub sx: Mat4,
    pub sy: Mat4,
    pub sz: Mat4,
}

/// Standard spin-3/2 matrices, dimensionless (hbar = 1).
pub fn spin_matrices() -> SpinMatrices {
    let mut sz = Mat4::zeros();
    for (i, m) in [1.5, 0.5, -0.5, -1.5].iter().enumerate() {
        sz.e[i][i] = C64::new(*m, 0.0);
    }
    // Ladder amplitudes <m+1|S+|m> for m = 1/2, -1/2, -3/2.
    let amp = [3f64.sqrt(), 2.0, 3f64.sqrt()];
    let mut sx = Mat4::zeros();
    let mut sy = Mat4::zeros();
    for (k, a) in amp.iter().enumerate() {
        // basis index k has m = 3/2 - k; S+ couples index k+1 -> k
        sx.e[k][k + 1] = C64::new(a / 2.0, 0.0);
        sx.e[k + 1][k] = C64::new(a / 2.0, 0.0);
        sy.e[k][k + 1] = C64::new(0.0, -a / 2.0);
        sy.e[k + 1][k] = C64::new(0.0, a / 2.0);
    }
    SpinMatrices { sx, sy, sz }
}

/// Parameters of the uniaxial spin-3/2 Hamiltonian.
///
/// `d` is half the zero-field splitting in MHz (E/h convention); `b` is the
/// magnetic field vector in mT with z along the crystal c-axis.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianParams {
    pub d: f64,
    pub g_factor: f64,
    pub b: [f64; 3],
}

impl HamiltonianParams {
    pub fn validate(&self) -> Result<(), LevelsError> {
        if !(self.g_factor > 0.0) {
            return Err(LevelsError::NonPositiveGFactor(self.g_factor));
        }
        Ok(())
    }
}

/// H = d (S_z^2 - 5/4) + g mu_B (b . S), all entries in MHz. Traceless and
/// Hermitian by construction.
pub fn build_hamiltonian(p: &HamiltonianParams) -> Mat4 {
    let s = spin_matrices();
    let mut h = Mat4::zeros();
    // d (S_z^2 - 5/4 I)
    let sz2 = s.sz.mul(&s.sz);
    let mut zfs = sz2;
    for i in 0..4 {
        zfs.e[i][i] -= C64::new(1.25, 0.0);
    }
    h = h.add(&zfs.scale(p.d));
    let zee = p.g_factor * MU_B_MHZ_PER_MT;
    h = h.add(&s.sx.scale(zee * p.b[0]));
    h = h.add(&s.sy.scale(zee * p.b[1]));
    h = h.add(&s.sz.scale(zee * p.b[2]));
    h
}

/// Linear temperature model of the excited-state zero-field splitting.
///
/// `two_d_g` is the (temperature-independent) ground-state splitting 2D in
/// MHz; `two_d_e_ref` the excited-state splitting at `t_ref` K; `slope` the
/// rate in MHz/K at which 2D of the excited state grows as the sample cools.
#[derive(Clone, Debug, PartialEq)]
pub struct ZfsTemperatureModel {
    pub two_d_g: f64,
    pub two_d_e_ref: f64,
    pub slope: f64,
    pub t_ref: f64,
}

impl ZfsTemperatureModel {
    /// Ground-state D (half splitting), MHz.
    pub fn d_g(&self) -> f64 {
        self.two_d_g / 2.0
    }
}

/// Excited-state D(T) = (two_d_e_ref + slope * (t_ref - t)) / 2 in MHz.
pub fn d_e_of_temperature(m: &ZfsTemperatureModel, t: f64) -> Result<f64, LevelsError> {
    if !(t > 0.0 && t < 600.0) {
        return Err(LevelsError::TemperatureOutOfRange(t));
    }
    Ok((m.two_d_e_ref + m.slope * (m.t_ref - t)) / 2.0)
}

/// Four eigenlevels with their adiabatic spin-projection labels.
///
/// Energies are ascending (MHz); `labels[i]` belongs to `energies[i]` and the
/// four labels are always a permutation of the four projections.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub energies: [f64; 4],
    pub labels: [SpinProjection; 4],
}

impl LevelSet {
    pub fn energy_of(&self, m: SpinProjection) -> f64 {
        for i in 0..4 {
            if self.labels[i] == m {
                return self.energies[i];
            }
        }
        unreachable!("labels are a permutation of all projections")
    }
}

/// A transition between two labeled levels; `from` is the lower level, so
/// `frequency` (MHz) is non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub from: SpinProjection,
    pub to: SpinProjection,
    pub delta_m: i32,
    pub frequency: f64,
}

struct LabeledVectors {
    energies: [f64; 4],
    labels: [SpinProjection; 4],
    vectors: Mat4,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Eigenvectors of (axis . S) labeled by their projection eigenvalue.
/// Returns columns ordered as [-3/2, -1/2, +1/2, +3/2].
fn zeeman_basis(axis: [f64; 3]) -> Result<Mat4, LevelsError> {
    let n = norm3(axis);
    if n == 0.0 {
        return Err(LevelsError::ZeroAxis);
    }
    let s = spin_matrices();
    let mut ns = Mat4::zeros();
    ns = ns.add(&s.sx.scale(axis[0] / n));
    ns = ns.add(&s.sy.scale(axis[1] / n));
    ns = ns.add(&s.sz.scale(axis[2] / n));
    let d = eigen_hermitian(&ns)?;
    // Eigenvalues are -3/2, -1/2, 1/2, 3/2 and ascending, matching ALL order.
    let mut out = Mat4::zeros();
    for (slot, m) in SpinProjection::ALL.iter().enumerate() {
        let mut best = 0usize;
        let mut dist = f64::INFINITY;
        for j in 0..4 {
            let dd = (d.values[j] - m.value()).abs();
            if dd < dist {
                dist = dd;
                best = j;
            }
        }
        for k in 0..4 {
            out.e[k][slot] = d.vectors.e[k][best];
        }
    }
    Ok(out)
}

/// Assigns one label per eigenvector by maximum overlap with a reference set,
/// demanding an unambiguous margin between the best and second-best overlap.
fn assign_labels(
    eig: &crate::linalg::EigenDecomposition,
    reference: &Mat4,
    ref_labels: &[SpinProjection; 4],
    b_mt: f64,
) -> Result<[SpinProjection; 4], LevelsError> {
    let mut labels: [Option<SpinProjection>; 4] = [None; 4];
    for r in 0..4 {
        let refv = reference.column(r);
        let mut best = (0usize, -1.0f64);
        let mut second = -1.0f64;
        for j in 0..4 {
            let o = overlap2(&eig.vectors.column(j), &refv);
            if o > best.1 {
                second = best.1;
                best = (j, o);
            } else if o > second {
                second = o;
            }
        }
        let margin = best.1 - second.max(0.0);
        if margin < LABEL_OVERLAP_MARGIN {
            return Err(LevelsError::LabelingAmbiguity { b_mt, margin });
        }
        if labels[best.0].is_some() {
            return Err(LevelsError::LabelingAmbiguity { b_mt, margin: 0.0 });
        }
        labels[best.0] = Some(ref_labels[r]);
    }
    Ok([
        labels[0].expect("bijective assignment"),
        labels[1].expect("bijective assignment"),
        labels[2].expect("bijective assignment"),
        labels[3].expect("bijective assignment"),
    ])
}

fn labeled_at_field(
    p: &HamiltonianParams,
    field: [f64; 3],
    reference: &Mat4,
    ref_labels: &[SpinProjection; 4],
) -> Result<LabeledVectors, LevelsError> {
    let hp = HamiltonianParams { d: p.d, g_factor: p.g_factor, b: field };
    let h = build_hamiltonian(&hp);
    let eig = eigen_hermitian(&h)?;
    let labels = assign_labels(&eig, reference, ref_labels, norm3(field))?;
    Ok(LabeledVectors { energies: eig.values, labels, vectors: eig.vectors })
}

/// Levels at exactly zero field: the Hamiltonian is diagonal in the S_z basis,
/// so each basis state is its own label.
fn zero_field_levels(p: &HamiltonianParams) -> LevelSet {
    // basis order m = 3/2, 1/2, -1/2, -3/2
    let basis_m = [
        SpinProjection::PlusThreeHalf,
        SpinProjection::PlusHalf,
        SpinProjection::MinusHalf,
        SpinProjection::MinusThreeHalf,
    ];
    let mut pairs: Vec<(f64, SpinProjection)> = basis_m
        .iter()
        .map(|m| (p.d * (m.value() * m.value() - 1.25), *m))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.twice().cmp(&b.1.twice())));
    LevelSet {
        energies: [pairs[0].0, pairs[1].0, pairs[2].0, pairs[3].0],
        labels: [pairs[0].1, pairs[1].1, pairs[2].1, pairs[3].1],
    }
}

/// Eigenlevels of the spin-3/2 Hamiltonian with adiabatic labels.
///
/// Labels follow the eigenvectors down from a field 10x larger than |b| along
/// the same axis, where the spin projection is quantized along the field.
pub fn eigenlevels(p: &HamiltonianParams) -> Result<LevelSet, LevelsError> {
    p.validate()?;
    let bnorm = norm3(p.b);
    if bnorm < ZERO_FIELD_EPS {
        return Ok(zero_field_levels(p));
    }
    let axis = [p.b[0] / bnorm, p.b[1] / bnorm, p.b[2] / bnorm];
    let zb = zeeman_basis(axis)?;
    // At the high-field start the labels are the Zeeman projections.
    let start = 10.0 * bnorm;
    let mut current = labeled_at_field(
        p,
        [axis[0] * start, axis[1] * start, axis[2] * start],
        &zb,
        &SpinProjection::ALL,
    )?;
    for k in 1..=CONTINUATION_STEPS {
        let bk = start + (bnorm - start) * (k as f64 / CONTINUATION_STEPS as f64);
        current = labeled_at_field(
            p,
            [axis[0] * bk, axis[1] * bk, axis[2] * bk],
            &current.vectors,
            &current.labels,
        )?;
    }
    Ok(LevelSet { energies: current.energies, labels: current.labels })
}

/// All 6 level-pair transitions, optionally filtered by |delta_m|.
pub fn transitions(
    p: &HamiltonianParams,
    delta_m_filter: Option<i32>,
) -> Result<Vec<Transition>, LevelsError> {
    let levels = eigenlevels(p)?;
    Ok(transitions_of(&levels, delta_m_filter))
}

/// Transition list from an already-computed level set.
pub fn transitions_of(levels: &LevelSet, delta_m_filter: Option<i32>) -> Vec<Transition> {
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        for j in (i + 1)..4 {
            let from = levels.labels[i];
            let to = levels.labels[j];
            let delta_m = (to.twice() - from.twice()) / 2;
            if let Some(f) = delta_m_filter {
                if delta_m.abs() != f.abs() {
                    continue;
                }
            }
            out.push(Transition {
                from,
                to,
                delta_m,
                frequency: levels.energies[j] - levels.energies[i],
            });
        }
    }
    out
}

/// One root of the resonance condition |E_i(B) - E_j(B)| = f_drive.
#[derive(Clone, Debug)]
pub struct ResonanceField {
    pub b_mt: f64,
    pub transition: Transition,
}

/// Scan grid step for resonance-field bracketing, mT.
const BRACKET_STEP_MT: f64 = 0.01;
/// Bisection width target, mT. Chosen so the refined root re-evaluates to the
/// drive frequency well within 1e-3 MHz.
const BISECT_TOL_MT: f64 = 1e-7;

/// All magnetic fields in `b_range` at which a transition of the requested
/// |delta_m| matches `f_drive` (MHz), for fields along `axis`.
///
/// Bracketing runs on a 0.01 mT grid with labels continued along the grid;
/// each bracket is then refined by bisection. Grid points where labeling is
/// ambiguous (degenerate crossings) are skipped. Returns roots sorted by
/// field; the list is empty when there is no root.
pub fn resonance_fields(
    f_drive: f64,
    p_template: &HamiltonianParams,
    axis: [f64; 3],
    b_range: (f64, f64),
    delta_m: i32,
) -> Vec<ResonanceField> {
    let (lo, hi) = if b_range.0 <= b_range.1 { b_range } else { (b_range.1, b_range.0) };
    if !(f_drive > 0.0) || !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Vec::new();
    }
    let n_axis = norm3(axis);
    if n_axis == 0.0 {
        return Vec::new();
    }
    let axis = [axis[0] / n_axis, axis[1] / n_axis, axis[2] / n_axis];

    let n_steps = ((hi - lo) / BRACKET_STEP_MT).ceil() as usize;
    let n_points = n_steps.max(1) + 1;

    // Label along the grid from the high end down: one continuation from
    // 10x the maximum field, then a walk across the grid.
    let mut grid: Vec<Option<LevelSet>> = vec![None; n_points];
    let field_at = |b: f64| [axis[0] * b, axis[1] * b, axis[2] * b];

    let seed = (|| -> Result<LabeledVectors, LevelsError> {
        let zb = zeeman_basis(axis)?;
        let start = 10.0 * hi.max(ZERO_FIELD_EPS);
        let mut cur =
            labeled_at_field(p_template, field_at(start), &zb, &SpinProjection::ALL)?;
        for k in 1..=CONTINUATION_STEPS {
            let bk = start + (hi - start) * (k as f64 / CONTINUATION_STEPS as f64);
            cur = labeled_at_field(p_template, field_at(bk), &cur.vectors, &cur.labels)?;
        }
        Ok(cur)
    })();
    let mut walker = match seed {
        Ok(v) => v,
        Err(_) => return Vec::new(),
    };

    for idx in (0..n_points).rev() {
        let b = lo + (hi - lo) * (idx as f64 / (n_points - 1).max(1) as f64);
        if b < ZERO_FIELD_EPS {
            let hp = HamiltonianParams { d: p_template.d, g_factor: p_template.g_factor, b: field_at(0.0) };
            grid[idx] = Some(zero_field_levels(&hp));
            continue;
        }
        match labeled_at_field(p_template, field_at(b), &walker.vectors, &walker.labels) {
            Ok(lv) => {
                grid[idx] = Some(LevelSet { energies: lv.energies, labels: lv.labels });
                walker = lv;
            }
            Err(_) => {
                grid[idx] = None;
            }
        }
    }

    // Frequency of a labeled pair within a level set.
    let pair_freq = |ls: &LevelSet, a: SpinProjection, b: SpinProjection| -> f64 {
        (ls.energy_of(a) - ls.energy_of(b)).abs()
    };

    let mut roots: Vec<ResonanceField> = Vec::new();
    let pairs: Vec<(SpinProjection, SpinProjection)> = {
        let all = SpinProjection::ALL;
        let mut v = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let dm = (all[j].twice() - all[i].twice()) / 2;
                if dm.abs() == delta_m.abs() {
                    v.push((all[i], all[j]));
                }
            }
        }
        v
    };

    let b_of = |idx: usize| lo + (hi - lo) * (idx as f64 / (n_points - 1).max(1) as f64);

    for (ma, mb) in pairs {
        for idx in 0..(n_points - 1) {
            let (Some(l0), Some(l1)) = (&grid[idx], &grid[idx + 1]) else { continue };
            let g0 = pair_freq(l0, ma, mb) - f_drive;
            let g1 = pair_freq(l1, ma, mb) - f_drive;
            if g0 == 0.0 {
                // Exact hit on a grid point; record once.
                if idx == 0 || grid[idx - 1].is_none() {
                    roots.push(make_root(p_template, field_at(b_of(idx)), b_of(idx), ma, mb));
                }
                continue;
            }
            if g0 * g1 < 0.0 {
                let mut blo = b_of(idx);
                let mut bhi = b_of(idx + 1);
                let mut glo = g0;
                for _ in 0..200 {
                    if bhi - blo < BISECT_TOL_MT {
                        break;
                    }
                    let mid = 0.5 * (blo + bhi);
                    let hp = HamiltonianParams {
                        d: p_template.d,
                        g_factor: p_template.g_factor,
                        b: field_at(mid),
                    };
                    let Ok(ls) = eigenlevels(&hp) else { break };
                    let gm = pair_freq(&ls, ma, mb) - f_drive;
                    if glo * gm <= 0.0 {
                        bhi = mid;
                    } else {
                        blo = mid;
                        glo = gm;
                    }
                }
                let root_b = 0.5 * (blo + bhi);
                roots.push(make_root(p_template, field_at(root_b), root_b, ma, mb));
            }
        }
    }

    roots.sort_by(|a, b| a.b_mt.partial_cmp(&b.b_mt).unwrap());
    roots
}

fn make_root(
    p: &HamiltonianParams,
    field: [f64; 3],
    b_mt: f64,
    ma: SpinProjection,
    mb: SpinProjection,
) -> ResonanceField {
    let hp = HamiltonianParams { d: p.d, g_factor: p.g_factor, b: field };
    let transition = match eigenlevels(&hp) {
        Ok(ls) => {
            let ea = ls.energy_of(ma);
            let eb = ls.energy_of(mb);
            let (from, to, f) = if ea <= eb { (ma, mb, eb - ea) } else { (mb, ma, ea - eb) };
            Transition { from, to, delta_m: (to.twice() - from.twice()) / 2, frequency: f }
        }
        Err(_) => Transition {
            from: ma,
            to: mb,
            delta_m: (mb.twice() - ma.twice()) / 2,
            frequency: f64::NAN,
        },
    };
    ResonanceField { b_mt, transition }
}
