//! Singularity location for quadratic star-exponentials, periodic slit
//! placement, analytic continuation of the square-root amplitude along
//! paths with sheet bookkeeping, and periodicity classification.
//!
//! The amplitude `2^m det(D(t))^{-1/2}` of a quadratic star-exponential is
//! two-valued; its branch points are the zeros of `det D`. Slits are set
//! periodically (one ray per branch point, repeated with the period of the
//! singular set), and a path's sheet is the parity of its slit crossings.

use crate::error::{Error, Result};
use crate::numerics::{c64, det, identity, max_norm, CMat};
use crate::quad::{
    delta_k, exp_quad, exp_quad_denominator, gaussian_product, kappa_of, GaussianElement,
    GroupPoint, SpElement,
};
use num::complex::Complex64;
use std::f64::consts::PI;

/// Clearance below which a path point is considered to hit a singularity.
pub const EPS_SING: f64 = 1e-8;

/// Subdivision budget for one continuation segment.
const MAX_DEPTH: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathMode {
    /// Straight tracing, evaluated by continuous chase along the segment.
    Straight,
    /// A path avoiding singular points.
    Avoid,
    /// A path avoiding singular points and slits, ending on the start sheet.
    SameSheet,
}

/// Piecewise-linear path in the complex parameter plane, starting at 0.
#[derive(Clone, Debug)]
pub struct PathSpec {
    pub waypoints: Vec<Complex64>,
    pub mode: PathMode,
}

impl PathSpec {
    pub fn new(waypoints: Vec<Complex64>, mode: PathMode) -> Result<Self> {
        if waypoints.is_empty() || waypoints[0].norm() > 1e-14 {
            return Err(Error::Path("path must start at 0".into()));
        }
        for w in waypoints.windows(2) {
            if (w[1] - w[0]).norm() < 1e-14 {
                return Err(Error::Path("consecutive waypoints must be distinct".into()));
            }
        }
        Ok(Self { waypoints, mode })
    }

    pub fn straight_to(end: Complex64) -> Self {
        Self {
            waypoints: vec![c64(0.0, 0.0), end],
            mode: PathMode::Straight,
        }
    }

    pub fn endpoint(&self) -> Complex64 {
        *self.waypoints.last().unwrap()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Clone, Debug)]
pub struct Anchor {
    pub t: Complex64,
    pub multiplicity: usize,
    pub line_index: usize,
}

/// A slit: a ray from `base` in direction `dir` (unit), replicated with
/// the map's period when one exists.
#[derive(Clone, Debug)]
pub struct Slit {
    pub base: Complex64,
    pub dir: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorMethod {
    EigenArctan,
    PolynomialRoots,
    ScanFallback,
}

/// Rectangle in the complex plane for scans and fallback root-finding.
#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Window {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Self {
            re: (re0, re1),
            im: (im0, im1),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }
}

#[derive(Clone, Debug)]
pub struct SingularityMap {
    pub m: usize,
    /// Period of the singular set in the parameter plane, when the
    /// generator squares to a scalar.
    pub period: Option<Complex64>,
    /// Unit direction of the evaluation axis (the line through 0 along
    /// which one-parameter subgroups run); slits point away from it.
    pub axis: Complex64,
    /// Base singular points, reduced to the fundamental strip.
    pub anchors: Vec<Anchor>,
    pub slits: Vec<Slit>,
    pub method: AnchorMethod,
    /// Set when an anchor sits on the evaluation line.
    pub on_line: bool,
}

impl SingularityMap {
    pub fn empty(m: usize) -> Self {
        Self {
            m,
            period: Some(c64(PI, 0.0)),
            axis: c64(1.0, 0.0),
            anchors: vec![],
            slits: vec![],
            method: AnchorMethod::EigenArctan,
            on_line: false,
        }
    }

    /// All singular points within a window (anchors plus period copies).
    pub fn points_in(&self, window: &Window) -> Vec<(Complex64, usize)> {
        let mut pts = vec![];
        for a in &self.anchors {
            match self.period {
                Some(p) => {
                    // cover the window by translating along the period
                    let span = ((window.re.1 - window.re.0).abs()
                        + (window.im.1 - window.im.0).abs())
                        / p.norm()
                        + 2.0;
                    let kmax = span.ceil() as i64 + 1;
                    for k in -kmax..=kmax {
                        let z = a.t + p * (k as f64);
                        if window.contains(z) {
                            pts.push((z, a.line_index));
                        }
                    }
                }
                None => {
                    if window.contains(a.t) {
                        pts.push((a.t, a.line_index));
                    }
                }
            }
        }
        pts
    }

    /// Distance from a point to the nearest singular point.
    pub fn distance(&self, z: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        for a in &self.anchors {
            match self.period {
                Some(p) => {
                    // nearest period copy by projection
                    let k = ((z - a.t) / p).re.round();
                    for dk in [-1.0, 0.0, 1.0] {
                        best = best.min((z - a.t - p * (k + dk)).norm());
                    }
                }
                None => best = best.min((z - a.t).norm()),
            }
        }
        best
    }
}

/// Complex arctangent via the principal logarithm.
fn atan_c(z: Complex64) -> Complex64 {
    let i = c64(0.0, 1.0);
    ((c64(1.0, 0.0) + i * z) / (c64(1.0, 0.0) - i * z)).ln() / (2.0 * i)
}

/// Reduce to the fundamental strip `Re s in [0, pi)`.
fn mod_pi(s: Complex64) -> Complex64 {
    let k = (s.re / PI).floor();
    s - c64(k * PI, 0.0)
}

/// Locate the singular points of `t -> det(I - kappa + e^{-2 t alpha}(I + kappa))`.
///
/// When `alpha^2` is a scalar `lambda I` with `lambda != 0`, write
/// `alpha = c beta` with `beta^2 = -I`; the determinant factors through
/// `det(cos(s) I + sin(s) M)` with `s = c t` and `M = -beta J K`, so the
/// anchors are `s_j = -atan(1/mu_j) mod pi` over the eigenvalues `mu_j` of
/// `M`, and the singular set is `pi/c`-periodic. A nilpotent `alpha` gives
/// finitely many anchors from a polynomial determinant, and everything
/// else falls back to a window scan.
pub fn find_singularities(
    alpha: &SpElement,
    k: &CMat,
    window: &Window,
) -> Result<SingularityMap> {
    let m = alpha.m;
    let n = 2 * m;
    let id = identity(n);
    let alpha2 = &alpha.mat * &alpha.mat;
    let scale = max_norm(&alpha.mat).max(1e-12);
    let lambda = alpha2.diagonal().sum() / c64(n as f64, 0.0);
    let off = max_norm(&(&alpha2 - id.map(|z| z * lambda)));

    if off < 1e-10 * scale * scale {
        if lambda.norm() < 1e-12 * scale * scale {
            // nilpotent: D(t) = 2(I - t alpha (I + kappa))
            let kappa = kappa_of(k);
            let b = &alpha.mat * (&id + &kappa);
            let evs = crate::numerics::eigenvalues(&b);
            let mut anchors = vec![];
            for (idx, ev) in evs.iter().enumerate() {
                if ev.norm() > 1e-10 {
                    anchors.push(Anchor {
                        t: ev.inv(),
                        multiplicity: 1,
                        line_index: idx,
                    });
                }
            }
            return Ok(SingularityMap {
                m,
                period: None,
                axis: c64(1.0, 0.0),
                anchors: merge_multiplicities(anchors),
                slits: vec![],
                method: AnchorMethod::PolynomialRoots,
                on_line: false,
            });
        }
        let c = (-lambda).sqrt();
        let beta = alpha.mat.map(|z| z / c);
        let m_mat = -(&beta * crate::numerics::j_mat(m) * k);
        let evs = crate::numerics::eigenvalues(&m_mat);
        let sep = {
            let mut s = f64::INFINITY;
            for i in 0..evs.len() {
                for j in 0..i {
                    s = s.min((evs[i] - evs[j]).norm());
                }
            }
            s
        };
        let period = c64(PI, 0.0) / c;
        let axis = period / period.norm();
        // exact degeneracy keeps the eigen route (even-multiplicity
        // anchors have no branch); a near-degenerate spectrum is
        // ill-conditioned and routes to the scan
        if sep > 1e-6 || sep < 1e-10 {
            let mut anchors = vec![];
            for (idx, mu) in evs.iter().enumerate() {
                let s = if mu.norm() < 1e-12 {
                    // cos s = 0
                    c64(PI / 2.0, 0.0)
                } else {
                    mod_pi(-atan_c(mu.inv()))
                };
                anchors.push(Anchor {
                    t: s / c,
                    multiplicity: 1,
                    line_index: idx,
                });
            }
            return Ok(SingularityMap {
                m,
                period: Some(period),
                axis,
                anchors: merge_multiplicities(anchors),
                slits: vec![],
                method: AnchorMethod::EigenArctan,
                on_line: false,
            });
        }
        // near-degenerate: scan the fundamental strip of delta along axis
        let anchors = scan_delta_zeros(&m_mat, c, window)?;
        return Ok(SingularityMap {
            m,
            period: Some(period),
            axis,
            anchors,
            slits: vec![],
            method: AnchorMethod::ScanFallback,
            on_line: false,
        });
    }

    // general alpha: window scan of det D(t)
    let f = |t: Complex64| det(&exp_quad_denominator(alpha, t, k));
    let anchors = scan_window_zeros(&f, window)?;
    Ok(SingularityMap {
        m,
        period: None,
        axis: c64(1.0, 0.0),
        anchors,
        slits: vec![],
        method: AnchorMethod::ScanFallback,
        on_line: false,
    })
}

fn merge_multiplicities(mut anchors: Vec<Anchor>) -> Vec<Anchor> {
    anchors.sort_by(|a, b| {
        (a.t.re, a.t.im)
            .partial_cmp(&(b.t.re, b.t.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut merged: Vec<Anchor> = vec![];
    for a in anchors {
        if let Some(last) = merged.last_mut() {
            if (last.t - a.t).norm() < 1e-9 {
                last.multiplicity += a.multiplicity;
                continue;
            }
        }
        merged.push(a);
    }
    merged
}

/// Zeros of `delta(s) = det(cos s I + sin s M)` in the fundamental strip,
/// scanned over the window rescaled by `c` and polished by Newton steps.
fn scan_delta_zeros(m_mat: &CMat, c: Complex64, window: &Window) -> Result<Vec<Anchor>> {
    let f = |s: Complex64| delta_k(s, m_mat);
    let strip = Window::new(
        0.0,
        PI,
        window.im.0.min(-3.0).max(-20.0),
        window.im.1.max(3.0).min(20.0),
    );
    let mut anchors = scan_window_zeros(&f, &strip)?;
    for a in &mut anchors {
        a.t /= c;
    }
    Ok(anchors)
}

/// Grid scan plus Newton polish for zeros of a holomorphic function on a
/// window. Used as the fallback when the eigenvalue route is unavailable.
fn scan_window_zeros<F: Fn(Complex64) -> Complex64>(
    f: &F,
    window: &Window,
) -> Result<Vec<Anchor>> {
    let nx = 80usize;
    let ny = 80usize;
    let dx = (window.re.1 - window.re.0) / nx as f64;
    let dy = (window.im.1 - window.im.0) / ny as f64;
    if dx <= 0.0 || dy <= 0.0 {
        return Err(Error::Path("empty scan window".into()));
    }
    let mut candidates: Vec<Complex64> = vec![];
    let mut vals = vec![vec![c64(0.0, 0.0); ny + 1]; nx + 1];
    for i in 0..=nx {
        for j in 0..=ny {
            let z = c64(window.re.0 + dx * i as f64, window.im.0 + dy * j as f64);
            vals[i][j] = f(z);
        }
    }
    for i in 1..nx {
        for j in 1..ny {
            let v = vals[i][j].norm();
            let is_min = (i - 1..=i + 1).all(|a| {
                (j - 1..=j + 1).all(|b| vals[a][b].norm() >= v - 1e-300)
            });
            if is_min && v < 0.5 {
                candidates.push(c64(
                    window.re.0 + dx * i as f64,
                    window.im.0 + dy * j as f64,
                ));
            }
        }
    }
    let mut zeros: Vec<Complex64> = vec![];
    'cand: for z0 in candidates {
        let mut z = z0;
        for _ in 0..60 {
            let fv = f(z);
            if fv.norm() < 1e-12 {
                break;
            }
            let h = 1e-7 * (1.0 + z.norm());
            let df = (f(z + c64(h, 0.0)) - f(z - c64(h, 0.0))) / (2.0 * h);
            if df.norm() < 1e-14 {
                continue 'cand;
            }
            let step = fv / df;
            z -= step;
            if step.norm() < 1e-13 {
                break;
            }
        }
        if f(z).norm() < 1e-9 && window.contains(z) {
            if zeros.iter().all(|w| (w - z).norm() > 1e-6) {
                zeros.push(z);
            }
        }
    }
    Ok(zeros
        .into_iter()
        .enumerate()
        .map(|(idx, t)| Anchor {
            t,
            multiplicity: 1,
            line_index: idx,
        })
        .collect())
}

/// Place one slit per odd-multiplicity anchor: a ray perpendicular to the
/// evaluation axis, pointing away from it, replicated with the period.
/// Anchors on the evaluation line set the `on_line` flag instead.
pub fn place_slits(mut map: SingularityMap) -> SingularityMap {
    let axis = map.axis;
    let mut slits = vec![];
    let mut on_line = map.on_line;
    for a in &map.anchors {
        if a.multiplicity % 2 == 0 {
            continue;
        }
        // signed distance of the anchor from the evaluation line
        let perp = (a.t / axis).im;
        if perp.abs() < EPS_SING {
            on_line = true;
            continue;
        }
        let dir = c64(0.0, 1.0) * axis * perp.signum();
        slits.push(Slit { base: a.t, dir });
    }
    map.slits = slits;
    map.on_line = on_line;
    map
}

/// Number of times the segment `[p, q)` crosses the slit rays of the map.
pub fn count_crossings(map: &SingularityMap, p: Complex64, q: Complex64) -> usize {
    let mut count = 0usize;
    let seg = q - p;
    for slit in &map.slits {
        let copies: Vec<Complex64> = match map.period {
            Some(per) => {
                let reach = (seg.norm() + (p - slit.base).norm()) / per.norm() + 2.0;
                let kmax = reach.ceil() as i64;
                (-kmax..=kmax).map(|k| slit.base + per * (k as f64)).collect()
            }
            None => vec![slit.base],
        };
        for base in copies {
            // p + x seg = base + s dir, x in [0,1), s in [0, inf)
            let d = slit.dir;
            let a11 = seg.re;
            let a12 = -d.re;
            let a21 = seg.im;
            let a22 = -d.im;
            let rhs1 = base.re - p.re;
            let rhs2 = base.im - p.im;
            let den = a11 * a22 - a12 * a21;
            if den.abs() < 1e-14 {
                continue;
            }
            let x = (rhs1 * a22 - a12 * rhs2) / den;
            let s = (a11 * rhs2 - rhs1 * a21) / den;
            if (0.0..1.0).contains(&x) && s >= 0.0 {
                count += 1;
            }
        }
    }
    count
}

/// A continued value together with its sheet bookkeeping.
#[derive(Clone, Debug)]
pub struct SheetedValue {
    pub value: GaussianElement,
    pub sheet: i8,
    pub crossings: usize,
    /// Whether the continued square root disagrees with the principal
    /// branch at the endpoint.
    pub principal_mismatch: bool,
}

/// Tracks several square roots under simultaneous continuation. Steps are
/// accepted only while every determinant ratio stays in the right
/// half-plane with bounded modulus change, otherwise they are bisected.
pub struct SqrtTracker {
    pub d: Vec<Complex64>,
    pub sqrt: Vec<Complex64>,
}

impl SqrtTracker {
    /// Start from the principal square roots of the initial determinants.
    pub fn principal(init: &[Complex64]) -> Self {
        Self {
            d: init.to_vec(),
            sqrt: init.iter().map(|d| d.sqrt()).collect(),
        }
    }

    /// Continue along one leg: `dets(s)` for `s in [0,1]` must satisfy
    /// `dets(0) == self.d`.
    pub fn advance<F>(&mut self, dets: &F) -> Result<()>
    where
        F: Fn(f64) -> Result<Vec<Complex64>>,
    {
        let n = self.d.len();
        let mut s = 0.0f64;
        // a conservative initial step keeps windings of the tracked
        // determinants visible to the ratio test
        let mut step = 1.0 / 32.0;
        let mut depth = 0u32;
        let mut steps_taken = 0u64;
        while s < 1.0 - 1e-15 {
            let target = (s + step).min(1.0);
            let new_d = dets(target)?;
            let mut ok = true;
            for i in 0..n {
                let ratio = new_d[i] / self.d[i];
                if !(ratio.re > 0.0 && ratio.norm() > 0.25 && ratio.norm() < 4.0) {
                    ok = false;
                    break;
                }
                if new_d[i].norm() < 1e-14 {
                    return Err(Error::SingularPoint {
                        t_re: target,
                        t_im: f64::NAN,
                    });
                }
            }
            if ok {
                for i in 0..n {
                    self.sqrt[i] =
                        crate::numerics::continue_sqrt(self.sqrt[i], self.d[i], new_d[i]);
                }
                self.d = new_d;
                s = target;
                if depth > 0 {
                    depth -= 1;
                    step *= 2.0;
                } else {
                    step = (step * 1.5).min(1.0 / 16.0);
                }
            } else {
                depth += 1;
                step /= 2.0;
                if depth > MAX_DEPTH {
                    return Err(Error::Path(format!(
                        "continuation did not converge near s = {s}"
                    )));
                }
            }
            steps_taken += 1;
            if steps_taken > 1 << 21 {
                return Err(Error::Path(
                    "continuation exceeded subdivision budget".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Continue square roots along `s in [0,1]` starting from the principal
/// roots of `init` (which must equal `dets(0)`).
pub fn continue_sqrts<F>(dets: &F, init: &[Complex64]) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let mut tracker = SqrtTracker::principal(init);
    tracker.advance(dets)?;
    Ok(tracker.sqrt)
}

/// Trace the amplitude of the quadratic star-exponential of `alpha` along
/// a path, continuing `w(t) = 2^m det(D(t))^{-1/2}` from `w(0) = 1`.
/// Returns the continued endpoint value with sheet parity. An optional
/// precomputed singularity map is reused for crossing counts; otherwise
/// one is built for the path's bounding box.
pub fn trace_amplitude(
    alpha: &SpElement,
    k: &CMat,
    path: &PathSpec,
    map: Option<&SingularityMap>,
) -> Result<SheetedValue> {
    let m = alpha.m;
    let owned;
    let map = match map {
        Some(mm) => mm,
        None => {
            owned = place_slits(find_singularities(alpha, k, &path_window(path))?);
            &owned
        }
    };

    // Clearance check for modes that promise to avoid singular points.
    if path.mode != PathMode::Straight {
        for (p, q) in path.segments() {
            for step in 0..=40 {
                let z = p + (q - p) * (step as f64 / 40.0);
                if map.distance(z) < EPS_SING {
                    return Err(Error::Path(format!(
                        "path passes within eps of a singular point near {z}"
                    )));
                }
            }
        }
    }

    let mut crossings = 0usize;
    let mut d_cur = det(&exp_quad_denominator(alpha, c64(0.0, 0.0), k));
    let mut sqrt_cur = d_cur.sqrt(); // = 2^m
    for (p, q) in path.segments() {
        crossings += count_crossings(map, p, q);
        let seg = q - p;
        let seg_len = seg.norm();
        // Steps are bounded by the distance to the singular set, so the
        // determinant cannot wind around zero between samples; the ratio
        // test then resolves the local branch.
        let mut x = 0.0f64;
        let mut budget = 0u64;
        while x < 1.0 - 1e-15 {
            let t_here = p + seg * x;
            let d_near = map.distance(t_here);
            if d_near < EPS_SING {
                return Err(Error::SingularPoint {
                    t_re: t_here.re,
                    t_im: t_here.im,
                });
            }
            let cap_t = (0.4 * d_near).min(0.3);
            let mut step = (cap_t / seg_len).min(1.0 - x);
            let mut depth = 0u32;
            loop {
                let t_new = p + seg * (x + step);
                if map.distance(t_new) < EPS_SING {
                    return Err(Error::SingularPoint {
                        t_re: t_new.re,
                        t_im: t_new.im,
                    });
                }
                let d_new = det(&exp_quad_denominator(alpha, t_new, k));
                let ratio = d_new / d_cur;
                if ratio.re > 0.0 && ratio.norm() > 0.25 && ratio.norm() < 4.0 {
                    sqrt_cur = crate::numerics::continue_sqrt(sqrt_cur, d_cur, d_new);
                    d_cur = d_new;
                    x += step;
                    break;
                }
                depth += 1;
                step /= 2.0;
                if depth > MAX_DEPTH {
                    return Err(Error::Path(format!(
                        "continuation stalled near t = {t_new}"
                    )));
                }
            }
            budget += 1;
            if budget > 1 << 20 {
                return Err(Error::Path(
                    "continuation exceeded subdivision budget".into(),
                ));
            }
        }
    }

    let t_end = path.endpoint();
    let base = exp_quad(alpha, t_end, k)?;
    let amp = c64(2.0f64.powi(m as i32), 0.0) / sqrt_cur;
    let principal_mismatch = (amp - base.amp).norm() > (amp + base.amp).norm();
    let sheet = if crossings % 2 == 0 { 1 } else { -1 };
    let value = GaussianElement {
        m,
        amp,
        q: base.q,
        sheet,
    };
    Ok(SheetedValue {
        value,
        sheet,
        crossings,
        principal_mismatch,
    })
}

fn path_window(path: &PathSpec) -> Window {
    let mut re = (0.0f64, 0.0f64);
    let mut im = (0.0f64, 0.0f64);
    for w in &path.waypoints {
        re.0 = re.0.min(w.re);
        re.1 = re.1.max(w.re);
        im.0 = im.0.min(w.im);
        im.1 = im.1.max(w.im);
    }
    Window::new(re.0 - 1.0, re.1 + 1.0, im.0 - 1.0, im.1 + 1.0)
}

/// Build a path from 0 to `end` whose endpoint sits on the same sheet as
/// the origin: the straight segment, plus a small detour loop around one
/// anchor when the straight path crosses the slits an odd number of times.
pub fn same_sheet_path(
    alpha: &SpElement,
    k: &CMat,
    end: Complex64,
) -> Result<(PathSpec, SingularityMap)> {
    let straight = PathSpec::straight_to(end);
    let map = place_slits(find_singularities(alpha, k, &path_window(&straight))?);
    if map.on_line {
        return Err(Error::Path("singular point on the evaluation line".into()));
    }
    let mut crossings = 0usize;
    for (p, q) in straight.segments() {
        crossings += count_crossings(&map, p, q);
    }
    if crossings % 2 == 0 {
        return Ok((
            PathSpec::new(straight.waypoints, PathMode::SameSheet)?,
            map,
        ));
    }
    // detour: walk around the anchor nearest to the straight segment
    let window = path_window(&straight);
    let pts = map.points_in(&window);
    let target = pts
        .iter()
        .map(|(z, _)| *z)
        .min_by(|a, b| {
            seg_distance(*a, c64(0.0, 0.0), end)
                .partial_cmp(&seg_distance(*b, c64(0.0, 0.0), end))
                .unwrap()
        })
        .ok_or_else(|| Error::Path("no anchor available for detour".into()))?;
    let r = 0.3f64.min(0.45 * end.norm());
    // polygon loop around the anchor, inserted mid-path
    let mid = end * 0.5;
    let mut way = vec![c64(0.0, 0.0), mid];
    for step in 0..=8 {
        let theta = 2.0 * PI * step as f64 / 8.0;
        way.push(target + Complex64::from_polar(r, theta));
    }
    way.push(mid);
    way.push(end);
    // drop consecutive duplicates
    way.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    let path = PathSpec::new(way, PathMode::SameSheet)?;
    let mut total = 0usize;
    for (p, q) in path.segments() {
        total += count_crossings(&map, p, q);
    }
    if total % 2 != 0 {
        return Err(Error::Path(
            "same-sheet detour failed to even out the crossings".into(),
        ));
    }
    Ok((path, map))
}

fn seg_distance(z: Complex64, p: Complex64, q: Complex64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = (((z - p) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - p - d * t).norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Periodicity {
    PiPeriodic,
    AlternatingPi,
    SingularOnLine,
}

/// The singular-line pattern of a one-parameter family: which side of the
/// evaluation axis each singular line occupies.
#[derive(Clone, Debug)]
pub struct Classification {
    pub label: Periodicity,
    pub lines_positive: usize,
    pub lines_negative: usize,
    /// The three-way pattern: 1 = alternating with lines on the positive
    /// side, 2 = alternating with lines on the negative side, 3 = periodic
    /// with the evaluation line between the singular lines.
    pub pattern: Option<u8>,
}

/// Compare one period of the family against its start: equal gives the
/// periodic label, negated the alternating label; a singular point on the
/// evaluation line short-circuits.
pub fn classify_periodicity(alpha: &SpElement, k: &CMat) -> Result<Classification> {
    let probe = PathSpec::straight_to(c64(PI, 0.0));
    let map = place_slits(find_singularities(alpha, k, &path_window(&probe))?);
    let period = map
        .period
        .ok_or_else(|| Error::Inconclusive("family has no scalar period".into()))?;
    let mut pos = 0usize;
    let mut neg = 0usize;
    for a in &map.anchors {
        let perp = (a.t / map.axis).im;
        if perp.abs() < EPS_SING {
            return Ok(Classification {
                label: Periodicity::SingularOnLine,
                lines_positive: pos,
                lines_negative: neg,
                pattern: None,
            });
        } else if perp > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    if map.on_line {
        return Ok(Classification {
            label: Periodicity::SingularOnLine,
            lines_positive: pos,
            lines_negative: neg,
            pattern: None,
        });
    }
    let path = PathSpec::straight_to(period);
    let traced = trace_amplitude(alpha, k, &path, Some(&map))?;
    let at_period = traced.value;
    if max_norm(&at_period.q) > 1e-8 {
        return Err(Error::Inconclusive(
            "endpoint of one period is not scalar".into(),
        ));
    }
    let label = if (at_period.amp - c64(1.0, 0.0)).norm() < 1e-6 {
        Periodicity::PiPeriodic
    } else if (at_period.amp + c64(1.0, 0.0)).norm() < 1e-6 {
        Periodicity::AlternatingPi
    } else {
        return Err(Error::Inconclusive(format!(
            "period endpoint amplitude {} is not +/-1",
            at_period.amp
        )));
    };
    let pattern = match label {
        Periodicity::AlternatingPi if neg == 0 => Some(1),
        Periodicity::AlternatingPi if pos == 0 => Some(2),
        Periodicity::PiPeriodic if pos > 0 && neg > 0 => Some(3),
        _ => None,
    };
    Ok(Classification {
        label,
        lines_positive: pos,
        lines_negative: neg,
        pattern,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointSign {
    PlusOne,
    MinusOne,
    Singular,
}

/// Evaluate the full-period exponential of `<u g, u g>` by straight-line
/// tracing to `pi` and report the endpoint sign. Paths passing within
/// `band` of a singular point report the singular label instead.
pub fn sign_at_pi(g: &CMat, k: &CMat, band: f64) -> Result<EndpointSign> {
    let m = g.nrows() / 2;
    let a = g * g.transpose();
    let alpha = SpElement::from_quadratic(m, &a)?;
    let probe = PathSpec::straight_to(c64(PI, 0.0));
    let map = place_slits(find_singularities(&alpha, k, &path_window(&probe))?);
    // distance from the segment [0, pi] to the singular set
    let mut min_dist = f64::INFINITY;
    for (z, _) in map.points_in(&Window::new(-1.0, PI + 1.0, -2.0, 2.0)) {
        min_dist = min_dist.min(seg_distance(z, c64(0.0, 0.0), c64(PI, 0.0)));
    }
    if min_dist < band {
        return Ok(EndpointSign::Singular);
    }
    let traced = trace_amplitude(&alpha, k, &probe, Some(&map))?;
    let amp = traced.value.amp;
    if (amp - c64(1.0, 0.0)).norm() < 1e-6 {
        Ok(EndpointSign::PlusOne)
    } else if (amp + c64(1.0, 0.0)).norm() < 1e-6 {
        Ok(EndpointSign::MinusOne)
    } else {
        Err(Error::Inconclusive(format!(
            "endpoint amplitude {amp} is not a scalar +/-1"
        )))
    }
}

/// Star product of traced exponentials with evolution-equation staging:
/// the rightmost factor is raised to its full parameter first, then each
/// factor to its left in turn, and the product amplitude (each factor's
/// determinant plus every pairwise `det P` of the left fold) is continued
/// from the identity along that schedule. This realizes
/// `a * g := solution of the left evolution equation with initial g`,
/// fixed by continuous tracing, with no principal-branch ambiguity.
pub fn traced_product(factors: &[(SpElement, Complex64)], k: &CMat) -> Result<GaussianElement> {
    let nf = factors.len();
    let mut schedule: Vec<Vec<f64>> = vec![vec![0.0; nf]];
    for raised in (0..nf).rev() {
        let mut next = schedule.last().unwrap().clone();
        next[raised] = 1.0;
        schedule.push(next);
    }
    traced_product_schedule(factors, &schedule, k)
}

/// As [`traced_product`] but with an explicit schedule: a piecewise-linear
/// path of per-factor fractions from all-zeros to all-ones. The continued
/// amplitude depends on the homotopy class of the schedule relative to the
/// product's singular set, which is exactly the order-of-tracing effect.
pub fn traced_product_schedule(
    factors: &[(SpElement, Complex64)],
    schedule: &[Vec<f64>],
    k: &CMat,
) -> Result<GaussianElement> {
    if factors.is_empty() {
        return Err(Error::Path("empty product".into()));
    }
    let m = factors[0].0.m;
    let kappa = SpElement::new(m, kappa_of(k))?;
    if schedule.len() < 2
        || schedule[0].iter().any(|&x| x != 0.0)
        || schedule.last().unwrap().iter().any(|&x| (x - 1.0).abs() > 1e-15)
        || schedule.iter().any(|leg| leg.len() != factors.len())
    {
        return Err(Error::Path(
            "schedule must run from all-zeros to all-ones".into(),
        ));
    }

    // Determinants entering the product amplitude at a fraction vector:
    // one per factor, then one per fold of the left product.
    let dets_at = |fracs: &[f64]| -> Result<Vec<Complex64>> {
        let mut factor_ds = vec![];
        let mut fold_ds = vec![];
        let mut current: Option<GroupPoint> = None;
        for ((alpha, t), &frac) in factors.iter().zip(fracs) {
            let tt = *t * frac;
            let d_mat = exp_quad_denominator(alpha, tt, k);
            let d = det(&d_mat);
            if d.norm() < 1e-13 {
                return Err(Error::SingularPoint {
                    t_re: tt.re,
                    t_im: tt.im,
                });
            }
            factor_ds.push(d);
            let factor_point = GroupPoint {
                amp: c64(1.0, 0.0),
                alpha: SpElement::new(
                    m,
                    exp_quad(alpha, tt, k).map(|e| e.phase_sp()).map_err(|_| {
                        Error::SingularPoint {
                            t_re: tt.re,
                            t_im: tt.im,
                        }
                    })?,
                )?,
            };
            current = Some(match current {
                None => factor_point,
                Some(acc) => {
                    let id = identity(2 * m);
                    let p = &id
                        + &acc.alpha.mat
                            * (&id - &kappa.mat)
                            * &factor_point.alpha.mat
                            * (&id + &kappa.mat);
                    let dp = det(&p);
                    if dp.norm() < 1e-13 {
                        return Err(Error::OutsideChart(
                            "product undefined along the traced schedule".into(),
                        ));
                    }
                    fold_ds.push(dp);
                    gaussian_product(&acc, &factor_point, &kappa)?
                }
            });
        }
        factor_ds.extend(fold_ds);
        Ok(factor_ds)
    };

    let init = dets_at(&schedule[0])?;
    let mut tracker = SqrtTracker::principal(&init);
    for leg in schedule.windows(2) {
        let (from, to) = (&leg[0], &leg[1]);
        let leg_dets = |s: f64| -> Result<Vec<Complex64>> {
            let fracs: Vec<f64> = from
                .iter()
                .zip(to)
                .map(|(a, b)| a + (b - a) * s)
                .collect();
            dets_at(&fracs)
        };
        tracker.advance(&leg_dets)?;
    }

    // Amplitude: prod_i 2^m / sqrt(d_i) * prod_folds 1/sqrt(dP). At the
    // all-zeros start every d_i is 4^m and every dP is 1, so it begins at 1.
    let nf = factors.len();
    let mut amp = c64(1.0, 0.0);
    for (i, s) in tracker.sqrt.iter().enumerate() {
        amp /= s;
        if i < nf {
            amp *= c64(2.0f64.powi(m as i32), 0.0);
        }
    }

    let mut acc: Option<GroupPoint> = None;
    for (alpha, t) in factors {
        let e = exp_quad(alpha, *t, k)?;
        let point = GroupPoint {
            amp: c64(1.0, 0.0),
            alpha: SpElement::new(m, e.phase_sp())?,
        };
        acc = Some(match acc {
            None => point,
            Some(a) => gaussian_product(&a, &point, &kappa)?,
        });
    }
    let phase = acc.unwrap().alpha;
    Ok(GaussianElement {
        m,
        amp,
        q: &phase.mat * crate::numerics::j_mat(m),
        sheet: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::identity;

    fn k_re(rho: f64, cp: f64) -> CMat {
        CMat::from_row_slice(
            2,
            2,
            &[c64(rho, 0.0), c64(0.0, cp), c64(0.0, cp), c64(rho, 0.0)],
        )
    }

    fn k_im(rho: f64, cc: f64) -> CMat {
        CMat::from_row_slice(
            2,
            2,
            &[c64(0.0, rho), c64(cc, 0.0), c64(cc, 0.0), c64(0.0, rho)],
        )
    }

    fn alpha_u2_plus_v2() -> SpElement {
        SpElement::from_quadratic(1, &identity(2)).unwrap()
    }

    #[test]
    fn diagonal_k_anchor_positions() {
        // u^2+v^2 family at K = diag(a,b): zeros of (cos t - a sin t)(cos t - b sin t)
        let a = 0.6;
        let b = -0.8;
        let k = CMat::from_row_slice(
            2,
            2,
            &[c64(a, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(b, 0.0)],
        );
        let map = find_singularities(
            &alpha_u2_plus_v2(),
            &k,
            &Window::new(-0.5, PI + 0.5, -3.0, 3.0),
        )
        .unwrap();
        assert_eq!(map.method, AnchorMethod::EigenArctan);
        assert_eq!(map.anchors.len(), 2);
        for anchor in &map.anchors {
            let t = anchor.t;
            let v1 = t.cos() - t.sin() * a;
            let v2 = t.cos() - t.sin() * b;
            assert!(
                v1.norm().min(v2.norm()) < 1e-9,
                "anchor {t} does not kill either factor"
            );
        }
    }

    #[test]
    fn k_re_lines_straddle_real_axis() {
        let map = find_singularities(
            &alpha_u2_plus_v2(),
            &k_re(0.3, 0.4),
            &Window::new(-0.5, PI + 0.5, -3.0, 3.0),
        )
        .unwrap();
        let map = place_slits(map);
        assert!(!map.on_line);
        let ims: Vec<f64> = map.anchors.iter().map(|a| a.t.im).collect();
        assert!(ims.iter().any(|&y| y > 0.0) && ims.iter().any(|&y| y < 0.0));
        // slits leave the real axis untouched: tracing [0,pi] crosses none
        let c = count_crossings(&map, c64(0.0, 0.0), c64(PI, 0.0));
        assert_eq!(c, 0);
    }

    #[test]
    fn k_im_lines_on_one_side() {
        let map = find_singularities(
            &alpha_u2_plus_v2(),
            &k_im(0.3, 0.4),
            &Window::new(-0.5, PI + 0.5, -3.0, 3.0),
        )
        .unwrap();
        let ims: Vec<f64> = map.anchors.iter().map(|a| a.t.im).collect();
        assert!(
            ims.iter().all(|&y| y > 0.0) || ims.iter().all(|&y| y < 0.0),
            "anchors {ims:?} should share a half-plane"
        );
    }

    #[test]
    fn weyl_trace_to_pi_is_minus_one() {
        // K = 0, alpha from <ug,ug>: endpoint (-1)^m at m = 1
        let k = CMat::zeros(2, 2);
        let traced = trace_amplitude(
            &alpha_u2_plus_v2(),
            &k,
            &PathSpec::straight_to(c64(PI, 0.0)),
            None,
        );
        // Weyl ordering has its singular line on the real axis (t = pi/2)
        assert!(traced.is_err());
    }

    #[test]
    fn k_re_periodic_and_k_im_alternating() {
        let cls = classify_periodicity(&alpha_u2_plus_v2(), &k_re(0.3, 0.4)).unwrap();
        assert_eq!(cls.label, Periodicity::PiPeriodic);
        assert_eq!(cls.pattern, Some(3));
        let cls2 = classify_periodicity(&alpha_u2_plus_v2(), &k_im(0.3, 0.4)).unwrap();
        assert_eq!(cls2.label, Periodicity::AlternatingPi);
    }

    #[test]
    fn square_of_half_period_equals_full_period() {
        // with periodic slits: (value at pi)^2 = value at 2 pi
        for k in [k_re(0.3, 0.4), k_im(0.25, 0.45)] {
            let alpha = alpha_u2_plus_v2();
            let half = trace_amplitude(
                &alpha,
                &k,
                &PathSpec::straight_to(c64(PI, 0.0)),
                None,
            )
            .unwrap();
            let full = trace_amplitude(
                &alpha,
                &k,
                &PathSpec::straight_to(c64(2.0 * PI, 0.0)),
                None,
            )
            .unwrap();
            let sq = half.value.amp * half.value.amp;
            assert!(
                (sq - full.value.amp).norm() < 1e-9,
                "K case failed: {} vs {}",
                sq,
                full.value.amp
            );
        }
    }

    #[test]
    fn anchors_are_zeros_of_delta_and_blow_up() {
        let k = k_re(0.3, 0.4);
        let alpha = alpha_u2_plus_v2();
        let map = find_singularities(&alpha, &k, &Window::new(0.0, PI, -3.0, 3.0)).unwrap();
        for anchor in &map.anchors {
            let d = det(&exp_quad_denominator(&alpha, anchor.t, &k));
            assert!(d.norm() < 1e-9);
            // amplitude diverges approaching the anchor
            let near = exp_quad(&alpha, anchor.t + c64(1e-4, 0.0), &k)
                .or_else(|_| exp_quad(&alpha, anchor.t + c64(0.0, 1e-4), &k))
                .unwrap();
            assert!(near.amp.norm() > 1e2);
        }
    }

    #[test]
    fn traced_product_reproduces_exponential_law() {
        let k = k_re(0.3, 0.4);
        let alpha = alpha_u2_plus_v2();
        let s = c64(0.35, 0.0);
        let t = c64(0.55, 0.0);
        let prod = traced_product(&[(alpha.clone(), s), (alpha.clone(), t)], &k).unwrap();
        let direct = trace_amplitude(&alpha, &k, &PathSpec::straight_to(s + t), None)
            .unwrap()
            .value;
        assert!(prod.distance(&direct) < 1e-9, "{:?}", prod.distance(&direct));
    }

    #[test]
    fn same_sheet_path_has_even_crossings() {
        let k = k_re(0.3, 0.4);
        let alpha = alpha_u2_plus_v2();
        let (path, map) = same_sheet_path(&alpha, &k, c64(PI, 0.0)).unwrap();
        let mut total = 0;
        for (p, q) in path.segments() {
            total += count_crossings(&map, p, q);
        }
        assert_eq!(total % 2, 0);
    }

    #[test]
    fn path_validation() {
        assert!(PathSpec::new(vec![c64(1.0, 0.0)], PathMode::Straight).is_err());
        assert!(PathSpec::new(
            vec![c64(0.0, 0.0), c64(0.0, 0.0)],
            PathMode::Straight
        )
        .is_err());
    }
}
