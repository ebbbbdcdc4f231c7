//! The almost Mathieu cocycle and its spectrum machinery: transfer
//! products, Chambers traces, band and gap computation for rational
//! rotation numbers (the Hofstadter butterfly), dynamical rotation
//! numbers, gap labels, and the bisection bootstrap for the critical
//! energy at the top of the self-dual spectrum.
//!
//! The cocycle matrix in the original basis is
//! `A(x) = [[E - V(x), -1], [1, 0]]` with `V(x) = 2 lambda cos(2 pi (x + xi))`.
//! With this sign convention a solution at the top of the spectrum has no
//! sign changes, so the rotation number vanishes there and increases as
//! the energy decreases.

use crate::rg::{rg_single, Chart, Pair};
use crate::series::Series;
use crate::skew::{Mat2, MatrixFn, Rotation, SkewMap};
use crate::{Error, Result, ALPHA_STAR};
use rayon::prelude::*;

/// Parameters of the almost Mathieu cocycle.
#[derive(Copy, Clone, Debug)]
pub struct AmParams {
    /// Coupling, nonnegative.
    pub lambda: f64,
    /// Phase offset of the potential.
    pub xi: f64,
    /// Spectral parameter.
    pub energy: f64,
    /// Rotation number of the underlying circle translation.
    pub alpha: f64,
}

impl AmParams {
    pub fn new(lambda: f64, xi: f64, energy: f64, alpha: f64) -> Self {
        assert!(lambda >= 0.0, "coupling must be nonnegative");
        AmParams { lambda, xi, energy, alpha }
    }

    /// Self-dual point: `lambda = 1`, `xi = 0`, golden rotation.
    pub fn self_dual(energy: f64) -> Self {
        AmParams::new(1.0, 0.0, energy, ALPHA_STAR)
    }

    fn potential(&self, x: f64) -> f64 {
        2.0 * self.lambda * (std::f64::consts::TAU * (x + self.xi)).cos()
    }
}

/// Taylor coefficients of `cos(2 pi (x + xi))` about `x = 0`, plus the l1
/// mass dropped beyond the truncation degree on the given disk.
fn cosine_series(xi: f64, rho: f64, degree: usize) -> (Series, f64) {
    let tau = std::f64::consts::TAU;
    let mut s = Series::zero(rho, degree);
    let mut factor = 1.0; // (2 pi)^k / k!
    for k in 0..=degree {
        let phase = tau * xi + 0.5 * std::f64::consts::PI * k as f64;
        s.coeffs_mut()[k] = factor * phase.cos();
        factor *= tau / (k + 1) as f64;
    }
    // remaining mass: sum_{k > N} (2 pi rho)^k / k!
    let mut tail = 0.0;
    let mut term = factor * rho.powi(degree as i32 + 1);
    let mut k = degree + 1;
    while term > 1e-320 && k < degree + 400 {
        tail += term;
        k += 1;
        term *= tau * rho / k as f64;
    }
    (s, tail)
}

/// Build the renormalization pair for the almost Mathieu cocycle:
/// `F = (1, identity)` and `G = (alpha*, A)` with translated new-basis
/// components `t = (E - V)/2`, `u = t + 1`, `v = t - 1`, `s = 0`.
/// With `xi = 0` the stored pair is reversible with reversor at the
/// origin, which is the convention the renormalization uses.
pub fn am_pair(params: &AmParams, rho_f: f64, rho_g: f64, degree: usize) -> Result<Pair> {
    if (params.alpha - ALPHA_STAR).abs() > 1e-14 {
        return Err(Error::BadRotations(1.0, params.alpha));
    }
    let (cos_s, cos_tail) = cosine_series(params.xi, rho_g, degree);
    let t = cos_s
        .scale(-params.lambda)
        .add(&Series::constant(rho_g, 0.5 * params.energy, degree))?;
    let t = Series::with_tail(t.rho(), t.coeffs().to_vec(), params.lambda * cos_tail)?;
    let norm = t.norm();
    if params.lambda * cos_tail > 1e-14 * norm.max(1.0) {
        return Err(Error::CosineTail {
            degree,
            tail: params.lambda * cos_tail,
            tol: 1e-14 * norm.max(1.0),
        });
    }
    let one = Series::constant(rho_g, 1.0, degree);
    let matrix = MatrixFn::new(t.clone(), t.add(&one)?, t.sub(&one)?, Series::zero(rho_g, degree))?;
    Pair::new(
        SkewMap::new(Rotation::ONE, MatrixFn::identity(rho_f, degree)),
        SkewMap::new(Rotation::ALPHA, matrix),
    )
}

/// Cocycle matrix in the original basis.
pub fn transfer_matrix(params: &AmParams, x: f64) -> Mat2 {
    Mat2::new(params.energy - params.potential(x), -1.0, 1.0, 0.0)
}

/// Ordered transfer product `A(x + (q-1) alpha) ... A(x + alpha) A(x)`.
pub fn transfer_product(params: &AmParams, q: usize, x: f64) -> Mat2 {
    let mut acc = Mat2::identity();
    for k in 0..q {
        let xk = x + k as f64 * params.alpha;
        acc = transfer_matrix(params, xk).mul(&acc);
    }
    acc
}

/// Transfer product with per-step rescaling bookkeeping: returns `(M, s)`
/// such that the product equals `2^s M` with `M` of moderate size. This
/// keeps long hyperbolic products representable; signs and the rescaled
/// determinant identity `det M = 2^{-2s}` stay meaningful.
pub fn transfer_product_scaled(params: &AmParams, q: usize, x: f64) -> (Mat2, f64) {
    let mut acc = Mat2::identity();
    let mut log2_scale = 0.0_f64;
    for k in 0..q {
        let xk = x + k as f64 * params.alpha;
        acc = transfer_matrix(params, xk).mul(&acc);
        let m = acc.max_abs();
        if m > 1e30 {
            let e = m.log2().floor();
            acc = acc.scale((-e).exp2());
            log2_scale += e;
        }
    }
    (acc, log2_scale)
}

/// Chambers evaluation for rational `alpha = p/q`.
#[derive(Copy, Clone, Debug)]
pub struct Chambers {
    /// Trace of the q-step transfer product at the potential-free point
    /// `x = 1/(4q)`.
    pub script_e: f64,
    /// Largest sampled deviation from the identity
    /// `tr P_q(x) = script_e - 2 lambda^q cos(2 pi q x)`, relative to the
    /// trace scale `max(1, sup |tr|)` (hyperbolic products make the traces
    /// themselves large).
    pub residual: f64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = b;
        b = a.rem_euclid(b);
        a = t;
    }
    a
}

/// Evaluate the Chambers trace and check the exact trace identity by
/// sampling.
pub fn chambers_trace(p: i64, q: i64, lambda: f64, energy: f64) -> Result<Chambers> {
    if q < 1 || gcd(p, q) != 1 {
        return Err(Error::NotCoprime { what: "chambers_trace", p, q });
    }
    let params = AmParams::new(lambda, 0.0, energy, p as f64 / q as f64);
    let x0 = 0.25 / q as f64;
    let script_e = transfer_product(&params, q as usize, x0).trace();
    let mut residual = 0.0_f64;
    let mut scale = 1.0_f64;
    let samples = 101;
    for i in 0..samples {
        let x = i as f64 / samples as f64;
        let lhs = transfer_product(&params, q as usize, x).trace();
        let rhs = script_e
            - 2.0 * lambda.powi(q as i32) * (std::f64::consts::TAU * q as f64 * x).cos();
        residual = residual.max((lhs - rhs).abs());
        scale = scale.max(lhs.abs());
    }
    Ok(Chambers { script_e, residual: residual / scale })
}

/// One spectral band of the rational-alpha operator.
#[derive(Copy, Clone, Debug)]
pub struct Band {
    pub q: i64,
    pub p: i64,
    /// 0-based index counted from the bottom of the spectrum.
    pub index: usize,
    pub e_lo: f64,
    pub e_hi: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.e_hi - self.e_lo
    }
}

/// Evaluator for the Chambers function `E -> script_e(E)` at fixed p/q.
struct ScriptE {
    params: AmParams,
    q: usize,
    x0: f64,
}

impl ScriptE {
    fn new(p: i64, q: i64, lambda: f64) -> Self {
        ScriptE {
            params: AmParams::new(lambda, 0.0, 0.0, p as f64 / q as f64),
            q: q as usize,
            x0: 0.25 / q as f64,
        }
    }

    fn eval(&self, energy: f64) -> f64 {
        let mut p = self.params;
        p.energy = energy;
        transfer_product(&p, self.q, self.x0).trace()
    }

    /// Bisect `script_e(E) = target` on a bracketing interval.
    fn solve(&self, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = self.eval(lo) - target;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let fmid = self.eval(mid) - target;
            if (fmid > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Locate an interior extremum by ternary search.
    fn extremum(&self, mut lo: f64, mut hi: f64, maximize: bool) -> f64 {
        for _ in 0..80 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let f1 = self.eval(m1);
            let f2 = self.eval(m2);
            let keep_left = if maximize { f1 > f2 } else { f1 < f2 };
            if keep_left {
                hi = m2;
            } else {
                lo = m1;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// The `q` closed spectral bands `{E : |script_e(E)| <= 2 + 2 lambda^q}`,
/// found by root-bracketing on a grid refined by bisection. Touching
/// bands (tangencies of the trace at the threshold) are detected through
/// an extremum pass and produce a shared edge.
pub fn spectrum_bands(p: i64, q: i64, lambda: f64) -> Result<Vec<Band>> {
    if q < 1 || gcd(p, q) != 1 {
        return Err(Error::NotCoprime { what: "spectrum_bands", p, q });
    }
    let f = ScriptE::new(p, q, lambda);
    let c = 2.0 + 2.0 * lambda.powi(q as i32);
    let span = 2.0 + 2.0 * lambda;
    let (lo, hi) = (-span - 0.5, span + 0.5);
    let mut grid_n = 32 * q as usize + 32;
    let mut found = 0;
    for _attempt in 0..4 {
        let mut edges: Vec<f64> = Vec::new();
        let vals: Vec<f64> = (0..=grid_n)
            .map(|i| f.eval(lo + (hi - lo) * i as f64 / grid_n as f64))
            .collect();
        for target in [c, -c] {
            for i in 0..grid_n {
                let a = vals[i] - target;
                let b = vals[i + 1] - target;
                if (a > 0.0) != (b > 0.0) {
                    let xa = lo + (hi - lo) * i as f64 / grid_n as f64;
                    let xb = lo + (hi - lo) * (i + 1) as f64 / grid_n as f64;
                    edges.push(f.solve(target, xa, xb));
                }
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // tangency pass: in every interval between detected edges look for
        // an interior extremum brushing a threshold without crossing it
        // (touching bands do this from inside, closed gaps from outside)
        let mut with_outer = vec![lo];
        with_outer.extend(edges.iter().copied());
        with_outer.push(hi);
        let mut extra: Vec<f64> = Vec::new();
        for w in with_outer.windows(2) {
            if w[1] - w[0] < 1e-6 {
                continue;
            }
            let emax = f.extremum(w[0], w[1], true);
            if (f.eval(emax) - c).abs() < 1e-8 {
                extra.push(emax);
            }
            let emin = f.extremum(w[0], w[1], false);
            if (f.eval(emin) + c).abs() < 1e-8 {
                extra.push(emin);
            }
        }
        edges.extend(extra);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // near a tangency the computed trace wobbles at roundoff scale, so
        // candidate roots scatter over a sqrt(eps) neighborhood; cluster
        // them to one representative (genuine features at the q-range used
        // here are orders of magnitude wider)
        let mut reps: Vec<f64> = Vec::new();
        for e in edges {
            match reps.last() {
                Some(&r) if e - r < 2e-7 => {}
                _ => reps.push(e),
            }
        }
        // every interval between consecutive representatives whose midpoint
        // satisfies |script_e| <= c is one band; a representative shared by
        // two inside intervals is a touching point
        let mut bands: Vec<Band> = Vec::new();
        for w in reps.windows(2) {
            if f.eval(0.5 * (w[0] + w[1])).abs() <= c {
                bands.push(Band {
                    q,
                    p,
                    index: bands.len(),
                    e_lo: w[0],
                    e_hi: w[1],
                });
            }
        }
        if bands.len() == q as usize {
            return Ok(bands);
        }
        found = bands.len();
        grid_n *= 4;
    }
    Err(Error::BandCount { found, q })
}

/// Dynamical rotation number: the density of sign changes of a solution
/// of the three-term recursion, `rot = Sigma_N / (2N)`. Values `|u| <
/// 1e-30` count as a crossing; the state is rescaled every 1024 steps to
/// avoid overflow (signs are unaffected).
pub fn rotation_number(params: &AmParams, steps: usize, x0: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut u_prev = 0.0_f64;
    let mut u = 1.0_f64;
    let mut sign_changes = 0usize;
    let mut prev_sign = 1.0_f64;
    let mut x = x0 + params.xi;
    let two_lambda = 2.0 * params.lambda;
    for n in 0..steps {
        let v = two_lambda * (tau * x).cos();
        let next = (params.energy - v) * u - u_prev;
        u_prev = u;
        u = next;
        if u.abs() < 1e-30 {
            sign_changes += 1;
            prev_sign = -prev_sign;
        } else {
            let s = u.signum();
            if s != prev_sign {
                sign_changes += 1;
                prev_sign = s;
            }
        }
        let scale = u.abs().max(u_prev.abs());
        if scale > 1e100 {
            u /= scale;
            u_prev /= scale;
        }
        let _ = n;
        x += params.alpha;
        if x > 1e9 {
            // keep the cosine argument well conditioned
            x -= x.floor();
        }
    }
    sign_changes as f64 / (2.0 * steps as f64)
}

/// Gap label obtained from the dynamical rotation number.
#[derive(Copy, Clone, Debug)]
pub struct GapLabel {
    pub k: i64,
    pub rot: f64,
    /// Distance of `2 rot - k alpha` from the nearest integer.
    pub residual: f64,
}

/// Find the integer `k` with `|k| <= k_max` minimizing the distance of
/// `2 rot - k alpha` from the nearest integer; fails if no candidate gets
/// within `1e-4`.
pub fn gap_label(params: &AmParams, k_max: i64, steps: usize) -> Result<GapLabel> {
    let rot = rotation_number(params, steps, 0.0);
    let mut best = (0i64, f64::INFINITY);
    for k in -k_max..=k_max {
        let d = 2.0 * rot - k as f64 * params.alpha;
        let frac = (d - d.round()).abs();
        if frac < best.1 || (frac == best.1 && k.abs() < best.0.abs()) {
            best = (k, frac);
        }
    }
    if best.1 > 1e-4 {
        return Err(Error::NoGapLabel { k_max, residual: best.1 });
    }
    Ok(GapLabel { k: best.0, rot, residual: best.1 })
}

/// A labeled spectral gap of a rational column.
#[derive(Copy, Clone, Debug)]
pub struct GapRecord {
    pub q: i64,
    pub p: i64,
    /// Gap index: `i = k p (mod q)` with `i` the number of bands above the
    /// gap, minimal-|k| representative.
    pub k: i64,
    pub e_lo: f64,
    pub e_hi: f64,
    /// Rotation number on the gap, `(number of bands above) / (2q)`.
    pub rot: f64,
}

fn mod_inverse(p: i64, q: i64) -> i64 {
    // extended Euclid; gcd(p, q) = 1
    let (mut old_r, mut r) = (p.rem_euclid(q), q);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    old_s.rem_euclid(q)
}

fn minimal_residue(k0: i64, q: i64) -> i64 {
    let k0 = k0.rem_euclid(q);
    if 2 * k0 > q {
        k0 - q
    } else {
        k0
    }
}

/// Open gaps between consecutive bands, with exact congruence labels.
pub fn column_gaps(bands: &[Band]) -> Vec<GapRecord> {
    if bands.is_empty() {
        return Vec::new();
    }
    let q = bands[0].q;
    let p = bands[0].p;
    let pinv = if q == 1 { 0 } else { mod_inverse(p, q) };
    let mut gaps = Vec::new();
    for j in 1..bands.len() {
        let e_lo = bands[j - 1].e_hi;
        let e_hi = bands[j].e_lo;
        if e_hi - e_lo < 1e-10 {
            continue; // closed gap
        }
        // i bands above the gap
        let i = (bands.len() - j) as i64;
        let k = minimal_residue(i * pinv, q);
        gaps.push(GapRecord {
            q,
            p,
            k,
            e_lo,
            e_hi,
            rot: i as f64 / (2.0 * q as f64),
        });
    }
    gaps
}

/// Options for the butterfly scan.
#[derive(Copy, Clone, Debug)]
pub struct ButterflyOptions {
    pub q_max: i64,
    pub lambda: f64,
    /// Number of golden-mean zoom generations to record.
    pub zoom_generations: usize,
}

/// One zoom generation: the Fibonacci approximant column `p/q =
/// f(m-1)/f(m)` with `m = generation + 3`, its top band, and the gap
/// directly below the top band (the dominant spectrum-free region at this
/// magnification).
#[derive(Clone, Debug)]
pub struct ZoomRecord {
    pub generation: usize,
    pub p: i64,
    pub q: i64,
    pub top_band: Band,
    pub top_gap: GapRecord,
    /// Viewport: alpha within `2 |p/q - alpha*|` of the golden mean.
    pub alpha_window: (f64, f64),
    pub energy_window: (f64, f64),
}

/// Full scan output.
#[derive(Clone, Debug)]
pub struct ButterflyData {
    pub lambda: f64,
    pub bands: Vec<Band>,
    pub gaps: Vec<GapRecord>,
    pub zoom: Vec<ZoomRecord>,
}

fn fib(m: usize) -> i64 {
    let (mut a, mut b) = (0i64, 1i64); // f(0) = 0, f(1) = 1
    for _ in 0..m {
        (a, b) = (b, a + b);
    }
    a
}

/// Bands and labeled gaps for every coprime `p/q` with `q <= q_max`,
/// plus golden-mean zoom records. Columns are computed in parallel and
/// merged in `(q, p)` order.
pub fn butterfly_scan(opts: &ButterflyOptions) -> Result<ButterflyData> {
    let mut columns: Vec<(i64, i64)> = Vec::new();
    for q in 1..=opts.q_max {
        if q == 1 {
            columns.push((0, 1));
            columns.push((1, 1));
            continue;
        }
        for p in 1..q {
            if gcd(p, q) == 1 {
                columns.push((p, q));
            }
        }
    }
    let results: Vec<Result<(Vec<Band>, Vec<GapRecord>)>> = columns
        .par_iter()
        .map(|&(p, q)| {
            let bands = spectrum_bands(p, q, opts.lambda)?;
            let gaps = column_gaps(&bands);
            Ok((bands, gaps))
        })
        .collect();
    let mut bands = Vec::new();
    let mut gaps = Vec::new();
    for r in results {
        let (b, g) = r?;
        bands.extend(b);
        gaps.extend(g);
    }

    let mut zoom = Vec::new();
    for n in 1..=opts.zoom_generations {
        let m = n + 3;
        let (p, q) = (fib(m - 1), fib(m));
        if q > 2 * opts.q_max.max(100) {
            break;
        }
        let cb = spectrum_bands(p, q, opts.lambda)?;
        let cg = column_gaps(&cb);
        let top_band = cb[cb.len() - 1];
        let top_gap = *cg
            .iter()
            .rev()
            .find(|g| g.rot == 1.0 / (2.0 * q as f64))
            .ok_or_else(|| Error::Other(format!("no top gap in column {p}/{q}")))?;
        let alpha = p as f64 / q as f64;
        let half = 2.0 * (alpha - ALPHA_STAR).abs();
        zoom.push(ZoomRecord {
            generation: n,
            p,
            q,
            top_band,
            top_gap,
            alpha_window: (ALPHA_STAR - half, ALPHA_STAR + half),
            energy_window: (top_gap.e_lo - top_band.width(), top_band.e_hi),
        });
    }
    Ok(ButterflyData { lambda: opts.lambda, bands, gaps, zoom })
}

/// Result of the critical-energy bootstrap.
#[derive(Clone, Debug)]
pub struct Bootstrap {
    pub e_star: f64,
    /// Near-periodic three-step iterate used to seed the fixed-point solve.
    pub seed: Pair,
    pub bisections: usize,
}

/// Divergence classifier for the bisection: iterate triples of single
/// renormalization steps and watch the first difference of the
/// G-component value `t0(0)` along the three-step subsequence; its sign
/// once it grows tells which side of the critical energy we are on.
fn classify(
    energy: f64,
    degree: usize,
    rho_f: f64,
    rho_g: f64,
    max_triples: usize,
) -> Result<f64> {
    let params = AmParams::self_dual(energy);
    let mut pair = am_pair(&params, rho_f, rho_g, degree)?;
    let mut prev_t = pair.g().matrix().t.coeff(0);
    let mut last_d = 0.0;
    for triple in 0..max_triples {
        for step in 0..3 {
            match rg_single(&pair) {
                Ok(r) => pair = r.pair,
                Err(e) => {
                    return Err(Error::BootstrapEscape {
                        step: 3 * triple + step,
                        detail: format!("{e}"),
                    })
                }
            }
        }
        let t = pair.g().matrix().t.coeff(0);
        if !t.is_finite() {
            return Err(Error::BootstrapEscape {
                step: 3 * (triple + 1),
                detail: "non-finite iterate".into(),
            });
        }
        last_d = t - prev_t;
        prev_t = t;
        if last_d.abs() > 1.0 {
            return Ok(last_d.signum());
        }
    }
    Ok(if last_d == 0.0 { 1.0 } else { last_d.signum() })
}

/// Locate the largest spectral energy of the self-dual golden-mean
/// operator by bisection on the renormalization dynamics, then produce a
/// seed pair by averaging the two closest consecutive three-step
/// iterates.
pub fn bootstrap_estar(degree: usize, rho_f: f64, rho_g: f64) -> Result<Bootstrap> {
    let max_triples = 12;
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    let side_lo = classify(lo, degree, rho_f, rho_g, max_triples)?;
    let side_hi = classify(hi, degree, rho_f, rho_g, max_triples)?;
    if side_lo == side_hi {
        return Err(Error::Other(
            "bootstrap bisection bracket does not separate".into(),
        ));
    }
    let mut bisections = 0;
    while hi - lo > 2.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let side = classify(mid, degree, rho_f, rho_g, max_triples)?;
        if side == side_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        bisections += 1;
        if bisections > 200 {
            break;
        }
    }
    let e_star = 0.5 * (lo + hi);

    // collect the three-step subsequence at the located energy and average
    // the two closest consecutive iterates
    let params = AmParams::self_dual(e_star);
    let mut pair = am_pair(&params, rho_f, rho_g, degree)?;
    let chart = Chart::new(degree, rho_f, rho_g);
    let mut triples = Vec::new();
    for _ in 0..max_triples {
        for _ in 0..3 {
            pair = rg_single(&pair)?.pair;
        }
        triples.push(chart.pack(&pair));
    }
    let mut best = (1usize, f64::INFINITY);
    for k in 1..triples.len() {
        let d = chart.weighted_norm(&(&triples[k] - &triples[k - 1]));
        if d < best.1 {
            best = (k, d);
        }
    }
    let seed_vec = (&triples[best.0] + &triples[best.0 - 1]) * 0.5;
    Ok(Bootstrap {
        e_star,
        seed: chart.unpack(&seed_vec),
        bisections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn am_pair_lambda_zero_is_constant() {
        let params = AmParams::new(0.0, 0.0, 1.5, ALPHA_STAR);
        let pair = am_pair(&params, 3.0, 2.0, 16).unwrap();
        let a = pair.g().matrix();
        // constant in x, u - v = 2, s = 0
        assert_eq!(a.t.coeff(0), 0.75);
        for k in 1..=16 {
            assert_eq!(a.t.coeff(k), 0.0);
        }
        let diff = a.u.sub(&a.v).unwrap();
        assert!((diff.coeff(0) - 2.0).abs() < 1e-15);
        assert_eq!(a.s.norm(), 0.0);
    }

    #[test]
    fn am_pair_determinant_is_one_and_reversible() {
        let params = AmParams::self_dual(2.5);
        let pair = am_pair(&params, 3.0, 2.0, 60).unwrap();
        // det = t^2 - s^2 - (t+1)(t-1) = 1 identically: the polynomial
        // content cancels exactly (the conservative truncation tail of the
        // products does not, and is checked separately at high degree)
        let det = pair.g().matrix().det_series().unwrap().strip_tail();
        let one = Series::constant(2.0, 1.0, 60);
        let drift = det.sub(&one).unwrap().norm();
        let scale = pair.g().matrix().t.norm().powi(2);
        assert!(drift < 1e-12 * scale.max(1.0), "det drift {drift}");
        // with xi = 0 the components have clean parity
        let norm = pair.g().matrix().norm();
        assert!(pair.g().parity_residual() < 1e-14 * norm);
    }

    #[test]
    fn am_pair_with_phase_breaks_parity() {
        let params = AmParams::new(1.0, 0.17, 2.5, ALPHA_STAR);
        let pair = am_pair(&params, 3.0, 2.0, 80).unwrap();
        let norm = pair.g().matrix().norm();
        assert!(pair.g().parity_residual() > 1e-3 * norm);
    }

    #[test]
    fn transfer_product_basics() {
        let params = AmParams::new(0.7, 0.0, 1.1, 0.37);
        // q = 1 is the cocycle matrix itself
        let p1 = transfer_product(&params, 1, 0.2);
        let a = transfer_matrix(&params, 0.2);
        assert_eq!(p1, a);
        // free case at zero energy squares to -identity
        let free = AmParams::new(0.0, 0.0, 0.0, 0.37);
        let p2 = transfer_product(&free, 2, 0.9);
        assert!(p2.sub(&Mat2::identity().scale(-1.0)).max_abs() < 1e-15);
        // determinant multiplicativity where the product stays bounded
        // (hyperbolic regimes lose the contracting direction to roundoff)
        let elliptic = AmParams::new(0.3, 0.0, 0.5, ALPHA_STAR);
        for q in [10, 50, 100] {
            let pq = transfer_product(&elliptic, q, 0.13);
            assert!((pq.det() - 1.0).abs() < 1e-10, "q={q}: det {}", pq.det());
        }
        // rescaling keeps very long hyperbolic products representable
        let hyper = AmParams::new(1.7, 0.0, 5.0, ALPHA_STAR);
        let (m, s) = transfer_product_scaled(&hyper, 2000, 0.13);
        assert!(m.max_abs().is_finite() && m.max_abs() > 1.0 && s > 100.0);
    }

    #[test]
    fn chambers_q1_is_energy() {
        let c = chambers_trace(0, 1, 1.3, 0.8).unwrap();
        assert!((c.script_e - 0.8).abs() < 1e-14);
        assert!(c.residual < 1e-12);
    }

    #[test]
    fn chambers_identity_small_q() {
        let mut state = 7_u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for q in 2..=13i64 {
            for p in 1..q {
                if gcd(p, q) != 1 {
                    continue;
                }
                let lambda = 0.2 + 1.5 * rnd();
                let energy = 4.0 * rnd() - 2.0;
                let c = chambers_trace(p, q, lambda, energy).unwrap();
                assert!(c.residual < 1e-10, "p/q = {p}/{q}: residual {}", c.residual);
            }
        }
    }

    #[test]
    fn bands_q1_lambda1() {
        let b = spectrum_bands(0, 1, 1.0).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].e_lo + 4.0).abs() < 1e-9);
        assert!((b[0].e_hi - 4.0).abs() < 1e-9);
    }

    #[test]
    fn bands_q2_touching_at_zero() {
        // the two bands of alpha = 1/2 at lambda = 1 touch at E = 0
        let b = spectrum_bands(1, 2, 1.0).unwrap();
        assert_eq!(b.len(), 2);
        assert!(b[0].e_hi.abs() < 1e-7, "touch point {}", b[0].e_hi);
        assert!(b[1].e_lo.abs() < 1e-7);
        let r8 = 8.0_f64.sqrt();
        assert!((b[0].e_lo + r8).abs() < 1e-9);
        assert!((b[1].e_hi - r8).abs() < 1e-9);
        // symmetric under E -> -E
        assert!((b[0].e_lo + b[1].e_hi).abs() < 1e-9);
    }

    #[test]
    fn total_bandwidth_shrinks_along_fibonacci() {
        // at the self-dual point the spectrum has measure zero; the total
        // bandwidth of the approximants decreases
        let mut widths = Vec::new();
        for (p, q) in [(1, 2), (2, 3), (3, 5), (5, 8), (8, 13), (13, 21)] {
            let b = spectrum_bands(p, q, 1.0).unwrap();
            widths.push(b.iter().map(Band::width).sum::<f64>());
        }
        for w in widths.windows(2) {
            assert!(w[1] < w[0], "bandwidths {widths:?}");
        }
    }

    #[test]
    fn rotation_number_free_case() {
        let params = AmParams::new(0.0, 0.0, 0.0, ALPHA_STAR);
        let rot = rotation_number(&params, 100_000, 0.3);
        assert!((rot - 0.25).abs() < 1e-4, "rot = {rot}");
    }

    #[test]
    fn rotation_number_above_spectrum_is_zero() {
        let params = AmParams::new(1.0, 0.0, 4.5, ALPHA_STAR);
        let rot = rotation_number(&params, 100_000, 0.0);
        assert_eq!(rot, 0.0);
    }

    #[test]
    fn rotation_number_monotone_staircase() {
        let n = 40_000;
        let mut prev = f64::INFINITY;
        for i in 0..=30 {
            let e = -4.2 + 8.4 * i as f64 / 30.0;
            let params = AmParams::new(1.0, 0.0, e, ALPHA_STAR);
            let rot = rotation_number(&params, n, 0.0);
            assert!(rot <= prev + 2e-3, "staircase violated at E = {e}");
            prev = rot;
        }
    }

    #[test]
    fn gap_label_above_spectrum() {
        let params = AmParams::new(1.0, 0.0, 5.0, ALPHA_STAR);
        let l = gap_label(&params, 10, 50_000).unwrap();
        assert_eq!(l.k, 0);
        assert_eq!(l.rot, 0.0);
    }

    #[test]
    fn exact_gap_labels_match_dynamical_ones() {
        // column 3/5 at moderate coupling: compare congruence labels with
        // rotation-number labels at gap midpoints
        let bands = spectrum_bands(3, 5, 1.0).unwrap();
        let gaps = column_gaps(&bands);
        assert!(!gaps.is_empty());
        for g in &gaps {
            let mid = 0.5 * (g.e_lo + g.e_hi);
            let params = AmParams::new(1.0, 0.0, mid, 0.6);
            let dynamical = gap_label(&params, 10, 200_000).unwrap();
            assert_eq!(dynamical.k, g.k, "gap at {mid}");
            assert!((dynamical.rot - g.rot).abs() < 1e-3);
        }
    }

    #[test]
    fn top_gap_labels_follow_fibonacci_pattern() {
        // generation n approximant f(n+2)/f(n+3): top gap label (-1)^n f(n+1)
        for n in 1..=3usize {
            let m = n + 3;
            let (p, q) = (fib(m - 1), fib(m));
            let bands = spectrum_bands(p, q, 1.0).unwrap();
            let gaps = column_gaps(&bands);
            let top = gaps.last().unwrap();
            let expected = if n % 2 == 0 { fib(n + 1) } else { -fib(n + 1) };
            assert_eq!(top.k, expected, "generation {n}: {p}/{q}");
        }
    }

    #[test]
    fn duality_maps_band_edges() {
        // band edges at (lambda, E) map to (1/lambda, E/lambda)
        let lambda = 2.0;
        for (p, q) in [(1, 2), (1, 3), (2, 5), (3, 8)] {
            let strong = spectrum_bands(p, q, lambda).unwrap();
            let weak = spectrum_bands(p, q, 1.0 / lambda).unwrap();
            for (s, w) in strong.iter().zip(weak.iter()) {
                assert!(
                    (s.e_lo / lambda - w.e_lo).abs() < 1e-6,
                    "p/q={p}/{q}: {} vs {}",
                    s.e_lo / lambda,
                    w.e_lo
                );
                assert!((s.e_hi / lambda - w.e_hi).abs() < 1e-6);
            }
        }
    }
}
