//! Derivative-free minimization: dense scan followed by golden-section
//! refinement of the best bracket.
//!
//! Objectives here are cheap to evaluate but not known to be unimodal, so a
//! global scan always comes first. Non-finite values count as `+inf`.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Golden-section search on `[lo, hi]` until the bracket is narrower than
/// `tol`. Returns the best point evaluated, endpoints included.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Minimum {
    let mut f = move |x| sanitize(f(x));
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut best = [a, b].into_iter().map(|x| Minimum { x, value: f(x) }).fold(
        Minimum {
            x: a,
            value: f64::INFINITY,
        },
        |m, c| if c.value < m.value { c } else { m },
    );
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let tol = tol.max(f64::EPSILON * (a.abs() + b.abs()));
    let mut iterations = 0;
    while (b - a) > tol && iterations < 400 {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.value {
                best = Minimum { x, value: v };
            }
        }
    }
    best
}

/// Evaluates `f` on every grid point (ascending), then golden-section
/// searches the interval between the neighbours of the best grid point.
pub fn scan_then_refine(f: impl Fn(f64) -> f64, grid: &[f64], tol: f64) -> Minimum {
    assert!(!grid.is_empty(), "empty grid");
    let mut k = 0;
    let mut best = f64::INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = sanitize(f(x));
        if v < best {
            best = v;
            k = i;
        }
    }
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let refined = golden_section(&f, lo, hi, tol);
    if refined.value < best {
        refined
    } else {
        Minimum {
            x: grid[k],
            value: best,
        }
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Cyclic coordinate-wise golden-section refinement of `x` inside the box
/// `[lo, hi]`, each coordinate searched within `radius` of its current
/// value. Stops when a full sweep no longer improves the objective.
pub fn refine_coordinates(
    f: impl Fn(&[f64]) -> f64,
    x: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    radius: f64,
    tol: f64,
) -> f64 {
    let eval = |p: &[f64]| sanitize(f(p));
    let mut value = eval(x);
    for _ in 0..200 {
        let before = value;
        for i in 0..x.len() {
            let a = (x[i] - radius).max(lo[i]);
            let b = (x[i] + radius).min(hi[i]);
            let mut probe = x.to_vec();
            let m = golden_section(
                |t| {
                    probe[i] = t;
                    eval(&probe)
                },
                a,
                b,
                tol,
            );
            if m.value < value {
                x[i] = m.x;
                value = m.value;
            }
        }
        if before - value <= 1e-15 {
            break;
        }
    }
    value
}
