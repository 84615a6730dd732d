//! Exact squared Euclidean distance transform (lower envelope of parabolas,
//! one axis at a time). Periodic axes are handled by replicating the line
//! once on each side, which covers every nearest image.

const EMPTY: f64 = f64::INFINITY;

/// Squared distance from every lattice point to the nearest point with `feature == true`.
/// Points with no reachable feature get `+inf`.
pub fn squared_edt(shape: &[usize], spacing: &[f64], periodic: bool, feature: &[bool]) -> Vec<f64> {
    let n: usize = shape.iter().product();
    debug_assert_eq!(feature.len(), n);
    let mut dist: Vec<f64> = feature.iter().map(|&f| if f { 0.0 } else { EMPTY }).collect();
    let strides = crate::spectra::strides(shape);
    let mut line = Vec::new();
    let mut out = Vec::new();
    let mut scratch = Scratch::default();
    for axis in 0..shape.len() {
        let len = shape[axis];
        let stride = strides[axis];
        let h2 = spacing[axis] * spacing[axis];
        // iterate over every line parallel to `axis`
        for start in 0..n {
            if (start / stride) % len != 0 {
                continue;
            }
            line.clear();
            line.extend((0..len).map(|i| dist[start + i * stride]));
            transform_line(&line, h2, periodic, &mut out, &mut scratch);
            for i in 0..len {
                dist[start + i * stride] = out[i];
            }
        }
    }
    dist
}

#[derive(Default)]
struct Scratch {
    pos: Vec<f64>,
    val: Vec<f64>,
    vertex: Vec<usize>,
    bound: Vec<f64>,
}

/// `out[i] = min_j f[j] + h2 (i - j)^2`, with `j` ranging over periodic images when requested.
fn transform_line(f: &[f64], h2: f64, periodic: bool, out: &mut Vec<f64>, s: &mut Scratch) {
    let n = f.len();
    s.pos.clear();
    s.val.clear();
    let copies: &[i64] = if periodic { &[-1, 0, 1] } else { &[0] };
    for &c in copies {
        for (j, &v) in f.iter().enumerate() {
            if v.is_finite() {
                s.pos.push((j as i64 + c * n as i64) as f64);
                s.val.push(v / h2);
            }
        }
    }
    out.clear();
    if s.pos.is_empty() {
        out.resize(n, EMPTY);
        return;
    }
    // lower envelope of parabolas y = val + (x - pos)^2
    s.vertex.clear();
    s.bound.clear();
    s.vertex.push(0);
    s.bound.push(f64::NEG_INFINITY);
    for q in 1..s.pos.len() {
        loop {
            let p = *s.vertex.last().unwrap();
            let x = ((s.val[q] + s.pos[q] * s.pos[q]) - (s.val[p] + s.pos[p] * s.pos[p])) / (2.0 * (s.pos[q] - s.pos[p]));
            if x <= *s.bound.last().unwrap() {
                s.vertex.pop();
                s.bound.pop();
                if s.vertex.is_empty() {
                    s.vertex.push(q);
                    s.bound.push(f64::NEG_INFINITY);
                    break;
                }
            } else {
                s.vertex.push(q);
                s.bound.push(x);
                break;
            }
        }
    }
    let mut k = 0;
    for i in 0..n {
        let x = i as f64;
        while k + 1 < s.vertex.len() && s.bound[k + 1] < x {
            k += 1;
        }
        let p = s.vertex[k];
        out.push(h2 * (s.val[p] + (x - s.pos[p]) * (x - s.pos[p])));
    }
}
