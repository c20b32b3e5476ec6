//! Illumination frequency, phase and modulation from separated bands.
//!
//! For a trial shift `s` the overlap of `A(k) = C+(k + s) T(k)` with
//! `B(k) = C0(k) T(k + s)` is scored by the normalized coherence
//! `|sum A B*| / sqrt(sum |A|^2 sum |B|^2)`, which reaches 1 exactly at the
//! true shift for noise-free data. The complex ratio `sum A B* / sum |B|^2`
//! at the optimum gives the pattern phase (argument) and modulation
//! (magnitude).
//!
//! Only bins free of camera aliasing enter the sums: when the optical cutoff
//! exceeds the camera Nyquist frequency, bins within `kc - nyquist` of the band
//! edge receive folded content and are masked out.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::illumination::Orientation;
use crate::optics::{sinc, SystemTransfer, TransferTable};
use crate::recon::separate::SeparatedComponents;
use crate::recon::ReconParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternEstimate {
    /// Pattern frequency in bins of the component spectra.
    pub freq_px: [f64; 2],
    /// Pattern phase at the center of pixel (0, 0).
    pub phase_rad: f64,
    pub modulation_est: f64,
    /// Normalized band coherence at the optimum, in [0, 1].
    pub correlation_peak: f64,
}

impl PatternEstimate {
    /// Frequency in cycles/nm for a `width x height` grid of `pixel_nm` pixels.
    pub fn freq_cyc_per_nm(&self, width: usize, height: usize, pixel_nm: f64) -> [f64; 2] {
        [
            self.freq_px[0] / (width as f64 * pixel_nm),
            self.freq_px[1] / (height as f64 * pixel_nm),
        ]
    }

    pub fn freq_magnitude_px(&self) -> f64 {
        self.freq_px[0].hypot(self.freq_px[1])
    }
}

/// Coherence that noise alone cannot reach.
const ABSOLUTE_COHERENCE: f64 = 0.5;

struct Coherence {
    num: Complex64,
    ea: f64,
    eb: f64,
}

impl Coherence {
    fn rho(&self) -> f64 {
        let d = (self.ea * self.eb).sqrt();
        if d > 0.0 {
            self.num.norm() / d
        } else {
            0.0
        }
    }
}

struct Workspace<'a> {
    w: usize,
    h: usize,
    dk: [f64; 2],
    lim: [f64; 2],
    notch: f64,
    table: TransferTable,
    c0: &'a [Complex64],
    cplus: &'a [Complex64],
    /// `C+` in real space, natural order, for sub-bin shifts.
    cplus_field: Vec<Complex64>,
    t: Vec<f64>,
}

impl Workspace<'_> {
    #[inline]
    fn offset(&self, i: usize, j: usize) -> (f64, f64) {
        (
            i as f64 - (self.w / 2) as f64,
            j as f64 - (self.h / 2) as f64,
        )
    }

    /// Alias-free `C+` bin at continuous offset `(x, y)`.
    #[inline]
    fn usable_plus(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.lim[0] && y.abs() <= self.lim[1]
    }

    /// Alias-free `C0` bin outside the DC notch.
    #[inline]
    fn usable_zero(&self, x: f64, y: f64) -> bool {
        self.usable_plus(x, y) && x * x + y * y > self.notch * self.notch
    }

    fn masks(&self) -> (Vec<bool>, Vec<bool>) {
        let mut plus = vec![false; self.w * self.h];
        let mut zero = vec![false; self.w * self.h];
        for j in 0..self.h {
            for i in 0..self.w {
                let (x, y) = self.offset(i, j);
                plus[j * self.w + i] = self.usable_plus(x, y);
                zero[j * self.w + i] = self.usable_zero(x, y);
            }
        }
        (plus, zero)
    }

    /// `C+` resampled at `k + delta` for a sub-bin `delta`.
    fn shifted_cplus(&self, delta: [f64; 2]) -> Vec<Complex64> {
        let (w, h) = (self.w, self.h);
        let mut field = self.cplus_field.clone();
        let rx: Vec<Complex64> = (0..w)
            .map(|x| Complex64::from_polar(1.0, -2.0 * PI * delta[0] * x as f64 / w as f64))
            .collect();
        for y in 0..h {
            let ry = Complex64::from_polar(1.0, -2.0 * PI * delta[1] * y as f64 / h as f64);
            for x in 0..w {
                field[y * w + x] *= rx[x] * ry;
            }
        }
        fft::forward_complex(field, w, h)
    }

    /// Index range of bins `i` with both `k` and `k + s` usable along one axis.
    fn span(&self, axis: usize, s: f64) -> (usize, usize) {
        let n = [self.w, self.h][axis];
        let c = (n / 2) as f64;
        let lim = self.lim[axis];
        let lo = (-lim).max(-lim - s).ceil() + c;
        let hi = lim.min(lim - s).floor() + c;
        (lo.max(0.0) as usize, hi.min(n as f64 - 1.0).max(lo - 1.0) as usize)
    }

    fn coherence(&self, s: [f64; 2]) -> Coherence {
        let si = [s[0].round(), s[1].round()];
        let delta = [s[0] - si[0], s[1] - si[1]];
        let shifted;
        let cp: &[Complex64] = if delta == [0.0, 0.0] {
            self.cplus
        } else {
            shifted = self.shifted_cplus(delta);
            &shifted
        };
        let mut acc = Coherence {
            num: Complex64::new(0.0, 0.0),
            ea: 0.0,
            eb: 0.0,
        };
        let (i0, i1) = self.span(0, s[0]);
        let (j0, j1) = self.span(1, s[1]);
        if i1 < i0 || j1 < j0 {
            return acc;
        }
        let a = self.table.transfer().pixel_size_nm();
        let sinc_x: Vec<f64> = (i0..=i1)
            .map(|i| sinc((self.offset(i, 0).0 + s[0]) * self.dk[0] * a))
            .collect();
        let (six, siy) = (si[0] as i64, si[1] as i64);
        let n2 = self.notch * self.notch;
        for j in j0..=j1 {
            let y = self.offset(0, j).1;
            let ky = (y + s[1]) * self.dk[1];
            let sy = sinc(ky * a);
            let tj = (j as i64 + siy) as usize;
            let row = j * self.w;
            let trow = tj * self.w;
            for i in i0..=i1 {
                let x = self.offset(i, j).0;
                if x * x + y * y <= n2 {
                    continue;
                }
                let kx = (x + s[0]) * self.dk[0];
                let tb = self.table.profile_sq(kx * kx + ky * ky) * sinc_x[i - i0] * sy;
                let k = row + i;
                let av = cp[trow + (i as i64 + six) as usize] * self.t[k];
                let bv = self.c0[k] * tb;
                acc.num += av * bv.conj();
                acc.ea += av.norm_sqr();
                acc.eb += bv.norm_sqr();
            }
        }
        acc
    }
}

/// `out[center + s] = sum_k x(k + s) conj(y(k))` on a grid twice the size.
fn correlate(x: &[Complex64], y: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let (pw, ph) = (2 * w, 2 * h);
    let xf = fft::inverse_complex(&fft::pad_centered(x, w, h, pw, ph), pw, ph);
    let yf = fft::inverse_complex(&fft::pad_centered(y, w, h, pw, ph), pw, ph);
    let prod: Vec<Complex64> = xf.iter().zip(&yf).map(|(a, b)| a * b.conj()).collect();
    let scale = ((pw * ph) as f64).sqrt();
    let mut out = fft::forward_complex(prod, pw, ph);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Vertex offset of the parabola through `(-h, lo), (0, mid), (h, hi)`.
fn parabola_vertex(lo: f64, mid: f64, hi: f64, h: f64) -> f64 {
    let curv = lo - 2.0 * mid + hi;
    if curv >= 0.0 {
        // not a maximum; step toward the larger side
        return if hi > lo { h / 2.0 } else if lo > hi { -h / 2.0 } else { 0.0 };
    }
    (h * (lo - hi) / (2.0 * curv)).clamp(-h, h)
}

struct Search<'a> {
    best: [i64; 2],
    /// Coherence at an integer offset from `best`.
    rho: Box<dyn Fn(i64, i64) -> f64 + 'a>,
    /// Median coherence over the searched shifts.
    floor: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    *v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b)).1
}

/// Direct evaluation of every integer shift within `half` bins of `hint`.
fn window_search<'a>(ws: &'a Workspace<'a>, hint: [f64; 2], half: f64) -> Option<Search<'a>> {
    // one extra ring so the refinement has neighbours at the window edge
    let reach = half.floor() as i64 + 1;
    let (gx, gy) = (hint[0].round() as i64, hint[1].round() as i64);
    let side = (2 * reach + 1) as usize;
    let mut grid = vec![0.0; side * side];
    let mut inside = Vec::new();
    let mut best: Option<([i64; 2], f64)> = None;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (sx, sy) = (gx + dx, gy + dy);
            let r = ws.coherence([sx as f64, sy as f64]).rho();
            grid[(dy + reach) as usize * side + (dx + reach) as usize] = r;
            if (sx as f64 - hint[0]).abs() <= half && (sy as f64 - hint[1]).abs() <= half {
                inside.push(r);
                if best.map_or(true, |(_, b)| r > b) {
                    best = Some(([sx, sy], r));
                }
            }
        }
    }
    let (b, _) = best?;
    let floor = median(inside);
    let rho = move |ox: i64, oy: i64| {
        let (x, y) = (b[0] + ox - gx + reach, b[1] + oy - gy + reach);
        if x < 0 || y < 0 || x >= side as i64 || y >= side as i64 {
            ws.coherence([(b[0] + ox) as f64, (b[1] + oy) as f64]).rho()
        } else {
            grid[y as usize * side + x as usize]
        }
    };
    Some(Search {
        best: b,
        rho: Box::new(rho),
        floor,
    })
}

/// Integer-shift coherence over the whole pupil disc via padded correlations.
fn band_search<'a>(ws: &'a Workspace<'a>, kc: f64, notch: f64) -> Option<Search<'a>> {
    let (w, h) = (ws.w, ws.h);
    let (c0, cplus, t) = (ws.c0, ws.cplus, &ws.t);
    let (mask_plus, mask_zero) = ws.masks();
    let zero = Complex64::new(0.0, 0.0);
    let pick = |mask: &[bool], f: &dyn Fn(usize) -> Complex64| -> Vec<Complex64> {
        (0..w * h).map(|k| if mask[k] { f(k) } else { zero }).collect()
    };
    let f = pick(&mask_plus, &|k| cplus[k] * t[k]);
    let g = pick(&mask_zero, &|k| c0[k] * t[k]);
    let p_plus = pick(&mask_plus, &|k| Complex64::new(cplus[k].norm_sqr(), 0.0));
    let p_zero = pick(&mask_zero, &|k| Complex64::new(c0[k].norm_sqr(), 0.0));
    let q_plus = pick(&mask_plus, &|k| Complex64::new(t[k] * t[k], 0.0));
    let q_zero = pick(&mask_zero, &|k| Complex64::new(t[k] * t[k], 0.0));
    let num = correlate(&f, &g, w, h);
    let ea = correlate(&p_plus, &q_zero, w, h);
    let eb = correlate(&q_plus, &p_zero, w, h);

    let (pw, ph) = (2 * w, 2 * h);
    let (pcx, pcy) = ((pw / 2) as i64, (ph / 2) as i64);
    let at = move |sx: i64, sy: i64| ((sy + pcy) as usize) * pw + (sx + pcx) as usize;
    let ea0 = ea[at(0, 0)].re;
    let eb0 = eb[at(0, 0)].re;
    let dk = ws.dk;
    let in_disc = |sx: f64, sy: f64| (sx * dk[0]).powi(2) + (sy * dk[1]).powi(2) <= kc * kc;
    let rmap: Vec<f64> = (0..pw * ph)
        .map(|k| {
            let d = ea[k].re * eb[k].re;
            if d > 0.0 {
                num[k].norm() / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let rho_at = move |sx: i64, sy: i64| rmap[at(sx, sy)];

    let mut best: Option<([i64; 2], f64)> = None;
    let mut all = Vec::new();
    let reach_x = ((kc / dk[0]).ceil() as i64).min(pcx - 2);
    let reach_y = ((kc / dk[1]).ceil() as i64).min(pcy - 2);
    for sy in -reach_y..=reach_y {
        for sx in -reach_x..=reach_x {
            let (fx, fy) = (sx as f64, sy as f64);
            if fx.hypot(fy) <= notch.max(0.5) || !in_disc(fx, fy) {
                continue;
            }
            let k = at(sx, sy);
            if ea[k].re < 1e-3 * ea0 || eb[k].re < 1e-3 * eb0 {
                continue;
            }
            let r = rho_at(sx, sy);
            all.push(r);
            if best.map_or(true, |(_, b)| r > b) {
                best = Some(([sx, sy], r));
            }
        }
    }
    let (b, _) = best?;
    Some(Search {
        best: b,
        rho: Box::new(move |ox, oy| rho_at(b[0] + ox, b[1] + oy)),
        floor: median(all),
    })
}

pub fn estimate_pattern(
    comp: &SeparatedComponents,
    transfer: &SystemTransfer,
    params: &ReconParams,
) -> Result<PatternEstimate> {
    params.validate()?;
    let (w, h) = (comp.c0.width(), comp.c0.height());
    let px = comp.c0.pixel_size_nm();
    if w < 8 || h < 8 {
        return Err(Error::invalid(format!("{w}x{h} is too small for pattern estimation")));
    }
    let dk = [1.0 / (w as f64 * px), 1.0 / (h as f64 * px)];
    let nyquist = 1.0 / (2.0 * px);
    let kc = transfer.cutoff();
    // bins within (kc - nyquist) of the band edge carry folded content
    let edge = if kc > nyquist { 2.0 * nyquist - kc } else { nyquist };
    let lim = [
        (edge / dk[0]).min(w as f64 / 2.0 - 1.0),
        (edge / dk[1]).min(h as f64 / 2.0 - 1.0),
    ];
    if lim[0] < 2.0 || lim[1] < 2.0 {
        return Err(Error::Geometry(
            "camera sampling leaves no alias-free band for pattern estimation".into(),
        ));
    }
    let notch = if params.notch_suppress_dc { params.dc_notch_px } else { 0.0 };

    let c0 = comp.c0.data();
    let cplus = comp.cplus.data();
    let e0: f64 = c0.iter().map(|c| c.norm_sqr()).sum();
    let ep: f64 = cplus.iter().map(|c| c.norm_sqr()).sum();
    if !(ep > 1e-20 * e0) {
        return Err(Error::PatternNotFound {
            peak: ep.sqrt(),
            threshold: 1e-10 * e0.sqrt(),
        });
    }

    let table = TransferTable::new(transfer);
    let mut t = vec![0.0; w * h];
    for j in 0..h {
        for i in 0..w {
            let (kx, ky) = comp.c0.frequency(i, j);
            t[j * w + i] = table.eval(kx, ky);
        }
    }
    let ws = Workspace {
        w,
        h,
        dk,
        lim,
        notch,
        table,
        c0,
        cplus,
        cplus_field: fft::inverse_complex(cplus, w, h),
        t,
    };

    // the nominal frequency, when known, picks the sideband among the
    // lattice moires that correlate almost as well
    let hint = params.freq_hint_fraction.map(|frac| {
        let k = frac * kc;
        match comp.orientation {
            Orientation::X => [k / dk[0], 0.0],
            Orientation::Y => [0.0, k / dk[1]],
        }
    });
    let window = params.search_halfwidth_px;
    let search = match hint {
        Some(g) => window_search(&ws, g, window),
        None => band_search(&ws, kc, notch),
    };
    let Some(Search { best: [bx, by], rho, floor }) = search else {
        return Err(Error::PatternNotFound {
            peak: 0.0,
            threshold: 0.0,
        });
    };
    let peak = rho(0, 0);
    // smooth object spectra correlate at every shift, so a high absolute
    // coherence also counts
    if peak < 3.0 * floor && peak < ABSOLUTE_COHERENCE {
        return Err(Error::PatternNotFound {
            peak,
            threshold: 3.0 * floor,
        });
    }

    // sub-bin refinement: parabola through the integer neighbours, then
    // through progressively tighter stencils of exact evaluations
    let origin = hint.unwrap_or([bx as f64, by as f64]);
    let clamp = |s: [f64; 2]| {
        [
            s[0].clamp(origin[0] - window, origin[0] + window),
            s[1].clamp(origin[1] - window, origin[1] + window),
        ]
    };
    let mut s = clamp([
        bx as f64 + parabola_vertex(rho(-1, 0), peak, rho(1, 0), 1.0),
        by as f64 + parabola_vertex(rho(0, -1), peak, rho(0, 1), 1.0),
    ]);
    for step in [0.25, 0.05] {
        let c = ws.coherence(s).rho();
        let xl = ws.coherence([s[0] - step, s[1]]).rho();
        let xh = ws.coherence([s[0] + step, s[1]]).rho();
        let yl = ws.coherence([s[0], s[1] - step]).rho();
        let yh = ws.coherence([s[0], s[1] + step]).rho();
        s = clamp([
            s[0] + parabola_vertex(xl, c, xh, step),
            s[1] + parabola_vertex(yl, c, yh, step),
        ]);
    }

    let fin = ws.coherence(s);
    if !(fin.eb > 0.0) {
        return Err(Error::PatternNotFound {
            peak: 0.0,
            threshold: 0.0,
        });
    }
    let alpha = fin.num / fin.eb;
    Ok(PatternEstimate {
        freq_px: s,
        phase_rad: alpha.arg(),
        modulation_est: alpha.norm() * comp.modulation,
        correlation_peak: fin.rho(),
    })
}
