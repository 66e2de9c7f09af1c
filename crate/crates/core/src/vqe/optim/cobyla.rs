//! COBYLA: constrained optimization by linear approximation.
//!
//! A line-by-line port of Powell's 1994 algorithm (the `cobylb` driver and
//! the `trstlp` trust-region subproblem). Indices are zero-based; the
//! simplex pole lives in column `n` of `sim`, the objective in row `m` of
//! `datmat` and the constraint violation in row `m + 1`.
//!
//! Constraints follow the usual sign convention: `c_k(x) >= 0` is feasible.

use alloc::vec;
use alloc::vec::Vec;

use super::Mat;
use crate::math::sqrt;

/// Trust-region radii. `rhobeg` is the initial step, `rhoend` the final
/// resolution at which the method stops.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CobylaSettings {
    pub rhobeg: f64,
    pub rhoend: f64,
}

impl Default for CobylaSettings {
    fn default() -> Self {
        Self {
            rhobeg: 1.0,
            rhoend: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CobylaStatus {
    /// `rho` reached `rhoend`.
    Converged,
    /// The evaluation budget ran out.
    MaxEvaluations,
    /// The simplex inverse lost accuracy or the step became NaN.
    RoundingErrors,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CobylaResult {
    pub x: Vec<f64>,
    pub fx: f64,
    /// Largest constraint violation at `x`.
    pub resmax: f64,
    pub evaluations: usize,
    pub status: CobylaStatus,
}

#[derive(Clone, Copy)]
enum Label {
    Evaluate,
    Simplex,
    TrustStep,
    ProcessTrial,
    ReduceRho,
}

/// Minimizes `calcfc` subject to `m` inequality constraints.
///
/// `calcfc(x, con)` returns the objective and writes the `m` constraint
/// values into `con`. At most `max_evals` calls are made. The returned point
/// is the best simplex vertex, which is always a point that was evaluated.
pub fn cobyla_minimize<E, F>(
    mut calcfc: F,
    m: usize,
    x0: &[f64],
    settings: &CobylaSettings,
    max_evals: usize,
) -> Result<CobylaResult, E>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64, E>,
{
    const ALPHA: f64 = 0.25;
    const BETA: f64 = 2.1;
    const GAMMA: f64 = 0.5;
    const DELTA: f64 = 1.1;

    let n = x0.len();
    let np = n;
    let mp = m;
    let mpp = m + 1;
    let rhoend = settings.rhoend;

    let mut x = x0.to_vec();
    if n == 0 {
        let mut con = vec![0.0; m];
        let f = if max_evals > 0 { calcfc(&x, &mut con)? } else { f64::NAN };
        let resmax = con.iter().fold(0.0f64, |r, c| r.max(-c));
        return Ok(CobylaResult {
            x,
            fx: f,
            resmax,
            evaluations: usize::from(max_evals > 0),
            status: CobylaStatus::Converged,
        });
    }

    let mut sim = Mat::zeros(n, n + 1);
    let mut simi = Mat::zeros(n, n);
    let mut datmat = Mat::zeros(m + 2, n + 1);
    let mut a = Mat::zeros(n, m + 1);
    let mut con = vec![0.0; m + 2];
    let mut vsig = vec![0.0; n];
    let mut veta = vec![0.0; n];
    let mut sigbar = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut w = vec![0.0; n];

    let mut rho = settings.rhobeg;
    let mut parmu = 0.0;
    let mut nfvals = 0usize;
    for i in 0..n {
        sim[(i, np)] = x[i];
        sim[(i, i)] = rho;
        simi[(i, i)] = 1.0 / rho;
    }
    let mut jdrop = np;
    let mut ibrnch = false;
    let mut iflag = false;
    let mut parsig = 0.0;
    let mut prerec = 0.0;
    let mut prerem = 0.0;
    let mut f = 0.0;
    let mut resmax = 0.0;

    let mut label = Label::Evaluate;
    let status = loop {
        match label {
            Label::Evaluate => {
                if nfvals >= max_evals {
                    break CobylaStatus::MaxEvaluations;
                }
                nfvals += 1;
                f = calcfc(&x, &mut con[..m])?;
                resmax = con[..m].iter().fold(0.0f64, |r, &c| r.max(-c));
                con[mp] = f;
                con[mpp] = resmax;
                if ibrnch {
                    label = Label::ProcessTrial;
                    continue;
                }
                for k in 0..=mpp {
                    datmat[(k, jdrop)] = con[k];
                }
                if nfvals <= n + 1 {
                    // Building the initial simplex around x0.
                    if jdrop < n {
                        if datmat[(mp, np)] <= f {
                            x[jdrop] = sim[(jdrop, np)];
                        } else {
                            sim[(jdrop, np)] = x[jdrop];
                            for k in 0..=mpp {
                                datmat[(k, jdrop)] = datmat[(k, np)];
                                datmat[(k, np)] = con[k];
                            }
                            for k in 0..=jdrop {
                                sim[(jdrop, k)] = -rho;
                                let mut temp = 0.0;
                                for i in k..=jdrop {
                                    temp -= simi[(i, k)];
                                }
                                simi[(jdrop, k)] = temp;
                            }
                        }
                    }
                    if nfvals <= n {
                        jdrop = nfvals - 1;
                        x[jdrop] += rho;
                        continue;
                    }
                }
                ibrnch = true;
                label = Label::Simplex;
            }

            Label::Simplex => {
                // Make the best vertex the pole.
                let mut phimin = datmat[(mp, np)] + parmu * datmat[(mpp, np)];
                let mut nbest = np;
                for j in 0..n {
                    let temp = datmat[(mp, j)] + parmu * datmat[(mpp, j)];
                    if temp < phimin {
                        nbest = j;
                        phimin = temp;
                    } else if temp == phimin
                        && parmu == 0.0
                        && datmat[(mpp, j)] < datmat[(mpp, nbest)]
                    {
                        nbest = j;
                    }
                }
                if nbest < n {
                    for i in 0..=mpp {
                        let temp = datmat[(i, np)];
                        datmat[(i, np)] = datmat[(i, nbest)];
                        datmat[(i, nbest)] = temp;
                    }
                    for i in 0..n {
                        let temp = sim[(i, nbest)];
                        sim[(i, nbest)] = 0.0;
                        sim[(i, np)] += temp;
                        let mut tempa = 0.0;
                        for k in 0..n {
                            sim[(i, k)] -= temp;
                            tempa -= simi[(k, i)];
                        }
                        simi[(nbest, i)] = tempa;
                    }
                }

                let mut error = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        let mut temp = if i == j { -1.0 } else { 0.0 };
                        for k in 0..n {
                            temp += simi[(i, k)] * sim[(k, j)];
                        }
                        error = error.max(temp.abs());
                    }
                }
                if error > 0.1 {
                    break CobylaStatus::RoundingErrors;
                }

                // Linear models of the objective and constraints.
                for k in 0..=mp {
                    con[k] = -datmat[(k, np)];
                    for j in 0..n {
                        w[j] = datmat[(k, j)] + con[k];
                    }
                    for i in 0..n {
                        let mut temp = 0.0;
                        for j in 0..n {
                            temp += w[j] * simi[(j, i)];
                        }
                        if k == mp {
                            temp = -temp;
                        }
                        a[(i, k)] = temp;
                    }
                }

                iflag = true;
                parsig = ALPHA * rho;
                let pareta = BETA * rho;
                for j in 0..n {
                    let mut wsig = 0.0;
                    let mut weta = 0.0;
                    for i in 0..n {
                        wsig += simi[(j, i)] * simi[(j, i)];
                        weta += sim[(i, j)] * sim[(i, j)];
                    }
                    vsig[j] = 1.0 / sqrt(wsig);
                    veta[j] = sqrt(weta);
                    if vsig[j] < parsig || veta[j] > pareta {
                        iflag = false;
                    }
                }

                if ibrnch || iflag {
                    label = Label::TrustStep;
                    continue;
                }

                // Replace a vertex to restore the simplex's shape.
                let mut drop = None;
                let mut temp = pareta;
                for j in 0..n {
                    if veta[j] > temp {
                        drop = Some(j);
                        temp = veta[j];
                    }
                }
                if drop.is_none() {
                    for j in 0..n {
                        if vsig[j] < temp {
                            drop = Some(j);
                            temp = vsig[j];
                        }
                    }
                }
                let jd = drop.unwrap_or(0);
                jdrop = jd;

                let temp = GAMMA * rho * vsig[jd];
                for i in 0..n {
                    dx[i] = temp * simi[(jd, i)];
                }
                let mut cvmaxp = 0.0f64;
                let mut cvmaxm = 0.0f64;
                let mut sum = 0.0;
                for k in 0..=mp {
                    sum = 0.0;
                    for i in 0..n {
                        sum += a[(i, k)] * dx[i];
                    }
                    if k < mp {
                        let temp = datmat[(k, np)];
                        cvmaxp = cvmaxp.max(-sum - temp);
                        cvmaxm = cvmaxm.max(sum - temp);
                    }
                }
                let dxsign = if parmu * (cvmaxp - cvmaxm) > sum + sum {
                    -1.0
                } else {
                    1.0
                };

                let mut temp = 0.0;
                for i in 0..n {
                    dx[i] *= dxsign;
                    sim[(i, jd)] = dx[i];
                    temp += simi[(jd, i)] * dx[i];
                }
                for i in 0..n {
                    simi[(jd, i)] /= temp;
                }
                for j in 0..n {
                    if j != jd {
                        let mut temp = 0.0;
                        for i in 0..n {
                            temp += simi[(j, i)] * dx[i];
                        }
                        for i in 0..n {
                            simi[(j, i)] -= temp * simi[(jd, i)];
                        }
                    }
                    x[j] = sim[(j, np)] + dx[j];
                }
                label = Label::Evaluate;
            }

            Label::TrustStep => {
                let (step, ifull) = trstlp(n, m, &a, &con, rho);
                dx = step;
                if dx.iter().any(|d| d.is_nan()) {
                    break CobylaStatus::RoundingErrors;
                }
                if !ifull {
                    let temp: f64 = dx.iter().map(|d| d * d).sum();
                    if temp < 0.25 * rho * rho {
                        ibrnch = true;
                        label = Label::ReduceRho;
                        continue;
                    }
                }

                let mut resnew = 0.0f64;
                con[mp] = 0.0;
                let mut sum = 0.0;
                for k in 0..=mp {
                    sum = con[k];
                    for i in 0..n {
                        sum -= a[(i, k)] * dx[i];
                    }
                    if k < mp {
                        resnew = resnew.max(sum);
                    }
                }

                let mut barmu = 0.0;
                prerec = datmat[(mpp, np)] - resnew;
                if prerec > 0.0 {
                    barmu = sum / prerec;
                }
                if parmu < barmu * 1.5 {
                    parmu = barmu * 2.0;
                    let phi = datmat[(mp, np)] + parmu * datmat[(mpp, np)];
                    let mut restart = false;
                    for j in 0..n {
                        let temp = datmat[(mp, j)] + parmu * datmat[(mpp, j)];
                        if temp < phi
                            || (temp == phi
                                && parmu == 0.0
                                && datmat[(mpp, j)] < datmat[(mpp, np)])
                        {
                            restart = true;
                            break;
                        }
                    }
                    if restart {
                        label = Label::Simplex;
                        continue;
                    }
                }
                prerem = parmu * prerec - sum;

                for i in 0..n {
                    x[i] = sim[(i, np)] + dx[i];
                }
                ibrnch = true;
                label = Label::Evaluate;
            }

            Label::ProcessTrial => {
                let vmold = datmat[(mp, np)] + parmu * datmat[(mpp, np)];
                let vmnew = f + parmu * resmax;
                let mut trured = vmold - vmnew;
                if parmu == 0.0 && f == datmat[(mp, np)] {
                    prerem = prerec;
                    trured = datmat[(mpp, np)] - resmax;
                }

                // Pick the vertex that the trial point replaces.
                let mut ratio = if trured <= 0.0 { 1.0 } else { 0.0 };
                let mut drop = None;
                for j in 0..n {
                    let mut temp = 0.0;
                    for i in 0..n {
                        temp += simi[(j, i)] * dx[i];
                    }
                    let temp = temp.abs();
                    if temp > ratio {
                        drop = Some(j);
                        ratio = temp;
                    }
                    sigbar[j] = temp * vsig[j];
                }

                let mut edgmax = DELTA * rho;
                let mut l = None;
                for j in 0..n {
                    if sigbar[j] >= parsig || sigbar[j] >= vsig[j] {
                        let mut temp = veta[j];
                        if trured > 0.0 {
                            temp = 0.0;
                            for i in 0..n {
                                let d = dx[i] - sim[(i, j)];
                                temp += d * d;
                            }
                            temp = sqrt(temp);
                        }
                        if temp > edgmax {
                            l = Some(j);
                            edgmax = temp;
                        }
                    }
                }
                if l.is_some() {
                    drop = l;
                }
                let Some(jd) = drop else {
                    label = Label::ReduceRho;
                    continue;
                };
                jdrop = jd;

                let mut temp = 0.0;
                for i in 0..n {
                    sim[(i, jd)] = dx[i];
                    temp += simi[(jd, i)] * dx[i];
                }
                for i in 0..n {
                    simi[(jd, i)] /= temp;
                }
                for j in 0..n {
                    if j != jd {
                        let mut temp = 0.0;
                        for i in 0..n {
                            temp += simi[(j, i)] * dx[i];
                        }
                        for i in 0..n {
                            simi[(j, i)] -= temp * simi[(jd, i)];
                        }
                    }
                }
                for k in 0..=mpp {
                    datmat[(k, jd)] = con[k];
                }

                label = if trured > 0.0 && trured >= 0.1 * prerem {
                    Label::Simplex
                } else {
                    Label::ReduceRho
                };
            }

            Label::ReduceRho => {
                if !iflag {
                    ibrnch = false;
                    label = Label::Simplex;
                    continue;
                }
                if rho <= rhoend {
                    break CobylaStatus::Converged;
                }
                rho *= 0.5;
                if rho <= 1.5 * rhoend {
                    rho = rhoend;
                }
                if parmu > 0.0 {
                    let mut denom = 0.0f64;
                    let mut cmin = 0.0f64;
                    let mut cmax = 0.0f64;
                    for k in 0..=mp {
                        cmin = datmat[(k, np)];
                        cmax = cmin;
                        for i in 0..n {
                            cmin = cmin.min(datmat[(k, i)]);
                            cmax = cmax.max(datmat[(k, i)]);
                        }
                        if k < mp && cmin < 0.5 * cmax {
                            let temp = cmax.max(0.0) - cmin;
                            denom = if denom <= 0.0 { temp } else { denom.min(temp) };
                        }
                    }
                    if denom == 0.0 {
                        parmu = 0.0;
                    } else if cmax - cmin < parmu * denom {
                        parmu = (cmax - cmin) / denom;
                    }
                }
                label = Label::Simplex;
            }
        }
    };

    // Powell's driver returns the last trial point when the budget runs out
    // mid-step; the pole is the best point seen and is what callers want.
    let x = (0..n).map(|i| sim[(i, np)]).collect();
    let (fx, resmax) = if nfvals == 0 {
        (f64::NAN, 0.0)
    } else {
        (datmat[(mp, np)], datmat[(mpp, np)])
    };
    Ok(CobylaResult {
        x,
        fx,
        resmax,
        evaluations: nfvals,
        status,
    })
}

/// Solves the linear trust-region subproblem.
///
/// Minimizes the linear objective in column `m` of `a` subject to the linear
/// constraints `a[:, k] . dx >= b[k]` inside the ball `|dx| <= rho`, first
/// reducing the maximum violation if the constraints cannot all be met.
/// Returns the step and whether it reaches the trust-region boundary.
fn trstlp(n: usize, m: usize, a: &Mat, b: &[f64], rho: f64) -> (Vec<f64>, bool) {
    let mut z = Mat::identity(n);
    let mut zdota = vec![0.0; n];
    let mut vmultc = vec![0.0; m + 1];
    let mut vmultd = vec![0.0; m + 1];
    let mut iact = vec![0usize; m + 1];
    let mut sdirn = vec![0.0; n];
    let mut dxnew = vec![0.0; n];
    let mut dx = vec![0.0; n];

    let mut mcon = m;
    let mut nact = 0usize;
    let mut resmax = 0.0f64;
    let mut resold = 0.0;
    let mut icon: Option<usize> = None;

    for k in 0..m {
        if b[k] > resmax {
            resmax = b[k];
            icon = Some(k);
        }
    }
    for k in 0..m {
        iact[k] = k;
        vmultc[k] = resmax - b[k];
    }

    // Stage one minimizes the violation; stage two the objective.
    let mut stage_two = resmax == 0.0;
    'stage: loop {
        if stage_two {
            mcon = m + 1;
            icon = Some(m);
            iact[m] = m;
            vmultc[m] = 0.0;
        }
        for s in sdirn.iter_mut() {
            *s = 0.0;
        }
        let mut optold = 0.0;
        let mut nactx = 0usize;
        let mut icount = 0usize;

        loop {
            let optnew = if mcon == m {
                resmax
            } else {
                let mut v = 0.0;
                for i in 0..n {
                    v -= dx[i] * a[(i, m)];
                }
                v
            };
            if icount == 0 || optnew < optold {
                optold = optnew;
                nactx = nact;
                icount = 3;
            } else if nact > nactx {
                nactx = nact;
                icount = 3;
            } else {
                icount -= 1;
                if icount == 0 {
                    break;
                }
            }

            let ic = icon.unwrap_or(0);
            if ic < nact {
                // Drop the constraint at position `ic` from the active set.
                if ic + 1 < nact {
                    let isave = iact[ic];
                    let vsave = vmultc[ic];
                    let mut k = ic;
                    loop {
                        let kp = k + 1;
                        let kk = iact[kp];
                        let mut sp = 0.0;
                        for i in 0..n {
                            sp += z[(i, k)] * a[(i, kk)];
                        }
                        let temp = sqrt(sp * sp + zdota[kp] * zdota[kp]);
                        let alpha = zdota[kp] / temp;
                        let beta = sp / temp;
                        zdota[kp] = alpha * zdota[k];
                        zdota[k] = temp;
                        for i in 0..n {
                            let temp = alpha * z[(i, kp)] + beta * z[(i, k)];
                            z[(i, kp)] = alpha * z[(i, k)] - beta * z[(i, kp)];
                            z[(i, k)] = temp;
                        }
                        iact[k] = kk;
                        vmultc[k] = vmultc[kp];
                        k = kp;
                        if k + 1 >= nact {
                            break;
                        }
                    }
                    iact[k] = isave;
                    vmultc[k] = vsave;
                }
                nact -= 1;
                if mcon > m {
                    set_objective_direction(n, nact, &z, &zdota, &mut sdirn);
                } else {
                    let mut temp = 0.0;
                    for i in 0..n {
                        temp += sdirn[i] * z[(i, nact)];
                    }
                    for i in 0..n {
                        sdirn[i] -= temp * z[(i, nact)];
                    }
                }
            } else {
                // Add the constraint at position `ic` to the active set.
                let kk = iact[ic];
                for i in 0..n {
                    dxnew[i] = a[(i, kk)];
                }
                let mut tot = 0.0;
                let mut k = n;
                while k > nact {
                    k -= 1;
                    let mut sp = 0.0;
                    let mut spabs = 0.0;
                    for i in 0..n {
                        let temp = z[(i, k)] * dxnew[i];
                        sp += temp;
                        spabs += temp.abs();
                    }
                    let acca = spabs + 0.1 * sp.abs();
                    let accb = spabs + 0.2 * sp.abs();
                    if spabs >= acca || acca >= accb {
                        sp = 0.0;
                    }
                    if tot == 0.0 {
                        tot = sp;
                    } else {
                        let kp = k + 1;
                        let temp = sqrt(sp * sp + tot * tot);
                        let alpha = sp / temp;
                        let beta = tot / temp;
                        tot = temp;
                        for i in 0..n {
                            let temp = alpha * z[(i, k)] + beta * z[(i, kp)];
                            z[(i, kp)] = alpha * z[(i, kp)] - beta * z[(i, k)];
                            z[(i, k)] = temp;
                        }
                    }
                }

                if tot != 0.0 {
                    nact += 1;
                    zdota[nact - 1] = tot;
                    vmultc[ic] = vmultc[nact - 1];
                    vmultc[nact - 1] = 0.0;
                } else {
                    // The new gradient is dependent on the active ones, so
                    // one of them has to leave.
                    let mut ratio = -1.0;
                    let mut _iout = 0usize;
                    let mut k = nact;
                    while k > 0 {
                        k -= 1;
                        let mut zdotv = 0.0;
                        let mut zdvabs = 0.0;
                        for i in 0..n {
                            let temp = z[(i, k)] * dxnew[i];
                            zdotv += temp;
                            zdvabs += temp.abs();
                        }
                        let acca = zdvabs + 0.1 * zdotv.abs();
                        let accb = zdvabs + 0.2 * zdotv.abs();
                        if zdvabs < acca && acca < accb {
                            let temp = zdotv / zdota[k];
                            if temp > 0.0 && iact[k] < m {
                                let tempa = vmultc[k] / temp;
                                if ratio < 0.0 || tempa < ratio {
                                    ratio = tempa;
                                    _iout = k;
                                }
                            }
                            if k >= 1 {
                                let kw = iact[k];
                                for i in 0..n {
                                    dxnew[i] -= temp * a[(i, kw)];
                                }
                            }
                            vmultd[k] = temp;
                        } else {
                            vmultd[k] = 0.0;
                        }
                    }
                    if ratio < 0.0 {
                        break;
                    }

                    for k in 0..nact {
                        vmultc[k] = (vmultc[k] - ratio * vmultd[k]).max(0.0);
                    }
                    // The reference reorders from `icon` here rather than
                    // `iout`. `icon` is never inside the active set at this
                    // point, so the block is inert; kept for fidelity.
                    if ic + 1 < nact {
                        let isave = iact[ic];
                        let vsave = vmultc[ic];
                        let mut k = ic;
                        loop {
                            let kp = k + 1;
                            let kw = iact[kp];
                            let mut sp = 0.0;
                            for i in 0..n {
                                sp += z[(i, k)] * a[(i, kw)];
                            }
                            let temp = sqrt(sp * sp + zdota[kp] * zdota[kp]);
                            let alpha = zdota[kp] / temp;
                            let beta = sp / temp;
                            zdota[kp] = alpha * zdota[k];
                            zdota[k] = temp;
                            for i in 0..n {
                                let temp = alpha * z[(i, kp)] + beta * z[(i, k)];
                                z[(i, kp)] = alpha * z[(i, k)] - beta * z[(i, kp)];
                                z[(i, k)] = temp;
                            }
                            iact[k] = kw;
                            vmultc[k] = vmultc[kp];
                            k = kp;
                            if k + 1 >= nact {
                                break;
                            }
                        }
                        iact[k] = isave;
                        vmultc[k] = vsave;
                    }
                    let mut temp = 0.0;
                    for i in 0..n {
                        temp += z[(i, nact - 1)] * a[(i, kk)];
                    }
                    if temp == 0.0 {
                        break;
                    }
                    zdota[nact - 1] = temp;
                    vmultc[ic] = 0.0;
                    vmultc[nact - 1] = ratio;
                }

                iact[ic] = iact[nact - 1];
                iact[nact - 1] = kk;
                if mcon > m && kk != m {
                    // Keep the objective gradient last in the active set.
                    let k = nact - 2;
                    let mut sp = 0.0;
                    for i in 0..n {
                        sp += z[(i, k)] * a[(i, kk)];
                    }
                    let temp = sqrt(sp * sp + zdota[nact - 1] * zdota[nact - 1]);
                    let alpha = zdota[nact - 1] / temp;
                    let beta = sp / temp;
                    zdota[nact - 1] = alpha * zdota[k];
                    zdota[k] = temp;
                    for i in 0..n {
                        let temp = alpha * z[(i, nact - 1)] + beta * z[(i, k)];
                        z[(i, nact - 1)] = alpha * z[(i, k)] - beta * z[(i, nact - 1)];
                        z[(i, k)] = temp;
                    }
                    iact[nact - 1] = iact[k];
                    iact[k] = kk;
                    vmultc.swap(k, nact - 1);
                }

                if mcon > m {
                    set_objective_direction(n, nact, &z, &zdota, &mut sdirn);
                } else {
                    let kk = iact[nact - 1];
                    let mut temp = 0.0;
                    for i in 0..n {
                        temp += sdirn[i] * a[(i, kk)];
                    }
                    let temp = (temp - 1.0) / zdota[nact - 1];
                    for i in 0..n {
                        sdirn[i] -= temp * z[(i, nact - 1)];
                    }
                }
            }

            // Step along the search direction.
            let mut dd = rho * rho;
            let mut sd = 0.0;
            let mut ss = 0.0;
            for i in 0..n {
                if dx[i].abs() >= 1e-6 * rho {
                    dd -= dx[i] * dx[i];
                }
                sd += dx[i] * sdirn[i];
                ss += sdirn[i] * sdirn[i];
            }
            if dd <= 0.0 {
                break;
            }
            let mut temp = sqrt(ss * dd);
            if sd.abs() >= 1e-6 * temp {
                temp = sqrt(ss * dd + sd * sd);
            }
            let stpful = dd / (temp + sd);
            let mut step = stpful;
            if mcon == m {
                let acca = step + 0.1 * resmax;
                let accb = step + 0.2 * resmax;
                if step >= acca || acca >= accb {
                    stage_two = true;
                    continue 'stage;
                }
                step = step.min(resmax);
            }

            for i in 0..n {
                dxnew[i] = dx[i] + step * sdirn[i];
            }
            if mcon == m {
                resold = resmax;
                resmax = 0.0;
                for k in 0..nact {
                    let kk = iact[k];
                    let mut temp = b[kk];
                    for i in 0..n {
                        temp -= a[(i, kk)] * dxnew[i];
                    }
                    resmax = resmax.max(temp);
                }
            }

            // Multipliers at the end of the step.
            let mut k = nact;
            while k > 0 {
                k -= 1;
                let mut zdotw = 0.0;
                let mut zdwabs = 0.0;
                for i in 0..n {
                    let temp = z[(i, k)] * dxnew[i];
                    zdotw += temp;
                    zdwabs += temp.abs();
                }
                let acca = zdwabs + 0.1 * zdotw.abs();
                let accb = zdwabs + 0.2 * zdotw.abs();
                if zdwabs >= acca || acca >= accb {
                    zdotw = 0.0;
                }
                vmultd[k] = zdotw / zdota[k];
                if k >= 1 {
                    let kk = iact[k];
                    for i in 0..n {
                        dxnew[i] -= vmultd[k] * a[(i, kk)];
                    }
                }
            }
            if mcon > m {
                vmultd[nact - 1] = vmultd[nact - 1].max(0.0);
            }

            for i in 0..n {
                dxnew[i] = dx[i] + step * sdirn[i];
            }
            for k in nact..mcon {
                let kk = iact[k];
                let mut sum = resmax - b[kk];
                let mut sumabs = resmax + b[kk].abs();
                for i in 0..n {
                    let temp = a[(i, kk)] * dxnew[i];
                    sum += temp;
                    sumabs += temp.abs();
                }
                let acca = sumabs + 0.1 * sum.abs();
                let accb = sumabs + 0.2 * sum.abs();
                if sumabs >= acca || acca >= accb {
                    sum = 0.0;
                }
                vmultd[k] = sum;
            }

            // Shorten the step if a multiplier would turn negative.
            let mut ratio = 1.0;
            icon = None;
            for k in 0..mcon {
                if vmultd[k].abs() < f64::EPSILON {
                    vmultd[k] = 0.0;
                }
                if vmultd[k] < 0.0 {
                    let temp = vmultc[k] / (vmultc[k] - vmultd[k]);
                    if temp < ratio {
                        ratio = temp;
                        icon = Some(k);
                    }
                }
            }
            let temp = 1.0 - ratio;
            for i in 0..n {
                dx[i] = temp * dx[i] + ratio * dxnew[i];
            }
            for k in 0..mcon {
                vmultc[k] = (temp * vmultc[k] + ratio * vmultd[k]).max(0.0);
            }
            if mcon == m {
                resmax = resold + ratio * (resmax - resold);
            }
            if icon.is_some() {
                continue;
            }
            if step == stpful {
                return (dx, true);
            }
            if step.is_nan() {
                return (vec![f64::NAN; n], true);
            }
            stage_two = true;
            continue 'stage;
        }

        // Progress stalled in the current stage.
        if mcon == m {
            stage_two = true;
            continue 'stage;
        }
        return (dx, false);
    }
}

fn set_objective_direction(n: usize, nact: usize, z: &Mat, zdota: &[f64], sdirn: &mut [f64]) {
    let temp = 1.0 / zdota[nact - 1];
    for i in 0..n {
        sdirn[i] = temp * z[(i, nact - 1)];
    }
}
