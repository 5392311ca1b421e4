//! Trial bodies for the registered checks.

use super::{Eval, Trial, TrialOutput};
use crate::entropy::{
    conditional_vn, conditional_vn_subnormalized, h0, hmin, renyi_alpha, renyi_of_spectrum, shannon, von_neumann,
};
use crate::error::{Error, Result};
use crate::linalg::io::state_to_json;
use crate::linalg::{
    eig_hermitian, random_density, random_spectrum, random_unitary, ComplexMatrix, DensityOperator, MultipartiteState,
};
use crate::metrics::{fidelity, purified_distance, reorder_to_eigenbasis, uhlmann_pair};
use crate::sdp::{hmin_conditional, SdpSolution, SdpStatus};
use crate::smoothing::{
    chain_rule_witness, fannes_terms_of_classes, product_conditional_rates, smooth_entropy_iid, smooth_h0,
    smooth_hmin_unconditional, tensor_power_spectrum, truncated_state, Direction, SmoothMeasure, Spectrum,
};

/// Copy counts used by the rate checks.
const QAEP_NS: [usize; 5] = [100, 200, 500, 1000, 2000];
const SANDWICH_NS: [usize; 3] = [100, 500, 2000];
// qutrit tensor powers have O(n²) type classes, so their largest n is lower
const FANNES_NS: [usize; 3] = [10, 100, 1000];
const FANNES_NS_WIDE: [usize; 3] = [10, 100, 300];

fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Random state on the trial's dimensions with a seed-dependent rank.
fn state(trial: &Trial, k: u64) -> Result<MultipartiteState> {
    let dims = trial.dims();
    let d: usize = dims.iter().product();
    let seed = trial.sub_seed(k);
    let rank = 1 + (seed % d as u64) as usize;
    random_density(dims, rank, seed)
}

/// Random state scaled by a factor in `[0.5, 1]`.
fn subnormalized(trial: &Trial, k: u64) -> Result<MultipartiteState> {
    let s = state(trial, k)?;
    let c = 0.5 + 0.5 * (trial.sub_seed(k + 1000) >> 11) as f64 / (1u64 << 53) as f64;
    MultipartiteState::new(s.state().scaled(c)?, s.dims().to_vec())
}

fn states_json(named: &[(&str, &MultipartiteState)]) -> String {
    let body: Vec<String> = named
        .iter()
        .map(|(n, s)| format!("\"{n}\": {}", state_to_json(s)))
        .collect();
    format!("{{{}}}", body.join(", "))
}

fn spectrum_json(v: &[f64]) -> String {
    serde_json::json!({ "spectrum": v }).to_string()
}

fn require_tripartite(rho: &MultipartiteState) -> Result<()> {
    if rho.num_subsystems() < 3 {
        return Err(Error::InvalidSubsystems("check needs at least three subsystems".into()));
    }
    Ok(())
}

fn solved(rho: &MultipartiteState, cond_on: &[usize]) -> Result<(f64, SdpSolution)> {
    let (h, sol) = hmin_conditional(rho, cond_on)?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver(format!("solver stopped with status {:?}", sol.status)));
    }
    Ok((h, sol))
}

/// `A = 0`, `B = 1`, `C` = the rest.
fn bc(rho: &MultipartiteState) -> Vec<usize> {
    (1..rho.num_subsystems()).collect()
}

pub(crate) fn dpi_smooth(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    require_tripartite(&rho)?;
    let mut evals = Vec::new();
    for &eps in &trial.spec.epsilons {
        if eps == 0.0 {
            let (lhs, _) = solved(&rho, &bc(&rho))?;
            let (rhs, _) = solved(&rho.partial_trace(&[0, 1])?, &[1])?;
            evals.push(Eval::exact("eps=0", lhs, rhs));
        } else {
            let (t, _) = truncated_state(rho.state(), (1.0 - eps * eps).sqrt(), Direction::CutLarge)?;
            let t = MultipartiteState::new(t, rho.dims().to_vec())?;
            let t_ab = t.partial_trace(&[0, 1])?;
            let (lhs, _) = solved(&t, &bc(&t))?;
            let (rhs, _) = solved(&t_ab, &[1])?;
            evals.push(Eval::bound(format!("eps={eps} dpi"), lhs, rhs));
            let p = purified_distance(rho.partial_trace(&[0, 1])?.state(), t_ab.state())?.value;
            evals.push(Eval::bound(format!("eps={eps} ball"), p, eps));
        }
    }
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho)]),
        evals,
    })
}

pub(crate) fn dpi_witness_trace(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    require_tripartite(&rho)?;
    let (_, sol) = solved(&rho, &bc(&rho))?;
    let sigma = &sol.sigma_b;
    let t = sigma.trace().re;
    let sigma_bc = MultipartiteState::new(
        DensityOperator::new(sigma.scale(1.0 / t), 1e-9)?,
        rho.dims()[1..].to_vec(),
    )?;
    let sigma_b = sigma_bc.partial_trace(&[0])?.state().matrix().scale(t);
    let rho_ab = rho.partial_trace(&[0, 1])?;
    let d_a = rho.dims()[0];
    let gap = &ComplexMatrix::identity(d_a).kron(&sigma_b) - rho_ab.state().matrix();
    let min_eig = *eig_hermitian(&gap)?.values.last().unwrap();
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho)]),
        evals: vec![Eval::exact("traced witness min eigenvalue", 0.0, min_eig)],
    })
}

pub(crate) fn dpi_vn(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    require_tripartite(&rho)?;
    let lhs = conditional_vn(&rho, &bc(&rho))?.value;
    let rhs = conditional_vn(&rho.partial_trace(&[0, 1])?, &[1])?.value;
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho)]),
        evals: vec![Eval::exact("", lhs, rhs)],
    })
}

pub(crate) fn ssa_equiv(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    require_tripartite(&rho)?;
    let n = rho.num_subsystems();
    let h = |keep: &[usize]| -> Result<f64> { Ok(von_neumann(rho.partial_trace(keep)?.state()).value) };
    let all: Vec<usize> = (0..n).collect();
    let ssa = h(&[0, 1])? + h(&bc(&rho))? - h(&all)? - h(&[1])?;
    let dpi = conditional_vn(&rho.partial_trace(&[0, 1])?, &[1])?.value - conditional_vn(&rho, &bc(&rho))?.value;
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho)]),
        evals: vec![
            Eval::exact("ssa nonnegative", 0.0, ssa),
            Eval::exact("|ssa - dpi|", (ssa - dpi).abs(), 0.0),
        ],
    })
}

pub(crate) fn chain_rule(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    let last = rho.num_subsystems() - 1;
    let mut evals = Vec::new();
    for &eps in &trial.spec.epsilons {
        if eps == 0.0 {
            let rho_b = rho.partial_trace(&[last])?;
            let lhs = hmin(rho.state())?.value - h0(rho_b.state())?.value;
            let (rhs, _) = solved(&rho, &[last])?;
            evals.push(Eval::exact("eps=0", lhs, rhs));
        } else {
            let w = chain_rule_witness(&rho, &[last], eps)?;
            let (rhs, _) = solved(&w.state, &[1])?;
            evals.push(Eval::bound(
                format!("eps={eps} witness entropy"),
                w.lambda - w.log_rank,
                rhs,
            ));
            evals.push(Eval::bound(format!("eps={eps} ball 3eps"), w.distance, 3.0 * eps));
        }
    }
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho)]),
        evals,
    })
}

fn trial_spectrum(trial: &Trial) -> Vec<f64> {
    let d: usize = trial.dims().iter().product();
    random_spectrum(d, trial.sub_seed(0))
}

pub(crate) fn renyi_hmin_bound(trial: &Trial) -> Result<TrialOutput> {
    let v = trial_spectrum(trial);
    let s = Spectrum::new(&v)?;
    let mut evals = Vec::new();
    for &alpha in &trial.spec.alphas {
        let ha = renyi_of_spectrum(&v, alpha)?;
        for &eps in &trial.spec.epsilons {
            let lhs = ha + (1.0 - (1.0 - eps * eps).sqrt()).log2() / (alpha - 1.0);
            let rhs = smooth_hmin_unconditional(&s, eps)?;
            evals.push(Eval::exact(format!("alpha={alpha} eps={eps}"), lhs, rhs));
        }
    }
    Ok(TrialOutput {
        input: spectrum_json(&v),
        evals,
    })
}

pub(crate) fn renyi_h0_bound(trial: &Trial) -> Result<TrialOutput> {
    let v = trial_spectrum(trial);
    let s = Spectrum::new(&v)?;
    let mut evals = Vec::new();
    for &alpha in &trial.spec.alphas {
        let ha = renyi_of_spectrum(&v, alpha)?;
        for &eps in &trial.spec.epsilons {
            let lhs = smooth_h0(&s, eps)?;
            let rhs = ha + (1.0 - eps).sqrt().log2() / (alpha - 1.0);
            evals.push(Eval::exact(format!("alpha={alpha} eps={eps}"), lhs, rhs));
        }
    }
    Ok(TrialOutput {
        input: spectrum_json(&v),
        evals,
    })
}

pub(crate) fn qaep_unconditional(trial: &Trial) -> Result<TrialOutput> {
    let v = trial_spectrum(trial);
    let s = Spectrum::new(&v)?;
    let h = shannon(&v);
    let mut evals = Vec::new();
    for &eps in &trial.spec.epsilons {
        for n in QAEP_NS {
            let lo = smooth_entropy_iid(&s, n, eps, SmoothMeasure::Hmin)? / n as f64;
            let hi = smooth_entropy_iid(&s, n, eps, SmoothMeasure::H0)? / n as f64;
            evals.push(Eval::exact(format!("eps={eps} n={n} hmin rate below"), lo, h));
            evals.push(Eval::exact(format!("eps={eps} n={n} h0 rate above"), h, hi));
        }
    }
    Ok(TrialOutput {
        input: spectrum_json(&v),
        evals,
    })
}

pub(crate) fn qaep_conditional_sandwich(trial: &Trial) -> Result<TrialOutput> {
    let dims = trial.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidSubsystems("sandwich check needs two subsystems".into()));
    }
    let va = random_spectrum(dims[0], trial.sub_seed(0));
    let vb = random_spectrum(dims[1], trial.sub_seed(1));
    let (sa, sb) = (Spectrum::new(&va)?, Spectrum::new(&vb)?);
    let mut evals = Vec::new();
    for &eps in &trial.spec.epsilons {
        for n in SANDWICH_NS {
            let r = product_conditional_rates(&sa, &sb, n, eps)?;
            let gap = r.upper_candidate - r.lower;
            evals.push(Eval::bound(
                format!("eps={eps} n={n} lower gap={gap:.6}"),
                r.lower,
                r.target,
            ));
            evals.push(Eval::bound(
                format!("eps={eps} n={n} upper gap={gap:.6}"),
                r.target,
                r.upper_candidate,
            ));
        }
    }
    let input = serde_json::json!({ "spectrum_a": va, "spectrum_b": vb }).to_string();
    Ok(TrialOutput { input, evals })
}

/// Projector onto `rank` random orthonormal directions.
fn random_projector(dim: usize, rank: usize, seed: u64) -> ComplexMatrix {
    let u = random_unitary(dim, seed);
    let mut diag = vec![0.0; dim];
    diag[..rank].iter_mut().for_each(|x| *x = 1.0);
    &(&u * &ComplexMatrix::from_diagonal(&diag)) * &u.adjoint()
}

fn project(rho: &DensityOperator, p: &ComplexMatrix) -> Result<DensityOperator> {
    DensityOperator::new(&(p * rho.matrix()) * p, 1e-9)
}

pub(crate) fn pd_monotone(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    let sigma = subnormalized(trial, 1)?;
    let before = purified_distance(rho.state(), sigma.state())?.value;
    let mut evals = Vec::new();
    if rho.num_subsystems() > 1 {
        let (r, s) = (rho.partial_trace(&[0])?, sigma.partial_trace(&[0])?);
        evals.push(Eval::exact(
            "partial trace",
            purified_distance(r.state(), s.state())?.value,
            before,
        ));
    }
    let d = rho.dim();
    let seed = trial.sub_seed(2);
    let p = random_projector(d, 1 + (seed % (d as u64 - 1).max(1)) as usize, seed);
    let after = purified_distance(&project(rho.state(), &p)?, &project(sigma.state(), &p)?)?.value;
    evals.push(Eval::exact("projection", after, before));
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho), ("sigma", &sigma)]),
        evals,
    })
}

pub(crate) fn pd_triangle(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    let sigma = subnormalized(trial, 1)?;
    let tau = subnormalized(trial, 2)?;
    let pd = |a: &MultipartiteState, b: &MultipartiteState| purified_distance(a.state(), b.state()).map(|d| d.value);
    let lhs = pd(&rho, &tau)?;
    let rhs = pd(&rho, &sigma)? + pd(&sigma, &tau)?;
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho), ("sigma", &sigma), ("tau", &tau)]),
        evals: vec![Eval::exact("", lhs, rhs)],
    })
}

pub(crate) fn pd_reorder(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    let sigma = subnormalized(trial, 1)?;
    let reordered = reorder_to_eigenbasis(rho.state(), sigma.state())?;
    let lhs = purified_distance(rho.state(), &reordered)?.value;
    let rhs = purified_distance(rho.state(), sigma.state())?.value;
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho), ("sigma", &sigma)]),
        evals: vec![Eval::exact("", lhs, rhs)],
    })
}

pub(crate) fn uhlmann(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    let sigma = state(trial, 1)?;
    let (psi, phi) = uhlmann_pair(rho.state(), sigma.state())?;
    let overlap = psi.inner(&phi).norm();
    let f = fidelity(rho.state(), sigma.state())?.value;
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho), ("sigma", &sigma)]),
        evals: vec![Eval::exact("|overlap - fidelity|", (overlap - f).abs(), 0.0)],
    })
}

pub(crate) fn fannes_limit(trial: &Trial) -> Result<TrialOutput> {
    let v = trial_spectrum(trial);
    let s = Spectrum::new(&v)?;
    let d = v.len() as f64;
    let ns = if v.len() <= 2 { FANNES_NS } else { FANNES_NS_WIDE };
    let mut evals = Vec::new();
    for n in ns {
        let tps = tensor_power_spectrum(&s, n)?;
        for &eps in &trial.spec.epsilons {
            let f = fannes_terms_of_classes(&tps, eps)?;
            evals.push(Eval::exact(format!("eps={eps} n={n} l1 form"), f.lhs, f.rhs));
            let removed = 1.0 - (1.0 - eps * eps).sqrt();
            let stated = eps * d.log2() + (eta(eps) + eta(removed)) / n as f64;
            evals.push(Eval::exact(format!("eps={eps} n={n} eps form"), f.lhs, stated));
        }
    }
    Ok(TrialOutput {
        input: spectrum_json(&v),
        evals,
    })
}

pub(crate) fn renyi_to_vn(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    let h = von_neumann(rho.state()).value;
    let mut evals = Vec::new();
    for &alpha in &trial.spec.alphas {
        let ha = renyi_alpha(rho.state(), alpha)?.value;
        evals.push(Eval::exact(format!("alpha={alpha}"), (ha - h).abs(), 0.01));
    }
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho)]),
        evals,
    })
}

pub(crate) fn upper_candidate(trial: &Trial) -> Result<TrialOutput> {
    let rho = state(trial, 0)?;
    let last = rho.num_subsystems() - 1;
    let (lhs, _) = solved(&rho, &[last])?;
    let mut evals = Vec::new();
    for &eps in &trial.spec.epsilons {
        let (t, _) = truncated_state(rho.state(), (1.0 - eps * eps).sqrt(), Direction::CutLarge)?;
        let t = MultipartiteState::new(t, rho.dims().to_vec())?;
        let rhs = conditional_vn_subnormalized(&t, &[last])?.value;
        evals.push(Eval::bound(format!("eps={eps}"), lhs, rhs));
    }
    Ok(TrialOutput {
        input: states_json(&[("rho", &rho)]),
        evals,
    })
}
