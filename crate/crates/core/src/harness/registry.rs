use std::fmt::Write as _;
use std::sync::OnceLock;

use super::{checks, CheckSpec, Trial, TrialOutput};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_240_601;
const SDP_TOL: f64 = 1e-7;
const LINALG_TOL: f64 = 1e-9;

/// A registered check and its default settings.
pub struct CheckInfo {
    pub id: &'static str,
    pub claim: &'static str,
    /// Whether any of its records are evaluated on bound-consistent forms.
    pub bound_mode: bool,
    pub(crate) run: fn(&Trial) -> Result<TrialOutput>,
    trials: usize,
    dims: &'static [&'static [usize]],
    epsilons: &'static [f64],
    alphas: &'static [f64],
    tolerance: f64,
}

impl CheckInfo {
    pub fn default_spec(&self) -> CheckSpec {
        CheckSpec {
            check_id: self.id.to_string(),
            trials: self.trials,
            dims: self.dims.iter().map(|d| d.to_vec()).collect(),
            epsilons: self.epsilons.to_vec(),
            alphas: self.alphas.to_vec(),
            seed: DEFAULT_SEED,
            tolerance: self.tolerance,
            negate: false,
        }
    }
}

const TRI: &[&[usize]] = &[&[2, 2, 2]];
const BI: &[&[usize]] = &[&[2, 2], &[3, 2]];
const QUBITS: &[&[usize]] = &[&[2, 2]];
const SMALL: &[&[usize]] = &[&[2], &[3], &[4]];

pub fn registry() -> &'static [CheckInfo] {
    static REGISTRY: OnceLock<Vec<CheckInfo>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        vec![
            CheckInfo {
                id: "dpi_smooth",
                claim: "H_min^ε(A|BC) ≤ H_min^ε(A|B); exact SDP at ε = 0, eigenbasis truncation of ρ_ABC for ε > 0",
                bound_mode: true,
                run: checks::dpi_smooth,
                trials: 1000,
                dims: TRI,
                epsilons: &[0.0, 0.05, 0.1],
                alphas: &[],
                tolerance: SDP_TOL,
            },
            CheckInfo {
                id: "dpi_witness_trace",
                claim: "tracing C out of the optimal σ_BC leaves 1_A ⊗ σ_B − ρ_AB positive semidefinite",
                bound_mode: false,
                run: checks::dpi_witness_trace,
                trials: 1000,
                dims: TRI,
                epsilons: &[],
                alphas: &[],
                tolerance: SDP_TOL,
            },
            CheckInfo {
                id: "dpi_vn",
                claim: "H(A|BC) ≤ H(A|B)",
                bound_mode: false,
                run: checks::dpi_vn,
                trials: 10_000,
                dims: TRI,
                epsilons: &[],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "ssa_equiv",
                claim: "strong subadditivity slack equals the von Neumann DPI slack",
                bound_mode: false,
                run: checks::ssa_equiv,
                trials: 10_000,
                dims: TRI,
                epsilons: &[],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "chain_rule",
                claim: "H_min^ε(AB) − H_0^ε(B) ≤ H_min^{3ε}(A|B); exact at ε = 0, explicit witness for ε > 0",
                bound_mode: true,
                run: checks::chain_rule,
                trials: 1000,
                dims: QUBITS,
                epsilons: &[0.0, 0.05, 0.1],
                alphas: &[],
                tolerance: SDP_TOL,
            },
            CheckInfo {
                id: "renyi_hmin_bound",
                claim: "H_α + log(1 − √(1 − ε²))/(α − 1) ≤ H_min^ε for α > 1",
                bound_mode: false,
                run: checks::renyi_hmin_bound,
                trials: 1000,
                dims: SMALL,
                epsilons: &[0.1, 0.3, 0.6],
                alphas: &[1.5, 2.0, 4.0],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "renyi_h0_bound",
                claim: "H_0^ε ≤ H_α + log √(1 − ε)/(α − 1) for α < 1",
                bound_mode: false,
                run: checks::renyi_h0_bound,
                trials: 1000,
                dims: SMALL,
                epsilons: &[0.1, 0.3, 0.6],
                alphas: &[0.6, 0.75, 0.9],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "qaep_unconditional",
                claim: "(1/n) H_min^ε(Aⁿ) ≤ H(A) ≤ (1/n) H_0^ε(Aⁿ) along n = 100..2000",
                bound_mode: false,
                run: checks::qaep_unconditional,
                trials: 20,
                dims: &[&[2]],
                epsilons: &[0.05],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "qaep_conditional_sandwich",
                claim: "product sources: chain-rule lower rate ≤ H(A|B) ≤ truncated-candidate rate",
                bound_mode: true,
                run: checks::qaep_conditional_sandwich,
                trials: 3,
                dims: QUBITS,
                epsilons: &[0.01],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "pd_monotone",
                claim: "P(E(ρ), E(σ)) ≤ P(ρ, σ) for partial traces and projections",
                bound_mode: false,
                run: checks::pd_monotone,
                trials: 1000,
                dims: BI,
                epsilons: &[],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "pd_triangle",
                claim: "P(ρ, τ) ≤ P(ρ, σ) + P(σ, τ)",
                bound_mode: false,
                run: checks::pd_triangle,
                trials: 1000,
                dims: BI,
                epsilons: &[],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "pd_reorder",
                claim: "P(ρ, σ̃) ≤ P(ρ, σ) with σ̃ σ's spectrum placed on ρ's eigenbasis in matching order",
                bound_mode: false,
                run: checks::pd_reorder,
                trials: 1000,
                dims: BI,
                epsilons: &[],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "uhlmann",
                claim: "|⟨ψ|φ⟩| = F(ρ, σ) for the constructed purifications",
                bound_mode: false,
                run: checks::uhlmann,
                trials: 1000,
                dims: BI,
                epsilons: &[],
                alphas: &[],
                tolerance: 1e-8,
            },
            CheckInfo {
                id: "fannes_limit",
                claim: "(1/n)|H(σₙ) − H(ρ^⊗n)| within the Fannes bound for the truncated tensor power",
                bound_mode: false,
                run: checks::fannes_limit,
                trials: 100,
                dims: &[&[2], &[3]],
                epsilons: &[0.05, 0.1],
                alphas: &[],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "renyi_to_vn",
                claim: "|H_α − H| ≤ 0.01 for α = 1 ± 1e-3",
                bound_mode: false,
                run: checks::renyi_to_vn,
                trials: 1000,
                dims: &[&[2], &[3], &[2, 2]],
                epsilons: &[],
                alphas: &[0.999, 1.001],
                tolerance: LINALG_TOL,
            },
            CheckInfo {
                id: "upper_candidate",
                claim: "H_min(A|B)_ρ ≤ H(A|B) of the truncated candidate ρ̃ in the ε-ball",
                bound_mode: true,
                run: checks::upper_candidate,
                trials: 1000,
                dims: BI,
                epsilons: &[0.05, 0.1],
                alphas: &[],
                tolerance: SDP_TOL,
            },
        ]
    })
}

pub(crate) fn lookup(id: &str) -> Result<&'static CheckInfo> {
    registry()
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownCheck(id.to_string()))
}

/// Markdown table of check ids and the claims they test.
pub fn traceability_table() -> String {
    let mut s = String::from("| check | claim | mode |\n|---|---|---|\n");
    for c in registry() {
        let mode = if c.bound_mode { "exact + bound-mode" } else { "exact" };
        writeln!(s, "| `{}` | {} | {} |", c.id, c.claim.replace('|', "\\|"), mode).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_have_three_columns() {
        let t = traceability_table();
        assert_eq!(t.lines().count(), registry().len() + 2);
        for line in t.lines() {
            let bars = line.replace("\\|", "").matches('|').count();
            assert_eq!(bars, 4, "{line}");
        }
    }

    #[test]
    fn ids_are_unique() {
        let mut ids: Vec<&str> = registry().iter().map(|c| c.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), registry().len());
    }
}
