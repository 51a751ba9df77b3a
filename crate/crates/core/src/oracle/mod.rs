//! Bayes-optimal references for known distributions.
//!
//! With the joint distribution known, the multi-stage problem is solved exactly
//! by backward induction: at every prefix the optimal stage decision is Chow's
//! rule with the reject cost replaced by the cost-to-go of the later stages.
//! In the binary case that reject classifier is the disagreement region of two
//! thresholded posteriors.

mod chow;
mod dp;
mod mixture;

pub use chow::{chow_decision, factorized_stage, Decision, FactorizedStage};
pub use dp::{
    dp_solve, DiscreteInstance, DpSolution, JointEntry, PrefixDecision, StagePolicy, MAX_CELLS,
};
pub use mixture::{
    bayes_reject_curve, mixture_posterior, BayesCurveConfig, BayesCurvePoint, ClassMixture, Component,
    GaussianMixtureSpec, Marginal, StageTwoError,
};
