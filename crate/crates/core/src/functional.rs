//! Context filter and functional scoring.
//!
//! A candidate operation earns points for how its parameter counts compare
//! with the request and for every requested parameter whose name (and,
//! separately, whose datatype) finds a partner on the operation. The gate
//! threshold is the score of the weakest acceptable shape: a request with
//! fewer inputs than the operation and fewer outputs than it offers, where
//! every overlapping parameter matches.

use serde::{Deserialize, Serialize};

use crate::bpmn::TaskRequirement;
use crate::lexicon::{extract_keywords, keyword_sets_match, terms_match, NormalizedTerm, SynonymLexicon};
use crate::registry::{Operation, Parameter, ServiceCategory, ServiceRegistry, WebService};

/// Points awarded per comparison outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreTable {
    /// Same number of parameters.
    pub nb_equal: u32,
    /// More inputs requested than the operation needs, or fewer outputs
    /// requested than it produces.
    pub nb_favorable: u32,
    /// The remaining count relation.
    pub nb_unfavorable: u32,
    /// Per requested parameter with a matching partner.
    pub string_same: u32,
    /// Per requested parameter left without a partner.
    pub string_different: u32,
}

impl Default for ScoreTable {
    fn default() -> Self {
        Self {
            nb_equal: 3,
            nb_favorable: 2,
            nb_unfavorable: 1,
            string_same: 2,
            string_different: 0,
        }
    }
}

impl ScoreTable {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.nb_equal > self.nb_favorable && self.nb_favorable > self.nb_unfavorable) {
            return Err("score_table requires nb_equal > nb_favorable > nb_unfavorable".into());
        }
        if self.string_same <= self.string_different {
            return Err("score_table requires string_same > string_different".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareBy {
    Name,
    Datatype,
}

/// An injective pairing of requested parameters to operation parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    /// `(user_index, op_index)`, ascending by user index.
    pub pairs: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn matched_count(&self) -> usize {
        self.pairs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionalScore {
    pub nb_input: u32,
    pub nb_output: u32,
    pub str_input_name: u32,
    pub str_output_name: u32,
    pub str_input_datatype: u32,
    pub str_output_datatype: u32,
    pub total: u32,
    pub min_acceptable: u32,
}

impl FunctionalScore {
    /// Whether the candidate clears the gate.
    pub fn passed(&self) -> bool {
        self.total >= self.min_acceptable
    }
}

/// Keyword tokens of a parameter name. Names made only of stopwords fall
/// back to their collapsed form so that they can still match themselves.
pub fn name_terms(name: &str) -> Vec<NormalizedTerm> {
    let terms = extract_keywords(name);
    if terms.is_empty() {
        NormalizedTerm::collapse(name).into_iter().collect()
    } else {
        terms
    }
}

fn covers(a: &[NormalizedTerm], b: &[NormalizedTerm], lex: &SynonymLexicon) -> bool {
    a.iter().all(|x| b.iter().any(|y| terms_match(x, y, lex)))
}

/// Names match when every token of one side has a partner among the tokens
/// of the other.
pub fn names_match(a: &[NormalizedTerm], b: &[NormalizedTerm], lex: &SynonymLexicon) -> bool {
    !a.is_empty() && !b.is_empty() && (covers(a, b, lex) || covers(b, a, lex))
}

/// Maximum-cardinality matching between the two parameter lists.
///
/// Augmenting paths are tried for user parameters in ascending order, each
/// scanning operation parameters in ascending order, so the chosen pairing is
/// deterministic.
pub fn pair_parameters(
    user: &[Parameter],
    op: &[Parameter],
    lex: &SynonymLexicon,
    by: CompareBy,
) -> Pairing {
    let adjacency: Vec<Vec<usize>> = match by {
        CompareBy::Name => {
            let op_terms: Vec<_> = op.iter().map(|p| name_terms(&p.name)).collect();
            user.iter()
                .map(|u| {
                    let ut = name_terms(&u.name);
                    (0..op.len()).filter(|&j| names_match(&ut, &op_terms[j], lex)).collect()
                })
                .collect()
        }
        CompareBy::Datatype => user
            .iter()
            .map(|u| (0..op.len()).filter(|&j| op[j].datatype == u.datatype).collect())
            .collect(),
    };

    let mut owner: Vec<Option<usize>> = vec![None; op.len()];
    for u in 0..user.len() {
        let mut visited = vec![false; op.len()];
        augment(u, &adjacency, &mut owner, &mut visited);
    }

    let mut pairs: Vec<(usize, usize)> = owner
        .iter()
        .enumerate()
        .filter_map(|(o, u)| u.map(|u| (u, o)))
        .collect();
    pairs.sort_unstable();
    Pairing { pairs }
}

fn augment(u: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    for &o in &adj[u] {
        if visited[o] {
            continue;
        }
        visited[o] = true;
        if owner[o].is_none_or(|prev| augment(prev, adj, owner, visited)) {
            owner[o] = Some(u);
            return true;
        }
    }
    false
}

/// Count comparison. `more_is_favorable` is true for inputs (a request
/// supplying more inputs than needed) and false for outputs (a request asking
/// for fewer outputs than offered).
fn count_score(user: usize, op: usize, more_is_favorable: bool, table: &ScoreTable) -> u32 {
    use std::cmp::Ordering::*;
    match (user.cmp(&op), more_is_favorable) {
        (Equal, _) => table.nb_equal,
        (Greater, true) | (Less, false) => table.nb_favorable,
        _ => table.nb_unfavorable,
    }
}

fn string_score(requested: usize, matched: usize, table: &ScoreTable) -> u32 {
    table.string_same * matched as u32 + table.string_different * (requested - matched) as u32
}

/// Gate threshold for a request against an operation.
pub fn min_acceptable(req_inputs: usize, op_inputs: usize, req_outputs: usize, table: &ScoreTable) -> u32 {
    let per_pair = 2 * table.string_same;
    table.nb_unfavorable
        + table.nb_favorable
        + per_pair * req_inputs.min(op_inputs) as u32
        + per_pair * req_outputs as u32
}

pub fn score_functional(
    req: &TaskRequirement,
    op: &Operation,
    lex: &SynonymLexicon,
    table: &ScoreTable,
) -> FunctionalScore {
    let matched = |user: &[Parameter], theirs: &[Parameter], by| {
        pair_parameters(user, theirs, lex, by).matched_count()
    };
    let (ni, no) = (req.inputs.len(), req.outputs.len());

    let nb_input = count_score(ni, op.inputs.len(), true, table);
    let nb_output = count_score(no, op.outputs.len(), false, table);
    let str_input_name = string_score(ni, matched(&req.inputs, &op.inputs, CompareBy::Name), table);
    let str_output_name = string_score(no, matched(&req.outputs, &op.outputs, CompareBy::Name), table);
    let str_input_datatype =
        string_score(ni, matched(&req.inputs, &op.inputs, CompareBy::Datatype), table);
    let str_output_datatype =
        string_score(no, matched(&req.outputs, &op.outputs, CompareBy::Datatype), table);

    let total = nb_input
        + nb_output
        + str_input_name
        + str_output_name
        + str_input_datatype
        + str_output_datatype;
    let min_acceptable = min_acceptable(ni, op.inputs.len(), no, table);
    FunctionalScore {
        nb_input,
        nb_output,
        str_input_name,
        str_output_name,
        str_input_datatype,
        str_output_datatype,
        total,
        min_acceptable,
    }
}

pub fn match_context(req: &TaskRequirement, category: &ServiceCategory, lex: &SynonymLexicon) -> bool {
    keyword_sets_match(&req.context_keywords, &category.keywords, lex)
}

#[derive(Debug, Clone)]
pub struct GatedCandidate<'a> {
    pub category: &'a ServiceCategory,
    pub service: &'a WebService,
    pub operation: &'a Operation,
    pub score: FunctionalScore,
}

/// Scores every operation under the categories whose keywords match the
/// task context and keeps those that clear the gate, in registry order.
pub fn gate_candidates<'a>(
    req: &TaskRequirement,
    registry: &'a ServiceRegistry,
    lex: &SynonymLexicon,
    table: &ScoreTable,
) -> Vec<GatedCandidate<'a>> {
    registry
        .categories
        .iter()
        .filter(|c| match_context(req, c, lex))
        .flat_map(|category| {
            category.services.iter().flat_map(move |service| {
                service.operations.iter().map(move |operation| (category, service, operation))
            })
        })
        .filter_map(|(category, service, operation)| {
            let score = score_functional(req, operation, lex, table);
            score.passed().then_some(GatedCandidate {
                category,
                service,
                operation,
                score,
            })
        })
        .collect()
}
