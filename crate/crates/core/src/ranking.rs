//! Per-task selection pipeline: context filter, functional gate, pool-level
//! QoS scoring, global score and ranking.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::bpmn::{bind_requirements, BindError, BusinessProcess, TaskRequirement};
use crate::config::{ConfigError, SelectionConfig};
use crate::functional::{gate_candidates, match_context, FunctionalScore};
use crate::lexicon::{NormalizedTerm, SynonymLexicon};
use crate::qos::{normalize_pool, score_pool, QosError};
use crate::registry::{Operation, ServiceRegistry, WebService};
use crate::report::{Candidate, CandidateScores, SelectionReport, TaskSelection};

#[derive(Debug, thiserror::Error)]
pub enum SelectionError {
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("task `{task}`: {source}")]
    Qos {
        task: String,
        #[source]
        source: QosError,
    },
}

/// Blend of normalized functional score and QoS score.
pub fn global_score(fp_norm: f64, nfp: f64, functional_weight: f64) -> f64 {
    functional_weight * fp_norm + (1.0 - functional_weight) * nfp
}

fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.scores
        .global
        .total_cmp(&a.scores.global)
        .then_with(|| b.scores.fp.total.cmp(&a.scores.fp.total))
        .then_with(|| a.service_key.cmp(&b.service_key))
        .then_with(|| a.operation_name.cmp(&b.operation_name))
}

/// Sorts by global score, then functional total (both descending), then
/// service key and operation name; assigns ranks from 1.
pub fn rank_candidates(mut candidates: Vec<Candidate>) -> Vec<Candidate> {
    candidates.sort_by(rank_order);
    for (i, c) in candidates.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    candidates
}

/// One operation that passed the gate for a task.
#[derive(Debug, Clone, Copy)]
pub struct PoolEntry<'a> {
    pub service: &'a WebService,
    pub operation: &'a Operation,
    pub functional: FunctionalScore,
}

/// Scores a gated pool and returns it ranked.
pub fn rank_pool(pool: &[PoolEntry], config: &SelectionConfig) -> Result<Vec<Candidate>, QosError> {
    let histories: Vec<_> = pool.iter().map(|e| e.operation.qos_history.as_slice()).collect();
    let qos = score_pool(&histories, &config.qos)?;
    let totals: Vec<f64> = pool.iter().map(|e| f64::from(e.functional.total)).collect();
    let fp_norm = normalize_pool(&totals, config.qos.epsilon);

    let candidates = pool
        .iter()
        .zip(qos)
        .zip(fp_norm)
        .map(|((entry, q), fp_norm)| Candidate {
            rank: 0,
            service_key: entry.service.service_key.clone(),
            service_name: entry.service.name.clone(),
            operation_name: entry.operation.name.clone(),
            scores: CandidateScores {
                fp: entry.functional,
                fp_norm,
                global: global_score(fp_norm, q.nfp, config.functional_weight),
                uf_series: q.uf_series,
                changes: q.changes,
                score_ac: q.aggregate_change,
                ac_norm: q.ac_norm,
                uf_norm: q.uf_latest_norm,
                nfp: q.nfp,
            },
            rated: q.rated,
        })
        .collect();
    Ok(rank_candidates(candidates))
}

fn context_list(terms: &std::collections::BTreeSet<NormalizedTerm>) -> String {
    terms.iter().map(NormalizedTerm::as_str).collect::<Vec<_>>().join(", ")
}

/// Runs the full pipeline for one task.
pub fn select_for_task(
    req: &TaskRequirement,
    registry: &ServiceRegistry,
    lex: &SynonymLexicon,
    config: &SelectionConfig,
) -> Result<TaskSelection, SelectionError> {
    let mut diagnostics = Vec::new();
    let matching = registry
        .categories
        .iter()
        .filter(|c| match_context(req, c, lex))
        .count();

    let gated = gate_candidates(req, registry, lex, &config.score_table);
    let pool: Vec<PoolEntry> = gated
        .iter()
        .map(|g| PoolEntry {
            service: g.service,
            operation: g.operation,
            functional: g.score,
        })
        .collect();

    if matching == 0 {
        diagnostics.push(format!(
            "no category matched context ({})",
            context_list(&req.context_keywords)
        ));
    } else if pool.is_empty() {
        diagnostics.push(format!(
            "no operation passed functional gate ({matching} matching categor{})",
            if matching == 1 { "y" } else { "ies" }
        ));
    }

    let candidates = rank_pool(&pool, config).map_err(|source| SelectionError::Qos {
        task: req.task_id.clone(),
        source,
    })?;
    let unrated = candidates.iter().filter(|c| !c.rated).count();
    if unrated > 0 {
        diagnostics.push(format!("{unrated} candidate(s) have no QoS history and score nfp = 0"));
    }
    Ok(TaskSelection {
        requirement: req.clone(),
        candidates,
        diagnostics,
    })
}

/// Ranks candidate operations for already-bound requirements. Tasks are
/// independent and processed in parallel; output keeps input order.
pub fn select_for_requirements(
    process_id: &str,
    requirements: &[TaskRequirement],
    registry: &ServiceRegistry,
    lex: &SynonymLexicon,
    config: &SelectionConfig,
) -> Result<SelectionReport, SelectionError> {
    config.validate()?;
    let tasks = requirements
        .par_iter()
        .map(|req| select_for_task(req, registry, lex, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SelectionReport {
        process_id: process_id.to_owned(),
        tasks,
        config: config.clone(),
    })
}

pub fn select_for_process(
    process: &BusinessProcess,
    registry: &ServiceRegistry,
    lex: &SynonymLexicon,
    config: &SelectionConfig,
) -> Result<SelectionReport, SelectionError> {
    let requirements = bind_requirements(process)?;
    select_for_requirements(&process.id, &requirements, registry, lex, config)
}
