//! Shared fixtures, random generators and a brute-force reference pipeline.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;

use procsel::bpmn::TaskRequirement;
use procsel::config::SelectionConfig;
use procsel::functional::{match_context, name_terms, names_match, FunctionalScore, ScoreTable};
use procsel::lexicon::{keyword_set, NormalizedTerm, SynonymLexicon};
use procsel::qos::score_pool;
use procsel::registry::{Operation, Parameter, QosSnapshot, ServiceCategory, ServiceRegistry, WebService};
use procsel::report::{Candidate, CandidateScores, SelectionReport, TaskSelection};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn sendmail_registry() -> ServiceRegistry {
    ServiceRegistry::load(&fixture("registry.json")).unwrap()
}

pub fn sendmail_lexicon() -> SynonymLexicon {
    SynonymLexicon::load(&fixture("lexicon.json")).unwrap()
}

pub fn month(k: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2014, 1, 14, 0, 0, 0).unwrap() + Duration::days(30 * k)
}

// ---------------------------------------------------------------------------
// random data

/// Words used in parameter names. Each pair in `SYNONYMS` is linked in
/// [`test_lexicon`]; no word appears in two pairs, so substituting a word by
/// its partner never changes which names match.
pub const WORDS: &[&str] = &[
    "user", "password", "address", "email", "amount", "price", "city", "date", "code", "reply",
    "token", "status", "order", "item", "sender", "receiver",
];
pub const SYNONYMS: &[(&str, &str)] = &[
    ("address", "addr"),
    ("email", "mail"),
    ("price", "cost"),
    ("city", "town"),
    ("order", "purchase"),
];
pub const DATATYPES: &[&str] = &["string", "integer", "boolean", "double"];
pub const CONTEXT_WORDS: &[&str] = &["payment", "shipping", "auth", "mail", "travel", "stock", "weather"];

pub fn test_lexicon() -> SynonymLexicon {
    SynonymLexicon::from_pairs(SYNONYMS.iter().map(|(a, b)| (*a, vec![*b]))).unwrap()
}

pub fn synonym_of(word: &str) -> Option<&'static str> {
    SYNONYMS.iter().find_map(|&(a, b)| {
        if a == word {
            Some(b)
        } else if b == word {
            Some(a)
        } else {
            None
        }
    })
}

fn camel(words: &[&str]) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i == 0 {
            out.push_str(w);
        } else {
            let mut c = w.chars();
            out.extend(c.next().map(|f| f.to_ascii_uppercase()));
            out.push_str(c.as_str());
        }
    }
    out
}

pub fn random_param(rng: &mut impl Rng) -> Parameter {
    let n = if rng.gen_bool(0.3) { 2 } else { 1 };
    let words: Vec<&str> = WORDS.choose_multiple(rng, n).copied().collect();
    Parameter::new(camel(&words), DATATYPES.choose(rng).unwrap())
}

pub fn random_params(rng: &mut impl Rng, max: usize) -> Vec<Parameter> {
    (0..rng.gen_range(0..=max)).map(|_| random_param(rng)).collect()
}

pub fn random_history(rng: &mut impl Rng, max_len: usize) -> Vec<QosSnapshot> {
    let len = rng.gen_range(0..=max_len);
    // Shared values make some pools degenerate on purpose.
    let flat = rng.gen_bool(0.15);
    (0..len)
        .map(|k| {
            if flat {
                QosSnapshot::new(month(k as i64), 0.9, 200.0, 100)
            } else {
                QosSnapshot::new(
                    month(k as i64),
                    rng.gen_range(50..=100) as f64 / 100.0,
                    rng.gen_range(10..1000) as f64,
                    rng.gen_range(0..5000),
                )
            }
        })
        .collect()
}

pub fn random_operation(rng: &mut impl Rng, name: String) -> Operation {
    Operation {
        name,
        inputs: random_params(rng, 4),
        outputs: {
            let mut o = random_params(rng, 3);
            if o.is_empty() {
                o.push(random_param(rng));
            }
            o
        },
        qos_history: random_history(rng, 4),
    }
}

/// A registry with at most `max_ops` operations spread over 1 to 3 categories.
pub fn random_registry(rng: &mut impl Rng, max_ops: usize) -> ServiceRegistry {
    let mut categories = Vec::new();
    let mut ops_left = rng.gen_range(1..=max_ops);
    let mut next_key = 0;
    let mut seen: Vec<(Vec<Parameter>, Vec<Parameter>)> = Vec::new();
    for c in 0..rng.gen_range(1..=3) {
        if ops_left == 0 {
            break;
        }
        let n_kw = rng.gen_range(1..=3);
        let keywords = keyword_set(CONTEXT_WORDS.choose_multiple(rng, n_kw).copied());
        let mut services = Vec::new();
        for _ in 0..rng.gen_range(1..=4) {
            if ops_left == 0 {
                break;
            }
            let n_ops = rng.gen_range(1..=ops_left.min(4));
            ops_left -= n_ops;
            next_key += 1;
            services.push(WebService {
                name: format!("svc{next_key}"),
                business_name: String::new(),
                business_key: String::new(),
                service_key: format!("ws.{next_key:04}"),
                url: String::new(),
                version: String::new(),
                operations: (0..n_ops)
                    .map(|i| {
                        let mut op = random_operation(rng, format!("op{i}"));
                        // Reuse an earlier signature so pools hold rivals.
                        if !seen.is_empty() && rng.gen_bool(0.5) {
                            let (inputs, outputs) = seen.choose(rng).unwrap().clone();
                            op.inputs = inputs;
                            op.outputs = outputs;
                        }
                        seen.push((op.inputs.clone(), op.outputs.clone()));
                        op
                    })
                    .collect(),
                security_note: None,
            });
        }
        categories.push(ServiceCategory {
            name: format!("cat{c}"),
            keywords,
            services,
        });
    }
    ServiceRegistry { categories }
}

/// Requirements that usually resemble some registry operation so that the
/// gate lets a fair share of candidates through.
pub fn random_requirements(rng: &mut impl Rng, registry: &ServiceRegistry, n: usize) -> Vec<TaskRequirement> {
    let ops: Vec<(&ServiceCategory, &Operation)> = registry
        .services()
        .flat_map(|(c, s)| s.operations.iter().map(move |o| (c, o)))
        .collect();
    (0..n)
        .map(|t| {
            let model = ops.choose(rng).copied();
            let (mut inputs, mut outputs) = match model {
                Some((_, op)) if rng.gen_bool(0.8) => (op.inputs.clone(), op.outputs.clone()),
                _ => (random_params(rng, 3), vec![random_param(rng)]),
            };
            if rng.gen_bool(0.3) {
                inputs.push(random_param(rng));
            }
            if rng.gen_bool(0.3) && inputs.len() > 1 {
                inputs.pop();
            }
            if rng.gen_bool(0.2) && outputs.len() > 1 {
                outputs.pop();
            }
            if outputs.is_empty() {
                outputs.push(random_param(rng));
            }
            let context_keywords = match model {
                Some((cat, _)) if rng.gen_bool(0.75) => {
                    let kw: Vec<&NormalizedTerm> = cat.keywords.iter().collect();
                    let take = rng.gen_range(1..=kw.len());
                    kw.choose_multiple(rng, take).map(|k| (*k).clone()).collect()
                }
                _ => {
                    let n_ctx = rng.gen_range(1..=2);
                    keyword_set(CONTEXT_WORDS.choose_multiple(rng, n_ctx).copied())
                }
            };
            TaskRequirement {
                task_id: format!("task{t}"),
                task_name: format!("Task {t}"),
                inputs,
                outputs,
                context_keywords,
            }
        })
        .collect()
}

fn params_line(params: &[Parameter]) -> String {
    params
        .iter()
        .map(|p| format!("{}={}", p.name, p.datatype))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders requirements as a BPMN document with one annotated service task each.
pub fn process_xml(process_id: &str, reqs: &[TaskRequirement]) -> String {
    let mut body = String::new();
    body.push_str("    <startEvent id=\"start\"/>\n");
    let mut prev = "start".to_owned();
    for (i, r) in reqs.iter().enumerate() {
        let ctx: Vec<&str> = r.context_keywords.iter().map(NormalizedTerm::as_str).collect();
        let mut text = String::new();
        if !r.inputs.is_empty() {
            text.push_str(&format!("input: {}\n", params_line(&r.inputs)));
        }
        text.push_str(&format!("output: {}\ncontext: {}", params_line(&r.outputs), ctx.join(", ")));
        body.push_str(&format!(
            "    <serviceTask id=\"{id}\" name=\"{name}\"/>\n    <textAnnotation id=\"ann{i}\"><text>{text}</text></textAnnotation>\n    <association id=\"assoc{i}\" sourceRef=\"{id}\" targetRef=\"ann{i}\"/>\n    <sequenceFlow id=\"flow{i}\" sourceRef=\"{prev}\" targetRef=\"{id}\"/>\n",
            id = r.task_id,
            name = r.task_name,
        ));
        prev = r.task_id.clone();
    }
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<definitions xmlns=\"http://www.omg.org/spec/BPMN/20100524/MODEL\" id=\"defs\">\n  <process id=\"{process_id}\">\n{body}  </process>\n</definitions>\n"
    )
}

// ---------------------------------------------------------------------------
// the six request/response cases

const DISTINCT: &[&str] = &[
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet",
    "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango",
];

/// Builds a (request, operation) pair for case `k` in 1..=6 where every
/// parameter present on both sides matches by name and datatype.
///
/// 1: same inputs, same outputs; 2: other input count, same outputs;
/// 3: same inputs, extra outputs; 4: other input count, extra outputs;
/// 5: same inputs, missing outputs; 6: other input count, missing outputs.
pub fn case_fixture(rng: &mut impl Rng, case: u8) -> (TaskRequirement, Operation) {
    let same_inputs = matches!(case, 1 | 3 | 5);
    let user_in = rng.gen_range(0..=5usize);
    let op_in = if same_inputs {
        user_in
    } else {
        loop {
            let n = rng.gen_range(0..=5usize);
            if n != user_in {
                break n;
            }
        }
    };
    let (user_out, op_out) = match case {
        1 | 2 => {
            let n = rng.gen_range(1..=4usize);
            (n, n)
        }
        3 | 4 => {
            let n = rng.gen_range(1..=4usize);
            (n, rng.gen_range(n + 1..=n + 3))
        }
        _ => {
            let n = rng.gen_range(1..=4usize);
            (n, rng.gen_range(0..n))
        }
    };

    // Distinct single-word names so that only intended pairs match.
    let mut names = DISTINCT.iter();
    let mut shared = |n: usize| -> Vec<Parameter> {
        (0..n)
            .map(|_| Parameter::new(*names.next().unwrap(), DATATYPES.choose(rng).unwrap()))
            .collect()
    };
    let common_in = shared(user_in.min(op_in));
    let extra_in = shared(user_in.max(op_in) - user_in.min(op_in));
    let common_out = shared(user_out.min(op_out));
    let extra_out = shared(user_out.max(op_out) - user_out.min(op_out));

    let side = |common: &[Parameter], extra: &[Parameter], larger: bool| -> Vec<Parameter> {
        let mut v = common.to_vec();
        if larger {
            v.extend_from_slice(extra);
        }
        v
    };
    let mut req_inputs = side(&common_in, &extra_in, user_in > op_in);
    let mut op_inputs = side(&common_in, &extra_in, op_in > user_in);
    let mut req_outputs = side(&common_out, &extra_out, user_out > op_out);
    let mut op_outputs = side(&common_out, &extra_out, op_out > user_out);
    for v in [&mut req_inputs, &mut op_inputs, &mut req_outputs, &mut op_outputs] {
        v.shuffle(rng);
    }
    (
        TaskRequirement {
            task_id: format!("case{case}"),
            task_name: String::new(),
            inputs: req_inputs,
            outputs: req_outputs,
            context_keywords: BTreeSet::new(),
        },
        Operation {
            name: format!("case{case}"),
            inputs: op_inputs,
            outputs: op_outputs,
            qos_history: Vec::new(),
        },
    )
}

// ---------------------------------------------------------------------------
// reference pipeline

fn brute_max(edges: &[Vec<bool>], u: usize, used: &mut [bool]) -> usize {
    if u == edges.len() {
        return 0;
    }
    let mut best = brute_max(edges, u + 1, used);
    for o in 0..used.len() {
        if edges[u][o] && !used[o] {
            used[o] = true;
            best = best.max(1 + brute_max(edges, u + 1, used));
            used[o] = false;
        }
    }
    best
}

/// Largest number of disjoint pairs, by exhaustive search.
pub fn brute_matched(user: &[Parameter], op: &[Parameter], lex: &SynonymLexicon, by_name: bool) -> usize {
    let edges: Vec<Vec<bool>> = user
        .iter()
        .map(|u| {
            op.iter()
                .map(|o| {
                    if by_name {
                        names_match(&name_terms(&u.name), &name_terms(&o.name), lex)
                    } else {
                        u.datatype == o.datatype
                    }
                })
                .collect()
        })
        .collect();
    brute_max(&edges, 0, &mut vec![false; op.len()])
}

pub fn brute_functional(req: &TaskRequirement, op: &Operation, lex: &SynonymLexicon, t: &ScoreTable) -> FunctionalScore {
    let count = |user: usize, theirs: usize, more_good: bool| {
        if user == theirs {
            t.nb_equal
        } else if (user > theirs) == more_good {
            t.nb_favorable
        } else {
            t.nb_unfavorable
        }
    };
    let string = |user: &[Parameter], theirs: &[Parameter], by_name: bool| {
        let m = brute_matched(user, theirs, lex, by_name) as u32;
        t.string_same * m + t.string_different * (user.len() as u32 - m)
    };
    let nb_input = count(req.inputs.len(), op.inputs.len(), true);
    let nb_output = count(req.outputs.len(), op.outputs.len(), false);
    let str_input_name = string(&req.inputs, &op.inputs, true);
    let str_output_name = string(&req.outputs, &op.outputs, true);
    let str_input_datatype = string(&req.inputs, &op.inputs, false);
    let str_output_datatype = string(&req.outputs, &op.outputs, false);
    let total = nb_input + nb_output + str_input_name + str_output_name + str_input_datatype + str_output_datatype;
    let min_acceptable = t.nb_unfavorable
        + t.nb_favorable
        + 2 * t.string_same * req.inputs.len().min(op.inputs.len()) as u32
        + 2 * t.string_same * req.outputs.len() as u32;
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

fn min_max(values: &[f64], eps: f64) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| if hi - lo < eps { 1.0 } else { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) })
        .collect()
}

/// Scores every operation in the registry against every task, then throws
/// away what fails the context filter or the gate.
pub fn oracle_report(
    process_id: &str,
    reqs: &[TaskRequirement],
    registry: &ServiceRegistry,
    lex: &SynonymLexicon,
    config: &SelectionConfig,
) -> SelectionReport {
    let tasks = reqs
        .iter()
        .map(|req| {
            let everything: Vec<(bool, &WebService, &Operation, FunctionalScore)> = registry
                .categories
                .iter()
                .flat_map(|c| {
                    let ctx = match_context(req, c, lex);
                    c.services.iter().flat_map(move |s| s.operations.iter().map(move |o| (ctx, s, o)))
                })
                .map(|(ctx, s, o)| (ctx, s, o, brute_functional(req, o, lex, &config.score_table)))
                .collect();
            let any_context = registry.categories.iter().any(|c| match_context(req, c, lex));
            let kept: Vec<_> = everything
                .into_iter()
                .filter(|(ctx, _, _, f)| *ctx && f.total >= f.min_acceptable)
                .collect();

            let histories: Vec<&[QosSnapshot]> = kept.iter().map(|(_, _, o, _)| o.qos_history.as_slice()).collect();
            let qos = score_pool(&histories, &config.qos).unwrap();
            let totals: Vec<f64> = kept.iter().map(|(_, _, _, f)| f64::from(f.total)).collect();
            let fp_norm = min_max(&totals, config.qos.epsilon);
            let w = config.functional_weight;

            let mut candidates: Vec<Candidate> = kept
                .iter()
                .zip(qos)
                .zip(fp_norm)
                .map(|(((_, s, o, f), q), fpn)| Candidate {
                    rank: 0,
                    service_key: s.service_key.clone(),
                    service_name: s.name.clone(),
                    operation_name: o.name.clone(),
                    scores: CandidateScores {
                        fp: *f,
                        fp_norm: fpn,
                        uf_series: q.uf_series,
                        changes: q.changes,
                        score_ac: q.aggregate_change,
                        ac_norm: q.ac_norm,
                        uf_norm: q.uf_latest_norm,
                        nfp: q.nfp,
                        global: w * fpn + (1.0 - w) * q.nfp,
                    },
                    rated: q.rated,
                })
                .collect();
            candidates.sort_by(|a, b| {
                b.scores
                    .global
                    .partial_cmp(&a.scores.global)
                    .unwrap()
                    .then(b.scores.fp.total.cmp(&a.scores.fp.total))
                    .then((&a.service_key, &a.operation_name).cmp(&(&b.service_key, &b.operation_name)))
            });
            for (i, c) in candidates.iter_mut().enumerate() {
                c.rank = i + 1;
            }

            let mut diagnostics = Vec::new();
            let ctx_list: Vec<&str> = req.context_keywords.iter().map(NormalizedTerm::as_str).collect();
            if !any_context {
                diagnostics.push(format!("no category matched context ({})", ctx_list.join(", ")));
            } else if candidates.is_empty() {
                let n = registry.categories.iter().filter(|c| match_context(req, c, lex)).count();
                diagnostics.push(format!(
                    "no operation passed functional gate ({n} matching categor{})",
                    if n == 1 { "y" } else { "ies" }
                ));
            }
            let unrated = candidates.iter().filter(|c| !c.rated).count();
            if unrated > 0 {
                diagnostics.push(format!("{unrated} candidate(s) have no QoS history and score nfp = 0"));
            }
            TaskSelection {
                requirement: req.clone(),
                candidates,
                diagnostics,
            }
        })
        .collect();
    SelectionReport {
        process_id: process_id.to_owned(),
        tasks,
        config: config.clone(),
    }
}

/// The ranked `(serviceKey, operation)` lists of a report, per task.
pub fn ranked_lists(report: &SelectionReport) -> Vec<Vec<(String, String)>> {
    report
        .tasks
        .iter()
        .map(|t| {
            t.candidates
                .iter()
                .map(|c| (c.service_key.clone(), c.operation_name.clone()))
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// perturbations

/// Shuffles categories, services and operations. Parameter order and
/// history order are kept.
pub fn shuffle_registry(rng: &mut impl Rng, registry: &ServiceRegistry) -> ServiceRegistry {
    let mut r = registry.clone();
    r.categories.shuffle(rng);
    for c in &mut r.categories {
        c.services.shuffle(rng);
        for s in &mut c.services {
            s.operations.shuffle(rng);
        }
    }
    r
}

/// Shuffles the parameter lists of every operation and requirement.
pub fn shuffle_parameters(
    rng: &mut impl Rng,
    registry: &ServiceRegistry,
    reqs: &[TaskRequirement],
) -> (ServiceRegistry, Vec<TaskRequirement>) {
    let mut r = registry.clone();
    for c in &mut r.categories {
        for s in &mut c.services {
            for o in &mut s.operations {
                o.inputs.shuffle(rng);
                o.outputs.shuffle(rng);
            }
        }
    }
    let mut q = reqs.to_vec();
    for t in &mut q {
        t.inputs.shuffle(rng);
        t.outputs.shuffle(rng);
    }
    (r, q)
}

fn substitute_name(rng: &mut impl Rng, name: &str) -> String {
    let words: Vec<String> = procsel::lexicon::extract_keywords(name)
        .iter()
        .map(|t| {
            let w = t.as_str();
            match synonym_of(w) {
                Some(s) if rng.gen_bool(0.5) => s.to_owned(),
                _ => w.to_owned(),
            }
        })
        .collect();
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    camel(&refs)
}

/// Replaces words in requirement parameter names by their synonyms.
pub fn substitute_synonyms(rng: &mut impl Rng, reqs: &[TaskRequirement]) -> Vec<TaskRequirement> {
    reqs.iter()
        .map(|t| {
            let mut t = t.clone();
            for p in t.inputs.iter_mut().chain(t.outputs.iter_mut()) {
                p.name = substitute_name(rng, &p.name);
            }
            t
        })
        .collect()
}
