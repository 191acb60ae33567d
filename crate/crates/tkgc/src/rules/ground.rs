//! Rule-body grounding over the walk graph.
//!
//! Link grounding fixes the head interval `T_1` and checks every Allen tag;
//! time grounding leaves `T_1` unknown, so the first tag is not checked here
//! (it only constrains the candidate years later) while the remaining tags
//! must hold between consecutive body intervals.

use std::collections::HashMap;

use crate::allen::{classify, AllenRelation};
use crate::tkg::{Entity, GraphEdge, Relation, TimeInterval, WalkGraph};

type BodyAtom = (AllenRelation, Relation);

/// Terminal entities of all full groundings of `body` starting at
/// `(start, t1)`, with path multiplicities.
pub fn ground_link(
    graph: &WalkGraph,
    start: Entity,
    t1: TimeInterval,
    body: &[BodyAtom],
    exclude: &[usize],
) -> HashMap<Entity, u64> {
    let mut out = HashMap::new();
    link_dfs(graph, start, t1, body, exclude, &mut out);
    out
}

fn link_dfs(
    graph: &WalkGraph,
    current: Entity,
    prev_interval: TimeInterval,
    rest: &[BodyAtom],
    exclude: &[usize],
    out: &mut HashMap<Entity, u64>,
) {
    let (allen, relation) = rest[0];
    for edge in graph.edges_from(current) {
        if edge.relation != relation
            || exclude.contains(&edge.quad_id)
            || classify(prev_interval, edge.interval) != allen
        {
            continue;
        }
        if rest.len() == 1 {
            *out.entry(edge.neighbor).or_insert(0) += 1;
        } else {
            link_dfs(
                graph,
                edge.neighbor,
                edge.interval,
                &rest[1..],
                exclude,
                out,
            );
        }
    }
}

/// First-hop intervals `T_2` of all partial groundings of `body` from
/// `start` to `target`, one entry per grounding (duplicates preserved).
pub fn ground_time(
    graph: &WalkGraph,
    start: Entity,
    target: Entity,
    body: &[BodyAtom],
    exclude: &[usize],
) -> Vec<TimeInterval> {
    let mut out = Vec::new();
    for edge in graph.edges_from(start) {
        if edge.relation != body[0].1 || exclude.contains(&edge.quad_id) {
            continue;
        }
        if body.len() == 1 {
            if edge.neighbor == target {
                out.push(edge.interval);
            }
        } else {
            let mut hits = 0u64;
            time_dfs(
                graph,
                edge.neighbor,
                target,
                edge.interval,
                &body[1..],
                exclude,
                &mut hits,
            );
            for _ in 0..hits {
                out.push(edge.interval);
            }
        }
    }
    out
}

fn time_dfs(
    graph: &WalkGraph,
    current: Entity,
    target: Entity,
    prev_interval: TimeInterval,
    rest: &[BodyAtom],
    exclude: &[usize],
    hits: &mut u64,
) {
    let (allen, relation) = rest[0];
    for edge in graph.edges_from(current) {
        if edge.relation != relation
            || exclude.contains(&edge.quad_id)
            || classify(prev_interval, edge.interval) != allen
        {
            continue;
        }
        if rest.len() == 1 {
            if edge.neighbor == target {
                *hits += 1;
            }
        } else {
            time_dfs(
                graph,
                edge.neighbor,
                target,
                edge.interval,
                &rest[1..],
                exclude,
                hits,
            );
        }
    }
}

/// One concrete fully-grounded path from `(start, t1)` to `target`, for
/// rendering explanations. Depth-first, so deterministic given edge order.
pub fn find_link_grounding(
    graph: &WalkGraph,
    start: Entity,
    t1: TimeInterval,
    body: &[BodyAtom],
    target: Entity,
    exclude: &[usize],
) -> Option<Vec<GraphEdge>> {
    let mut path = Vec::with_capacity(body.len());
    if link_path_dfs(graph, start, t1, body, target, exclude, &mut path) {
        Some(path)
    } else {
        None
    }
}

fn link_path_dfs(
    graph: &WalkGraph,
    current: Entity,
    prev_interval: TimeInterval,
    rest: &[BodyAtom],
    target: Entity,
    exclude: &[usize],
    path: &mut Vec<GraphEdge>,
) -> bool {
    let (allen, relation) = rest[0];
    for &edge in graph.edges_from(current) {
        if edge.relation != relation
            || exclude.contains(&edge.quad_id)
            || classify(prev_interval, edge.interval) != allen
        {
            continue;
        }
        path.push(edge);
        if rest.len() == 1 {
            if edge.neighbor == target {
                return true;
            }
        } else if link_path_dfs(
            graph,
            edge.neighbor,
            edge.interval,
            &rest[1..],
            target,
            exclude,
            path,
        ) {
            return true;
        }
        path.pop();
    }
    false
}

/// One concrete partial grounding (T_1 unknown) whose first-hop interval is
/// `t2`, for rendering time-query explanations.
pub fn find_time_grounding(
    graph: &WalkGraph,
    start: Entity,
    target: Entity,
    body: &[BodyAtom],
    t2: TimeInterval,
    exclude: &[usize],
) -> Option<Vec<GraphEdge>> {
    for &edge in graph.edges_from(start) {
        if edge.relation != body[0].1 || edge.interval != t2 || exclude.contains(&edge.quad_id) {
            continue;
        }
        if body.len() == 1 {
            if edge.neighbor == target {
                return Some(vec![edge]);
            }
            continue;
        }
        let mut path = vec![edge];
        if time_path_dfs(
            graph,
            edge.neighbor,
            target,
            edge.interval,
            &body[1..],
            exclude,
            &mut path,
        ) {
            return Some(path);
        }
    }
    None
}

fn time_path_dfs(
    graph: &WalkGraph,
    current: Entity,
    target: Entity,
    prev_interval: TimeInterval,
    rest: &[BodyAtom],
    exclude: &[usize],
    path: &mut Vec<GraphEdge>,
) -> bool {
    let (allen, relation) = rest[0];
    for &edge in graph.edges_from(current) {
        if edge.relation != relation
            || exclude.contains(&edge.quad_id)
            || classify(prev_interval, edge.interval) != allen
        {
            continue;
        }
        path.push(edge);
        if rest.len() == 1 {
            if edge.neighbor == target {
                return true;
            }
        } else if time_path_dfs(
            graph,
            edge.neighbor,
            target,
            edge.interval,
            &rest[1..],
            exclude,
            path,
        ) {
            return true;
        }
        path.pop();
    }
    false
}
