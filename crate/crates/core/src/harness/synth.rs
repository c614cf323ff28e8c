//! Random block-structured process models for property checks.

use ethnum::U256;
use rand::Rng;

use crate::ir::{BinaryOp, Expr, Node, NodeKind, ProcessModel, ProcessVariableDecl, SequenceFlow, ValueType};
use crate::marking::compile_marking;

#[derive(Debug, Clone)]
enum Block {
    Task(NodeKind),
    Seq(Box<Block>, Box<Block>),
    And(Box<Block>, Box<Block>),
    /// Second branch `None` is a skip flow straight to the join.
    Xor(Box<Block>, Option<Box<Block>>),
    Loop(Box<Block>),
}

impl Block {
    fn flows(&self) -> usize {
        match self {
            Block::Task(_) => 0,
            Block::Seq(a, b) => 1 + a.flows() + b.flows(),
            Block::And(a, b) => 4 + a.flows() + b.flows(),
            Block::Xor(a, Some(b)) => 4 + a.flows() + b.flows(),
            Block::Xor(a, None) => 3 + a.flows(),
            Block::Loop(a) => 3 + a.flows(),
        }
    }

    fn has_external(&self) -> bool {
        match self {
            Block::Task(k) => k.is_external(),
            Block::Seq(a, b) | Block::And(a, b) | Block::Xor(a, Some(b)) => a.has_external() || b.has_external(),
            Block::Xor(a, None) | Block::Loop(a) => a.has_external(),
        }
    }
}

fn gen_block<R: Rng>(rng: &mut R, depth: u32) -> Block {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        let kind = match rng.gen_range(0..6) {
            0 => NodeKind::ScriptTask,
            1 => NodeKind::DefaultTask,
            _ => NodeKind::UserTask,
        };
        return Block::Task(kind);
    }
    let choice = rng.gen_range(0..5);
    let mut sub = || Box::new(gen_block(rng, depth - 1));
    match choice {
        0 => {
            let (a, b) = (sub(), sub());
            Block::Seq(a, b)
        }
        1 => {
            let (a, b) = (sub(), sub());
            Block::And(a, b)
        }
        2 => {
            let (a, b) = (sub(), sub());
            Block::Xor(a, Some(b))
        }
        3 => Block::Xor(sub(), None),
        _ => {
            let body = sub();
            if body.has_external() {
                Block::Loop(body)
            } else {
                let after = Box::new(Block::Task(NodeKind::UserTask));
                Block::Loop(Box::new(Block::Seq(body, after)))
            }
        }
    }
}

struct Builder {
    nodes: Vec<Node>,
    flows: Vec<SequenceFlow>,
    tasks: usize,
    gateways: usize,
    /// Exclusive splits closing a loop; their unguarded exit is the default.
    loop_splits: Vec<String>,
}

fn guard(value: u64) -> Option<Expr> {
    Some(Expr::Binary(BinaryOp::Eq, Box::new(Expr::Var("x".into())), Box::new(Expr::Int(U256::from(value)))))
}

impl Builder {
    fn node(&mut self, kind: NodeKind) -> String {
        let (id, name) = match kind {
            NodeKind::XorGateway | NodeKind::AndGateway => {
                self.gateways += 1;
                (format!("G{}", self.gateways), String::new())
            }
            _ => {
                self.tasks += 1;
                let prefix = if kind == NodeKind::ScriptTask { "S" } else { "T" };
                (format!("{prefix}{}", self.tasks), format!("{prefix}{}", self.tasks))
            }
        };
        self.nodes.push(Node::new(&id, kind, &name));
        id
    }

    fn flow(&mut self, source: &str, target: &str, condition: Option<Expr>, is_default: bool) {
        let id = format!("F{}", self.flows.len() + 1);
        let mut f = SequenceFlow::new(&id, source, target);
        f.is_default = is_default || (condition.is_none() && self.loop_splits.iter().any(|s| s == source));
        f.condition = condition;
        self.flows.push(f);
    }

    /// Emits `b` and returns its (entry, exit) node ids.
    fn emit(&mut self, b: &Block) -> (String, String) {
        match b {
            Block::Task(k) => {
                let id = self.node(*k);
                (id.clone(), id)
            }
            Block::Seq(a, b) => {
                let (ea, xa) = self.emit(a);
                let (eb, xb) = self.emit(b);
                self.flow(&xa, &eb, None, false);
                (ea, xb)
            }
            Block::And(a, b) => {
                let split = self.node(NodeKind::AndGateway);
                let (ea, xa) = self.emit(a);
                let (eb, xb) = self.emit(b);
                let join = self.node(NodeKind::AndGateway);
                self.flow(&split, &ea, None, false);
                self.flow(&split, &eb, None, false);
                self.flow(&xa, &join, None, false);
                self.flow(&xb, &join, None, false);
                (split, join)
            }
            Block::Xor(a, b) => {
                let split = self.node(NodeKind::XorGateway);
                let (ea, xa) = self.emit(a);
                let other = b.as_ref().map(|b| self.emit(b));
                let join = self.node(NodeKind::XorGateway);
                self.flow(&split, &ea, guard(0), false);
                match other {
                    Some((eb, xb)) => {
                        self.flow(&split, &eb, None, true);
                        self.flow(&xb, &join, None, false);
                    }
                    None => self.flow(&split, &join, None, true),
                }
                self.flow(&xa, &join, None, false);
                (split, join)
            }
            Block::Loop(a) => {
                let join = self.node(NodeKind::XorGateway);
                let (ea, xa) = self.emit(a);
                let split = self.node(NodeKind::XorGateway);
                self.loop_splits.push(split.clone());
                self.flow(&join, &ea, None, false);
                self.flow(&xa, &split, None, false);
                self.flow(&split, &join, guard(1), false);
                (join, split)
            }
        }
    }
}

/// Draws a model with at most `max_flows` sequence flows that validates
/// and compiles. Exclusive branches are guarded by a `uint256 x`, which
/// traces without data never set; branch search ignores guards anyway.
pub fn random_model<R: Rng>(rng: &mut R, max_flows: usize) -> ProcessModel {
    loop {
        let block = gen_block(rng, 3);
        if block.flows() + 2 > max_flows || !block.has_external() {
            continue;
        }
        let mut b = Builder { nodes: Vec::new(), flows: Vec::new(), tasks: 0, gateways: 0, loop_splits: Vec::new() };
        b.nodes.push(Node::new("Start", NodeKind::StartEvent, "start"));
        let (entry, exit) = b.emit(&block);
        b.nodes.push(Node::new("End", NodeKind::EndEvent, "end"));
        b.flow("Start", &entry, None, false);
        b.flow(&exit, "End", None, false);
        let model = ProcessModel {
            id: "synth".into(),
            name: "synthetic".into(),
            nodes: b.nodes,
            flows: b.flows,
            variables: vec![ProcessVariableDecl { name: "x".into(), ty: ValueType::Uint256, initial: None }],
            ..ProcessModel::default()
        };
        if compile_marking(&model).is_ok() {
            return model;
        }
    }
}
