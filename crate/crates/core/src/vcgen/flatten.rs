//! Tuple elimination: every parameter, local, result and call is split into
//! scalar leaves so that scripts only need FP, bit-vector and Bool sorts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::frontend::{Binding, CheckKind, NodeId, Span, TExpr, TExprKind, TFunction, Type, TypeParamDef, TypedProgram};

/// One scalar input of a flattened function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatParam {
    /// `x` for a scalar parameter, `x_0`, `x_1`, ... for tuple leaves.
    pub name: String,
    #[serde(serialize_with = "crate::vcgen::ser_type")]
    pub ty: Type,
    /// Index of the source parameter.
    pub param: usize,
    /// Leaf index within the source parameter.
    pub leaf: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatFunction {
    pub name: String,
    pub type_params: Vec<TypeParamDef>,
    pub params: Vec<FlatParam>,
    /// Source parameter types, for rebuilding tuple inputs.
    pub source_params: Vec<(String, Type)>,
    pub result_types: Vec<Type>,
    pub pre: Option<TExpr>,
    /// One expression per result leaf.
    pub results: Vec<TExpr>,
    /// Result leaves are referenced as `Binding::ResultLeaf(k)`.
    pub post: Option<TExpr>,
    pub opaque: bool,
    pub unchecked: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlatProgram {
    pub functions: Vec<FlatFunction>,
    pub checks: BTreeMap<NodeId, BTreeSet<CheckKind>>,
}

impl FlatProgram {
    pub fn function(&self, name: &str) -> Option<&FlatFunction> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Splits tuples into scalars. Node ids are kept, so a node duplicated into
/// several leaves still maps to its obligations.
pub fn flatten_tuples(program: &TypedProgram) -> FlatProgram {
    FlatProgram { functions: program.functions.iter().map(flatten_function).collect(), checks: program.checks.clone() }
}

struct Flattener {
    /// First flat index of each source parameter.
    param_base: Vec<usize>,
    /// Flat local indices of each source local.
    locals: HashMap<usize, Vec<usize>>,
    next_local: usize,
}

fn flatten_function(f: &TFunction) -> FlatFunction {
    let mut params = vec![];
    let mut param_base = vec![];
    for (i, (name, ty)) in f.params.iter().enumerate() {
        param_base.push(params.len());
        let leaves = ty.leaves();
        let tuple = leaves.len() > 1 || matches!(ty, Type::Tuple(_));
        for (k, lt) in leaves.into_iter().enumerate() {
            let name = if tuple { format!("{name}_{k}") } else { name.clone() };
            params.push(FlatParam { name, ty: lt, param: i, leaf: k });
        }
    }
    let mut fl = Flattener { param_base, locals: HashMap::new(), next_local: 0 };
    let pre = f.pre.as_ref().map(|p| fl.scalar(p));
    let results = fl.expr(&f.body);
    let post = f.post.as_ref().map(|p| fl.scalar(&p.body));
    FlatFunction {
        name: f.name.clone(),
        type_params: f.type_params.clone(),
        params,
        source_params: f.params.clone(),
        result_types: f.ret.leaves(),
        pre,
        results,
        post,
        opaque: f.opaque,
        unchecked: f.unchecked,
        span: f.span,
    }
}

fn leaf_count(t: &Type) -> usize {
    t.leaves().len()
}

fn with_kind(e: &TExpr, ty: Type, kind: TExprKind) -> TExpr {
    TExpr { id: e.id, ty, span: e.span, kind }
}

impl Flattener {
    fn scalar(&mut self, e: &TExpr) -> TExpr {
        let mut v = self.expr(e);
        debug_assert_eq!(v.len(), 1);
        v.swap_remove(0)
    }

    fn leaf_vars(&self, e: &TExpr, name: &str, binding: impl Fn(usize) -> Binding) -> Vec<TExpr> {
        e.ty.leaves()
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let n = if matches!(e.ty, Type::Tuple(_)) { format!("{name}_{k}") } else { name.to_string() };
                with_kind(e, t, TExprKind::Var { name: n, binding: binding(k) })
            })
            .collect()
    }

    /// The scalar leaves of `e`, in declaration order.
    fn expr(&mut self, e: &TExpr) -> Vec<TExpr> {
        use TExprKind as K;
        match &e.kind {
            K::Const(_) => vec![e.clone()],
            K::Var { name, binding } => match *binding {
                Binding::Param(i) => {
                    let base = self.param_base[i];
                    self.leaf_vars(e, name, |k| Binding::Param(base + k))
                }
                Binding::Local(l) => {
                    let idx = self.locals.get(&l).cloned().unwrap_or_default();
                    self.leaf_vars(e, name, |k| Binding::Local(idx.get(k).copied().unwrap_or(l)))
                }
                Binding::Result | Binding::ResultLeaf(_) => self.leaf_vars(e, name, Binding::ResultLeaf),
            },
            K::Let { local, name, value, body } => {
                let vals = self.expr(value);
                let tuple = matches!(value.ty, Type::Tuple(_));
                let idx: Vec<usize> = (0..vals.len()).map(|k| self.next_local + k).collect();
                self.next_local += vals.len();
                self.locals.insert(*local, idx.clone());
                let body = self.expr(body);
                body.into_iter()
                    .map(|b| {
                        vals.iter().enumerate().rev().fold(b, |acc, (k, v)| {
                            let n = if tuple { format!("{name}_{k}") } else { name.clone() };
                            with_kind(
                                e,
                                acc.ty.clone(),
                                K::Let { local: idx[k], name: n, value: Box::new(v.clone()), body: Box::new(acc) },
                            )
                        })
                    })
                    .collect()
            }
            K::Assert { cond, body } => {
                let c = self.scalar(cond);
                self.expr(body)
                    .into_iter()
                    .map(|b| with_kind(e, b.ty.clone(), K::Assert { cond: Box::new(c.clone()), body: Box::new(b) }))
                    .collect()
            }
            K::If { cond, then, els } => {
                let c = self.scalar(cond);
                let t = self.expr(then);
                let f = self.expr(els);
                t.into_iter()
                    .zip(f)
                    .map(|(t, f)| {
                        with_kind(e, t.ty.clone(), K::If { cond: Box::new(c.clone()), then: Box::new(t), els: Box::new(f) })
                    })
                    .collect()
            }
            K::Unary(op, x) => vec![with_kind(e, e.ty.clone(), K::Unary(*op, Box::new(self.scalar(x))))],
            K::Binary(op, l, r) => {
                let l = self.scalar(l);
                let r = self.scalar(r);
                vec![with_kind(e, e.ty.clone(), K::Binary(*op, Box::new(l), Box::new(r)))]
            }
            K::Cast(x) => vec![with_kind(e, e.ty.clone(), K::Cast(Box::new(self.scalar(x))))],
            K::Math { func, args } => {
                let args = args.iter().map(|a| self.scalar(a)).collect();
                vec![with_kind(e, e.ty.clone(), K::Math { func: *func, args })]
            }
            K::Call { func, type_args, args } | K::CallLeaf { func, type_args, args, .. } => {
                let args: Vec<TExpr> = args.iter().flat_map(|a| self.expr(a)).collect();
                e.ty.leaves()
                    .into_iter()
                    .enumerate()
                    .map(|(k, t)| {
                        with_kind(
                            e,
                            t,
                            K::CallLeaf { func: func.clone(), type_args: type_args.clone(), args: args.clone(), leaf: k },
                        )
                    })
                    .collect()
            }
            K::Tuple(xs) => xs.iter().flat_map(|x| self.expr(x)).collect(),
            K::Proj(x, i) => {
                let leaves = self.expr(x);
                let Type::Tuple(ts) = &x.ty else {
                    return leaves;
                };
                let start: usize = ts[..*i].iter().map(leaf_count).sum();
                let n = leaf_count(&ts[*i]);
                leaves.into_iter().skip(start).take(n).collect()
            }
        }
    }
}
