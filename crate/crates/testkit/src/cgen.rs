//! Random C translation units that carry their own identifier annotations.
//!
//! Every identifier is emitted together with the category it was created
//! for, so the expected placeholder numbering can be computed by walking the
//! generator's own output, with no parser involved.

use std::collections::{BTreeSet, HashMap};

use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cat {
    Func,
    Type,
    Field,
    Var,
}

impl Cat {
    pub fn prefix(self) -> &'static str {
        match self {
            Cat::Func => "func",
            Cat::Type => "type",
            Cat::Field => "field",
            Cat::Var => "var",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Text(String),
    /// `reserved` marks library names that obfuscation must keep.
    Ident { name: String, cat: Cat, reserved: bool },
}

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub pieces: Vec<Piece>,
}

impl Program {
    pub fn text(&self) -> String {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Text(t) => t.as_str(),
                Piece::Ident { name, .. } => name.as_str(),
            })
            .collect()
    }

    /// Identifier occurrences in emission (source) order.
    pub fn identifiers(&self) -> Vec<(String, Cat)> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Ident { name, cat, .. } => Some((name.clone(), *cat)),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// Byte spans of identifier occurrences, in order.
    pub fn identifier_spans(&self) -> Vec<(usize, usize)> {
        let mut pos = 0;
        let mut spans = Vec::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => pos += t.len(),
                Piece::Ident { name, .. } => {
                    spans.push((pos, pos + name.len()));
                    pos += name.len();
                }
            }
        }
        spans
    }

    pub fn reserved_names(&self) -> BTreeSet<String> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Ident { name, reserved: true, .. } => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    /// Brute-force numbering: the k-th distinct non-reserved name of a
    /// category, in emission order, becomes `<category>k`.
    pub fn expected_ir(&self) -> String {
        let mut assigned: HashMap<(Cat, &str), String> = HashMap::new();
        let mut counters: HashMap<Cat, usize> = HashMap::new();
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Ident { name, reserved: true, .. } => out.push_str(name),
                Piece::Ident { name, cat, reserved: false } => {
                    let placeholder = assigned.entry((*cat, name.as_str())).or_insert_with(|| {
                        let c = counters.entry(*cat).or_insert(0);
                        *c += 1;
                        format!("{}{}", cat.prefix(), c)
                    });
                    out.push_str(placeholder);
                }
            }
        }
        out
    }

    fn t(&mut self, text: &str) {
        match self.pieces.last_mut() {
            Some(Piece::Text(prev)) => prev.push_str(text),
            _ => self.pieces.push(Piece::Text(text.to_string())),
        }
    }

    fn id(&mut self, name: &str, cat: Cat) {
        self.pieces.push(Piece::Ident { name: name.to_string(), cat, reserved: false });
    }

    fn lib(&mut self, name: &str) {
        self.pieces.push(Piece::Ident { name: name.to_string(), cat: Cat::Func, reserved: true });
    }
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "nu", "re", "ta", "zo", "pe", "qu", "vex", "dor", "bix", "sul", "fen", "gar", "hol", "jin",
    "wom", "yat", "kri", "plo", "stu", "tem", "vor",
];

const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern",
    "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed",
    "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while", "main",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldTy {
    Int,
    Text,
    SelfPtr,
}

#[derive(Debug, Clone)]
struct StructInfo {
    tag: String,
    fields: Vec<(String, FieldTy)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ValTy {
    Int,
    Ptr(usize),
    /// Variable of an `int` typedef.
    AliasInt,
    /// Value of a typedef naming a struct.
    AliasStruct(usize),
}

#[derive(Debug, Clone)]
struct FuncInfo {
    name: String,
    params: Vec<(String, ValTy)>,
}

/// Name groups that can share spellings without confusing a C parser:
/// tags, fields and ordinary (value) identifiers live in separate
/// namespaces. Typedef names are never shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Tag,
    Field,
    Value,
}

pub struct ProgramGen<'a> {
    rng: Rng,
    forbidden: &'a dyn Fn(&str) -> bool,
    used: HashMap<String, Vec<Group>>,
    aliases: BTreeSet<String>,
    structs: Vec<StructInfo>,
    alias_int: Option<String>,
    alias_struct: Option<(String, usize)>,
    enum_consts: Vec<String>,
    globals: Vec<(String, ValTy)>,
    funcs: Vec<FuncInfo>,
    prog: Program,
}

struct Scope {
    vars: Vec<(String, ValTy)>,
    labels: Vec<String>,
    depth: usize,
}

impl<'a> ProgramGen<'a> {
    /// `forbidden` rejects candidate names (for example library names the
    /// obfuscator would treat as reserved).
    pub fn new(seed: u64, forbidden: &'a dyn Fn(&str) -> bool) -> Self {
        Self {
            rng: Rng::new(seed),
            forbidden,
            used: HashMap::new(),
            aliases: BTreeSet::new(),
            structs: Vec::new(),
            alias_int: None,
            alias_struct: None,
            enum_consts: Vec::new(),
            globals: Vec::new(),
            funcs: Vec::new(),
            prog: Program::default(),
        }
    }

    fn acceptable(&self, name: &str) -> bool {
        name.len() >= 3 && !KEYWORDS.contains(&name) && !(self.forbidden)(name) && !self.aliases.contains(name)
    }

    fn fresh_spelling(&mut self) -> String {
        loop {
            let n = 1 + self.rng.below(3) as usize;
            let mut s = String::new();
            for i in 0..n {
                if i > 0 && self.rng.chance(0.3) {
                    s.push('_');
                }
                s.push_str(SYLLABLES[self.rng.below(SYLLABLES.len() as u64) as usize]);
            }
            if self.acceptable(&s) && !self.used.contains_key(&s) {
                return s;
            }
        }
    }

    /// A name for `group`, sometimes borrowed from another group.
    fn name(&mut self, group: Group) -> String {
        if self.rng.chance(0.25) {
            let shareable: Vec<String> = self
                .used
                .iter()
                .filter(|(n, gs)| !gs.contains(&group) && self.acceptable(n))
                .map(|(n, _)| n.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if !shareable.is_empty() {
                let n = shareable[self.rng.below(shareable.len() as u64) as usize].clone();
                self.used.get_mut(&n).expect("known").push(group);
                return n;
            }
        }
        let n = self.fresh_spelling();
        self.used.insert(n.clone(), vec![group]);
        n
    }

    fn alias_name(&mut self) -> String {
        let n = self.fresh_spelling();
        self.used.insert(n.clone(), vec![Group::Tag, Group::Field, Group::Value]);
        self.aliases.insert(n.clone());
        n
    }

    pub fn generate(mut self) -> Program {
        let n_structs = self.rng.below(3) as usize;
        for _ in 0..n_structs {
            self.gen_struct();
        }
        if self.rng.chance(0.5) {
            let alias = self.alias_name();
            self.prog.t("typedef int ");
            self.prog.id(&alias, Cat::Type);
            self.prog.t(";\n");
            self.alias_int = Some(alias);
        }
        if !self.structs.is_empty() && self.rng.chance(0.5) {
            let idx = self.rng.below(self.structs.len() as u64) as usize;
            let alias = self.alias_name();
            let tag = self.structs[idx].tag.clone();
            self.prog.t("typedef struct ");
            self.prog.id(&tag, Cat::Type);
            self.prog.t(" ");
            self.prog.id(&alias, Cat::Type);
            self.prog.t(";\n");
            self.alias_struct = Some((alias, idx));
        }
        if self.rng.chance(0.4) {
            self.gen_enum();
        }
        for _ in 0..self.rng.below(3) {
            self.gen_global();
        }
        let n_funcs = 1 + self.rng.below(3) as usize;
        for _ in 0..n_funcs {
            self.gen_function();
        }
        self.prog
    }

    fn gen_struct(&mut self) {
        let tag = self.name(Group::Tag);
        self.prog.t("struct ");
        self.prog.id(&tag, Cat::Type);
        self.prog.t(" {\n");
        let mut fields = Vec::new();
        let n = 1 + self.rng.below(4) as usize;
        while fields.len() < n {
            let f = self.name(Group::Field);
            if fields.iter().any(|(g, _)| *g == f) {
                continue;
            }
            let ty = match self.rng.below(4) {
                0 => FieldTy::Text,
                1 => FieldTy::SelfPtr,
                _ => FieldTy::Int,
            };
            match ty {
                FieldTy::Int => self.prog.t("    int "),
                FieldTy::Text => self.prog.t("    const char *"),
                FieldTy::SelfPtr => {
                    self.prog.t("    struct ");
                    self.prog.id(&tag, Cat::Type);
                    self.prog.t(" *");
                }
            }
            self.prog.id(&f, Cat::Field);
            self.prog.t(";\n");
            fields.push((f, ty));
        }
        if !fields.iter().any(|(_, t)| *t == FieldTy::Int) {
            let f = loop {
                let f = self.name(Group::Field);
                if !fields.iter().any(|(g, _)| *g == f) {
                    break f;
                }
            };
            self.prog.t("    int ");
            self.prog.id(&f, Cat::Field);
            self.prog.t(";\n");
            fields.push((f, FieldTy::Int));
        }
        self.prog.t("};\n");
        self.structs.push(StructInfo { tag, fields });
    }

    fn gen_enum(&mut self) {
        let tag = self.name(Group::Tag);
        self.prog.t("enum ");
        self.prog.id(&tag, Cat::Type);
        self.prog.t(" { ");
        let n = 1 + self.rng.below(3);
        for i in 0..n {
            let c = self.name(Group::Value);
            if i > 0 {
                self.prog.t(", ");
            }
            self.prog.id(&c, Cat::Var);
            if self.rng.chance(0.3) {
                self.prog.t(&format!(" = {}", 10 + i * 5));
            }
            self.enum_consts.push(c);
        }
        self.prog.t(" };\n");
    }

    fn emit_type(&mut self, ty: ValTy) {
        match ty {
            ValTy::Int => self.prog.t("int "),
            ValTy::Ptr(i) => {
                let tag = self.structs[i].tag.clone();
                self.prog.t("struct ");
                self.prog.id(&tag, Cat::Type);
                self.prog.t(" *");
            }
            ValTy::AliasInt => {
                let a = self.alias_int.clone().expect("alias exists");
                self.prog.id(&a, Cat::Type);
                self.prog.t(" ");
            }
            ValTy::AliasStruct(_) => {
                let a = self.alias_struct.clone().expect("alias exists").0;
                self.prog.id(&a, Cat::Type);
                self.prog.t(" ");
            }
        }
    }

    fn random_decl_type(&mut self, allow_struct_value: bool) -> ValTy {
        let mut options = vec![ValTy::Int, ValTy::Int];
        if !self.structs.is_empty() {
            options.push(ValTy::Ptr(self.rng.below(self.structs.len() as u64) as usize));
        }
        if self.alias_int.is_some() {
            options.push(ValTy::AliasInt);
        }
        if allow_struct_value {
            if let Some((_, idx)) = &self.alias_struct {
                options.push(ValTy::AliasStruct(*idx));
            }
        }
        options[self.rng.below(options.len() as u64) as usize]
    }

    fn gen_global(&mut self) {
        let name = self.name(Group::Value);
        let ty = self.random_decl_type(false);
        self.emit_type(ty);
        self.prog.id(&name, Cat::Var);
        if matches!(ty, ValTy::Int | ValTy::AliasInt) && self.rng.chance(0.5) {
            self.prog.t(&format!(" = {}", self.rng.below(100)));
        }
        self.prog.t(";\n");
        self.globals.push((name, ty));
    }

    fn gen_function(&mut self) {
        let name = self.name(Group::Value);
        let mut params: Vec<(String, ValTy)> = Vec::new();
        let n = self.rng.below(4);
        for _ in 0..n {
            let p = loop {
                let p = self.name(Group::Value);
                if p != name && !params.iter().any(|(q, _)| *q == p) {
                    break p;
                }
            };
            let ty = self.random_decl_type(false);
            params.push((p, ty));
        }
        self.prog.t("int ");
        self.prog.id(&name, Cat::Func);
        self.prog.t("(");
        if params.is_empty() {
            self.prog.t("void");
        }
        for (i, (p, ty)) in params.iter().enumerate() {
            if i > 0 {
                self.prog.t(", ");
            }
            self.emit_type(*ty);
            self.prog.id(p, Cat::Var);
        }
        self.prog.t(")\n{\n");
        // Registered before the body so the function may call itself.
        self.funcs.push(FuncInfo { name: name.clone(), params: params.clone() });
        let mut scope = Scope { vars: params, labels: Vec::new(), depth: 1 };
        let n_stmts = 1 + self.rng.below(5);
        for _ in 0..n_stmts {
            self.gen_stmt(&mut scope);
        }
        let labels = std::mem::take(&mut scope.labels);
        for l in labels {
            self.prog.id(&l, Cat::Var);
            self.prog.t(":\n    ;\n");
        }
        self.indent(1);
        self.prog.t("return ");
        self.gen_int_expr(&scope, 2);
        self.prog.t(";\n}\n");
    }

    fn indent(&mut self, depth: usize) {
        self.prog.t(&"    ".repeat(depth));
    }

    fn visible(&self, scope: &Scope) -> Vec<(String, ValTy)> {
        let mut v = self.globals.clone();
        v.extend(scope.vars.iter().cloned());
        v
    }

    fn pick<T: Clone>(&mut self, items: &[T]) -> Option<T> {
        if items.is_empty() {
            None
        } else {
            Some(items[self.rng.below(items.len() as u64) as usize].clone())
        }
    }

    fn int_fields(&self, idx: usize) -> Vec<String> {
        self.structs[idx].fields.iter().filter(|(_, t)| *t == FieldTy::Int).map(|(f, _)| f.clone()).collect()
    }

    fn gen_int_expr(&mut self, scope: &Scope, depth: usize) {
        let vis = self.visible(scope);
        let choice = self.rng.below(if depth == 0 { 3 } else { 8 });
        match choice {
            0 => {
                let n = self.rng.below(50);
                self.prog.t(&n.to_string());
            }
            1 | 2 => {
                let ints: Vec<String> =
                    vis.iter().filter(|(_, t)| matches!(t, ValTy::Int | ValTy::AliasInt)).map(|(n, _)| n.clone()).collect();
                let mut pool = ints;
                pool.extend(self.enum_consts.iter().cloned());
                match self.pick(&pool) {
                    Some(n) => self.prog.id(&n, Cat::Var),
                    None => self.prog.t("1"),
                }
            }
            3 => {
                let ptrs: Vec<(String, usize)> =
                    vis.iter().filter_map(|(n, t)| if let ValTy::Ptr(i) = t { Some((n.clone(), *i)) } else { None }).collect();
                let vals: Vec<(String, usize)> = vis
                    .iter()
                    .filter_map(|(n, t)| if let ValTy::AliasStruct(i) = t { Some((n.clone(), *i)) } else { None })
                    .collect();
                if let Some((v, i)) = self.pick(&vals) {
                    let f = self.pick(&self.int_fields(i)).expect("every struct has an int field");
                    self.prog.id(&v, Cat::Var);
                    self.prog.t(".");
                    self.prog.id(&f, Cat::Field);
                } else if let Some((p, i)) = self.pick(&ptrs) {
                    self.field_chain(&p, i);
                } else {
                    self.prog.t("2");
                }
            }
            4 => {
                let f = self.pick(&self.funcs.clone()).expect("current function is registered");
                self.prog.id(&f.name, Cat::Func);
                self.prog.t("(");
                for (i, (_, ty)) in f.params.iter().enumerate() {
                    if i > 0 {
                        self.prog.t(", ");
                    }
                    self.gen_arg(scope, *ty, depth - 1);
                }
                self.prog.t(")");
            }
            5 => {
                let ptrs: Vec<(String, usize)> = vis
                    .iter()
                    .filter_map(|(n, t)| if let ValTy::Ptr(i) = t { Some((n.clone(), *i)) } else { None })
                    .filter(|(_, i)| self.structs[*i].fields.iter().any(|(_, t)| *t == FieldTy::Text))
                    .collect();
                if let Some((p, i)) = self.pick(&ptrs) {
                    let texts: Vec<String> = self.structs[i]
                        .fields
                        .iter()
                        .filter(|(_, t)| *t == FieldTy::Text)
                        .map(|(f, _)| f.clone())
                        .collect();
                    let f = self.pick(&texts).expect("filtered");
                    self.prog.t("(int)");
                    self.prog.lib("strlen");
                    self.prog.t("(");
                    self.prog.id(&p, Cat::Var);
                    self.prog.t("->");
                    self.prog.id(&f, Cat::Field);
                    self.prog.t(")");
                } else {
                    self.prog.lib("abs");
                    self.prog.t("(");
                    self.gen_int_expr(scope, depth - 1);
                    self.prog.t(")");
                }
            }
            _ => {
                self.prog.t("(");
                self.gen_int_expr(scope, depth - 1);
                let op = [" + ", " - ", " * ", " < ", " == ", " & "][self.rng.below(6) as usize];
                self.prog.t(op);
                self.gen_int_expr(scope, depth - 1);
                self.prog.t(")");
            }
        }
    }

    /// `p->a` or `p->next->a`.
    fn field_chain(&mut self, p: &str, idx: usize) {
        self.prog.id(p, Cat::Var);
        let self_ptrs: Vec<String> = self.structs[idx]
            .fields
            .iter()
            .filter(|(_, t)| *t == FieldTy::SelfPtr)
            .map(|(f, _)| f.clone())
            .collect();
        if let Some(link) = self.pick(&self_ptrs) {
            if self.rng.chance(0.5) {
                self.prog.t("->");
                self.prog.id(&link, Cat::Field);
            }
        }
        let f = self.pick(&self.int_fields(idx)).expect("every struct has an int field");
        self.prog.t("->");
        self.prog.id(&f, Cat::Field);
    }

    fn gen_arg(&mut self, scope: &Scope, ty: ValTy, depth: usize) {
        match ty {
            ValTy::Int | ValTy::AliasInt => self.gen_int_expr(scope, depth),
            ValTy::Ptr(i) => {
                let same: Vec<String> = self
                    .visible(scope)
                    .into_iter()
                    .filter(|(_, t)| *t == ValTy::Ptr(i))
                    .map(|(n, _)| n)
                    .collect();
                match self.pick(&same) {
                    Some(n) => self.prog.id(&n, Cat::Var),
                    None => self.prog.t("0"),
                }
            }
            ValTy::AliasStruct(_) => unreachable!("parameters never take struct values"),
        }
    }

    fn gen_stmt(&mut self, scope: &mut Scope) {
        let d = scope.depth;
        let nested_ok = d < 3;
        match self.rng.below(if nested_ok { 9 } else { 5 }) {
            0 | 1 => {
                let name = loop {
                    let n = self.name(Group::Value);
                    if !self.funcs.iter().any(|f| f.name == n) && !scope.vars.iter().any(|(v, _)| *v == n) {
                        break n;
                    }
                };
                let ty = self.random_decl_type(true);
                self.indent(d);
                self.emit_type(ty);
                self.prog.id(&name, Cat::Var);
                match ty {
                    ValTy::Int | ValTy::AliasInt => {
                        self.prog.t(" = ");
                        self.gen_int_expr(scope, 2);
                    }
                    ValTy::Ptr(_) => {
                        self.prog.t(" = ");
                        self.gen_arg(scope, ty, 1);
                    }
                    ValTy::AliasStruct(_) => {}
                }
                self.prog.t(";\n");
                scope.vars.push((name, ty));
            }
            2 => {
                let targets = self.visible(scope);
                self.indent(d);
                match self.pick(&targets) {
                    Some((n, ValTy::Ptr(i))) => self.field_chain(&n, i),
                    Some((n, ValTy::AliasStruct(i))) => {
                        let f = self.pick(&self.int_fields(i)).expect("int field");
                        self.prog.id(&n, Cat::Var);
                        self.prog.t(".");
                        self.prog.id(&f, Cat::Field);
                    }
                    Some((n, _)) => self.prog.id(&n, Cat::Var),
                    None => {
                        self.prog.lib("abs");
                        self.prog.t("(0);\n");
                        return;
                    }
                }
                self.prog.t(" = ");
                self.gen_int_expr(scope, 2);
                self.prog.t(";\n");
            }
            3 => {
                self.indent(d);
                self.prog.lib("printf");
                self.prog.t("(\"%d\\n\", ");
                self.gen_int_expr(scope, 2);
                self.prog.t(");\n");
            }
            4 => {
                let label = loop {
                    let n = self.name(Group::Value);
                    if !self.funcs.iter().any(|f| f.name == n)
                        && !scope.vars.iter().any(|(v, _)| *v == n)
                        && !scope.labels.contains(&n)
                    {
                        break n;
                    }
                };
                self.indent(d);
                self.prog.t("if (");
                self.gen_int_expr(scope, 1);
                self.prog.t(")\n");
                self.indent(d + 1);
                self.prog.t("goto ");
                self.prog.id(&label, Cat::Var);
                self.prog.t(";\n");
                scope.labels.push(label);
            }
            5 | 6 => {
                self.indent(d);
                self.prog.t("if (");
                self.gen_int_expr(scope, 2);
                self.prog.t(") {\n");
                self.block(scope);
                self.indent(d);
                if self.rng.chance(0.5) {
                    self.prog.t("} else {\n");
                    self.block(scope);
                    self.indent(d);
                }
                self.prog.t("}\n");
            }
            7 => {
                self.indent(d);
                self.prog.t("while (");
                self.gen_int_expr(scope, 1);
                self.prog.t(") {\n");
                self.block(scope);
                self.indent(d);
                self.prog.t("}\n");
            }
            _ => {
                let i = loop {
                    let n = self.name(Group::Value);
                    if !self.funcs.iter().any(|f| f.name == n) && !scope.vars.iter().any(|(v, _)| *v == n) {
                        break n;
                    }
                };
                self.indent(d);
                self.prog.t("for (int ");
                self.prog.id(&i, Cat::Var);
                self.prog.t(" = 0; ");
                self.prog.id(&i, Cat::Var);
                self.prog.t(" < ");
                self.gen_int_expr(scope, 1);
                self.prog.t("; ");
                self.prog.id(&i, Cat::Var);
                self.prog.t("++) {\n");
                scope.vars.push((i.clone(), ValTy::Int));
                self.block(scope);
                scope.vars.retain(|(v, _)| *v != i);
                self.indent(d);
                self.prog.t("}\n");
            }
        }
    }

    fn block(&mut self, scope: &mut Scope) {
        let saved = scope.vars.len();
        scope.depth += 1;
        for _ in 0..1 + self.rng.below(3) {
            self.gen_stmt(scope);
        }
        scope.depth -= 1;
        scope.vars.truncate(saved);
    }
}

/// Shorthand: one program from `seed`.
pub fn generate(seed: u64, forbidden: &dyn Fn(&str) -> bool) -> Program {
    ProgramGen::new(seed, forbidden).generate()
}
