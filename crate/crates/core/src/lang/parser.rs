use super::ast::*;
use super::lexer::{lex, Tok, Token};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Parses a complete MML source file.
pub fn parse(file: &str, src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(file, src)?;
    let mut decls = Vec::new();
    while p.peek() != &Tok::Eof {
        decls.push(p.decl()?);
    }
    Ok(Program { file: file.to_string(), decls })
}

/// Parses a standalone expression, used for command-line arguments.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new("<expr>", src)?;
    let e = p.expr()?;
    p.expect_tok(&Tok::Eof, "end of input")?;
    Ok(e)
}

struct Parser {
    file: String,
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(file: &str, src: &str) -> PResult<Parser> {
        let toks = lex(src).map_err(|e| ParseError {
            file: file.to_string(),
            line: e.span.line,
            col: e.span.col,
            message: e.message,
            expected: vec![],
        })?;
        Ok(Parser { file: file.to_string(), toks, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            file: self.file.clone(),
            line: t.span.line,
            col: t.span.col,
            message: format!("unexpected {}", t.tok),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_tok(&mut self, t: &Tok, what: &str) -> PResult<()> {
        if self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(&[what])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn cap(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Cap(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["constructor"]),
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let start = self.span();
        let kind = match self.peek() {
            Tok::Kw("type") => DeclKind::Type(self.typedef()?),
            Tok::Kw("let") => DeclKind::Fun(self.fundef()?),
            Tok::Kw("opaque") => DeclKind::Opaque(self.opaque()?),
            Tok::Kw("axiom") => DeclKind::Axiom(self.axiom()?),
            Tok::Kw("import") => DeclKind::Import(self.import()?),
            Tok::Kw("verify") | Tok::Kw("instance") | Tok::Kw("decompose") => {
                DeclKind::Directive(self.directive()?)
            }
            _ => {
                return self.error(&[
                    "`type`", "`let`", "`opaque`", "`axiom`", "`import`", "`verify`", "`instance`",
                    "`decompose`",
                ])
            }
        };
        Ok(Decl { kind, span: start.join(self.prev_span()) })
    }

    fn typedef(&mut self) -> PResult<TypeDef> {
        self.expect_kw("type")?;
        let name = self.ident()?;
        self.expect_sym("=")?;
        if self.eat_sym("{") {
            let mut fields = Vec::new();
            loop {
                let f = self.ident()?;
                self.expect_sym(":")?;
                let t = self.ty()?;
                fields.push((f, t));
                if self.eat_sym(";") {
                    if self.eat_sym("}") {
                        break;
                    }
                } else {
                    self.expect_sym("}")?;
                    break;
                }
            }
            return Ok(TypeDef { name, body: TypeBody::Record(fields) });
        }
        self.eat_sym("|");
        let mut ctors = Vec::new();
        loop {
            let cname = self.cap()?;
            let mut fields = Vec::new();
            if self.eat_kw("of") {
                fields.push(self.ty()?);
                while self.eat_sym("*") {
                    fields.push(self.ty()?);
                }
            }
            ctors.push(CtorDef { name: cname, fields });
            if !self.eat_sym("|") {
                break;
            }
        }
        Ok(TypeDef { name, body: TypeBody::Variant(ctors) })
    }

    fn ty(&mut self) -> PResult<Ty> {
        let mut t = match self.peek().clone() {
            Tok::Kw("int") => {
                self.bump();
                Ty::Int
            }
            Tok::Kw("rat") => {
                self.bump();
                Ty::Rat
            }
            Tok::Kw("bool") => {
                self.bump();
                Ty::Bool
            }
            Tok::Ident(n) => {
                self.bump();
                Ty::Named(n)
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.ty()?;
                if self.eat_sym(")") {
                    first
                } else {
                    let mut ts = vec![first];
                    while self.eat_sym("*") {
                        ts.push(self.ty()?);
                    }
                    self.expect_sym(")")?;
                    if ts.len() < 2 {
                        return self.error(&["`*`"]);
                    }
                    Ty::Tuple(ts)
                }
            }
            _ => return self.error(&["type"]),
        };
        while self.eat_kw("list") {
            t = Ty::list(t);
        }
        Ok(t)
    }

    fn param(&mut self) -> PResult<(String, Ty)> {
        self.expect_sym("(")?;
        let n = self.ident()?;
        self.expect_sym(":")?;
        let t = self.ty()?;
        self.expect_sym(")")?;
        Ok((n, t))
    }

    fn fundef(&mut self) -> PResult<FunDef> {
        self.expect_kw("let")?;
        let recursive = self.eat_kw("rec");
        let name = self.ident()?;
        let mut params = vec![self.param()?];
        while self.is_sym("(") {
            params.push(self.param()?);
        }
        let ret = if self.eat_sym(":") { Some(self.ty()?) } else { None };
        self.expect_sym("=")?;
        let body = self.expr()?;
        Ok(FunDef { name, recursive, params, ret, body })
    }

    fn opaque(&mut self) -> PResult<OpaqueDecl> {
        self.expect_kw("opaque")?;
        let name = self.ident()?;
        self.expect_sym(":")?;
        let mut tys = vec![self.ty()?];
        self.expect_sym("->")?;
        tys.push(self.ty()?);
        while self.eat_sym("->") {
            tys.push(self.ty()?);
        }
        let ret = tys.pop().unwrap();
        Ok(OpaqueDecl { name, params: tys, ret })
    }

    fn axiom(&mut self) -> PResult<AxiomDecl> {
        self.expect_kw("axiom")?;
        let name = self.ident()?;
        let mut params = Vec::new();
        while self.is_sym("(") {
            params.push(self.param()?);
        }
        self.expect_sym("=")?;
        let body = self.expr()?;
        Ok(AxiomDecl { name, params, body })
    }

    fn import(&mut self) -> PResult<ImportDecl> {
        self.expect_kw("import")?;
        let mut module = self.ident()?;
        while self.eat_sym(".") {
            module.push('.');
            module.push_str(&self.ident()?);
        }
        self.expect_sym("(")?;
        let mut names = vec![self.ident()?];
        while self.eat_sym(",") {
            names.push(self.ident()?);
        }
        self.expect_sym(")")?;
        Ok(ImportDecl { module, names })
    }

    fn directive(&mut self) -> PResult<Directive> {
        let kind = match self.bump() {
            Tok::Kw("verify") => DirectiveKind::Verify,
            Tok::Kw("instance") => DirectiveKind::Instance,
            _ => DirectiveKind::Decompose,
        };
        let target = self.ident()?;
        let mut assuming = None;
        let mut basis = Vec::new();
        if kind == DirectiveKind::Decompose {
            if self.eat_kw("assuming") {
                assuming = Some(self.ident()?);
            }
            if self.eat_kw("basis") {
                basis.push(self.ident()?);
                while self.eat_sym(",") {
                    basis.push(self.ident()?);
                }
            }
        }
        Ok(Directive { kind, target, assuming, basis })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek() {
            Tok::Kw("let") => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym("=")?;
                let bound = self.expr()?;
                self.expect_kw("in")?;
                let body = self.expr()?;
                let span = start.join(body.span);
                Ok(Expr { kind: ExprKind::Let(name, Box::new(bound), Box::new(body)), span })
            }
            Tok::Kw("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect_kw("then")?;
                let t = self.expr()?;
                self.expect_kw("else")?;
                let e = self.expr()?;
                let span = start.join(e.span);
                Ok(Expr { kind: ExprKind::If(Box::new(c), Box::new(t), Box::new(e)), span })
            }
            Tok::Kw("match") => {
                self.bump();
                let scrut = self.expr()?;
                self.expect_kw("with")?;
                self.eat_sym("|");
                let mut arms = vec![self.arm()?];
                while self.eat_sym("|") {
                    arms.push(self.arm()?);
                }
                let span = start.join(self.prev_span());
                Ok(Expr { kind: ExprKind::Match(Box::new(scrut), arms), span })
            }
            _ => self.binary(1),
        }
    }

    fn arm(&mut self) -> PResult<Arm> {
        let start = self.span();
        let pattern = self.pattern()?;
        self.expect_sym("->")?;
        let body = self.expr()?;
        let span = start.join(body.span);
        Ok(Arm { pattern, body, span })
    }

    fn binder(&mut self) -> PResult<Binder> {
        if self.eat_sym("_") {
            return Ok(Binder::Wild);
        }
        Ok(Binder::Name(self.ident()?))
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            Tok::Sym("_") => {
                self.bump();
                if self.eat_sym("::") {
                    let t = self.binder()?;
                    return Ok(Pattern::Ctor(CONS.into(), vec![Binder::Wild, t]));
                }
                Ok(Pattern::Wildcard)
            }
            Tok::Sym("[") => {
                self.bump();
                self.expect_sym("]")?;
                Ok(Pattern::Ctor(NIL.into(), vec![]))
            }
            Tok::Ident(_) => {
                let h = self.binder()?;
                self.expect_sym("::")?;
                let t = self.binder()?;
                Ok(Pattern::Ctor(CONS.into(), vec![h, t]))
            }
            Tok::Sym("(") => {
                self.bump();
                let mut bs = vec![self.binder()?];
                while self.eat_sym(",") {
                    bs.push(self.binder()?);
                }
                self.expect_sym(")")?;
                if bs.len() < 2 {
                    return self.error(&["`,`"]);
                }
                Ok(Pattern::Tuple(bs))
            }
            Tok::Cap(c) => {
                self.bump();
                let binders = match self.peek() {
                    Tok::Ident(_) | Tok::Sym("_") => vec![self.binder()?],
                    Tok::Sym("(") => {
                        self.bump();
                        let mut bs = vec![self.binder()?];
                        while self.eat_sym(",") {
                            bs.push(self.binder()?);
                        }
                        self.expect_sym(")")?;
                        bs
                    }
                    _ => vec![],
                };
                Ok(Pattern::Ctor(c, binders))
            }
            _ => self.error(&["pattern"]),
        }
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Sym("==>") => BinOp::Implies,
            Tok::Sym("||") => BinOp::Or,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("<>") => BinOp::Neq,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Kw("div") => BinOp::IntDiv,
            Tok::Kw("mod") => BinOp::Mod,
            _ => return None,
        })
    }

    /// Precedence climbing. Level 5 is `::`, which builds constructor nodes.
    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.is_sym("::") && min <= 5 {
                self.bump();
                let rhs = self.binary(5)?;
                let span = lhs.span.join(rhs.span);
                lhs = Expr { kind: ExprKind::Ctor(CONS.into(), vec![lhs, rhs]), span };
                continue;
            }
            let Some(op) = self.peek_binop() else { break };
            let prec = op.precedence();
            if prec < min {
                break;
            }
            self.bump();
            let next = match op {
                BinOp::Implies => prec,
                _ => prec + 1,
            };
            let rhs = self.binary(next)?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span };
            if prec == 4 && self.peek_binop().is_some_and(|o| o.precedence() == 4) {
                return self.error(&["parentheses around chained comparison"]);
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.eat_sym("-") {
            let e = self.unary()?;
            let span = start.join(e.span);
            return Ok(Expr { kind: ExprKind::Unary(UnOp::Neg, Box::new(e)), span });
        }
        if self.eat_kw("not") {
            let e = self.unary()?;
            let span = start.join(e.span);
            return Ok(Expr { kind: ExprKind::Unary(UnOp::Not, Box::new(e)), span });
        }
        if matches!(self.peek(), Tok::Kw("if") | Tok::Kw("let") | Tok::Kw("match")) {
            return self.expr();
        }
        self.app()
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Int(_)
                | Tok::Rat(_)
                | Tok::Kw("true")
                | Tok::Kw("false")
                | Tok::Ident(_)
                | Tok::Cap(_)
                | Tok::Sym("(")
                | Tok::Sym("{")
                | Tok::Sym("[")
        )
    }

    fn app(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(name) if self.next_starts_atom() => {
                self.bump();
                let mut args = Vec::new();
                while self.starts_atom() {
                    args.push(self.postfix()?);
                }
                Ok(Expr { kind: ExprKind::Call(name, args), span: start.join(self.prev_span()) })
            }
            Tok::Cap(name) if self.next_starts_atom() => {
                self.bump();
                let arg = self.postfix()?;
                let args = match arg.kind {
                    ExprKind::Tuple(items) if self.toks[self.pos - 1].tok == Tok::Sym(")") => items,
                    _ => vec![arg],
                };
                Ok(Expr { kind: ExprKind::Ctor(name, args), span: start.join(self.prev_span()) })
            }
            _ => self.postfix(),
        }
    }

    fn next_starts_atom(&self) -> bool {
        matches!(
            self.peek_at(1),
            Tok::Int(_)
                | Tok::Rat(_)
                | Tok::Kw("true")
                | Tok::Kw("false")
                | Tok::Ident(_)
                | Tok::Cap(_)
                | Tok::Sym("(")
                | Tok::Sym("{")
                | Tok::Sym("[")
        )
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        while self.is_sym(".") {
            self.bump();
            let f = self.ident()?;
            let span = e.span.join(self.prev_span());
            e = Expr { kind: ExprKind::Field(Box::new(e), f), span };
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.span();
        let save = self.pos;
        let kind = match self.bump() {
            Tok::Int(n) => ExprKind::Int(n),
            Tok::Rat(r) => ExprKind::Rat(r),
            Tok::Kw("true") => ExprKind::Bool(true),
            Tok::Kw("false") => ExprKind::Bool(false),
            Tok::Ident(n) => ExprKind::Var(n),
            Tok::Cap(c) => ExprKind::Ctor(c, vec![]),
            Tok::Sym("(") => {
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(Expr { kind: first.kind, span: start.join(self.prev_span()) });
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                if items.len() < 2 {
                    return self.error(&["`)`"]);
                }
                ExprKind::Tuple(items)
            }
            Tok::Sym("{") => {
                let mut fields = Vec::new();
                loop {
                    let f = self.ident()?;
                    self.expect_sym("=")?;
                    let e = self.expr()?;
                    fields.push((f, e));
                    if self.eat_sym(";") {
                        if self.eat_sym("}") {
                            break;
                        }
                    } else {
                        self.expect_sym("}")?;
                        break;
                    }
                }
                ExprKind::Record(fields)
            }
            Tok::Sym("[") => {
                if self.eat_sym("]") {
                    ExprKind::Ctor(NIL.into(), vec![])
                } else {
                    let mut items = vec![self.expr()?];
                    while self.eat_sym(";") {
                        if self.is_sym("]") {
                            break;
                        }
                        items.push(self.expr()?);
                    }
                    self.expect_sym("]")?;
                    ExprKind::List(items)
                }
            }
            _ => {
                self.pos = save;
                return self.error(&["expression"]);
            }
        };
        Ok(Expr { kind, span: start.join(self.prev_span()) })
    }
}
