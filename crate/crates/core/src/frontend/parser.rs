use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::span::Span;
use super::ParseError;

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut functions = Vec::new();
    while !p.at(&Tok::Eof) {
        functions.push(p.function()?);
    }
    Ok(Program { functions })
}

/// Owners whose members are resolved as qualified names rather than
/// member access on a variable.
const QUALIFIERS: &[&str] = &["math", "Math", "Double", "Float", "Int", "Long", "Short", "Byte"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    /// An argument list: `(` on the same line as the callee.
    fn at_call_paren(&self) -> bool {
        self.at(&Tok::LParen) && self.span().line == self.prev_span().line
    }

    fn at_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().describe();
        let exp: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        let msg = if exp.is_empty() {
            format!("unexpected {found}")
        } else {
            format!("expected {}, found {found}", exp.join(" or "))
        };
        ParseError::new(self.span(), msg, exp)
    }

    fn expect(&mut self, t: Tok) -> Result<Span, ParseError> {
        if self.at(&t) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&[&format!("`{}`", t.symbol())]))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.advance().span;
                Ok((s, sp))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Span, ParseError> {
        if self.at_ident(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn function(&mut self) -> Result<FunctionDef, ParseError> {
        let start = self.span();
        let mut opaque = false;
        let mut unchecked = false;
        while self.at(&Tok::At) {
            self.advance();
            let (name, sp) = self.ident()?;
            match name.as_str() {
                "opaque" => opaque = true,
                "unchecked" => unchecked = true,
                other => {
                    return Err(ParseError::new(
                        sp,
                        format!("unknown annotation `@{other}`"),
                        vec!["`@opaque`".into(), "`@unchecked`".into()],
                    ))
                }
            }
        }
        self.keyword("def")?;
        let (name, _) = self.ident()?;
        let mut type_params = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                let sp = self.span();
                let mut noeq = false;
                if self.eat(&Tok::At) {
                    let (ann, asp) = self.ident()?;
                    if ann != "noeq" {
                        return Err(ParseError::new(asp, format!("unknown type parameter annotation `@{ann}`"), vec!["`@noeq`".into()]));
                    }
                    noeq = true;
                }
                let (tp, tsp) = self.ident()?;
                type_params.push(TypeParam { name: tp, noeq, span: sp.to(tsp) });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
        }
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let (pname, psp) = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.type_expr()?;
                params.push(Param { name: pname, span: psp.to(ty.span()), ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let ret = if self.eat(&Tok::Colon) { Some(self.type_expr()?) } else { None };
        self.expect(Tok::Assign)?;

        let (precondition, body) = if self.at(&Tok::LBrace) {
            self.function_block()?
        } else {
            (None, self.expr()?)
        };

        let postcondition = if self.at(&Tok::Dot) && matches!(self.peek_at(1), Tok::Ident(s) if s == "ensuring") {
            self.advance();
            let esp = self.advance().span;
            self.expect(Tok::LParen)?;
            let (binder, _) = self.ident()?;
            self.expect(Tok::Arrow)?;
            let pbody = self.expr()?;
            let end = self.expect(Tok::RParen)?;
            Some(Postcondition { binder, body: pbody, span: esp.to(end) })
        } else {
            None
        };
        let span = start.to(self.prev_span());
        Ok(FunctionDef { name, type_params, params, ret, precondition, body, postcondition, opaque, unchecked, span })
    }

    /// A function body block, where `require(...)` may open the block.
    fn function_block(&mut self) -> Result<(Option<Expr>, Expr), ParseError> {
        let open = self.span();
        let save = self.pos;
        self.advance();
        if self.at_ident("require") && self.peek_at(1) == &Tok::LParen {
            self.advance();
            self.advance();
            let pre = self.expr()?;
            self.expect(Tok::RParen)?;
            self.eat(&Tok::Semi);
            let (stmts, tail) = self.block_rest()?;
            let close = self.prev_span();
            let body = if stmts.is_empty() {
                tail
            } else {
                let sp = stmts_span(&stmts, &tail);
                Expr { kind: ExprKind::Block(stmts, Box::new(tail)), span: sp }
            };
            let _ = open.to(close);
            return Ok((Some(pre), body));
        }
        self.pos = save;
        Ok((None, self.expr()?))
    }

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        let ty = if self.at(&Tok::LParen) {
            let start = self.advance().span;
            let mut items = vec![self.type_expr()?];
            while self.eat(&Tok::Comma) {
                items.push(self.type_expr()?);
            }
            let end = self.expect(Tok::RParen)?;
            if items.len() == 1 {
                items.pop().unwrap_or_else(|| unreachable!())
            } else {
                TypeExpr::Tuple(items, start.to(end))
            }
        } else {
            let (name, sp) = self.ident()?;
            TypeExpr::Named(name, sp)
        };
        if self.at(&Tok::Arrow) {
            return Err(ParseError::new(self.span(), "higher-order functions are not supported".into(), vec![]));
        }
        Ok(ty)
    }

    /// Parses statements and the tail expression after `{`, consuming `}`.
    fn block_rest(&mut self) -> Result<(Vec<Stmt>, Expr), ParseError> {
        let mut stmts = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if self.at_ident("val") {
                let start = self.advance().span;
                let (name, _) = self.ident()?;
                let ty = if self.eat(&Tok::Colon) { Some(self.type_expr()?) } else { None };
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                let span = start.to(value.span);
                stmts.push(Stmt::Val { name, ty, value, span });
                continue;
            }
            if self.at_ident("assert") && self.peek_at(1) == &Tok::LParen {
                let start = self.advance().span;
                self.advance();
                let cond = self.expr()?;
                let end = self.expect(Tok::RParen)?;
                stmts.push(Stmt::Assert(cond, start.to(end)));
                continue;
            }
            if self.at_ident("require") {
                return Err(ParseError::new(
                    self.span(),
                    "`require` must be the first statement of a function body".into(),
                    vec![],
                ));
            }
            if self.at(&Tok::RBrace) {
                return Err(self.unexpected(&["expression"]));
            }
            let tail = self.expr()?;
            while self.eat(&Tok::Semi) {}
            if !self.at(&Tok::RBrace) {
                return Err(self.unexpected(&["`}`", "`;`"]));
            }
            self.advance();
            return Ok((stmts, tail));
        }
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.at_ident("if") {
            let start = self.advance().span;
            self.expect(Tok::LParen)?;
            let c = self.expr()?;
            self.expect(Tok::RParen)?;
            let t = self.expr()?;
            self.keyword("else")?;
            let f = self.expr()?;
            let span = start.to(f.span);
            return Ok(Expr { kind: ExprKind::If(Box::new(c), Box::new(t), Box::new(f)), span });
        }
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, ParseError> {
        const LEVELS: &[&[(Tok, SurfaceBinOp)]] = &[
            &[(Tok::OrOr, SurfaceBinOp::Or)],
            &[(Tok::AndAnd, SurfaceBinOp::And)],
            &[(Tok::EqEq, SurfaceBinOp::Eq), (Tok::NotEq, SurfaceBinOp::Ne)],
            &[(Tok::Lt, SurfaceBinOp::Lt), (Tok::Le, SurfaceBinOp::Le), (Tok::Gt, SurfaceBinOp::Gt), (Tok::Ge, SurfaceBinOp::Ge)],
            &[(Tok::Plus, SurfaceBinOp::Add), (Tok::Minus, SurfaceBinOp::Sub)],
            &[(Tok::Star, SurfaceBinOp::Mul), (Tok::Slash, SurfaceBinOp::Div), (Tok::Percent, SurfaceBinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.prefix();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (tok, op) in LEVELS[level] {
                // A leading `+`/`-` on a new line starts a new statement.
                let prefix_like = matches!(tok, Tok::Plus | Tok::Minus) && self.span().line != self.prev_span().line;
                if self.at(tok) && !prefix_like {
                    self.advance();
                    let rhs = if self.at_ident("if") { self.expr()? } else { self.binary(level + 1)? };
                    let span = lhs.span.to(rhs.span);
                    lhs = Expr { kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)), span };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                let start = self.advance().span;
                match self.peek().clone() {
                    Tok::Int { value, long } => {
                        let sp = self.advance().span;
                        let lit = Expr { kind: ExprKind::Lit(Literal::Int { value: -(value as i128), long }), span: start.to(sp) };
                        self.postfix(lit)
                    }
                    Tok::Float { bits, prec } => {
                        let sp = self.advance().span;
                        let sign = 1u64 << (prec.width() - 1);
                        let lit = Expr { kind: ExprKind::Lit(Literal::Float { bits: bits ^ sign, prec }), span: start.to(sp) };
                        self.postfix(lit)
                    }
                    _ => {
                        let inner = self.prefix()?;
                        let span = start.to(inner.span);
                        Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), span })
                    }
                }
            }
            Tok::Bang => {
                let start = self.advance().span;
                let inner = self.prefix()?;
                let span = start.to(inner.span);
                Ok(Expr { kind: ExprKind::Not(Box::new(inner)), span })
            }
            _ => {
                let p = self.primary()?;
                self.postfix(p)
            }
        }
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr, ParseError> {
        while self.at(&Tok::Dot) {
            if matches!(self.peek_at(1), Tok::Ident(s) if s == "ensuring") {
                break;
            }
            self.advance();
            let (name, sp) = match self.peek().clone() {
                Tok::Ident(s) => {
                    let sp = self.advance().span;
                    (s, sp)
                }
                _ => return Err(self.unexpected(&["member name"])),
            };
            if self.at_call_paren() {
                return Err(ParseError::new(
                    sp,
                    format!("method calls with arguments are not supported (`.{name}(...)`)"),
                    vec![],
                ));
            }
            let span = e.span.to(sp);
            e = Expr { kind: ExprKind::Member(Box::new(e), name), span };
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int { value, long } => {
                self.advance();
                Ok(Expr { kind: ExprKind::Lit(Literal::Int { value: value as i128, long }), span: start })
            }
            Tok::Float { bits, prec } => {
                self.advance();
                Ok(Expr { kind: ExprKind::Lit(Literal::Float { bits, prec }), span: start })
            }
            Tok::LParen => {
                self.advance();
                if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Colon {
                    return Err(ParseError::new(start, "higher-order functions are not supported".into(), vec![]));
                }
                let first = self.expr()?;
                if self.eat(&Tok::Comma) {
                    let mut items = vec![first];
                    loop {
                        items.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    let end = self.expect(Tok::RParen)?;
                    return Ok(Expr { kind: ExprKind::Tuple(items), span: start.to(end) });
                }
                self.expect(Tok::RParen)?;
                if self.at(&Tok::Arrow) {
                    return Err(ParseError::new(self.span(), "higher-order functions are not supported".into(), vec![]));
                }
                Ok(first)
            }
            Tok::LBrace => {
                self.advance();
                let (stmts, tail) = self.block_rest()?;
                let end = self.prev_span();
                Ok(Expr { kind: ExprKind::Block(stmts, Box::new(tail)), span: start.to(end) })
            }
            Tok::Ident(name) => {
                match name.as_str() {
                    "true" | "false" => {
                        self.advance();
                        return Ok(Expr { kind: ExprKind::Lit(Literal::Bool(name == "true")), span: start });
                    }
                    "if" => return self.expr(),
                    "def" | "val" | "else" => return Err(self.unexpected(&["expression"])),
                    _ => {}
                }
                self.advance();
                if self.at(&Tok::Arrow) {
                    return Err(ParseError::new(start, "higher-order functions are not supported".into(), vec![]));
                }
                if QUALIFIERS.contains(&name.as_str()) && self.at(&Tok::Dot) {
                    self.advance();
                    let (member, msp) = self.ident()?;
                    if self.at_call_paren() {
                        let args = self.args()?;
                        let end = self.prev_span();
                        return Ok(Expr {
                            kind: ExprKind::Call { path: vec![name, member], type_args: vec![], args },
                            span: start.to(end),
                        });
                    }
                    return Ok(Expr { kind: ExprKind::Constant { owner: name, name: member }, span: start.to(msp) });
                }
                let mut type_args = Vec::new();
                if self.at(&Tok::LBracket) {
                    self.advance();
                    loop {
                        type_args.push(self.type_expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBracket)?;
                    if !self.at(&Tok::LParen) {
                        return Err(self.unexpected(&["`(`"]));
                    }
                }
                if self.at_call_paren() || !type_args.is_empty() {
                    let args = self.args()?;
                    let end = self.prev_span();
                    return Ok(Expr { kind: ExprKind::Call { path: vec![name], type_args, args }, span: start.to(end) });
                }
                Ok(Expr { kind: ExprKind::Var(name), span: start })
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}

fn stmts_span(stmts: &[Stmt], tail: &Expr) -> Span {
    let first = match &stmts[0] {
        Stmt::Val { span, .. } | Stmt::Assert(_, span) => *span,
    };
    first.to(tail.span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::float::Precision;

    #[test]
    fn empty_program() {
        assert_eq!(parse("").unwrap().functions.len(), 0);
        assert_eq!(parse("  // nothing\n").unwrap().functions.len(), 0);
    }

    #[test]
    fn truncated_expression_reports_end_of_input() {
        let err = parse("def f(x: Double) = x +").unwrap_err();
        assert!(err.message.contains("end of input"), "{}", err.message);
        assert_eq!((err.span.line, err.span.col), (1, 23));
        assert!(err.expected.iter().any(|e| e == "expression"));
    }

    #[test]
    fn contract_structure() {
        let src = "def f(x: Double): Double = {\n  require(x > 0.0)\n  val y = x * 2.0\n  y\n}.ensuring(r => r > x)";
        let p = parse(src).unwrap();
        let f = &p.functions[0];
        assert!(f.precondition.is_some());
        assert!(matches!(f.body.kind, ExprKind::Block(ref s, _) if s.len() == 1));
        assert_eq!(f.postcondition.as_ref().unwrap().binder, "r");
    }

    #[test]
    fn negative_literals_fold() {
        let p = parse("def f() = -1.5").unwrap();
        assert_eq!(
            p.functions[0].body.kind,
            ExprKind::Lit(Literal::Float { bits: (-1.5f64).to_bits(), prec: Precision::F64 })
        );
        let p = parse("def f(x: Double) = -x").unwrap();
        assert!(matches!(p.functions[0].body.kind, ExprKind::Neg(_)));
    }

    #[test]
    fn precedence() {
        let p = parse("def f(a: Int, b: Int, c: Int) = a + b * c == c").unwrap();
        let ExprKind::Binary(SurfaceBinOp::Eq, lhs, _) = &p.functions[0].body.kind else { panic!() };
        let ExprKind::Binary(SurfaceBinOp::Add, _, rhs) = &lhs.kind else { panic!() };
        assert!(matches!(rhs.kind, ExprKind::Binary(SurfaceBinOp::Mul, _, _)));
    }

    #[test]
    fn rejects_higher_order() {
        assert!(parse("def f(g: Double => Double) = 1.0").unwrap_err().message.contains("higher-order"));
        assert!(parse("def f() = x => x").unwrap_err().message.contains("higher-order"));
        assert!(parse("def f() = (x: Double) => x").unwrap_err().message.contains("higher-order"));
    }

    #[test]
    fn annotations_and_type_params() {
        let p = parse("@opaque @unchecked def pick[@noeq T, U](a: T, b: U): T = a").unwrap();
        let f = &p.functions[0];
        assert!(f.opaque && f.unchecked);
        assert!(f.type_params[0].noeq && !f.type_params[1].noeq);
        assert!(parse("@inline def f() = 1").is_err());
    }

    #[test]
    fn qualified_names() {
        let p = parse("def f(x: Double) = math.exp(x) + Double.MaxValue").unwrap();
        let ExprKind::Binary(_, l, r) = &p.functions[0].body.kind else { panic!() };
        assert!(matches!(&l.kind, ExprKind::Call { path, .. } if path == &vec!["math".to_string(), "exp".to_string()]));
        assert!(matches!(&r.kind, ExprKind::Constant { owner, name } if owner == "Double" && name == "MaxValue"));
    }

    #[test]
    fn misplaced_require() {
        let e = parse("def f(x: Double) = { val y = x\n require(y > 0.0)\n y }").unwrap_err();
        assert!(e.message.contains("require"));
    }

    #[test]
    fn parenthesis_on_next_line_starts_a_statement() {
        let p = parse("def f(x: Double, n: Long) = {\n  val a = n.toInt\n  (x + 1.0)\n}").unwrap();
        let ExprKind::Block(stmts, tail) = &p.functions[0].body.kind else { panic!() };
        assert_eq!(stmts.len(), 1);
        assert!(matches!(&tail.kind, ExprKind::Binary(..)));
        let p = parse("def f(x: Double) = {\n  val a = x\n  (a, a)\n}").unwrap();
        let ExprKind::Block(_, tail) = &p.functions[0].body.kind else { panic!() };
        assert!(matches!(&tail.kind, ExprKind::Tuple(_)));
        let p = parse("def f(x: Double) = {\n  val a = x\n  -a\n}").unwrap();
        let ExprKind::Block(_, tail) = &p.functions[0].body.kind else { panic!() };
        assert!(matches!(&tail.kind, ExprKind::Neg(_)));
    }
}
